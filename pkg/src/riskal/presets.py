"""Built-in decision processes and dataset generators for the two bundled
case studies.

The two-dimensional "demo" study uses four health states along a
progressive-damage path; the four-dimensional "bridge" study mimics a
year of natural-frequency monitoring with a cold spell and late damage
onset. The demo decision tables are the ground-truth anchor used by
``riskal verify-example``. The bridge generating distributions are
stand-ins: real monitoring data should be ingested from file instead.
"""

from __future__ import annotations

import numpy as np

from .decision import DecisionProcess
from .experiments import ClassSpec, SyntheticSpec
from .gmm import DirichletParams, NiwParams, default_prior, uniform_alpha
from .probability import TransitionCPT, UtilityTable


def demo_decision_process(c_ins: float = 7.0) -> DecisionProcess:
    """Binary do-nothing / maintain process over four health states.

    Do nothing lets the structure degrade monotonically with a propensity
    to stay put; maintenance restores state 1 with probability 0.99.
    """
    do_nothing = TransitionCPT([
        [0.8, 0.18, 0.015, 0.005],
        [0.0, 0.8, 0.15, 0.05],
        [0.0, 0.0, 0.8, 0.2],
        [0.0, 0.0, 0.0, 1.0],
    ])
    maintain = TransitionCPT([
        [1.0, 0.0, 0.0, 0.0],
        [0.99, 0.01, 0.0, 0.0],
        [0.99, 0.0, 0.01, 0.0],
        [0.99, 0.0, 0.0, 0.01],
    ])
    return DecisionProcess(
        transitions=(do_nothing, maintain),
        u_action=UtilityTable([0.0, -30.0]),
        u_state=UtilityTable([10.0, 10.0, 5.0, -75.0]),
        c_ins=c_ins,
    )


def bridge_decision_process(c_ins: float = 30.0, advanced_damage_utility: float = -1000.0) -> DecisionProcess:
    """Binary process for the monitored-bridge study.

    States 1/2 are undamaged under normal/cold conditions, 3/4 incipient
    and advanced damage. Under maintenance, the probability of landing in
    each undamaged state from a damaged one follows the long-run split of
    the undamaged weather sub-chain (0.99 scaled), since damage labels
    carry no temperature information.
    """
    do_nothing = TransitionCPT([
        [0.7, 0.28, 0.015, 0.005],
        [0.43, 0.55, 0.015, 0.005],
        [0.0, 0.0, 0.8, 0.2],
        [0.0, 0.0, 0.0, 1.0],
    ])
    maintain = TransitionCPT([
        [0.7143, 0.2857, 0.0, 0.0],
        [0.4388, 0.5612, 0.0, 0.0],
        [0.5996, 0.3904, 0.01, 0.0],
        [0.5996, 0.3904, 0.0, 0.01],
    ])
    return DecisionProcess(
        transitions=(do_nothing, maintain),
        u_action=UtilityTable([0.0, -100.0]),
        u_state=UtilityTable([10.0, 10.0, -50.0, advanced_damage_utility]),
        c_ins=c_ins,
    )


def demo_synthetic_spec(seed: int = 2025) -> SyntheticSpec:
    """Four 2-D clusters along a damage path, 1997 points in total.

    Neighbours 1-2 and 3-4 overlap; 2 and 3 are separated by a clear
    margin, so the only uncertain regions that change the optimal action
    are the onset-of-failure boundary and the empty mid-gap. Cluster 2
    sits closest to the origin so the zero-mean prior fits it best early
    on. These parameters are a non-authoritative invention: they
    reproduce qualitative behaviour, not any published dataset.
    """
    classes = (
        ClassSpec(mean=[-4.1, -0.3], cov=[[0.55, 0.08], [0.08, 0.45]], count=600),
        ClassSpec(mean=[-2.3, 0.0], cov=[[0.50, -0.06], [-0.06, 0.42]], count=450),
        ClassSpec(mean=[2.7, 0.3], cov=[[0.60, 0.10], [0.10, 0.45]], count=450),
        ClassSpec(mean=[4.5, 0.6], cov=[[0.70, 0.0], [0.0, 0.50]], count=497),
    )
    return SyntheticSpec(classes=classes, seed=seed)


def bridge_synthetic_spec(seed: int = 2026) -> SyntheticSpec:
    """Stand-in for a year of four-frequency monitoring: 3932 rows with a
    cold spell at rows 1200-1500 and damage onset at row 3476 (incipient
    first, advanced for the final half)."""
    classes = (
        ClassSpec(
            mean=[4.00, 5.20, 10.00, 10.70],
            cov=_scaled_cov([0.060, 0.080, 0.100, 0.120], 0.25),
            count=3174,
        ),
        ClassSpec(
            mean=[4.35, 5.60, 10.45, 11.30],
            cov=_scaled_cov([0.120, 0.150, 0.180, 0.220], 0.35),
            count=301,
        ),
        ClassSpec(
            mean=[3.88, 5.05, 9.80, 10.50],
            cov=_scaled_cov([0.070, 0.090, 0.110, 0.130], 0.25),
            count=228,
        ),
        ClassSpec(
            mean=[3.70, 4.88, 9.55, 10.25],
            cov=_scaled_cov([0.080, 0.100, 0.120, 0.140], 0.25),
            count=229,
        ),
    )
    segments = ((1, 1199), (2, 301), (1, 1975), (3, 228), (4, 229))
    return SyntheticSpec(classes=classes, seed=seed, segments=segments)


def _scaled_cov(sds, correlation: float) -> np.ndarray:
    """Covariance with the given per-feature sds and one shared pairwise
    correlation (frequencies move together with temperature)."""
    sds = np.asarray(sds, dtype=float)
    corr = np.full((sds.size, sds.size), correlation)
    np.fill_diagonal(corr, 1.0)
    return corr * np.outer(sds, sds)


def demo_prior() -> tuple[NiwParams, DirichletParams]:
    return default_prior(2), uniform_alpha(4)


def bridge_prior() -> tuple[NiwParams, DirichletParams]:
    return default_prior(4), uniform_alpha(4)
