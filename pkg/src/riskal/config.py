"""Experiment configuration: one JSON document drives everything.

Sections: ``classifier`` (prior hyperparameters), ``decision`` (the
influence-diagram tables), ``run`` (loop and repetition knobs), ``data``
(synthetic spec or dataset file), ``outputs`` (destination directory)
and an optional ``grid`` (EVPI map layout). The CLI may override only
the seed and the output destination; everything else lives here so the
manifest of a run stays authoritative.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .active_learning import RunConfig
from .decision import DecisionProcess
from .errors import ConfigError
from .experiments import ClassSpec, GridSpec, SyntheticSpec
from .gmm import DirichletParams, NiwParams
from .probability import TransitionCPT, UtilityTable


@dataclass(frozen=True)
class DataConfig:
    """Either a synthetic generator spec or a dataset file path."""

    synthetic: SyntheticSpec | None
    file: str | None
    standardize: bool


@dataclass(frozen=True)
class GridConfig:
    nx: int = 60
    ny: int = 60
    padding: float = 0.25
    extent: tuple[float, float, float, float] | None = None  # x_min, x_max, y_min, y_max

    def to_spec(self, points: np.ndarray | None = None) -> GridSpec:
        """Explicit extent if configured, else a percentile window around
        the given 2-D points (ignoring the outermost 2% per axis, which
        keeps stray samples from inflating the map)."""
        if self.extent is not None:
            x_min, x_max, y_min, y_max = self.extent
            return GridSpec(x_min=x_min, x_max=x_max, nx=self.nx, y_min=y_min, y_max=y_max, ny=self.ny)
        if points is None:
            raise ConfigError("grid extent is not configured and no points were supplied")
        lo = np.percentile(points, 2.0, axis=0)
        hi = np.percentile(points, 98.0, axis=0)
        return GridSpec(
            x_min=float(lo[0] - self.padding), x_max=float(hi[0] + self.padding), nx=self.nx,
            y_min=float(lo[1] - self.padding), y_max=float(hi[1] + self.padding), ny=self.ny,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    prior: NiwParams
    alpha: DirichletParams
    dp: DecisionProcess
    k: int
    run: RunConfig
    repetitions: int
    workers: int | None
    data: DataConfig
    output_dir: str
    grid: GridConfig
    raw: dict

    @property
    def dim(self) -> int:
        return self.prior.dim


def _require(section: dict, key: str, context: str):
    if key not in section:
        raise ConfigError(f"missing config field {context}.{key}")
    return section[key]


def _section(doc: dict, name: str) -> dict:
    value = _require(doc, name, "config")
    if not isinstance(value, dict):
        raise ConfigError(f"config.{name} must be an object")
    return value


def _matrix(value, k: int, context: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.size != k * k:
        raise ConfigError(f"{context} must hold {k}x{k} values, got {arr.size}")
    return arr.reshape(k, k)


def parse_config(doc: dict, base_dir: Path | None = None) -> ExperimentConfig:
    classifier = _section(doc, "classifier")
    decision = _section(doc, "decision")
    run = _section(doc, "run")
    data = _section(doc, "data")
    outputs = _section(doc, "outputs")

    m0 = np.asarray(_require(classifier, "m0", "classifier"), dtype=float)
    d = m0.shape[0] if m0.ndim == 1 else 0
    if d == 0:
        raise ConfigError("classifier.m0 must be a non-empty vector")
    try:
        prior = NiwParams(
            m=m0,
            kappa=float(_require(classifier, "kappa0", "classifier")),
            v=float(_require(classifier, "v0", "classifier")),
            S=_matrix(_require(classifier, "S0", "classifier"), d, "classifier.S0"),
        )
        alpha = DirichletParams(np.asarray(_require(classifier, "alpha", "classifier"), dtype=float))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"classifier section: {exc}") from exc

    k = int(_require(decision, "K", "decision"))
    a = int(_require(decision, "A", "decision"))
    transitions = _require(decision, "transitions", "decision")
    if not isinstance(transitions, list) or len(transitions) != a:
        raise ConfigError(f"decision.transitions must list {a} tables")
    if len(alpha) != k:
        raise ConfigError(f"classifier.alpha has {len(alpha)} entries for K={k}")
    try:
        dp = DecisionProcess(
            transitions=tuple(
                TransitionCPT(_matrix(t, k, f"decision.transitions[{i}]")) for i, t in enumerate(transitions)
            ),
            u_action=UtilityTable(np.asarray(_require(decision, "u_action", "decision"), dtype=float)),
            u_state=UtilityTable(np.asarray(_require(decision, "u_state", "decision"), dtype=float)),
            c_ins=float(_require(decision, "c_ins", "decision")),
        )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"decision section: {exc}") from exc
    if dp.n_actions != a or dp.n_states != k:
        raise ConfigError("decision tables disagree with the declared K and A")

    try:
        run_cfg = RunConfig(
            order=_require(run, "order", "run"),
            seed=int(_require(run, "seed", "run")),
            initial_fraction=float(_require(run, "initial_fraction", "run")),
            coverage_enforcement=bool(_require(run, "coverage_enforcement", "run")),
        )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"run section: {exc}") from exc
    repetitions = int(_require(run, "repetitions", "run"))
    if repetitions < 1:
        raise ConfigError("run.repetitions must be >= 1")
    workers = run.get("workers")
    if workers is not None:
        workers = int(workers)
        if workers < 1:
            raise ConfigError("run.workers must be >= 1 when given")

    synthetic = None
    file_path = None
    if "synthetic" in data:
        syn = data["synthetic"]
        try:
            means = _require(syn, "means", "data.synthetic")
            covs = _require(syn, "covariances", "data.synthetic")
            counts = _require(syn, "counts", "data.synthetic")
            if not (len(means) == len(covs) == len(counts) == k):
                raise ConfigError(f"data.synthetic must describe exactly K={k} classes")
            classes = tuple(
                ClassSpec(mean=np.asarray(m, dtype=float), cov=np.asarray(c, dtype=float), count=int(n))
                for m, c, n in zip(means, covs, counts)
            )
            segments = syn.get("segments")
            if segments is not None:
                segments = tuple((int(l), int(c)) for l, c in segments)
            synthetic = SyntheticSpec(
                classes=classes, seed=int(_require(syn, "seed", "data.synthetic")), segments=segments
            )
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"data.synthetic section: {exc}") from exc
        if synthetic.dim != d:
            raise ConfigError(
                f"data.synthetic is {synthetic.dim}-dimensional but classifier.m0 is {d}-dimensional"
            )
    elif "file" in data:
        file_path = str(data["file"])
        if base_dir is not None and not Path(file_path).is_absolute():
            file_path = str(base_dir / file_path)
    else:
        raise ConfigError("missing config field data.synthetic or data.file")

    grid_section = doc.get("grid", {})
    if not isinstance(grid_section, dict):
        raise ConfigError("config.grid must be an object")
    extent = None
    if "x_min" in grid_section or "extent" in grid_section:
        extent = (
            float(_require(grid_section, "x_min", "grid")),
            float(_require(grid_section, "x_max", "grid")),
            float(_require(grid_section, "y_min", "grid")),
            float(_require(grid_section, "y_max", "grid")),
        )
    grid = GridConfig(
        nx=int(grid_section.get("nx", 60)),
        ny=int(grid_section.get("ny", 60)),
        padding=float(grid_section.get("padding", 0.25)),
        extent=extent,
    )

    return ExperimentConfig(
        prior=prior,
        alpha=alpha,
        dp=dp,
        k=k,
        run=run_cfg,
        repetitions=repetitions,
        workers=workers,
        data=DataConfig(synthetic=synthetic, file=file_path, standardize=bool(data.get("standardize", False))),
        output_dir=str(_require(outputs, "directory", "outputs")),
        grid=grid,
        raw=doc,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return parse_config(doc, base_dir=path.parent)
