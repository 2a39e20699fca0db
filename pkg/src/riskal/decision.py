"""Single-stage maintenance influence diagram.

The diagram has one latent health state H_t observed through features, a
binary (or larger) action set d_t, a per-action transition table over
H_{t+1}, utilities on the next state and on the action, and an
inspection cost. The engine answers four questions: the expected utility
of each action under a health-state posterior, the maximum expected
utility with and without perfect observation of H_t, and the difference
between the two (the expected value of perfect information), which is
what drives label querying.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInput,
    NonConvergence,
    NumericError,
    ReducibleChain,
)
from .probability import (
    DiscreteDistribution,
    TransitionCPT,
    UtilityTable,
    argmax_with_tiebreak,
    validate_distribution,
)

#: EVPI values above this negative floor are treated as rounding noise and
#: clamped to exactly zero; anything below it indicates a bug.
EVPI_CLAMP = -1e-9


@dataclass(frozen=True)
class PolicyResult:
    """Optimal action together with its expected utility."""

    action: int
    expected_utility: float


@dataclass(frozen=True)
class DecisionProcess:
    """The decision problem: who pays what, and how states evolve.

    ``transitions[a]`` is the CPT P(H_{t+1} | H_t, d_t = a). ``u_action``
    has one entry per action, ``u_state`` one entry per (next) state, and
    ``c_ins`` is the utility price of a perfect inspection.
    """

    transitions: tuple[TransitionCPT, ...]
    u_action: UtilityTable
    u_state: UtilityTable
    c_ins: float

    #: action_state_eu[a, k] = sum_j P(H_{t+1}=j | H_t=k, a) * u_state[j] + u_action[a],
    #: the expected utility of action a when the current state is known to be k.
    action_state_eu: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.transitions) < 2:
            raise EmptyInput("need at least two actions")
        k = self.transitions[0].n_states
        if any(t.n_states != k for t in self.transitions):
            raise DimensionMismatch("transition tables disagree on the state count")
        if len(self.u_action) != len(self.transitions):
            raise DimensionMismatch(
                f"{len(self.transitions)} actions but {len(self.u_action)} action utilities"
            )
        if len(self.u_state) != k:
            raise DimensionMismatch(
                f"{k} states but {len(self.u_state)} state utilities"
            )
        # +inf is a legitimate cost (it disables querying entirely); NaN is not.
        if not self.c_ins >= 0.0:
            raise EmptyInput(f"inspection cost must be >= 0, got {self.c_ins!r}")
        eu = np.stack(
            [t.rows @ self.u_state.values + ua for t, ua in zip(self.transitions, self.u_action.values)]
        )
        eu.flags.writeable = False
        object.__setattr__(self, "action_state_eu", eu)

    @property
    def n_states(self) -> int:
        return self.transitions[0].n_states

    @property
    def n_actions(self) -> int:
        return len(self.transitions)

    def _check_posterior(self, posterior: DiscreteDistribution) -> None:
        if len(posterior) != self.n_states:
            raise DimensionMismatch(
                f"posterior has {len(posterior)} entries, process has {self.n_states} states"
            )


def expected_utility(dp: DecisionProcess, posterior: DiscreteDistribution, action: int) -> float:
    """Expected utility of taking ``action`` under the health-state posterior."""
    dp._check_posterior(posterior)
    if not 0 <= action < dp.n_actions:
        raise DimensionMismatch(f"action {action} out of range 0..{dp.n_actions - 1}")
    return float(np.dot(posterior.probs, dp.action_state_eu[action]))


def meu_unobserved(dp: DecisionProcess, posterior: DiscreteDistribution) -> PolicyResult:
    """Best single action when H_t is known only through the posterior."""
    dp._check_posterior(posterior)
    # Per-row np.dot, not a matmul: meu_observed uses the identical kernel,
    # so when one action is optimal in every state the two MEUs subtract to
    # exactly zero.
    eu = dp.action_state_eu
    eus = np.array([np.dot(posterior.probs, eu[a]) for a in range(eu.shape[0])])
    a = argmax_with_tiebreak(eus)
    return PolicyResult(action=a, expected_utility=float(eus[a]))


def meu_observed(dp: DecisionProcess, posterior: DiscreteDistribution) -> float:
    """Expected utility when H_t will be revealed before acting.

    The per-state maximum is taken first and then averaged under the
    posterior, so the decision-maker gets to react to each state.
    """
    dp._check_posterior(posterior)
    return float(np.dot(posterior.probs, np.ascontiguousarray(dp.action_state_eu.max(axis=0))))


def evpi(dp: DecisionProcess, posterior: DiscreteDistribution) -> float:
    """Expected value of observing H_t perfectly before deciding.

    Mathematically non-negative; floating-point cancellation within
    ``EVPI_CLAMP`` of zero is clamped to exactly 0 so a free inspection
    (c_ins = 0) is never triggered by -1e-16.
    """
    value = meu_observed(dp, posterior) - meu_unobserved(dp, posterior).expected_utility
    if value < 0.0:
        if value < EVPI_CLAMP:
            raise NumericError(f"EVPI evaluated to {value!r}, below the clamp floor")
        return 0.0
    return value


def query_indicated(dp: DecisionProcess, posterior: DiscreteDistribution) -> bool:
    """Whether the information value strictly exceeds the inspection cost."""
    return evpi(dp, posterior) > dp.c_ins


def restrict_and_renormalize(cpt: TransitionCPT, states: list[int]) -> TransitionCPT:
    """Sub-chain on a subset of 1-based states, rows renormalized."""
    idx = np.asarray([s - 1 for s in states], dtype=int)
    sub = cpt.rows[np.ix_(idx, idx)]
    sums = sub.sum(axis=1)
    if np.any(sums <= 0.0):
        raise ReducibleChain("a restricted row has zero mass on the retained states")
    return TransitionCPT(sub / sums[:, None])


def _is_irreducible(rows: np.ndarray) -> bool:
    # Reachability closure over the positive-entry adjacency.
    reach = rows > 0.0
    n = rows.shape[0]
    closure = reach | np.eye(n, dtype=bool)
    for _ in range(n):
        nxt = closure | (closure @ closure)
        if np.array_equal(nxt, closure):
            break
        closure = nxt
    return bool(closure.all())


def stationary_distribution(
    cpt: TransitionCPT, tol: float = 1e-12, max_iter: int = 10**6
) -> DiscreteDistribution:
    """Fixed point pi = pi P of an irreducible chain, by power iteration.

    Used to reproduce how repair-destination probabilities are derived
    from the long-run behaviour of the undamaged sub-chain.
    """
    rows = cpt.rows
    if not _is_irreducible(rows):
        raise ReducibleChain("chain is reducible; no unique stationary distribution")
    n = rows.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ rows
        nxt /= nxt.sum()
        if np.abs(nxt - pi).max() < tol:
            return validate_distribution(nxt)
        pi = nxt
    raise NonConvergence(f"power iteration did not reach {tol} in {max_iter} iterations")
