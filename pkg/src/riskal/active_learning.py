"""Risk-based active learning loop, random baseline, and the Monte Carlo
repetition harness.

One repetition: split the data in half (train/test), reveal the labels of
a small random subset of the training half, then present the remaining
training points one at a time. A point is queried (its true label
revealed and the classifier refit) exactly when the expected value of
perfectly observing the health state exceeds the inspection cost.
Decision accuracy against a perfect-information agent is recorded on the
test half after every refit, indexed by the cumulative query count.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .decision import DecisionProcess, evpi
from .errors import (
    EmptyTestSet,
    InputError,
    InsufficientInitialLabels,
    LabelOutOfRange,
)
from .gmm import (
    DirichletParams,
    GmmPosterior,
    LabeledSet,
    NiwParams,
    fit,
    predict,
    predict_many,
)

#: Tags for the named per-seed random streams. The subset stream is shared
#: between the active run and its random baseline (paired initial sets);
#: the baseline's query stream is decoupled from the active run's
#: presentation stream.
_SPLIT, _SUBSET, _ORDER, _BASELINE = 0, 1, 2, 3

_MAX_COVERAGE_REDRAWS = 1000


def _stream(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((int(seed), tag)))


@dataclass(frozen=True)
class RunConfig:
    """Knobs of one active-learning run.

    ``order`` is ``"random"`` (pool shuffled per seed) or ``"sequential"``
    (pool presented in row order, i.e. along the monitoring timeline).
    ``initial_fraction`` of the training half is labelled up front;
    ``coverage_enforcement`` re-draws that subset until every class
    appears at least once.
    """

    order: str = "random"
    seed: int = 0
    initial_fraction: float = 0.015
    coverage_enforcement: bool = True
    evaluation_cadence: str = "after-each-query"

    def __post_init__(self):
        if self.order not in ("random", "sequential"):
            raise InputError(f"order must be 'random' or 'sequential', got {self.order!r}")
        if not 0.0 < self.initial_fraction < 1.0:
            raise InputError(f"initial_fraction must lie in (0, 1), got {self.initial_fraction!r}")
        if self.evaluation_cadence != "after-each-query":
            raise InputError(f"unsupported evaluation cadence {self.evaluation_cadence!r}")


@dataclass(frozen=True)
class QueryRecord:
    """Outcome of presenting one pool point: its EVPI and the branch taken."""

    step: int
    index: int
    evpi: float
    queried: bool


class LabelOracle:
    """Ground-truth labels for the unlabelled pool, keyed by training-row
    index. Stands in for the engineer inspecting the structure; lookups
    return the true health state."""

    def __init__(self, labels_by_index: dict[int, int]):
        self._labels = dict(labels_by_index)

    @classmethod
    def over_pool(cls, train: LabeledSet, pool_indices: np.ndarray) -> "LabelOracle":
        return cls({int(i): int(train.labels[i]) for i in pool_indices})

    def lookup(self, index: int) -> int:
        return self._labels[int(index)]

    def __len__(self) -> int:
        return len(self._labels)


@dataclass(eq=False)
class RunResult:
    """Everything one run produced: the query log, the classifier
    trajectory (initial fit plus one entry per refit), and decision
    accuracy indexed by cumulative query count."""

    query_log: list[QueryRecord]
    accuracies: list[float]
    posteriors: list[GmmPosterior]
    initial_indices: np.ndarray
    queried_indices: np.ndarray
    queried_labels: np.ndarray
    pool_size: int

    @property
    def n_queries(self) -> int:
        return len(self.queried_indices)

    @property
    def final_posterior(self) -> GmmPosterior:
        return self.posteriors[-1]


@dataclass(eq=False)
class LearningCurve:
    """Decision-accuracy statistics per query count, aggregated over
    repetitions. Repetitions that stopped querying earlier contribute
    only up to their own final count, so ``n_reps`` is reported per q."""

    q: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    n_reps: np.ndarray
    repetitions: int

    def at(self, q: int) -> tuple[float, float, int]:
        if not 0 <= q < len(self.q):
            raise InputError(f"no curve point at q={q}")
        return float(self.mean[q]), float(self.sd[q]), int(self.n_reps[q])


def split_train_test(dataset: LabeledSet, rng: np.random.Generator) -> tuple[LabeledSet, LabeledSet]:
    """Random half split; both halves keep the original row order."""
    n = len(dataset)
    if n < 2:
        raise InputError("need at least two points to split")
    perm = rng.permutation(n)
    train_idx = np.sort(perm[: n // 2])
    test_idx = np.sort(perm[n // 2 :])
    return dataset.take(train_idx), dataset.take(test_idx)


def draw_initial_labels(
    train: LabeledSet,
    fraction: float,
    k: int,
    rng: np.random.Generator,
    enforce_coverage: bool = True,
) -> np.ndarray:
    """Indices of the initially labelled subset.

    With coverage enforcement the draw is repeated until every class in
    1..k appears, mirroring how the seed sets were constructed.
    """
    n = len(train)
    n_init = max(1, round(fraction * n))
    if not enforce_coverage:
        return np.sort(rng.choice(n, size=n_init, replace=False))
    if n_init < k:
        raise InsufficientInitialLabels(
            f"{n_init} initial labels cannot cover {k} classes; raise the fraction"
        )
    if np.unique(train.labels).size < k:
        raise InsufficientInitialLabels("a class has no points in the training half")
    for _ in range(_MAX_COVERAGE_REDRAWS):
        idx = rng.choice(n, size=n_init, replace=False)
        if np.unique(train.labels[idx]).size == k:
            return np.sort(idx)
    raise InsufficientInitialLabels(
        f"could not cover all {k} classes in {_MAX_COVERAGE_REDRAWS} redraws"
    )


def decision_accuracy(classifier: GmmPosterior, dp: DecisionProcess, test: LabeledSet) -> float:
    """Fraction of test points where the classifier-guided action matches
    the action of an agent that knows the true state."""
    if len(test) == 0:
        raise EmptyTestSet("decision accuracy over an empty test set")
    if test.labels.max() > dp.n_states:
        raise LabelOutOfRange(
            f"test label {int(test.labels.max())} outside 1..{dp.n_states}"
        )
    posteriors = predict_many(classifier, test.features)
    model_actions = np.argmax(posteriors @ dp.action_state_eu.T, axis=1)
    per_state_action = np.argmax(dp.action_state_eu, axis=0)
    return float(np.mean(model_actions == per_state_action[test.labels - 1]))


def _presentation_order(pool_idx: np.ndarray, order: str, rng: np.random.Generator) -> np.ndarray:
    if order == "random":
        return rng.permutation(pool_idx)
    return pool_idx  # ascending row index = monitoring timeline


def initial_fit(
    train: LabeledSet,
    prior: NiwParams,
    alpha: DirichletParams,
    k: int,
    cfg: RunConfig,
) -> tuple[np.ndarray, GmmPosterior]:
    """The seed subset and the classifier fit on it, exactly as the
    querying loop of the same seed would start."""
    subset_rng = _stream(cfg.seed, _SUBSET)
    init_idx = draw_initial_labels(train, cfg.initial_fraction, k, subset_rng, cfg.coverage_enforcement)
    posterior = fit(LabeledSet(train.features[init_idx], train.labels[init_idx]), prior, alpha, k)
    return init_idx, posterior


def run_active(
    train: LabeledSet,
    test: LabeledSet,
    dp: DecisionProcess,
    prior: NiwParams,
    alpha: DirichletParams,
    k: int,
    cfg: RunConfig,
) -> RunResult:
    """One pass of the querying loop over the training pool.

    Per presented point: predict, compute EVPI, query the oracle and
    refit (full conjugate refit from the fixed prior) when EVPI strictly
    exceeds the inspection cost. Stops when the pool is exhausted.
    """
    order_rng = _stream(cfg.seed, _ORDER)
    init_idx, posterior = initial_fit(train, prior, alpha, k, cfg)
    pool_idx = np.setdiff1d(np.arange(len(train)), init_idx)
    presentation = _presentation_order(pool_idx, cfg.order, order_rng)
    oracle = LabelOracle.over_pool(train, pool_idx)

    feats = train.features[init_idx]
    labs = train.labels[init_idx]
    posteriors = [posterior]
    accuracies = [decision_accuracy(posterior, dp, test)]
    log: list[QueryRecord] = []
    queried: list[int] = []
    queried_labs: list[int] = []
    for step, idx in enumerate(presentation):
        idx = int(idx)
        value = evpi(dp, predict(posterior, train.features[idx]))
        do_query = value > dp.c_ins
        log.append(QueryRecord(step=step, index=idx, evpi=value, queried=do_query))
        if do_query:
            label = oracle.lookup(idx)
            feats = np.vstack([feats, train.features[idx]])
            labs = np.append(labs, label)
            posterior = fit(LabeledSet(feats, labs), prior, alpha, k)
            posteriors.append(posterior)
            accuracies.append(decision_accuracy(posterior, dp, test))
            queried.append(idx)
            queried_labs.append(label)
    return RunResult(
        query_log=log,
        accuracies=accuracies,
        posteriors=posteriors,
        initial_indices=init_idx,
        queried_indices=np.asarray(queried, dtype=np.int64),
        queried_labels=np.asarray(queried_labs, dtype=np.int64),
        pool_size=len(pool_idx),
    )


def run_random_baseline(
    train: LabeledSet,
    test: LabeledSet,
    dp: DecisionProcess,
    prior: NiwParams,
    alpha: DirichletParams,
    k: int,
    cfg: RunConfig,
    budget,
) -> RunResult:
    """Same loop with querying driven by a budget instead of by value.

    Points are drawn uniformly without replacement from the pool until
    ``max(budget)`` queries have been made, with accuracy recorded after
    each, so curves line up with the active run at equal query counts.
    The initial labelled subset is shared with the active run of the same
    seed; the query draws come from an independent stream. Logged EVPI
    values are informational here, not the query criterion.
    """
    budget = [int(b) for b in budget]
    if any(b < 0 for b in budget):
        raise InputError(f"negative query budget in {budget}")
    subset_rng = _stream(cfg.seed, _SUBSET)
    baseline_rng = _stream(cfg.seed, _BASELINE)
    init_idx = draw_initial_labels(train, cfg.initial_fraction, k, subset_rng, cfg.coverage_enforcement)
    pool_idx = np.setdiff1d(np.arange(len(train)), init_idx)
    q_max = max(budget, default=0)
    if q_max > len(pool_idx):
        raise InputError(f"budget {q_max} exceeds the pool size {len(pool_idx)}")
    oracle = LabelOracle.over_pool(train, pool_idx)
    chosen = baseline_rng.permutation(pool_idx)[:q_max]

    feats = train.features[init_idx]
    labs = train.labels[init_idx]
    posterior = fit(LabeledSet(feats, labs), prior, alpha, k)
    posteriors = [posterior]
    accuracies = [decision_accuracy(posterior, dp, test)]
    log: list[QueryRecord] = []
    queried_labs: list[int] = []
    for step, idx in enumerate(chosen):
        idx = int(idx)
        value = evpi(dp, predict(posterior, train.features[idx]))
        log.append(QueryRecord(step=step, index=idx, evpi=value, queried=True))
        label = oracle.lookup(idx)
        feats = np.vstack([feats, train.features[idx]])
        labs = np.append(labs, label)
        posterior = fit(LabeledSet(feats, labs), prior, alpha, k)
        posteriors.append(posterior)
        accuracies.append(decision_accuracy(posterior, dp, test))
        queried_labs.append(label)
    return RunResult(
        query_log=log,
        accuracies=accuracies,
        posteriors=posteriors,
        initial_indices=init_idx,
        queried_indices=np.asarray(chosen, dtype=np.int64),
        queried_labels=np.asarray(queried_labs, dtype=np.int64),
        pool_size=len(pool_idx),
    )


@dataclass(eq=False)
class RepetitionOutcome:
    """Paired active/random results of one repetition plus the class
    make-up of its pool (for sampling-bias analyses)."""

    rep: int
    seed: int
    active: RunResult
    random: RunResult
    pool_class_counts: np.ndarray


@dataclass(eq=False)
class MonteCarloResult:
    active_curve: LearningCurve
    random_curve: LearningCurve
    outcomes: list[RepetitionOutcome]


@dataclass(frozen=True)
class Experiment:
    """Inputs shared by every repetition of one study."""

    dataset: LabeledSet
    dp: DecisionProcess
    prior: NiwParams
    alpha: DirichletParams
    k: int
    cfg: RunConfig
    standardize: bool = False


def aggregate_curve(accuracy_lists: list[list[float]], repetitions: int) -> LearningCurve:
    """Ragged mean/sd per query count; sd uses the population convention
    so a single repetition reports 0."""
    q_max = max(len(a) - 1 for a in accuracy_lists)
    qs = np.arange(q_max + 1)
    mean = np.empty(q_max + 1)
    sd = np.empty(q_max + 1)
    n_reps = np.empty(q_max + 1, dtype=np.int64)
    for q in qs:
        vals = np.array([a[q] for a in accuracy_lists if len(a) > q])
        mean[q] = vals.mean()
        sd[q] = vals.std(ddof=0)
        n_reps[q] = vals.size
    return LearningCurve(q=qs, mean=mean, sd=sd, n_reps=n_reps, repetitions=repetitions)


def prepare_repetition_data(experiment: "Experiment", rep_seed: int) -> tuple[LabeledSet, LabeledSet]:
    """Train/test halves for one repetition seed, standardized on the
    training half only when the experiment asks for it."""
    train, test = split_train_test(experiment.dataset, _stream(rep_seed, _SPLIT))
    if experiment.standardize:
        from .experiments import apply_standardization, standardize

        train, params = standardize(train)
        test = apply_standardization(test, params)
    return train, test


def _run_repetition(args) -> RepetitionOutcome:
    experiment, rep, rep_seed = args
    train, test = prepare_repetition_data(experiment, rep_seed)
    cfg = dataclasses.replace(experiment.cfg, seed=rep_seed)
    active = run_active(train, test, experiment.dp, experiment.prior, experiment.alpha, experiment.k, cfg)
    random = run_random_baseline(
        train, test, experiment.dp, experiment.prior, experiment.alpha, experiment.k, cfg,
        budget=[active.n_queries],
    )
    pool_counts = np.bincount(
        np.delete(train.labels, active.initial_indices), minlength=experiment.k + 1
    )[1:]
    return RepetitionOutcome(
        rep=rep, seed=rep_seed, active=active, random=random, pool_class_counts=pool_counts
    )


def monte_carlo(
    experiment: Experiment,
    repetitions: int,
    base_seed: int,
    workers: int = 1,
) -> MonteCarloResult:
    """Run ``repetitions`` independent repetitions; repetition r uses seed
    ``base_seed + r`` and re-draws the train/test split and the initial
    labelled subset. Results are identical for any worker count because
    every stream is derived from the repetition seed and aggregation runs
    in repetition order.
    """
    if repetitions < 1:
        raise InputError(f"repetitions must be >= 1, got {repetitions}")
    args = [(experiment, r, base_seed + r) for r in range(repetitions)]
    if workers <= 1 or repetitions == 1:
        outcomes = [_run_repetition(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_repetition, args, chunksize=max(1, repetitions // (4 * workers))))
    active_curve = aggregate_curve([o.active.accuracies for o in outcomes], repetitions)
    random_curve = aggregate_curve([o.random.accuracies for o in outcomes], repetitions)
    return MonteCarloResult(active_curve=active_curve, random_curve=random_curve, outcomes=outcomes)
