"""Dataset generation, ingestion, normalization, projection, and the
EVPI map over a two-dimensional feature space.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .decision import DecisionProcess
from .errors import (
    DegenerateCovariance,
    DimensionMismatch,
    InputError,
    LabelOutOfRange,
    NonFiniteFeature,
    NonPosDefCovariance,
    NumericError,
    ParseError,
    ZeroVarianceFeature,
)
from .gmm import GmmPosterior, LabeledSet, predict_many


# -- synthetic data ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClassSpec:
    """Gaussian generating distribution and sample count for one class."""

    mean: np.ndarray
    cov: np.ndarray
    count: int

    def __post_init__(self):
        mean = np.ascontiguousarray(self.mean, dtype=float)
        cov = np.ascontiguousarray(self.cov, dtype=float)
        d = mean.shape[0]
        if mean.ndim != 1 or not np.all(np.isfinite(mean)):
            raise InputError("class mean must be a finite vector")
        if cov.shape != (d, d) or not np.all(np.isfinite(cov)):
            raise DimensionMismatch(f"class covariance must have shape ({d}, {d})")
        if np.abs(cov - cov.T).max() > 1e-9:
            raise NonPosDefCovariance("class covariance is not symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise NonPosDefCovariance(f"class covariance is not positive definite: {exc}") from exc
        if self.count < 1:
            raise InputError(f"class count must be >= 1, got {self.count}")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "count", int(self.count))


@dataclass(frozen=True, eq=False)
class SyntheticSpec:
    """Mixture-of-Gaussians dataset description.

    Without ``segments`` the rows come out grouped by class (1..K). With
    ``segments`` -- a sequence of (label, count) runs -- the rows follow
    that timeline instead, which is how a monitoring record with a cold
    spell and late damage onset is mimicked. Segment counts must add up
    to the per-class counts.
    """

    classes: tuple[ClassSpec, ...]
    seed: int
    segments: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if not self.classes:
            raise InputError("at least one class is required")
        d = self.classes[0].mean.shape[0]
        if any(c.mean.shape[0] != d for c in self.classes):
            raise DimensionMismatch("class specs disagree on dimensionality")
        if self.segments is not None:
            segments = tuple((int(l), int(c)) for l, c in self.segments)
            totals = np.zeros(len(self.classes), dtype=np.int64)
            for label, count in segments:
                if not 1 <= label <= len(self.classes):
                    raise LabelOutOfRange(f"segment label {label} outside 1..{len(self.classes)}")
                if count < 1:
                    raise InputError(f"segment count must be >= 1, got {count}")
                totals[label - 1] += count
            declared = np.array([c.count for c in self.classes])
            if not np.array_equal(totals, declared):
                raise InputError(
                    f"segment totals {totals.tolist()} do not match class counts {declared.tolist()}"
                )
            object.__setattr__(self, "segments", segments)

    @property
    def dim(self) -> int:
        return self.classes[0].mean.shape[0]

    @property
    def total(self) -> int:
        return sum(c.count for c in self.classes)


def generate_synthetic(spec: SyntheticSpec) -> LabeledSet:
    """Draw the dataset; deterministic for a given seed regardless of how
    the caller parallelizes, because every class has its own child
    stream."""
    streams = np.random.SeedSequence(spec.seed).spawn(len(spec.classes))
    draws = []
    for cls, ss in zip(spec.classes, streams):
        rng = np.random.default_rng(ss)
        draws.append(
            rng.multivariate_normal(cls.mean, cls.cov, size=cls.count, method="cholesky")
        )
    if spec.segments is None:
        features = np.vstack(draws)
        labels = np.repeat(np.arange(1, len(spec.classes) + 1), [c.count for c in spec.classes])
        return LabeledSet(features, labels)
    consumed = [0] * len(spec.classes)
    feat_rows, label_rows = [], []
    for label, count in spec.segments:
        i = label - 1
        feat_rows.append(draws[i][consumed[i] : consumed[i] + count])
        label_rows.append(np.full(count, label, dtype=np.int64))
        consumed[i] += count
    return LabeledSet(np.vstack(feat_rows), np.concatenate(label_rows))


# -- dataset files -----------------------------------------------------------

def dataset_header(d: int) -> list[str]:
    return [f"f{i + 1}" for i in range(d)] + ["label"]


def load_dataset(path, expected_d: int, expected_k: int) -> LabeledSet:
    """Read a delimited dataset file (header ``f1,...,fD,label``), keeping
    row order, which sequential presentation relies on."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ParseError(f"{path}: empty file") from None
            if header != dataset_header(expected_d):
                raise ParseError(
                    f"{path}: expected header {','.join(dataset_header(expected_d))}, "
                    f"got {','.join(header)}"
                )
            features, labels = [], []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != expected_d + 1:
                    raise ParseError(f"{path}: row {lineno} has {len(row)} columns, expected {expected_d + 1}")
                try:
                    feats = [float(v) for v in row[:expected_d]]
                except ValueError as exc:
                    raise ParseError(f"{path}: row {lineno}: {exc}") from None
                if not all(np.isfinite(feats)):
                    raise NonFiniteFeature(f"{path}: row {lineno} has a non-finite feature")
                try:
                    label = int(row[expected_d])
                except ValueError as exc:
                    raise ParseError(f"{path}: row {lineno}: label {row[expected_d]!r} is not an integer") from None
                if not 1 <= label <= expected_k:
                    raise LabelOutOfRange(f"{path}: row {lineno}: label {label} outside 1..{expected_k}")
                features.append(feats)
                labels.append(label)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not features:
        raise ParseError(f"{path}: no data rows")
    return LabeledSet(np.asarray(features), np.asarray(labels))


# -- standardization ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Standardization:
    """Per-feature location/scale estimated on training data, applied to
    anything that must live in the same coordinates (test points, grids)."""

    mean: np.ndarray
    sd: np.ndarray


def standardize(data: LabeledSet) -> tuple[LabeledSet, Standardization]:
    """Shift/scale every feature to sample mean 0 and sample sd 1."""
    if len(data) < 2:
        raise InputError("standardization needs at least two points")
    mean = data.features.mean(axis=0)
    sd = data.features.std(axis=0, ddof=1)
    dead = np.nonzero(sd == 0.0)[0]
    if dead.size:
        raise ZeroVarianceFeature(f"feature column {int(dead[0]) + 1} is constant")
    params = Standardization(mean=mean, sd=sd)
    return apply_standardization(data, params), params


def apply_standardization(data: LabeledSet, params: Standardization) -> LabeledSet:
    return LabeledSet((data.features - params.mean) / params.sd, data.labels)


def unstandardize_features(x: np.ndarray, params: Standardization) -> np.ndarray:
    return x * params.sd + params.mean


# -- principal component projection -------------------------------------------

@dataclass(frozen=True, eq=False)
class Projection:
    """Top-2 principal directions of the training features.

    ``loadings`` is 2 x D with orthonormal rows; the sign convention
    makes the largest-magnitude entry of each row positive so projections
    are reproducible across eigensolvers.
    """

    mean: np.ndarray
    loadings: np.ndarray
    explained: np.ndarray


def pca_fit(data: LabeledSet) -> Projection:
    x = data.features
    n, d = x.shape
    if d < 2:
        raise DegenerateCovariance("projection needs at least two feature dimensions")
    if n < d:
        raise DegenerateCovariance(f"projection needs at least {d} points, got {n}")
    mean = x.mean(axis=0)
    _, svals, vt = np.linalg.svd(x - mean, full_matrices=False)
    if not np.all(np.isfinite(svals)):
        raise DegenerateCovariance("singular values are not finite")
    loadings = vt[:2].copy()
    for row in loadings:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    power = svals**2
    explained = power[:2] / power.sum()
    return Projection(mean=mean, loadings=loadings, explained=explained)


def pca_project(projection: Projection, data: LabeledSet) -> LabeledSet:
    """Project onto the plane of the top-2 directions (labels kept)."""
    return LabeledSet((data.features - projection.mean) @ projection.loadings.T, data.labels)


def pca_lift(projection: Projection, coords: np.ndarray) -> np.ndarray:
    """Map 2-D plane coordinates back into the original feature space.

    The lift is the affine back-projection mean + loadings^T coords; out-
    of-plane variation is deliberately dropped, which is the documented
    approximation for EVPI maps of higher-dimensional models.
    """
    return projection.mean + np.atleast_2d(coords) @ projection.loadings


# -- EVPI grid ----------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Cell layout of a 2-D map: ``nx`` x ``ny`` cells covering
    [x_min, x_max] x [y_min, y_max], evaluated at cell centers."""

    x_min: float
    x_max: float
    nx: int
    y_min: float
    y_max: float
    ny: int

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise InputError("grid extent must be non-empty")
        if self.nx < 1 or self.ny < 1:
            raise InputError("grid resolution must be >= 1 per axis")
        for v in (self.x_min, self.x_max, self.y_min, self.y_max):
            if not np.isfinite(v):
                raise InputError("grid extent must be finite")

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        dx = (self.x_max - self.x_min) / self.nx
        dy = (self.y_max - self.y_min) / self.ny
        xs = self.x_min + dx * (np.arange(self.nx) + 0.5)
        ys = self.y_min + dy * (np.arange(self.ny) + 0.5)
        return xs, ys


def grid_around(points: np.ndarray, nx: int = 60, ny: int = 60, padding: float = 0.5) -> GridSpec:
    """Grid covering the bounding box of 2-D points plus a margin."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise DimensionMismatch("grid extent requires 2-D points")
    (x_min, y_min), (x_max, y_max) = points.min(axis=0), points.max(axis=0)
    return GridSpec(
        x_min=float(x_min - padding), x_max=float(x_max + padding), nx=nx,
        y_min=float(y_min - padding), y_max=float(y_max + padding), ny=ny,
    )


@dataclass(frozen=True, eq=False)
class EvpiGrid:
    """EVPI evaluated at every cell center; ``values[j, i]`` is cell
    (x index i, y index j)."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.shape != (self.spec.ny, self.spec.nx):
            raise DimensionMismatch(
                f"values shape {values.shape} does not match grid ({self.spec.ny}, {self.spec.nx})"
            )
        if np.any(values < 0.0):
            raise InputError("EVPI grid entries must be non-negative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def top_decile_mask(self) -> np.ndarray:
        return self.values >= np.quantile(self.values, 0.9)


def evpi_grid(
    classifier: GmmPosterior,
    dp: DecisionProcess,
    spec: GridSpec,
    projection: Projection | None = None,
) -> EvpiGrid:
    """EVPI of the decision at every grid cell, given the classifier.

    For models with more than two feature dimensions a projection is
    required and cell centers are lifted back through it.
    """
    xs, ys = spec.centers()
    gx, gy = np.meshgrid(xs, ys)
    coords = np.column_stack([gx.ravel(), gy.ravel()])
    if classifier.d == 2 and projection is None:
        points = coords
    elif projection is not None:
        points = pca_lift(projection, coords)
    else:
        raise DimensionMismatch(
            f"model is {classifier.d}-dimensional; an explicit projection is required"
        )
    posteriors = predict_many(classifier, points)
    eu = posteriors @ dp.action_state_eu.T
    values = posteriors @ dp.action_state_eu.max(axis=0) - eu.max(axis=1)
    low = values.min()
    if low < -1e-9:
        raise NumericError(f"EVPI grid produced {low!r}")
    values = np.maximum(values, 0.0)
    return EvpiGrid(spec=spec, values=values.reshape(spec.ny, spec.nx))


def segment_crosses_mask(spec: GridSpec, mask: np.ndarray, start, end, samples: int = 400) -> bool:
    """Whether the straight segment from ``start`` to ``end`` passes
    through any cell where ``mask`` is true (points outside the grid are
    ignored)."""
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    ts = np.linspace(0.0, 1.0, samples)
    pts = start[None, :] + ts[:, None] * (end - start)[None, :]
    dx = (spec.x_max - spec.x_min) / spec.nx
    dy = (spec.y_max - spec.y_min) / spec.ny
    ix = np.floor((pts[:, 0] - spec.x_min) / dx).astype(int)
    iy = np.floor((pts[:, 1] - spec.y_min) / dy).astype(int)
    ok = (ix >= 0) & (ix < spec.nx) & (iy >= 0) & (iy < spec.ny)
    return bool(mask[iy[ok], ix[ok]].any())
