"""Result serialization: learning curves, EVPI grids, query logs, model
summaries, and the run manifest.

All files are comma-delimited text or JSON with LF line endings and
shortest round-trip float formatting, so re-loading reproduces the
in-memory values exactly and re-running a seed reproduces the bytes.
Writes go to a temporary file in the destination directory followed by
an atomic rename; a crashed run never leaves a partial file behind.
"""

from __future__ import annotations

import json
import os
import platform
import tempfile
from pathlib import Path

import numpy as np

from .active_learning import LearningCurve, MonteCarloResult, QueryRecord
from .errors import OutputError, ParseError
from .experiments import EvpiGrid, GridSpec
from .gmm import GmmPosterior


def _fmt(x: float) -> str:
    return repr(float(x))


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            os.unlink(tmp)
            raise
    except OSError as exc:
        raise OutputError(f"writing {path}: {exc}") from exc


def write_dataset(path, data) -> None:
    """Dataset file: header ``f1,...,fD,label``, one observation per row."""
    lines = [",".join([f"f{i + 1}" for i in range(data.dim)] + ["label"])]
    for row, label in zip(data.features, data.labels):
        lines.append(",".join([_fmt(v) for v in row] + [str(int(label))]))
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def write_curves(path, active: LearningCurve, random: LearningCurve) -> None:
    """Comparison curve: one row per query count with both arms' stats."""
    q_max = max(len(active.q), len(random.q)) - 1
    lines = ["q,mean_active,sd_active,mean_random,sd_random,n_reps_at_q"]
    for q in range(q_max + 1):
        cells = [str(q)]
        for curve in (active, random):
            if q < len(curve.q):
                cells += [_fmt(curve.mean[q]), _fmt(curve.sd[q])]
            else:
                cells += ["", ""]
        n = active.n_reps[q] if q < len(active.q) else random.n_reps[q]
        cells.append(str(int(n)))
        lines.append(",".join(cells))
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def read_curves(path) -> tuple[LearningCurve, LearningCurve]:
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not lines or lines[0] != "q,mean_active,sd_active,mean_random,sd_random,n_reps_at_q":
        raise ParseError(f"{path}: unexpected curve header")
    cols = {"ma": [], "sa": [], "mr": [], "sr": [], "n": []}
    for line in lines[1:]:
        q, ma, sa, mr, sr, n = line.split(",")
        cols["ma"].append(float(ma) if ma else np.nan)
        cols["sa"].append(float(sa) if sa else np.nan)
        cols["mr"].append(float(mr) if mr else np.nan)
        cols["sr"].append(float(sr) if sr else np.nan)
        cols["n"].append(int(n))
    q = np.arange(len(cols["n"]))
    n = np.asarray(cols["n"])
    active = LearningCurve(q=q, mean=np.asarray(cols["ma"]), sd=np.asarray(cols["sa"]), n_reps=n, repetitions=0)
    random = LearningCurve(q=q, mean=np.asarray(cols["mr"]), sd=np.asarray(cols["sr"]), n_reps=n, repetitions=0)
    return active, random


def write_single_curve(path, curve: LearningCurve, arm: str) -> None:
    lines = [f"q,mean_{arm},sd_{arm},n_reps_at_q"]
    for q in range(len(curve.q)):
        lines.append(",".join([str(q), _fmt(curve.mean[q]), _fmt(curve.sd[q]), str(int(curve.n_reps[q]))]))
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def write_grid(path, grid: EvpiGrid) -> None:
    """Grid file: axis metadata in comment lines, then ny rows of nx
    cell-center values (row j is the j-th y cell, bottom first)."""
    s = grid.spec
    lines = [
        "# evpi_grid",
        f"# x_min={_fmt(s.x_min)} x_max={_fmt(s.x_max)} nx={s.nx}",
        f"# y_min={_fmt(s.y_min)} y_max={_fmt(s.y_max)} ny={s.ny}",
    ]
    for j in range(s.ny):
        lines.append(",".join(_fmt(v) for v in grid.values[j]))
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def read_grid(path) -> EvpiGrid:
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if len(lines) < 3 or lines[0] != "# evpi_grid":
        raise ParseError(f"{path}: not an EVPI grid file")

    def parse_axis(line: str, names):
        fields = dict(part.split("=", 1) for part in line[2:].split())
        return [float(fields[n]) for n in names[:2]] + [int(fields[names[2]])]

    x_min, x_max, nx = parse_axis(lines[1], ["x_min", "x_max", "nx"])
    y_min, y_max, ny = parse_axis(lines[2], ["y_min", "y_max", "ny"])
    values = np.array([[float(v) for v in line.split(",")] for line in lines[3 : 3 + ny]])
    spec = GridSpec(x_min=x_min, x_max=x_max, nx=nx, y_min=y_min, y_max=y_max, ny=ny)
    return EvpiGrid(spec=spec, values=values)


def write_query_log(path, outcomes) -> None:
    """Every presented point of every repetition, both arms."""
    lines = ["rep,arm,step,index,evpi,queried"]
    for outcome in outcomes:
        for arm, result in (("active", outcome.active), ("random", outcome.random)):
            for rec in result.query_log:
                lines.append(
                    f"{outcome.rep},{arm},{rec.step},{rec.index},{_fmt(rec.evpi)},{int(rec.queried)}"
                )
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def read_query_log(path) -> list[tuple[int, str, QueryRecord]]:
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not lines or lines[0] != "rep,arm,step,index,evpi,queried":
        raise ParseError(f"{path}: unexpected query log header")
    out = []
    for line in lines[1:]:
        rep, arm, step, index, value, queried = line.split(",")
        out.append(
            (int(rep), arm, QueryRecord(step=int(step), index=int(index), evpi=float(value), queried=queried == "1"))
        )
    return out


def model_summary(posterior: GmmPosterior) -> dict:
    """Point summary per class for external ellipse plotting: the
    posterior mean location and the expected covariance S_n / (v_n - D - 1)."""
    classes = []
    for niw, count in zip(posterior.per_class, posterior.counts):
        denom = niw.v - posterior.d - 1.0
        classes.append(
            {
                "count": int(count),
                "mean": [float(v) for v in niw.m],
                "covariance": [[float(v) for v in row] for row in niw.S / denom],
            }
        )
    return {"dim": posterior.d, "classes": classes}


def write_model_summary(path, posterior: GmmPosterior) -> None:
    _atomic_write(Path(path), json.dumps(model_summary(posterior), indent=2, sort_keys=True) + "\n")


def versions() -> dict:
    import scipy

    from . import __version__

    return {
        "riskal": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def write_manifest(path, config_echo: dict, seed: int, files: list[str], extra: dict | None = None) -> None:
    """The reproducibility record: the exact config, the base seed, the
    produced files, and library versions."""
    doc = {
        "config": config_echo,
        "seed": seed,
        "files": sorted(files),
        "versions": versions(),
    }
    if extra:
        doc.update(extra)
    _atomic_write(Path(path), json.dumps(doc, indent=2, sort_keys=True) + "\n")


def export_results(
    out_dir,
    result: MonteCarloResult | None = None,
    grids: dict[str, EvpiGrid] | None = None,
    models: dict[str, GmmPosterior] | None = None,
    config_echo: dict | None = None,
    seed: int = 0,
    curves_only: bool = False,
    single_arm: str | None = None,
) -> list[str]:
    """Write the selected artifacts into ``out_dir``; returns the file
    names written (manifest excluded)."""
    out = Path(out_dir)
    files: list[str] = []
    if result is not None:
        if single_arm == "random":
            write_single_curve(out / "baseline_curve.csv", result.random_curve, "random")
            files.append("baseline_curve.csv")
        else:
            write_curves(out / "curves.csv", result.active_curve, result.random_curve)
            files.append("curves.csv")
        if not curves_only:
            write_query_log(out / "query_log.csv", result.outcomes)
            files.append("query_log.csv")
    for name, grid in (grids or {}).items():
        write_grid(out / f"{name}.csv", grid)
        files.append(f"{name}.csv")
    for name, model in (models or {}).items():
        write_model_summary(out / f"{name}.json", model)
        files.append(f"{name}.json")
    write_manifest(out / "manifest.json", config_echo or {}, seed, files)
    return files + ["manifest.json"]
