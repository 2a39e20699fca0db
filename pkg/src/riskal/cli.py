"""Command-line front end.

Subcommands: ``generate`` (write a dataset file), ``run`` (the full
experiment: both curve arms, query logs, EVPI maps, model summaries),
``baseline`` (random-sampling arm only), ``curves`` (curve comparison
only), ``evpi-map`` (EVPI map of the initial model only) and
``verify-example`` (reproduce the built-in worked decision example).

Everything is driven by one JSON config; the only flag overrides allowed
are ``--seed`` and ``--out``. Exit codes: 0 success, 1 validation error,
2 numeric failure, 3 I/O failure. Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import copy
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import __version__
from .active_learning import (
    Experiment,
    initial_fit,
    monte_carlo,
    prepare_repetition_data,
)
from .config import ExperimentConfig, load_config
from .decision import DecisionProcess, evpi, meu_observed, meu_unobserved
from .errors import ConfigError, InputError, NumericError, OutputError
from .experiments import evpi_grid, generate_synthetic, load_dataset, pca_fit, pca_project
from .exports import export_results, write_dataset, write_manifest
from .presets import demo_decision_process
from .probability import validate_distribution

#: Anchor values of the built-in worked example: the two maximum expected
#: utilities and their difference for the demo tables under the posterior
#: {0.4, 0.3, 0.2, 0.1}, hand-checkable from the tables themselves.
EXAMPLE_POSTERIOR = (0.4, 0.3, 0.2, 0.1)
EXAMPLE_EXPECTED = {"meu_unobserved": -4.4, "meu_observed": 1.015, "evpi": 5.415}
EXAMPLE_TOL = 1e-9


def verify_example(dp: DecisionProcess | None = None) -> tuple[list[str], bool]:
    """Recompute the worked example; returns the report lines and overall
    pass/fail at 1e-9."""
    dp = dp if dp is not None else demo_decision_process()
    posterior = validate_distribution(EXAMPLE_POSTERIOR)
    got = {
        "meu_unobserved": meu_unobserved(dp, posterior).expected_utility,
        "meu_observed": meu_observed(dp, posterior),
        "evpi": evpi(dp, posterior),
    }
    lines = []
    ok = True
    for name, expected in EXAMPLE_EXPECTED.items():
        delta = got[name] - expected
        good = abs(delta) <= EXAMPLE_TOL
        ok &= good
        lines.append(
            f"{name} = {got[name]:.12g} expected {expected:.12g} "
            f"(delta {delta:+.3e}) {'PASS' if good else 'FAIL'}"
        )
    lines.append("PASS" if ok else "FAIL")
    return lines, ok


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are validation errors: exit 1
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(sub):
    sub.add_argument("--config", required=True, help="experiment config (JSON)")
    sub.add_argument("--out", help="override the output destination")
    sub.add_argument("--seed", type=int, help="override the config seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="riskal", description=__doc__)
    parser.add_argument("--version", action="version", version=f"riskal {__version__}")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = subs.add_parser("generate", help="write the configured synthetic dataset to a file")
    _add_common(p)
    p.set_defaults(func=_cmd_generate)
    for name, func, help_text in (
        ("run", _cmd_run, "full experiment: curves, query logs, EVPI maps, model summaries"),
        ("baseline", _cmd_baseline, "random-sampling arm only"),
        ("curves", _cmd_curves, "learning-curve comparison only"),
        ("evpi-map", _cmd_evpi_map, "EVPI map of the initial model only"),
    ):
        p = subs.add_parser(name, help=help_text)
        _add_common(p)
        p.set_defaults(func=func)
    p = subs.add_parser("verify-example", help="recompute the built-in worked decision example")
    p.set_defaults(func=_cmd_verify_example)
    return parser


def _load(args) -> tuple[ExperimentConfig, int, str]:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.run.seed
    out = args.out if args.out is not None else cfg.output_dir
    return cfg, seed, out


def _config_echo(cfg: ExperimentConfig, seed: int, out: str) -> dict:
    doc = copy.deepcopy(cfg.raw)
    doc.setdefault("run", {})["seed"] = seed
    doc.setdefault("outputs", {})["directory"] = str(out)
    return doc


def _dataset(cfg: ExperimentConfig, seed_override: int | None = None):
    if cfg.data.synthetic is not None:
        spec = cfg.data.synthetic
        if seed_override is not None:
            spec = dataclasses.replace(spec, seed=seed_override)
        return generate_synthetic(spec)
    return load_dataset(cfg.data.file, cfg.dim, cfg.k)


def _experiment(cfg: ExperimentConfig) -> Experiment:
    return Experiment(
        dataset=_dataset(cfg),
        dp=cfg.dp,
        prior=cfg.prior,
        alpha=cfg.alpha,
        k=cfg.k,
        cfg=cfg.run,
        standardize=cfg.data.standardize,
    )


def _workers(cfg: ExperimentConfig) -> int:
    return cfg.workers if cfg.workers is not None else (os.cpu_count() or 1)


def _grid_inputs(cfg: ExperimentConfig, train):
    """Grid spec plus the projection needed for models beyond 2-D."""
    if cfg.dim == 2:
        return cfg.grid.to_spec(train.features), None
    projection = pca_fit(train)
    return cfg.grid.to_spec(pca_project(projection, train).features), projection


def _cmd_generate(args) -> int:
    cfg, seed, out = _load(args)
    if cfg.data.synthetic is None:
        raise InputError("config has data.file; nothing to generate")
    seed_override = args.seed if args.seed is not None else None
    data = _dataset(cfg, seed_override=seed_override)
    out_path = Path(out)
    if args.out is None:
        out_path = Path(cfg.output_dir) / "dataset.csv"
    write_dataset(out_path, data)
    print(f"wrote {len(data)} rows to {out_path}", file=sys.stderr)
    return 0


def _cmd_run(args) -> int:
    cfg, seed, out = _load(args)
    experiment = _experiment(cfg)
    result = monte_carlo(experiment, cfg.repetitions, base_seed=seed, workers=_workers(cfg))
    train0, _ = prepare_repetition_data(experiment, seed)
    spec, projection = _grid_inputs(cfg, train0)
    first = result.outcomes[0].active
    grids = {
        "evpi_grid_initial": evpi_grid(first.posteriors[0], cfg.dp, spec, projection),
        "evpi_grid_final": evpi_grid(first.final_posterior, cfg.dp, spec, projection),
    }
    models = {"model_initial": first.posteriors[0], "model_final": first.final_posterior}
    files = export_results(
        out, result=result, grids=grids, models=models,
        config_echo=_config_echo(cfg, seed, out), seed=seed,
    )
    print(f"wrote {', '.join(files)} to {out}", file=sys.stderr)
    return 0


def _cmd_baseline(args) -> int:
    cfg, seed, out = _load(args)
    result = monte_carlo(_experiment(cfg), cfg.repetitions, base_seed=seed, workers=_workers(cfg))
    files = export_results(
        out, result=result, config_echo=_config_echo(cfg, seed, out), seed=seed, single_arm="random",
    )
    print(f"wrote {', '.join(files)} to {out}", file=sys.stderr)
    return 0


def _cmd_curves(args) -> int:
    cfg, seed, out = _load(args)
    result = monte_carlo(_experiment(cfg), cfg.repetitions, base_seed=seed, workers=_workers(cfg))
    files = export_results(
        out, result=result, config_echo=_config_echo(cfg, seed, out), seed=seed, curves_only=True,
    )
    print(f"wrote {', '.join(files)} to {out}", file=sys.stderr)
    return 0


def _cmd_evpi_map(args) -> int:
    cfg, seed, out = _load(args)
    experiment = _experiment(cfg)
    train, _ = prepare_repetition_data(experiment, seed)
    run_cfg = dataclasses.replace(cfg.run, seed=seed)
    _, posterior = initial_fit(train, cfg.prior, cfg.alpha, cfg.k, run_cfg)
    spec, projection = _grid_inputs(cfg, train)
    grids = {"evpi_grid_initial": evpi_grid(posterior, cfg.dp, spec, projection)}
    files = export_results(
        out, grids=grids, models={"model_initial": posterior},
        config_echo=_config_echo(cfg, seed, out), seed=seed,
    )
    print(f"wrote {', '.join(files)} to {out}", file=sys.stderr)
    return 0


def _cmd_verify_example(args) -> int:
    lines, ok = verify_example()
    for line in lines:
        print(line)
    return 0 if ok else 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"riskal: config error: {exc}", file=sys.stderr)
        return 1
    except InputError as exc:
        print(f"riskal: invalid input: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"riskal: numeric failure: {exc}", file=sys.stderr)
        return 2
    except (OutputError, OSError) as exc:
        print(f"riskal: i/o failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
