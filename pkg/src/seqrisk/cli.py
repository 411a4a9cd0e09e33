"""Command-line entry point.

Subcommands: ``validate``, ``estimate``, ``oracle`` (``prob`` /
``dispersion`` / ``bijection``), ``sweep``, ``distribution``, ``cohort``.
Single-value queries print to standard output; tables and plots go to
files named by ``--out``, written atomically (temp file + rename) and
accompanied by a ``<out>.manifest.json`` recording the configuration,
seed, artifact checksums, and wall-clock duration.

Exit codes: 0 success, 2 configuration error, 3 model validation failure,
4 infeasible experiment point, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import experiments
from .errors import CalibrationError, ModelValidationError, SeqriskError
from .estimators import CLIP_NONE, CLIP_POLICIES, KINDS, estimate
from .oracle import dispersion_probability, exact_bijection_check, exact_outcome_probability
from .seqmodel import MarkovModel, require_valid, validate
from .svgplot import table_plot


def _default_workers() -> int:
    env = os.environ.get("SEQRISK_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _load_model(path: str) -> MarkovModel:
    return MarkovModel.from_json(Path(path).read_text())


def _load_chain_spec(path: str, seed: int) -> experiments.ChainSpec:
    spec = experiments.ChainSpec.from_dict(json.loads(Path(path).read_text()))
    return replace(spec, seed=seed)


def _resolve_model(args) -> MarkovModel:
    if getattr(args, "model", None):
        model = _load_model(args.model)
        require_valid(model)
        return model
    if getattr(args, "spec", None):
        return experiments.random_chain(_load_chain_spec(args.spec, args.seed))
    raise ValueError("one of --model / --spec is required")


class _Artifacts:
    """Atomic artifact writing plus manifest bookkeeping."""

    def __init__(self, command: str, config: dict, seed: int):
        self.command = command
        self.config = config
        self.seed = seed
        self.files: dict[str, str] = {}
        self.t0 = time.perf_counter()

    def write_text(self, path: Path, text: str) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + f".tmp{os.getpid()}")
        tmp.write_text(text)
        os.replace(tmp, path)
        self.files[path.name] = hashlib.sha256(text.encode()).hexdigest()
        print(f"wrote {path}", file=sys.stderr)

    def finish(self, out: Path) -> None:
        manifest = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "artifacts": self.files,
            "duration_seconds": time.perf_counter() - self.t0,
            "created_utc": datetime.now(timezone.utc).isoformat(),
        }
        out = Path(out)
        path = out.with_name(out.name + ".manifest.json")
        tmp = path.with_name(path.name + f".tmp{os.getpid()}")
        tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True))
        os.replace(tmp, path)


def _config_dict(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _cmd_validate(args) -> int:
    model = _load_model(args.model)
    violations = validate(model)
    if violations:
        for v in violations:
            print(v, file=sys.stderr)
        return 3
    print("ok")
    return 0


def _cmd_estimate(args) -> int:
    model = _resolve_model(args)
    report = estimate(
        model,
        model.vocabulary,
        model.horizon,
        args.kind,
        args.n,
        args.seed,
        clip_policy=args.clip,
        workers=args.workers,
    )
    print(repr(report.mean))
    if args.out:
        art = _Artifacts("estimate", _config_dict(args), args.seed)
        art.write_text(Path(args.out), report.to_json())
        art.finish(Path(args.out))
    return 0


def _cmd_oracle_prob(args) -> int:
    model = _load_model(args.model)
    print(repr(exact_outcome_probability(model)))
    return 0


def _cmd_oracle_dispersion(args) -> int:
    value = dispersion_probability(args.n, args.p_base, args.p_elev)
    print(f"{value:.4f}")
    return 0


def _cmd_oracle_bijection(args) -> int:
    model = _load_model(args.model)
    require_valid(model)
    p_a, p_b = exact_bijection_check(model, model.vocabulary, model.horizon)
    print(f"{p_a!r} {p_b!r}")
    return 0


def _parse_grid(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _default_sweep(args):
    seed = args.seed
    if args.axis == "probability":
        spec = experiments.ChainSpec(
            experiments.DEFAULT_CHAIN_STATES, 1.0, experiments.DEFAULT_HORIZON_STEPS,
            seed=seed, equal_transitions=True,
        )
        return spec, list(experiments.PROBABILITY_GRID), experiments.DEFAULT_REPLICATIONS
    if args.axis == "spontaneity":
        spec = experiments.ChainSpec(
            experiments.DEFAULT_CHAIN_STATES, 1.0, experiments.DEFAULT_HORIZON_STEPS,
            seed=seed, target_probability=0.5, equal_transitions=True,
        )
        return spec, list(experiments.SPONTANEITY_GRID), experiments.DEFAULT_REPLICATIONS
    spec = experiments.ChainSpec(
        experiments.DEFAULT_CHAIN_STATES, 1.0, experiments.DEFAULT_HORIZON_STEPS,
        seed=seed, target_probability=0.5, equal_transitions=True,
    )
    return spec, list(experiments.SAMPLE_COUNT_GRID), experiments.SAMPLE_COUNT_REPLICATIONS


def _write_table(args, table, *, svg_kw=None) -> None:
    out = Path(args.out)
    art = _Artifacts(args.command, _config_dict(args), args.seed)
    if args.format == "json":
        art.write_text(out, table.to_json())
    else:
        art.write_text(out, table.to_csv_text())
        if args.format == "svg" and svg_kw:
            art.write_text(out.with_suffix(".svg"), table_plot(table, **svg_kw))
    art.finish(out)


def _cmd_sweep(args) -> int:
    if args.spec:
        base = _load_chain_spec(args.spec, args.seed)
        grid = _parse_grid(args.grid) if args.grid else _default_sweep(args)[1]
        replications = args.replications or experiments.DEFAULT_REPLICATIONS
    else:
        base, grid, replications = _default_sweep(args)
        if args.grid:
            grid = _parse_grid(args.grid)
        if args.replications:
            replications = args.replications
    table = experiments.variance_sweep(args.axis, grid, base, replications, args.seed)
    svg_kw = dict(
        task_prefix=f"{args.axis}=", statistic="variance",
        title=f"estimator variance vs {args.axis}",
        xlabel=args.axis, ylabel="variance",
        logx=args.axis == "sample_count", logy=args.axis == "sample_count",
    )
    _write_table(args, table, svg_kw=svg_kw)
    return 0


def _cmd_distribution(args) -> int:
    if args.spec:
        spec = _load_chain_spec(args.spec, args.seed)
    else:
        spec = experiments.ChainSpec(
            experiments.DEFAULT_CHAIN_STATES, 1.0, experiments.DEFAULT_HORIZON_STEPS,
            seed=args.seed, target_probability=0.2, equal_transitions=False,
        )
    result = experiments.estimate_distribution_experiment(
        spec, args.n_estimates, args.samples, args.seed
    )
    out = Path(args.out)
    art = _Artifacts("distribution", _config_dict(args), args.seed)
    art.write_text(out, result.to_csv_text(bins=args.bins))
    art.finish(out)
    return 0


def _cmd_cohort(args) -> int:
    template = experiments.ChainSpec(
        args.states, args.spontaneity, args.horizon, seed=args.seed,
        equal_transitions=args.transitions == "equal",
    )
    spec = experiments.CohortSpec(
        n_patients=args.patients,
        chain_template=template,
        n_timelines=args.timelines,
        bootstrap_rounds=args.rounds,
        seed=args.seed,
    )
    table = experiments.synthetic_cohort_eval(spec)
    svg_kw = dict(
        task_prefix="cohort", statistic="auroc", x_from_task=False,
        title="AUROC vs sample count", xlabel="samples", ylabel="AUROC",
    )
    _write_table(args, table, svg_kw=svg_kw)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqrisk",
        description="Outcome-probability estimators for token-sequence models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, out_required=False):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=out_required, help="artifact path")
        p.add_argument("--format", choices=("csv", "json", "svg"), default="csv")

    p = sub.add_parser("validate", help="check a chain file for stochasticity")
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("estimate", help="run one estimator on a model")
    p.add_argument("--model")
    p.add_argument("--spec", help="ChainSpec JSON to generate a model from")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--clip", choices=CLIP_POLICIES, default=CLIP_NONE)
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("oracle", help="exact queries")
    osub = p.add_subparsers(dest="oracle_command", required=True)
    q = osub.add_parser("prob", help="exact outcome probability of a chain")
    q.add_argument("--model", required=True)
    q.set_defaults(func=_cmd_oracle_prob)
    q = osub.add_parser("dispersion", help="P(elevated case outranks baseline)")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--p-base", type=float, required=True, dest="p_base")
    q.add_argument("--p-elev", type=float, required=True, dest="p_elev")
    q.set_defaults(func=_cmd_oracle_dispersion)
    q = osub.add_parser("bijection", help="standard vs outcome-excluded probability")
    q.add_argument("--model", required=True)
    q.set_defaults(func=_cmd_oracle_bijection)

    p = sub.add_parser("sweep", help="variance sweep along one axis")
    p.add_argument("--axis", choices=experiments.AXES, required=True)
    p.add_argument("--grid", help="comma-separated grid values")
    p.add_argument("--spec", help="base ChainSpec JSON")
    p.add_argument("--replications", type=int)
    common(p, out_required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("distribution", help="histogram of repeated estimates")
    p.add_argument("--spec", help="ChainSpec JSON")
    p.add_argument("--n-estimates", type=int, default=10_000, dest="n_estimates")
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--bins", type=int, default=40)
    common(p, out_required=True)
    p.set_defaults(func=_cmd_distribution)

    p = sub.add_parser("cohort", help="synthetic cohort evaluation")
    p.add_argument("--patients", type=int, default=2000)
    p.add_argument("--timelines", type=int, default=100)
    p.add_argument("--rounds", type=int, default=40)
    p.add_argument("--states", type=int, default=6)
    p.add_argument("--spontaneity", type=float, default=1.0)
    p.add_argument("--horizon", type=int, default=12)
    p.add_argument("--transitions", choices=("equal", "random"), default="equal")
    common(p, out_required=True)
    p.set_defaults(func=_cmd_cohort)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelValidationError as exc:
        for v in exc.violations:
            print(v, file=sys.stderr)
        return 3
    except CalibrationError as exc:
        print(f"infeasible experiment point: {exc}", file=sys.stderr)
        return 4
    except (FileNotFoundError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SeqriskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
