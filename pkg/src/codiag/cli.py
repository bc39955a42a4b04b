"""Command-line front end: ``codiag MODEL [--check] [--report PATH] ...``.

Exit status is 0 when the model is codiagnosable for every failure class, 1
when it is not, and 2 on input or validation errors.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .automaton import validate
from .codiagnoser import EPS, ValidationFailed, build_codiagnoser, check_codiagnosability
from .io import (
    ModelError,
    Report,
    codiag_state_label,
    codiagnoser_json,
    curves_csv,
    curves_json,
    export_dot,
    parse_model,
    verdict_json,
)
from .stochastic import DivergentUnobservableMass, is_diagnosable_centralized
from .verifier import decay_curve, limit_nondetection

SEED_ENV = "CODIAG_SEED"
EXIT_OK, EXIT_NOT, EXIT_ERROR = 0, 1, 2


class UsageError(ValueError):
    pass


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="codiag", description="Decide codiagnosability of a stochastic automaton."
    )
    p.add_argument("model", help="model file")
    p.add_argument("--check", action="store_true", help="print the verdict only")
    p.add_argument("--report", metavar="PATH", help="write a JSON report")
    p.add_argument("--dot", metavar="DIR", help="write DOT files for every machine")
    p.add_argument("--simulate", action="store_true", help="compute sampled decay curves")
    p.add_argument("--n", type=int, default=25, help="horizon for decay curves")
    p.add_argument("--trials", type=int, default=10000, help="Monte-Carlo trials")
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or 0)")
    p.add_argument("--csv", metavar="PATH", help="write decay curves as CSV")
    p.add_argument("--site", type=int, default=None, help="centralized check for one site")
    p.add_argument("--class", dest="failure_class", default=None, help="only this failure class")
    return p


def run_pipeline(path, args, out=None) -> tuple:
    """Run every step for the model at ``path``; returns (Report, exit code).

    Raises ModelError, ValidationFailed, DivergentUnobservableMass, UsageError
    and OSError on bad input; :func:`main` maps them to exit code 2.
    """
    out = out or sys.stdout
    text = Path(path).read_text(encoding="utf-8")
    automaton = parse_model(text)
    report = validate(automaton)
    if not report.ok:
        raise ValidationFailed(report)
    seed = args.seed if args.seed is not None else default_seed()
    if args.n < 1 or args.trials < 1:
        raise UsageError("--n and --trials must be positive")

    classes = list(automaton.failure_classes)
    if args.failure_class is not None:
        if args.failure_class not in classes:
            raise UsageError(f"no failure class {args.failure_class!r} in model")
        classes = [args.failure_class]
    if not classes:
        raise UsageError("model declares no failure event")

    if args.site is not None:
        if not 1 <= args.site <= automaton.sites:
            raise UsageError(f"--site must be in 1..{automaton.sites}")

    codiag = build_codiagnoser(automaton)
    verdicts = [check_codiagnosability(automaton, failure_class=c, codiag=codiag) for c in classes]
    ok = all(v.codiagnosable for v in verdicts)

    curves = {}
    if args.simulate:
        csv_parts = []
        for c in classes:
            exact = decay_curve(automaton, failure_class=c, max_n=args.n)
            sampled = decay_curve(
                automaton, failure_class=c, max_n=args.n, mode="sampled",
                trials=args.trials, seed_rng=seed,
            )
            limits = {
                " ".join(seed): {
                    str(j): limit_nondetection(automaton, seed, j, c)
                    for j in range(1, automaton.sites + 1)
                }
                for seed in exact
            }
            curves[c] = {
                "exact": curves_json(exact),
                "sampled": curves_json(sampled),
                "limit": limits,
            }
            csv_parts.append(curves_csv(sampled, header=not csv_parts))
        if args.csv:
            Path(args.csv).write_text("".join(csv_parts))

    result = Report(
        tool="codiag",
        version=__version__,
        model=Path(path).name,
        codiagnosable=ok,
        verdicts=[verdict_json(v, codiag) for v in verdicts],
        machines={} if args.check else codiagnoser_json(codiag),
        decay=curves,
        seed=seed if args.simulate else None,
    )

    if args.site is not None:
        sd = codiag.local[args.site - 1]
        diagnosable = all(is_diagnosable_centralized(sd, c) for c in classes)
        print(f"site {args.site} diagnosable: {str(diagnosable).lower()}", file=out)
        code = EXIT_OK if diagnosable else EXIT_NOT
    else:
        code = EXIT_OK if ok else EXIT_NOT

    print(f"codiagnosable: {str(ok).lower()}", file=out)
    for v in verdicts:
        if len(verdicts) > 1:
            print(f"class {v.failure_class}: {str(v.codiagnosable).lower()}", file=out)
        if v.witness_cycle:
            hops = " ".join(
                f"{codiag_state_label(s)} --{e.render(EPS)}-->" for s, e in v.witness_cycle
            )
            print(f"witness cycle: {hops}", file=out)
        if not args.check:
            flags = ", ".join(
                f"site {j}: {str(d).lower()}" for j, d in enumerate(v.per_site_centralized, 1)
            )
            print(f"centralized ({v.failure_class}): {flags}", file=out)
    if args.simulate:
        for c, pair in curves.items():
            for key, entry in pair["sampled"].items():
                final = entry["min_envelope"][-1][1]
                limit = min(pair["limit"][key].values())
                print(
                    f"decay {c} seed [{key}] n={args.n}: {final:.6g} (exact limit {limit:.6g})",
                    file=out,
                )

    if args.report:
        Path(args.report).write_text(result.to_json())
    if args.dot:
        write_dot(codiag, Path(args.dot))
    return result, code


def write_dot(codiag, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    machines = [("plant", codiag.automaton), ("global", codiag.global_diagnoser)]
    machines += [(f"site{sd.site}", sd) for sd in codiag.local]
    machines.append(("codiagnoser", codiag))
    for name, machine in machines:
        (directory / f"{name}.dot").write_text(export_dot(machine, name), encoding="utf-8")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _, code = run_pipeline(args.model, args)
    except (ModelError, UsageError, DivergentUnobservableMass, OSError) as exc:
        print(f"codiag: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ValidationFailed as exc:
        print("codiag: error: model is not admissible", file=sys.stderr)
        for v in exc.report.violations:
            print(f"  {v.kind} at {v.where}: {v.detail}", file=sys.stderr)
        return EXIT_ERROR
    return code


if __name__ == "__main__":
    sys.exit(main())
