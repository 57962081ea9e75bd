"""Command line interface: ``bandclt {validate,enumerate,predict,simulate,compare}``.

Exit codes: 0 success, 2 invalid input or failed validation, 3 numerical
failure.  Every JSON report carries ``model_hash``, ``version`` and ``seed``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from ._numeric import ExactModeError, format_number, parse_number
from .closedform import NotWignerError, density_for_model
from .config import ConfigError, ModelConfig, load_config
from .enumeration import SENTENCE_KINDS, WORD_KINDS, CapExceededError, enumerate_classes
from .model import LetterColoring, ModelError, support_bound, validate_model, wigner_condition
from .poly import PolyFn, parse_test_function
from .series import DegreeOverflowError, clt_variance, mean_shift, mu_moments
from .simulate import ENTRY_KINDS, SimulationError, SimulationReport, mc_clt

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
Z_LIMIT = 4.0


class UsageError(ValueError):
    """Inputs are readable but inconsistent."""


def _emit(obj, out: Optional[str]) -> None:
    text = json.dumps(obj, indent=None if out is None else 2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _load(args) -> ModelConfig:
    cfg = load_config(args.model)
    mode = getattr(args, "mode", None)
    if mode == "float" and cfg.model.exact:
        cfg = ModelConfig(cfg.model.as_float(), cfg.coloring, "float", cfg.wishart, cfg.path)
    elif mode == "exact" and not cfg.model.exact:
        raise UsageError("exact mode requested but the model has irrational or float parameters")
    return cfg


def _meta(cfg: Optional[ModelConfig], seed=None) -> dict:
    return {
        "model_hash": cfg.model.hash() if cfg else None,
        "version": __version__,
        "seed": seed,
    }


# --- subcommands ---------------------------------------------------------------------


def cmd_validate(args) -> int:
    cfg = _load(args)
    problems = validate_model(cfg.model)
    if cfg.coloring is not None:
        try:
            cfg.coloring.check(cfg.model.m)
        except ModelError as e:
            problems.append(str(e))
    report = {
        "valid": not problems,
        "violations": problems,
        "mode": cfg.mode,
        "m": cfg.model.m,
        "wigner_condition": wigner_condition(cfg.model) if not problems else None,
        "support_bound": float(support_bound(cfg.model)) if not problems else None,
        "N": cfg.coloring.N if cfg.coloring else None,
        **_meta(cfg),
    }
    _emit(report, args.out)
    return EXIT_OK if not problems else EXIT_INVALID


def cmd_enumerate(args) -> int:
    kind = args.kind
    lengths = range(args.min_length or args.length, args.length + 1)
    lines = []
    for L in lengths:
        n_words = args.words if kind in SENTENCE_KINDS else 1
        count, reps = enumerate_classes(L, kind, n_words=n_words, cap=args.cap, keep=args.reps)
        row = {"length": L, "class": kind, "count": count}
        if kind in SENTENCE_KINDS:
            row["words"] = n_words
        if args.reps:
            row["representatives"] = [list(map(list, r)) if r and isinstance(r[0], tuple)
                                      else list(r) for r in reps]
        lines.append(json.dumps(row))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _prediction(cfg: ModelConfig, args) -> dict:
    model = cfg.model
    f = PolyFn.parse(args.f) if args.f else None
    n_max = args.n_max
    if f is not None and n_max is None:
        n_max = max(f.degree, 1)
    moments = mu_moments(model, n_max=args.moments)
    out = {
        "moments": [format_number(v) for v in moments.moments],
        "variance": None,
        "mean_shift": None,
        "n_max": n_max,
        "mode": "exact" if model.exact else "float",
        "f": f.spec() if f else None,
        **_meta(cfg),
    }
    if f is not None:
        out["variance"] = format_number(clt_variance(model, f, n_max))
        out["mean_shift"] = format_number(mean_shift(model, f, n_max))
    return out


def cmd_predict(args) -> int:
    cfg = _load(args)
    problems = validate_model(cfg.model)
    if problems:
        print("invalid model: " + "; ".join(problems), file=sys.stderr)
        return EXIT_INVALID
    if args.density:
        dens = density_for_model(cfg.model.as_float())
        lo, hi = dens.support()[0][0], dens.support()[-1][1]
        xs = np.linspace(lo, hi, args.points)
        buf = io.StringIO()
        buf.write(f"# kind={dens.kind} model_hash={cfg.model.hash()} version={__version__}\n")
        for x, mass in dens.atoms:
            buf.write(f"# atom x={x!r} mass={mass!r}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "density"])
        for x, y in zip(xs, dens.pdf(xs)):
            w.writerow([repr(float(x)), repr(float(y))])
        if args.out:
            Path(args.out).write_text(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
        return EXIT_OK
    _emit(_prediction(cfg, args), args.out)
    return EXIT_OK


def _simulation_inputs(args):
    if args.mode == "exact":
        raise UsageError("exact mode cannot be combined with random sampling")
    cfg = _load(args)
    problems = validate_model(cfg.model)
    if problems:
        raise UsageError("invalid model: " + "; ".join(problems))
    coloring = cfg.coloring
    if coloring is None or (args.n is not None and args.n != coloring.N):
        if args.n is None:
            raise UsageError("give --n or a coloring in the model file")
        coloring = LetterColoring.proportional(cfg.model.theta, args.n)
    f = parse_test_function(args.f)
    return cfg, coloring, f


def _run_mc(args) -> tuple:
    cfg, coloring, f = _simulation_inputs(args)
    rep = mc_clt(cfg.model, coloring, f, R=args.reps, seed=args.seed, entry_kind=args.entry,
                 workers=args.workers, n_boot=args.boot)
    return cfg, rep


def cmd_simulate(args) -> int:
    cfg, rep = _run_mc(args)
    _emit(rep.to_dict(), args.out)
    if args.traces_csv:
        with open(args.traces_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replicate", "trace"])
            for i, v in enumerate(rep.traces):
                w.writerow([i, repr(v)])
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg, rep = _run_mc(args)
    success = (
        rep.z is not None
        and abs(rep.z) <= Z_LIMIT
        and bool(rep.prediction_in_ci)
    )
    out = {
        "f": rep.f,
        "N": rep.N,
        "R": rep.R,
        "predicted_var": rep.predicted_variance,
        "empirical_var": rep.variance,
        "ci": [rep.ci_low, rep.ci_high],
        "level": rep.level,
        "z": rep.z,
        "predicted_mean_shift": rep.predicted_mean_shift,
        "skewness": rep.skewness,
        "excess_kurtosis": rep.excess_kurtosis,
        "success": success,
        "model_hash": rep.model_hash,
        "version": rep.version,
        "seed": rep.seed,
    }
    _emit(out, args.out)
    return EXIT_OK


# --- parsing ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bandclt", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bandclt {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def model_args(sp, modes=("exact", "float")):
        sp.add_argument("--model", required=True, help="model file")
        sp.add_argument("--mode", choices=modes, default=None,
                        help="override the numeric mode of the model file")
        sp.add_argument("--out", default=None, help="write the report here instead of stdout")

    v = sub.add_parser("validate", help="check a model file")
    model_args(v)
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("enumerate", help="count word or sentence classes")
    e.add_argument("--class", dest="kind", required=True, choices=list(WORD_KINDS) + list(SENTENCE_KINDS))
    e.add_argument("--length", type=int, required=True, help="(total) length")
    e.add_argument("--min-length", type=int, default=None, help="emit every length from here")
    e.add_argument("--words", type=int, default=2, help="number of words for sentence classes")
    e.add_argument("--reps", action="store_true", help="include representatives")
    e.add_argument("--cap", type=int, default=14, help="largest total length allowed")
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_enumerate)

    pr = sub.add_parser("predict", help="limiting moments, CLT variance and mean shift")
    model_args(pr)
    pr.add_argument("--moments", type=int, default=10, help="highest moment order")
    pr.add_argument("--f", default=None, help='polynomial test function, e.g. "poly:0,0,1"')
    pr.add_argument("--n-max", type=int, default=None, help="series truncation degree")
    pr.add_argument("--density", action="store_true", help="emit density samples as CSV")
    pr.add_argument("--points", type=int, default=201)
    pr.set_defaults(func=cmd_predict)

    for name, func, helptext in (("simulate", cmd_simulate, "Monte Carlo run"),
                                 ("compare", cmd_compare, "Monte Carlo versus prediction")):
        s = sub.add_parser(name, help=helptext)
        model_args(s)
        s.add_argument("--n", type=int, default=None, help="matrix size")
        s.add_argument("--reps", type=int, default=2000)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--f", required=True, help='"poly:..", "pw:..." or "clamp:lo,hi"')
        s.add_argument("--entry", choices=ENTRY_KINDS, default="gaussian")
        s.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: $BANDCLT_WORKERS or 1)")
        s.add_argument("--boot", type=int, default=2000, help="bootstrap resamples")
        if name == "simulate":
            s.add_argument("--traces-csv", default=None, help="dump per-replicate traces")
        s.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ModelError, UsageError, DegreeOverflowError, CapExceededError,
            ExactModeError, NotWignerError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (SimulationError, np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


def read_report(text: str) -> dict:
    """Parse any JSON report written by this tool; ``"p/q"`` strings become Fractions."""
    d = json.loads(text)
    if "traces" in d and "ci_low" in d:
        return SimulationReport.from_dict(d).to_dict()
    if "moments" in d:
        d["moments"] = [parse_number(v) for v in d["moments"]]
        for k in ("variance", "mean_shift"):
            if d.get(k) is not None:
                d[k] = parse_number(d[k])
    return d


if __name__ == "__main__":
    sys.exit(main())
