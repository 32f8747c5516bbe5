"""Command-line front end.

    lowdeg bound     --model submatrix --n 1e6 --rho 1e-2 --lambda 1e-3 --D 10 --r 0.5
    lowdeg oracle    --model clique --n 4 --D 2 --rho 1/4 --exact
    lowdeg simulate  --estimator power --model submatrix --n 4096 --lambda 3 --rho 1/4 --trials 10000 --seed 7
    lowdeg detect    --test degree2 --n 1e6 --rho 0.0158 --lambda boundary --t 5 --trials 4000
    lowdeg sweep     --a 0:0.05:1 --b 0:0.05:0.5 --n 1e6 --D 20
    lowdeg cumulant  --model submatrix --D 3 --lambda 1 --rho 1/2

Rows go to stdout (or --output) as CSV with a header, or as a JSON array. Every
row carries the package version, the seed and the precision mode. Exit codes: 0
on success, 1 on bad input, 2 when every row reports violated conditions.
A config file of key=value lines (same keys as the long flags) can be given with
--config; flags on the command line win. LOWDEG_JOBS sets the default --jobs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from typing import Sequence

from . import __version__
from ._numeric import format_number, parse_number
from .models import CliqueParams, SubgraphParams, SubmatrixParams

ROW_SCHEMAS = {
    "bound": "model,n,lam,q0,q1,rho,D,r,method,corr_sq_upper,log_corr_sq_upper,mmse_lower,mmse_lower_raw,status,regime,breakdown",
    "oracle": "model,n,lam,q0,q1,rho,D,basis_size,corr_sq,mmse,trivial_mmse",
    "simulate": "estimator,model,n,lam,q0,q1,rho,D,trials,mse,half_width,std,guarantee,guarantee_status",
    "detect": "depends on --test (degree2, degree3, ldlr, nullcorr)",
    "sweep": "a,b plus the bound columns",
    "cumulant": "model,canonical,edges,vertices,automorphisms,embed_count,kappa (or w for the clique)",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _number(text: str):
    try:
        return parse_number(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _int(text: str) -> int:
    v = _number(text)
    if isinstance(v, Fraction) and v.denominator == 1:
        v = int(v)
    if not isinstance(v, int):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return v


def _int_list(text: str) -> list[int]:
    return [_int(t) for t in str(text).split(",") if t]


def _grid(text: str) -> list[float]:
    """'start:step:stop' (inclusive) or a comma list."""
    text = str(text)
    if ":" in text:
        parts = [float(_number(t)) for t in text.split(":")]
        if len(parts) != 3 or parts[1] <= 0:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}")
        start, step, stop = parts
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(count)]
    return [float(_number(t)) for t in text.split(",") if t]


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help="write rows here instead of stdout")
    p.add_argument("--exact", dest="precision", action="store_const", const="exact", default="float",
                   help="exact rational arithmetic (rationals print as p/q)")
    p.add_argument("--jobs", type=_int, default=_int(os.environ.get("LOWDEG_JOBS", "1")))


def _model_args(p: argparse.ArgumentParser):
    p.add_argument("--model", choices=("submatrix", "subgraph", "clique"), default="submatrix")
    p.add_argument("--n", type=_int)
    p.add_argument("--lambda", dest="lam", type=_number)
    p.add_argument("--rho", type=_number)
    p.add_argument("--q0", type=_number)
    p.add_argument("--q1", type=_number)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lowdeg", description="Low-degree MMSE bounds, oracles and simulations.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    b = sub.add_parser("bound", help="Corr^2 upper and MMSE lower bounds. Row: " + ROW_SCHEMAS["bound"])
    _model_args(b)
    b.add_argument("--D", type=_int_list, required=False)
    b.add_argument("--r", type=_number, default=Fraction(1, 2))
    b.add_argument("--method", choices=("closed", "enumerated", "sharp"), default="closed")
    _common(b)

    o = sub.add_parser("oracle", help="Exact low-degree MMSE on tiny instances. Row: " + ROW_SCHEMAS["oracle"])
    _model_args(o)
    o.add_argument("--D", type=_int_list)
    _common(o)

    s = sub.add_parser("simulate", help="Monte Carlo MSE of an estimator. Row: " + ROW_SCHEMAS["simulate"])
    _model_args(s)
    s.add_argument("--estimator", choices=("diag", "power", "subgraph-power", "clique-power", "constant", "auto"),
                   default="auto")
    s.add_argument("--D", type=_int_list, default=[3])
    s.add_argument("--r", type=_number, default=Fraction(1, 2))
    s.add_argument("--trials", type=_int, default=10_000)
    s.add_argument("--seed", type=_int, default=0)
    s.add_argument("--sampler", choices=("summary", "row"), default="summary")
    _common(s)

    d = sub.add_parser("detect", help="Detection tests with modified nulls. Row: " + ROW_SCHEMAS["detect"])
    d.add_argument("--test", choices=("degree2", "degree3", "ldlr", "nullcorr"), default="degree2")
    d.add_argument("--n", type=_int)
    d.add_argument("--lambda", dest="lam", default=None,
                   help="a number, or 'boundary' for the degree-2 threshold value")
    d.add_argument("--rho", type=_number)
    d.add_argument("--t", type=_number, default=5)
    d.add_argument("--D", type=_int_list, default=[2])
    d.add_argument("--trials", type=_int, default=4000)
    d.add_argument("--seed", type=_int, default=0)
    d.add_argument("--sampler", choices=("chi2", "rowsum", "matrix"), default="chi2")
    _common(d)

    w = sub.add_parser("sweep", help="Phase-plane sweep lam = n^-a, rho = n^-b. Row: " + ROW_SCHEMAS["sweep"])
    w.add_argument("--model", choices=("submatrix", "subgraph"), default="submatrix")
    w.add_argument("--a", type=_grid, required=False)
    w.add_argument("--b", type=_grid, required=False)
    w.add_argument("--n", type=_int)
    w.add_argument("--D", type=_int_list)
    w.add_argument("--r", type=_number, default=Fraction(1, 2))
    w.add_argument("--q0", type=_number, default=Fraction(1, 2))
    _common(w)

    c = sub.add_parser("cumulant", help="Per-class cumulants. Row: " + ROW_SCHEMAS["cumulant"])
    _model_args(c)
    c.add_argument("--D", type=_int_list, default=[2])
    c.add_argument("--all-classes", action="store_true", help="include classes that are not rooted and connected")
    _common(c)
    for name, subparser in sub.choices.items():
        subparser.description = "Row schema: " + ROW_SCHEMAS[name]
    return parser


# -- config merging -----------------------------------------------------------------------------------


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().lstrip("-")] = v.strip()
    return out


def _config_argv(cfg: dict[str, str], subparser: argparse.ArgumentParser) -> list[str]:
    known = {}
    for action in subparser._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                known[opt[2:]] = action
    argv = []
    for k, v in cfg.items():
        key = k.replace("_", "-") if k.replace("_", "-") in known else k
        if key not in known:
            raise UsageError(f"unknown config key {k!r}")
        action = known[key]
        if action.nargs == 0:
            if v.lower() in ("1", "true", "yes", "on"):
                argv.append("--" + key)
        else:
            argv += ["--" + key, v]
    return argv


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("lowdeg: a command is required (bound, oracle, simulate, detect, sweep, cumulant)")
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        args = parser.parse_args([args.command, *_config_argv(cfg, sub), *argv[1:]])
    return args


# -- helpers -----------------------------------------------------------------------------------------------


def _req(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + ("lambda" if m == "lam" else m) for m in missing))


def _val(x, args):
    if args.precision == "float" and isinstance(x, Fraction):
        return float(x)
    return x


def _params(args):
    if args.model == "submatrix":
        _req(args, "n", "lam", "rho")
        return SubmatrixParams(args.n, _val(args.lam, args), _val(args.rho, args))
    if args.model == "subgraph":
        _req(args, "n", "rho", "q0", "q1")
        return SubgraphParams(args.n, _val(args.rho, args), _val(args.q0, args), _val(args.q1, args))
    _req(args, "n", "rho")
    return CliqueParams(args.n, _val(args.rho, args))


def _meta(args, seed="") -> dict:
    return {"version": __version__, "command": args.command, "precision": args.precision, "seed": seed}


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if v is None:
        return ""
    if isinstance(v, (int, float, Fraction)):
        return format_number(v)
    return str(v)


def _emit(rows: list[dict], args) -> str:
    if args.format == "json":
        def conv(v):
            if isinstance(v, Fraction):
                return format_number(v)
            if isinstance(v, str) and v and "/" not in v:
                # report rows arrive preformatted; numbers go out as JSON numbers
                try:
                    v = int(v)
                except ValueError:
                    try:
                        v = float(v)
                    except ValueError:
                        return v
            if isinstance(v, float) and not math.isfinite(v):
                return repr(v)
            return v
        return json.dumps([{k: conv(v) for k, v in r.items()} for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    fields: list[str] = []
    for r in rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


def _breakdown_text(bd: dict) -> str:
    return ";".join(f"{'/'.join(str(x) for x in k)}:{_fmt(v)}" for k, v in bd.items())


# -- commands ---------------------------------------------------------------------------------------------


def cmd_bound(args) -> tuple[list[dict], bool]:
    from . import bounds

    _req(args, "D")
    p = _params(args)
    rows, statuses = [], []
    for D in args.D:
        if args.method == "enumerated":
            reps = [bounds.corr_bound_enumerated(p, D)]
        elif args.method == "sharp":
            if not isinstance(p, SubmatrixParams):
                raise UsageError("--method sharp applies to the submatrix model only")
            reps = list(bounds.sharp_bounds(p, D, args.r))
        elif isinstance(p, SubmatrixParams):
            reps = [bounds.corr_bound_submatrix_closed(p, D, args.r)]
        elif isinstance(p, SubgraphParams) and p.q1 != 1:
            reps = [bounds.corr_bound_subgraph_closed(p, D, args.r)]
        else:
            cp = p if isinstance(p, CliqueParams) else CliqueParams(p.n, p.rho)
            reps = [bounds.corr_bound_clique(cp, D)]
        for rep in reps:
            row = {**_meta(args), **rep.row()}
            if rep.method == "sharp-lower":
                row["cumulant_sum_lower"] = _fmt(rep.extras["cumulant_sum_lower"])
            if rep.method == "closed-form" and "double_sum" in rep.extras:
                row["double_sum"] = _fmt(rep.extras["double_sum"])
                row["lambda_boundary"] = _fmt(rep.extras["lambda_boundary"])
            row["breakdown"] = _breakdown_text(rep.breakdown)
            rows.append(row)
            statuses.append(rep.status)
    return rows, all(s == bounds.VIOLATED for s in statuses)


def cmd_oracle(args) -> tuple[list[dict], bool]:
    from . import oracle

    _req(args, "D")
    p = _params(args)
    exact = args.precision == "exact"
    rows = []
    for D in args.D:
        if isinstance(p, SubmatrixParams):
            sys_ = oracle.build_moment_system_gaussian(p, D, exact=exact)
        else:
            sys_ = oracle.build_moment_system_binary(p, D, exact=exact)
        c2 = oracle.corr_sq_exact(sys_)
        rho = p.rho if exact else float(p.rho)
        rows.append({**_meta(args), "model": p.model, "n": p.n, "lam": getattr(p, "lam", ""),
                     "q0": getattr(p, "q0", ""), "q1": getattr(p, "q1", ""), "rho": p.rho, "D": D,
                     "basis_size": sys_.size, "corr_sq": c2, "mmse": oracle.mmse_exact(sys_),
                     "trivial_mmse": rho - rho * rho})
    return rows, False


def _auto_estimator(p) -> str:
    if isinstance(p, SubmatrixParams):
        return "power"
    return "subgraph-power" if isinstance(p, SubgraphParams) else "clique-power"


def cmd_simulate(args) -> tuple[list[dict], bool]:
    from . import estimators as est

    p = _params(args)
    kind = _auto_estimator(p) if args.estimator == "auto" else args.estimator
    rows = []
    for D in args.D:
        spec = est.EstimatorSpec.for_degree(kind, D) if kind != "constant" else est.EstimatorSpec("constant")
        res = est.monte_carlo_mse(spec, p, args.trials, args.seed, jobs=args.jobs, sampler=args.sampler)
        g = None
        if kind != "constant" and 0 < float(args.r) < 1:
            g = est.guarantee_check(p, spec.degree, float(args.r), kind if isinstance(p, SubmatrixParams) else None)
        rows.append({**_meta(args, args.seed), "estimator": kind, "model": p.model, "n": p.n,
                     "lam": getattr(p, "lam", ""), "q0": getattr(p, "q0", ""), "q1": getattr(p, "q1", ""),
                     "rho": p.rho, "D": spec.degree, "trials": res.trials, "mse": res.estimate,
                     "half_width": res.half_width, "std": res.std,
                     "guarantee": "" if g is None or g.guarantee is None else g.guarantee,
                     "guarantee_status": "" if g is None else g.status, "generator": res.generator})
    return rows, False


def cmd_detect(args) -> tuple[list[dict], bool]:
    from . import detection as det

    _req(args, "n", "rho")
    rho = float(args.rho)
    if args.lam is None:
        raise UsageError("missing required option(s): --lambda")
    if str(args.lam) == "boundary":
        lam = det.detection_lambda_boundary(args.n, rho, float(args.t))
        if math.isnan(lam):
            raise UsageError("the degree-2 lambda boundary is undefined for rho >= 1/8")
    else:
        try:
            lam = float(parse_number(args.lam))
        except ValueError as exc:
            raise UsageError(f"bad --lambda {args.lam!r}") from exc
    p = SubmatrixParams(args.n, lam, rho)
    base = {**_meta(args, args.seed), "test": args.test}
    if args.test == "degree2":
        rep = det.run_detection_experiment(p, float(args.t), args.trials, args.seed, args.sampler)
        return [{**base, **rep.row()}], not rep.conditions_met
    if args.test == "degree3":
        r = det.degree3_ratio(p, args.trials, args.seed)
        ok = all(r.conditions.values())
        return [{**base, "n": p.n, "lam": lam, "rho": rho, "trials": args.trials, "ratio": r.ratio.estimate,
                 "ratio_hw": r.ratio.half_width, "observed_c": r.observed_c, "mean_planted": r.mean_planted,
                 "second_moment_null": r.second_moment_null, "conditions_met": ok}], not ok
    if args.test == "ldlr":
        rows = []
        for D in args.D:
            b = det.ldlr_mean_corrected_bound(D, lam, rho, args.n)
            rows.append({**base, "n": p.n, "lam": lam, "rho": rho, "D": D, "series": b.series,
                         "log_series": b.log_series, "diverging": b.diverging, "C_fitted": b.C, "r": b.r,
                         "r_over_1_minus_r": b.r_form})
        return rows, False
    rows = []
    for D in args.D:
        v = det.null_corr_path_value(args.n, D, lam, rho)
        rows.append({**base, "n": p.n, "lam": lam, "rho": rho, "D": D, "count": v.count,
                     "exact_ratio": v.exact, "lower_bound": v.lower_bound, "stated_formula": v.stated_formula})
    return rows, False


def cmd_sweep(args) -> tuple[list[dict], bool]:
    from . import bounds

    _req(args, "a", "b", "n", "D")
    grid = []
    for a in args.a:
        for b in args.b:
            if b <= 0 or a < 0:
                print(f"lowdeg: skipping grid point a={a}, b={b} (needs rho = n^-b < 1, lambda >= 0)", file=sys.stderr)
                continue
            grid.append((a, b))
    reps = bounds.phase_sweep(grid, args.n, args.D, args.r, model=args.model, q0=args.q0)
    rows = []
    for rep in reps:
        rows.append({**_meta(args), "a": rep.extras["a"], "b": rep.extras["b"], **rep.row(),
                     "guarantee": "" if rep.extras["guarantee"] is None else rep.extras["guarantee"]})
    return rows, bool(reps) and all(r.status == bounds.VIOLATED for r in reps)


def cmd_cumulant(args) -> tuple[list[dict], bool]:
    from . import cumulants as cm
    from .multigraph import enumerate_classes

    p = _params(args)
    rows = []
    for D in args.D:
        mode = "multigraph" if isinstance(p, SubmatrixParams) else "simple"
        for cls in enumerate_classes(D, mode, rooted_connected=not args.all_classes):
            a = cls.canonical
            if isinstance(p, SubmatrixParams):
                val = cm.kappa_gaussian(a, p)
            elif isinstance(p, SubgraphParams) and p.q1 != 1:
                val = cm.kappa_binary(a, p)
            else:
                val = cm.clique_w(a, p.rho)
            if args.precision == "float":
                val = float(val)
            rows.append({**_meta(args), "model": p.model, "canonical": str(a), "edges": cls.edge_count,
                         "vertices": cls.n_vertices, "automorphisms": cls.automorphisms,
                         "embed_count": cls.embed_count(p.n), "value": val})
    return rows, False


COMMANDS = {"bound": cmd_bound, "oracle": cmd_oracle, "simulate": cmd_simulate, "detect": cmd_detect,
            "sweep": cmd_sweep, "cumulant": cmd_cumulant}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        rows, all_violated = COMMANDS[args.command](args)
        text = _emit(rows, args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        print(f"lowdeg: error: {exc}", file=sys.stderr)
        return 1
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if all_violated:
        print("lowdeg: every row reports violated conditions", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
