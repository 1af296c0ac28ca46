"""Command-line front end.

Every output embeds the configuration that produced it; ``epqp rerun FILE``
replays that configuration.  Exit codes: 0 success, 2 domain or usage
error, 3 numerical-quality error.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys

from . import bounds as bnd
from . import experiments as ex
from .channels import EnergyBudget
from .errors import DomainError, EPQPError, NumericalQualityError
from .io import atomic_write, dumps
from .nets import gc_net, gc_resolutions, gu_net, gu_resolutions

# formula name -> (function, required parameters, optional parameters)
FORMULAS = {
    "gauge-covariant-upper": (bnd.gauge_covariant_upper, ("E", "beta", "eps"), ("C",)),
    "phase-rotation-lower": (bnd.phase_rotation_lower, ("E", "eps", "delta"), ()),
    "attenuator-lower": (bnd.attenuator_lower, ("E", "eps"), ()),
    "gaussian-unitary-upper": (bnd.gaussian_unitary_upper, ("E", "alpha", "beta", "eps"), ("M",)),
    "multimode-rotation-lower": (bnd.multimode_rotation_lower, ("E", "eps", "delta"), ("M",)),
}
TABLE_PARAMS = ("d", "eps", "E", "alpha", "beta", "gamma", "c_tilde", "K", "C", "theta", "a", "E_d")
NUMERIC = ("E", "eps", "delta", "beta", "alpha", "gamma", "d", "M", "C", "c_tilde", "K",
           "theta", "a", "E_d")
INTS = ("d", "M")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _emit(text, out):
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _config(args):
    return {k: v for k, v in vars(args).items() if k not in ("func", "out") and v is not None}


def _json_report(args, results):
    return dumps({"config": _config(args), "results": results})


# ----------------------------------------------------------------- bounds

def cmd_bounds(args, parser):
    given = {k: getattr(args, k) for k in NUMERIC if getattr(args, k) is not None}
    if args.formula:
        func, req, opt = FORMULAS[args.formula]
        missing = [k for k in req if k not in given]
        if missing:
            parser.error(f"{args.formula} needs --{', --'.join(m.replace('_', '-') for m in missing)}")
        keys = [k for k in req + opt if k in given]

        def call(kw):
            return func(**kw)
    else:
        if args.row is None:
            parser.error("--table needs --row")
        col = args.column or "finite"
        need = ["d", "eps"] if col == "finite" else ["d", "E", "gamma"]
        missing = [k for k in need if k not in given]
        if missing:
            parser.error(f"table {args.table} ({col}) needs --{', --'.join(missing)}")
        keys = [k for k in TABLE_PARAMS if k in given]

        def call(kw):
            return bnd.table_bound(args.table, args.row, col, **kw)
    reports = []
    for combo in itertools.product(*(given[k] for k in keys)):
        kw = {k: (int(v) if k in INTS else v) for k, v in zip(keys, combo)}
        reports.append(call(kw))
    if args.format == "json":
        return _json_report(args, [r.to_dict() for r in reports])
    header = "# config: " + json.dumps(_config(args), sort_keys=True) + "\n"
    return header + bnd.reports_to_csv(reports)


# -------------------------------------------------------------------- net

def cmd_net(args, parser):
    budget = EnergyBudget(args.E, args.alpha, args.beta)
    if args.family == "gc":
        net = gc_net(*gc_resolutions(args.eps, args.E), budget)
    else:
        es, ed = gu_resolutions(args.eps, args.E, args.alpha, args.beta, args.modes)
        net = gu_net(es, ed, budget, args.modes, cap=args.cap)
    return _json_report(args, net.to_dict())


# --------------------------------------------------------------- simulate

def cmd_simulate(args, parser):
    e = args.experiment
    if e == "gentle":
        res = ex.gentle_suite(args.trials, tuple(args.dims), args.seed)
    elif e == "pet":
        res = ex.pet_experiment(tuple(args.angles), args.D)
    elif e == "lemming":
        res = ex.lemming_suite(args.trials, args.D, args.seed)
    elif e == "cover":
        res = ex.cover_suite(args.E, args.eps, args.beta, args.trials, args.measured, args.D,
                             args.seed, args.restarts)
    else:
        res = ex.lift_experiment(args.E, args.d, args.points, args.D, args.targets, args.seed,
                                 args.restarts)
    return _json_report(args, res)


def cmd_replicate(args, parser):
    res = ex.replication_experiment(args.phi, args.ell, args.E, args.eps_proc, args.D, args.seed,
                                    args.work_cutoff, restarts=args.restarts)
    return _json_report(args, res)


def cmd_diamond(args, parser):
    return _json_report(args, ex.diamond_experiment(args.ch1, args.ch2, args.E, args.D,
                                                    args.restarts, args.seed))


def cmd_holevo(args, parser):
    if args.experiment == "attenuator":
        res = ex.attenuator_entropy_check(args.sigma2, args.E, args.D, args.points)
    elif args.experiment == "thermal":
        res = ex.thermal_entropy_check(args.E, args.D)
    else:
        n_max = int(args.n_max)
        res = ex.phase_orbit_check([1.0] * (n_max + 1), args.ell)
    if args.format == "json":
        return _json_report(args, res)
    header = "# config: " + json.dumps(_config(args), sort_keys=True) + "\n"
    keys = [k for k, v in res.items() if not isinstance(v, (list, dict))]
    return header + ",".join(keys) + "\n" + ",".join(repr(res[k]) for k in keys) + "\n"


# ------------------------------------------------------------------ rerun

def cmd_rerun(args, parser):
    with open(args.file, encoding="utf-8") as fh:
        text = fh.read()
    if text.startswith("# config: "):
        cfg = json.loads(text.splitlines()[0][len("# config: "):])
    else:
        cfg = json.loads(text)["config"]
    argv = _argv_from_config(cfg)
    sub = build_parser()
    new = sub.parse_args(argv)
    return new.func(new, sub)


def _argv_from_config(cfg):
    argv = [cfg["command"]]
    for k, v in sorted(cfg.items()):
        if k == "command" or v is None or v is False:
            continue
        flag = "--" + k.replace("_", "-")
        if v is True:
            argv.append(flag)
        elif isinstance(v, list):
            argv += [flag, ",".join(repr(x) for x in v)]
        else:
            argv += [flag, repr(v) if isinstance(v, float) else str(v)]
    return argv


# ----------------------------------------------------------------- parser

def build_parser():
    p = argparse.ArgumentParser(prog="epqp", description=__doc__.splitlines()[0])
    sp = p.add_subparsers(dest="command", required=True)

    b = sp.add_parser("bounds", help="evaluate closed-form program-dimension bounds")
    g = b.add_mutually_exclusive_group(required=True)
    g.add_argument("--formula", choices=sorted(FORMULAS))
    g.add_argument("--table", choices=["upper", "lower"])
    b.add_argument("--row", type=int)
    b.add_argument("--column", choices=["finite", "infinite"])
    for k in NUMERIC:
        b.add_argument("--" + k.replace("_", "-"), dest=k, type=_floats,
                       help="comma-separated values are swept")
    b.add_argument("--format", choices=["csv", "json"], default="csv")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bounds)

    n = sp.add_parser("net", help="describe an epsilon-net without building channels")
    n.add_argument("--family", choices=["gc", "gu"], required=True)
    n.add_argument("--eps", type=float, required=True)
    n.add_argument("--E", type=float, required=True)
    n.add_argument("--alpha", type=float, default=1.0)
    n.add_argument("--beta", type=float, default=0.0)
    n.add_argument("--modes", type=int, default=1)
    n.add_argument("--cap", type=int, default=10 ** 6)
    n.add_argument("--out")
    n.set_defaults(func=cmd_net)

    s = sp.add_parser("simulate", help="seeded property suites and processor experiments")
    s.add_argument("--experiment", choices=["gentle", "pet", "lemming", "cover", "lift"], required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--dims", type=lambda t: [int(x) for x in _floats(t)], default=[4, 8, 16])
    s.add_argument("--angles", type=_floats, default=[0.0, 0.4, 1.1, 2.0, 3.5])
    s.add_argument("--D", type=int, default=32)
    s.add_argument("--E", type=float, default=1.0)
    s.add_argument("--eps", type=float, default=1.0)
    s.add_argument("--beta", type=float, default=0.0)
    s.add_argument("--measured", type=int, default=25)
    s.add_argument("--d", type=int, default=8)
    s.add_argument("--points", type=int, default=8)
    s.add_argument("--targets", type=int, default=10)
    s.add_argument("--restarts", type=int, default=8)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    r = sp.add_parser("replicate", help="reuse one program state for several uses")
    r.add_argument("--phi", type=float, required=True)
    r.add_argument("--ell", type=int, required=True)
    r.add_argument("--E", type=float, required=True)
    r.add_argument("--eps-proc", dest="eps_proc", type=float)
    r.add_argument("--D", type=int, default=24)
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--work-cutoff", dest="work_cutoff", type=int, default=4)
    r.add_argument("--restarts", type=int, default=8)
    r.add_argument("--out")
    r.set_defaults(func=cmd_replicate)

    d = sp.add_parser("diamond", help="energy-constrained distance between two channels")
    d.add_argument("--ch1", required=True)
    d.add_argument("--ch2", required=True)
    d.add_argument("--E", type=float, required=True)
    d.add_argument("--D", type=int, default=16)
    d.add_argument("--restarts", type=int, default=32)
    d.add_argument("--seed", type=int, required=True)
    d.add_argument("--out")
    d.set_defaults(func=cmd_diamond)

    h = sp.add_parser("holevo", help="entropy and Holevo-quantity experiments")
    h.add_argument("--experiment", choices=["attenuator", "thermal", "phase"], required=True)
    h.add_argument("--E", type=float, default=8.0)
    h.add_argument("--sigma2", type=float, default=1.0)
    h.add_argument("--D", type=int, default=64)
    h.add_argument("--points", type=int, default=201)
    h.add_argument("--n-max", dest="n_max", type=int, default=6)
    h.add_argument("--ell", type=int, default=1)
    h.add_argument("--format", choices=["csv", "json"], default="csv")
    h.add_argument("--out")
    h.set_defaults(func=cmd_holevo)

    rr = sp.add_parser("rerun", help="replay the configuration embedded in an output file")
    rr.add_argument("file")
    rr.add_argument("--out")
    rr.set_defaults(func=cmd_rerun)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = args.func(args, parser)
        _emit(text, args.out)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalQualityError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except EPQPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
