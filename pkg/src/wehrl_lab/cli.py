"""Command-line front end.

Exit codes: 0 every asserted inequality held, 1 usage error, 2 a
mathematical check failed (the report is still written), 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
import time

import numpy as np

from . import bergman as bg
from .functionals import CATALOGUE, parse_phi
from .polyconc import RegionSpec, concentration, state_to_polynomial
from .projmeasure import EmpiricalDistribution
from .symrep import DensityOperator, SpaceSignature, coherent_coefficients, dim_symmetric, random_density
from .wehrl import (
    HusimiEvaluator,
    deficit_from_values,
    husimi_sample,
    sup_husimi,
    trace_distance_full,
    verify_lemma23,
)

EXIT_OK, EXIT_USAGE, EXIT_ASSERT, EXIT_IO = 0, 1, 2, 3

DEFAULT_GRID = ((2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (4, 2))
COMMANDS = ("dims", "rand-state", "deficit", "stability", "scan", "faber-krahn", "bergman", "rearrange")

log = logging.getLogger("wehrl_lab")


class UsageError(Exception):
    pass


class _JsonFormatter(logging.Formatter):
    def format(self, record):
        payload = {"level": record.levelname.lower(), "msg": record.getMessage()}
        payload.update(getattr(record, "fields", {}))
        return json.dumps(payload, sort_keys=True)


def _setup_logging(verbose):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonFormatter())
    log.handlers[:] = [handler]
    log.setLevel(logging.INFO if verbose else logging.WARNING)
    log.propagate = False


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _count(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x.is_integer():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(x)


def _default_seed():
    raw = os.environ.get("WEHRL_LAB_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"WEHRL_LAB_SEED must be an integer, got {raw!r}") from None


CSV_COMMANDS = ("scan", "rearrange")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--n", dest="N", type=int, default=2, help="ambient dimension N")
    common.add_argument("--m", dest="M", type=int, default=1, help="tensor power M")
    common.add_argument("--phi", default="power:2", help="power:<q> | xlogx | pwl:t,v;...")
    common.add_argument("--samples", dest="n_samples", type=_count, default=100_000)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--starts", dest="n_starts", type=int, default=16)
    common.add_argument("--state", default="random:1", help="coherent | coherent:random | mixed:full | random:<rank> | file:<path>")
    common.add_argument("--format", choices=("json", "csv"), default=None, help="default: csv for scan and rearrange, else json")
    common.add_argument("--out", default=None, help="report path (default: stdout)")
    common.add_argument("--config", default=None, help="key=value file; flags win")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="wehrl-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("dims", parents=[common])
    p = sub.add_parser("rand-state", parents=[common])
    p.add_argument("--rank", type=int, default=1)
    p.add_argument("--uniform", action="store_true")
    sub.add_parser("deficit", parents=[common])
    sub.add_parser("stability", parents=[common])
    p = sub.add_parser("scan", parents=[common])
    p.add_argument("--grid", default="default", help="'default' or e.g. '2x1,3x2'")
    p.add_argument("--count", type=int, default=3, help="states per kind per cell")
    p.add_argument("--phis", default="|".join(CATALOGUE), help="functionals separated by |")
    p = sub.add_parser("faber-krahn", parents=[common])
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--center", default=None, help="comma-separated re,im pairs: '0.1,0.2;0,0'")
    p = sub.add_parser("bergman", parents=[common])
    p.add_argument("--p", dest="p", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--degree", type=int, default=4)
    p.add_argument("--extremal", default=None, help="'re,im[,theta]' for an extremal member")
    p = sub.add_parser("rearrange", parents=[common])
    p.add_argument("--rows", type=int, default=1001, help="rows of the u* table")
    return parser


def _read_config(path):
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_config(argv):
    """Parse flags, merging an optional config file underneath them."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = _read_config(args.config)
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc}") from exc
        alias = {"n": "N", "m": "M", "samples": "n_samples", "starts": "n_starts"}
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, value in cfg.items():
            dest = alias.get(key, key)
            if dest not in known:
                raise UsageError(f"config key {key!r} is not an option of {args.command}")
            action = known[dest]
            if action.type is not None:
                try:
                    value = action.type(value)
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(f"config key {key!r}: {exc}") from None
            elif action.const is True:
                value = value.lower() in ("1", "true", "yes", "on")
            defaults[dest] = value
        # parents share action objects, so defaults go on a fresh parser
        parser = build_parser()
        parser._subparsers._group_actions[0].choices[args.command].set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args.seed is None:
        args.seed = _default_seed()
    if args.format is None:
        args.format = "csv" if args.command in CSV_COMMANDS else "json"
    _validate(args)
    return args


def _validate(args):
    def bad(field, why):
        raise UsageError(f"invalid {field}: {why}")

    if args.N < 2:
        bad("N", "must be >= 2")
    if args.M < 1:
        bad("M", "must be >= 1")
    try:
        dim_symmetric(args.N, args.M)
    except OverflowError as exc:
        bad("M", str(exc))
    if args.n_samples < 1:
        bad("samples", "must be positive")
    if args.command in ("deficit", "stability", "scan") and args.n_samples < 10_000:
        bad("samples", "must be >= 10000 for entropy estimates")
    if args.command in ("faber-krahn", "rearrange") and args.n_samples < 1000:
        bad("samples", "must be >= 1000")
    if args.n_starts < 8:
        bad("starts", "must be >= 8")
    if args.threads < 1:
        bad("threads", "must be >= 1")
    try:
        args.phi_obj = parse_phi(args.phi)
    except ValueError as exc:
        bad("phi", str(exc))
    if args.command == "rand-state":
        dim = dim_symmetric(args.N, args.M)
        if not 1 <= args.rank <= dim:
            bad("rank", f"must be in [1, {dim}]")
    if args.command == "scan":
        args.grid_cells = _parse_grid(args.grid)
        try:
            args.phi_list = [parse_phi(s) for s in args.phis.split("|") if s]
        except ValueError as exc:
            bad("phis", str(exc))
        if args.count < 1:
            bad("count", "must be >= 1")
    if args.command == "bergman":
        try:
            args.cfg = bg.BergmanConfig(args.p, args.alpha)
            bg.check_admissible(args.phi_obj, args.cfg)
        except ValueError as exc:
            bad("p/alpha/phi", str(exc))
        if args.degree < 0:
            bad("degree", "must be >= 0")
    if args.command == "faber-krahn" and not args.radius > 0:
        bad("radius", "must be > 0")


def _parse_grid(text):
    if text == "default":
        return list(DEFAULT_GRID)
    cells = []
    for item in text.split(","):
        try:
            n, m = item.lower().split("x")
            cells.append((int(n), int(m)))
        except ValueError:
            raise UsageError(f"invalid grid: bad cell {item!r}") from None
    for n, m in cells:
        if n < 2 or m < 1:
            raise UsageError(f"invalid grid: cell {n}x{m} out of range")
    return cells


def make_state(spec, sig, seed):
    if spec == "coherent":
        v = np.zeros(sig.N, dtype=complex)
        v[0] = 1.0
        return DensityOperator.coherent(v, sig)
    if spec == "coherent:random":
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(sig.N) + 1j * rng.standard_normal(sig.N)
        return DensityOperator.coherent(v / np.linalg.norm(v), sig)
    if spec == "mixed:full":
        return DensityOperator.maximally_mixed(sig)
    if spec.startswith("random:"):
        try:
            rank = int(spec.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"invalid state: {spec!r}") from None
        if not 1 <= rank <= sig.dim:
            raise UsageError(f"invalid state: rank must be in [1, {sig.dim}]")
        return random_density(sig, rank, seed)
    if spec.startswith("file:"):
        with open(spec[5:]) as fh:
            text = fh.read()
        try:
            rho = DensityOperator.from_json(text)
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"invalid state: {spec[5:]} is not a density-operator file ({exc})") from None
        if rho.sig != sig:
            raise UsageError(f"invalid state: file holds N={rho.sig.N}, M={rho.sig.M}")
        return rho
    raise UsageError(f"invalid state: unknown kind {spec!r}")


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, text):
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _json(obj):
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def _cell(x):
    # JSON spelling for booleans and missing values so both formats agree
    if isinstance(x, bool):
        return "true" if x else "false"
    return "" if x is None else _clean(x)


def _csv(rows, header):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(r[h]) for h in header])
    return buf.getvalue()


# --------------------------------------------------------------------------
# commands


def _cmd_dims(args):
    _emit(args, f"{dim_symmetric(args.N, args.M)}\n")
    return EXIT_OK


def _cmd_rand_state(args):
    sig = SpaceSignature(args.N, args.M)
    rho = random_density(sig, args.rank, args.seed, uniform=args.uniform)
    _emit(args, rho.to_json() + "\n")
    return EXIT_OK


def _entropy_extras(d, phi):
    if phi.spec == "xlogx":
        d["wehrl_entropy"] = -d["lhs"]
        d["wehrl_entropy_coherent"] = -d["rhs"]
    return d


def _cmd_deficit(args):
    sig = SpaceSignature(args.N, args.M)
    rho = make_state(args.state, sig, args.seed)
    u = husimi_sample(rho, args.n_samples, args.seed, threads=args.threads)
    rep = deficit_from_values(u, args.phi_obj, sig, args.seed)
    d = _entropy_extras(rep.to_dict(), args.phi_obj)
    d["state"] = args.state
    _emit(args, _json(d) if args.format == "json" else _csv([d], list(d)[:12]))
    return EXIT_OK if rep.passed else EXIT_ASSERT


def _cmd_stability(args):
    sig = SpaceSignature(args.N, args.M)
    rho = make_state(args.state, sig, args.seed)
    u, lifts = husimi_sample(rho, args.n_samples, args.seed, threads=args.threads, return_lifts=True)
    rep = verify_lemma23(rho, args.phi_obj, args.n_samples, args.seed, args.n_starts, u=u, lifts=lifts)
    d = _entropy_extras(rep.to_dict(), args.phi_obj)
    d["state"] = args.state
    _emit(args, _json(d) if args.format == "json" else _csv([d], list(d)[:12]))
    return EXIT_OK if rep.passed else EXIT_ASSERT


SCAN_HEADER = ["N", "M", "phi", "seed", "kind", "n_samples", "T", "D", "deficit", "mc_error", "lower_bound", "ratio", "pass"]


def _cmd_scan(args):
    rows = []
    ok = True
    for N, M in args.grid_cells:
        sig = SpaceSignature(N, M)
        for kind in ("pure", "mixed"):
            for k in range(args.count):
                seed = args.seed * 100_003 + 1000 * N + 100 * M + 10 * k + (kind == "mixed")
                rank = 1 if kind == "pure" else sig.dim
                rho = random_density(sig, rank, seed)
                u, lifts = husimi_sample(rho, args.n_samples, seed, threads=args.threads, return_lifts=True)
                sup = sup_husimi(rho, args.n_starts, seed)
                td = trace_distance_full(rho, args.n_starts, seed, sup=sup)
                for phi in args.phi_list:
                    rep = verify_lemma23(
                        rho, phi, args.n_samples, seed, args.n_starts, u=u, lifts=lifts, sup=sup, td=td
                    )
                    d = rep.to_dict()
                    d["kind"] = kind
                    rows.append(d)
                    ok &= bool(rep.passed)
                    log.info("scan row", extra={"fields": {"N": N, "M": M, "phi": phi.spec, "seed": seed, "pass": rep.passed}})
    if args.format == "csv":
        _emit(args, _csv(rows, SCAN_HEADER))
    else:
        _emit(args, _json([{h: _clean(r[h]) for h in SCAN_HEADER} for r in rows]))
    return EXIT_OK if ok else EXIT_ASSERT


def _parse_center(text, N):
    if text is None:
        return np.zeros(N - 1, dtype=complex)
    try:
        pairs = [tuple(float(x) for x in item.split(",")) for item in text.split(";")]
        c = np.array([complex(a, b) for a, b in pairs])
    except ValueError:
        raise UsageError(f"invalid center: {text!r}") from None
    if c.size != N - 1:
        raise UsageError(f"invalid center: need {N - 1} complex coordinates")
    return c


def _cmd_faber_krahn(args):
    sig = SpaceSignature(args.N, args.M)
    rho = make_state(args.state, sig, args.seed)
    if not rho.is_pure:
        raise UsageError("invalid state: faber-krahn needs a pure state")
    F = state_to_polynomial(rho.psi(0))
    region = RegionSpec.ball(_parse_center(args.center, args.N), args.radius)
    rep = concentration(F, region, args.n_samples, args.seed)
    d = {"N": args.N, "M": args.M, "phi": None, "seed": args.seed, "n_samples": args.n_samples,
         "mc_error": rep.mc_error, "pass": rep.passed, "state": args.state}
    d.update(rep.to_dict())
    _emit(args, _json(d) if args.format == "json" else _csv([d], ["N", "M", "seed", "n_samples", "mass", "bound", "nu_measure", "mc_error", "pass"]))
    return EXIT_OK if rep.passed else EXIT_ASSERT


def _cmd_bergman(args):
    cfg = args.cfg
    if args.extremal:
        try:
            parts = [float(x) for x in args.extremal.split(",")]
            w = complex(parts[0], parts[1])
            theta = parts[2] if len(parts) > 2 else 0.0
            f = bg.Extremal(w, theta, cfg)
        except (ValueError, IndexError) as exc:
            raise UsageError(f"invalid extremal: {exc}") from None
    else:
        f = bg.random_polynomial(args.degree, cfg, args.seed)
    rep = bg.contractive_check(f, cfg, args.phi_obj, with_sup=True)
    d = {"p": cfg.p, "alpha": cfg.alpha, "phi": args.phi_obj.spec, "seed": args.seed,
         "degree": None if args.extremal else args.degree, "extremal": args.extremal}
    d.update(rep.to_dict())
    passed = rep.passed and rep.sup_pointwise <= 1.0 + 1e-8
    d["pass"] = passed
    _emit(args, _json(d) if args.format == "json" else _csv([d], list(d)))
    return EXIT_OK if passed else EXIT_ASSERT


def _cmd_rearrange(args):
    sig = SpaceSignature(args.N, args.M)
    rho = make_state(args.state, sig, args.seed)
    u = husimi_sample(rho, args.n_samples, args.seed, threads=args.threads)
    dist = EmpiricalDistribution(u, seed=args.seed)
    if args.format == "csv":
        buf = io.StringIO()
        dist.to_csv(buf, max_rows=args.rows)
        _emit(args, buf.getvalue())
    else:
        s = np.linspace(0.0, 1.0, 21)
        d = {"N": args.N, "M": args.M, "seed": args.seed, "n_samples": args.n_samples, "state": args.state,
             "s": s.tolist(), "u_star": [float(dist.u_star(x)) for x in s],
             "majorization": [dist.majorization(x) for x in s]}
        _emit(args, _json(d))
    return EXIT_OK


HANDLERS = {
    "dims": _cmd_dims,
    "rand-state": _cmd_rand_state,
    "deficit": _cmd_deficit,
    "stability": _cmd_stability,
    "scan": _cmd_scan,
    "faber-krahn": _cmd_faber_krahn,
    "bergman": _cmd_bergman,
    "rearrange": _cmd_rearrange,
}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _setup_logging("-v" in argv or "--verbose" in argv)
    try:
        args = parse_config(argv)
        t0 = time.perf_counter()
        code = HANDLERS[args.command](args)
        log.info("done", extra={"fields": {"command": args.command, "exit": code, "seconds": round(time.perf_counter() - t0, 3)}})
        return code
    except UsageError as exc:
        log.error(str(exc), extra={"fields": {"exit": EXIT_USAGE}})
        return EXIT_USAGE
    except OSError as exc:
        log.error(str(exc), extra={"fields": {"exit": EXIT_IO}})
        return EXIT_IO


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
