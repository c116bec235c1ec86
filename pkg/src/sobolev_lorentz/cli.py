"""Command-line interface.

Every subcommand prints its primary result as JSON (CSV for ``sweep``) on
standard output and, with ``--out``, also writes it to a file.

Exit codes: 0 success, 1 invalid parameters or input (a JSON error object is
written to standard error), 2 a mathematical check failed.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from .errors import CertificationError
from .grid_capacity import (
    CellSet,
    GridDomain,
    axiom_suite,
    cross_validate_radial,
    disk_condenser,
    mct_check,
    random_chain,
    solve_grid_capacity,
)
from .lorentz_norms import LorentzExponents, equivalence_check, norm_Ppq, parse_exponent, quasinorm_pq
from .radial_capacity import (
    Condenser,
    RadialProfile,
    SolverOptions,
    embedding_check,
    global_point_capacity,
    point_relative_capacity,
    solve_condenser,
    sweep,
)
from .rearrange import SampledGrid, StepFunction, rearrange_sampled, rearrangement

EXIT_OK, EXIT_INVALID, EXIT_CHECK_FAILED = 0, 1, 2


class CheckFailed(Exception):
    """Raised by a subcommand whose result violates a mathematical check."""

    def __init__(self, message: str, payload: str):
        super().__init__(message)
        self.payload = payload


# ---------------------------------------------------------------------------
# serialisation


def _real(x: float) -> str:
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def to_json(obj) -> str:
    """JSON with every real written to 17 significant digits and infinity as ``"inf"``."""
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _real(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _load_json(path: str):
    if path == "-":
        return json.load(sys.stdin)
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# argument types


def _exponent_q(s: str) -> float:
    try:
        q = parse_exponent(s)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid exponent {s!r}") from exc
    if not q >= 1:
        raise argparse.ArgumentTypeError("q must be >= 1 or 'inf'")
    return q


def _exponent_p(s: str) -> float:
    p = float(s)
    if not 1 < p < math.inf:
        raise argparse.ArgumentTypeError("p must lie in (1, inf)")
    return p


def _radius(s: str) -> float:
    r = float(s)
    if not 0 <= r < 1:
        raise argparse.ArgumentTypeError("r must lie in [0, 1)")
    return r


def _positive_int(s: str) -> int:
    k = int(s)
    if k < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return k


def _dimension(min_n: int):
    def parse(s: str) -> int:
        n = int(s)
        if n < min_n:
            raise argparse.ArgumentTypeError(f"n must be an integer >= {min_n}")
        return n

    return parse


def _int_list(s: str) -> tuple:
    return tuple(int(v) for v in s.split(","))


def _float_list(s: str) -> list:
    return [float(v) for v in s.split(",")]


# ---------------------------------------------------------------------------
# subcommands


def _step_function(obj) -> StepFunction:
    if isinstance(obj, dict) and "values" in obj and "h" in obj:
        return rearrange_sampled(SampledGrid.from_json(obj))
    return StepFunction.from_json(obj)


def cmd_norm(a) -> str:
    f = _step_function(_load_json(a.input))
    e = LorentzExponents(a.p, a.q)
    res = quasinorm_pq(f, e) if a.kind == "quasinorm" else norm_Ppq(f, e)
    out = {**res.to_json(), "kind": a.kind, **e.to_json()}
    if a.check:
        ok = equivalence_check(f, e)
        out["equivalence"] = ok
        if not ok:
            raise CheckFailed("norm equivalence violated", to_json(out))
    return to_json(out)


def cmd_rearrange(a) -> str:
    return to_json(rearrangement(_step_function(_load_json(a.input))).to_json())


def _solver_options(a) -> SolverOptions:
    return SolverOptions(max_iter=a.max_iter, tol=a.tol, heuristic=a.heuristic, seed=a.seed)


def _sandwich_ok(est) -> bool:
    return math.isnan(est.lower) or est.lower <= est.value <= est.upper


def cmd_condenser(a) -> str:
    est = solve_condenser(Condenser(a.n, a.r, a.p, a.q), a.M, _solver_options(a))
    out = to_json(est.to_json())
    if not _sandwich_ok(est):
        raise CheckFailed("solver value outside the sharp bounds", out)
    return out


def cmd_sweep(a) -> str:
    rows = sweep(a.n, a.rmax, a.steps, a.M, _solver_options(a), p=a.p, q=a.q)
    lines = ["r,lower,value,upper"]
    lines += [",".join(_real(x) for x in (est.r, est.lower, est.value, est.upper)) for est in rows]
    out = "\n".join(lines)
    if not all(_sandwich_ok(est) for est in rows):
        raise CheckFailed("a sweep row lies outside the sharp bounds", out)
    return out


def cmd_point(a) -> str:
    est = point_relative_capacity(a.n, a.M, _solver_options(a), a.rtol)
    return to_json({**est.to_json(), "target": a.n**a.n * math.pi ** (a.n / 2) / math.gamma(a.n / 2 + 1)})


def cmd_global_point(a) -> str:
    return to_json(global_point_capacity(a.n, a.radii).to_json())


def cmd_embedding_check(a) -> str:
    obj = _load_json(a.input)
    if isinstance(obj, dict) and "knots" in obj:
        u = RadialProfile.from_json(obj)
        if a.n is None:
            raise ValueError("--n is required for radial profiles")
    else:
        u = SampledGrid.from_json(obj)
    sup, bound = embedding_check(u, a.n)
    holds = sup <= bound * (1 + 1e-12)
    out = to_json({"sup": sup, "bound": bound, "holds": holds})
    if not holds:
        raise CheckFailed("sup exceeds the embedding bound", out)
    return out


def _domain(a) -> GridDomain:
    if a.domain == "disk":
        return GridDomain.disk(a.radius, a.h)
    if a.domain == "interval":
        return GridDomain.interval(0.0, a.radius, a.h)
    return GridDomain.rectangle(a.shape, a.h)


def cmd_grid_cap(a) -> str:
    if a.input is not None:
        D = _domain(a)
        E = CellSet.from_json(_load_json(a.input), D.shape)
    elif a.domain == "disk" and a.r is not None:
        E, D = disk_condenser(a.r, a.h)
    else:
        raise ValueError("give the cell set with --input (or --r for the disk domain)")
    res = solve_grid_capacity(E, D, (a.p, a.q), a.flavor, gap_tol=a.gap_tol, max_iter=a.max_iter)
    return to_json({**res.to_json(), "p": a.p, "q": a.q, "flavor": a.flavor, "shape": list(D.shape)})


def cmd_suite(a) -> str:
    D = GridDomain.rectangle(a.shape, 1.0 / (a.shape[0] - 1))
    report = axiom_suite(D, (a.p, a.q), a.trials, a.seed, a.flavor, gap_tol=a.gap_tol)
    rng_seeds = [a.seed + i for i in range(a.chains)]
    mct_fail = [
        s for s in rng_seeds
        if not mct_check(random_chain(D, np.random.default_rng(s)), D, (a.mct_p, 1), gap_tol=a.gap_tol)
    ]
    out = report.to_json()
    out["mct"] = {"p": a.mct_p, "passed": len(rng_seeds) - len(mct_fail), "failing_seeds": mct_fail}
    text = to_json(out)
    if not report.ok or mct_fail:
        raise CheckFailed("capacity axiom violations", text)
    return text


def cmd_cross_validate(a) -> str:
    grid, radial, gap = cross_validate_radial(a.r, a.n, (a.p, a.q), a.h, a.M)
    return to_json({"grid_value": grid, "radial_value": radial, "relative_gap": gap})


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sobolev-lorentz",
        description="Lorentz norms and Sobolev-Lorentz capacities. "
        "Exit codes: 0 ok, 1 invalid input, 2 failed mathematical check.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        sp.add_argument("--out", help="also write the result to this file")
        return sp

    def exps(sp, p=None, q="1"):
        sp.add_argument("--p", type=_exponent_p, required=p is None, default=p)
        sp.add_argument("--q", type=_exponent_q, default=_exponent_q(q), help="number >= 1 or 'inf'")

    def solver(sp, M):
        sp.add_argument("--M", type=_positive_int, default=M, help="knot intervals")
        sp.add_argument("--max-iter", type=_positive_int, default=20_000)
        sp.add_argument("--tol", type=float, default=1e-3)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--heuristic", action="store_true", help="allow q > p (not certified)")

    sp = add("norm", cmd_norm, "Lorentz quasinorm or norm of a step function (exit 2: equivalence violated)")
    sp.add_argument("--input", required=True, help="StepFunction or SampledGrid JSON, '-' for stdin")
    exps(sp)
    sp.add_argument("--kind", choices=("quasinorm", "norm"), default="quasinorm")
    sp.add_argument("--check", action="store_true", help="also check quasinorm <= norm <= p' quasinorm")

    sp = add("rearrange", cmd_rearrange, "nonincreasing rearrangement (exit 0/1)")
    sp.add_argument("--input", required=True)

    sp = add("condenser", cmd_condenser, "radial condenser capacity (exit 2: outside sharp bounds)")
    sp.add_argument("--n", type=_dimension(2), required=True)
    sp.add_argument("--r", type=_radius, required=True)
    exps(sp)
    solver(sp, 2000)

    sp = add("sweep", cmd_sweep, "CSV of lower, value, upper over r (exit 2: a row outside the bounds)")
    sp.add_argument("--n", type=_dimension(2), default=2)
    sp.add_argument("--rmax", type=_radius, default=0.9)
    sp.add_argument("--steps", type=_positive_int, default=10)
    sp.add_argument("--p", type=_exponent_p, default=None, help="defaults to n")
    sp.add_argument("--q", type=_exponent_q, default=1.0)
    solver(sp, 400)

    sp = add("point", cmd_point, "capacity of a point relative to the unit ball (exit 2: off n^n Omega_n)")
    sp.add_argument("--n", type=_dimension(2), required=True)
    sp.add_argument("--rtol", type=float, default=5e-3)
    solver(sp, 2000)

    sp = add("global-point", cmd_global_point, "cone estimates of the global point capacity (exit 2: not decreasing)")
    sp.add_argument("--n", type=_dimension(2), required=True)
    sp.add_argument("--radii", type=_float_list, default=[10.0**-k for k in range(1, 7)])

    sp = add("embedding-check", cmd_embedding_check, "sup |u| against the gradient bound (exit 2: violated)")
    sp.add_argument("--input", required=True, help="RadialProfile or SampledGrid JSON")
    sp.add_argument("--n", type=_dimension(1), default=None)

    sp = add("grid-cap", cmd_grid_cap, "discrete capacity on a grid (exit 0/1)")
    sp.add_argument("--domain", choices=("disk", "rectangle", "interval"), default="disk")
    sp.add_argument("--h", type=float, default=0.05)
    sp.add_argument("--radius", type=float, default=1.0, help="disk radius or interval length")
    sp.add_argument("--shape", type=_int_list, default=(16, 16))
    sp.add_argument("--input", help="CellSet JSON")
    sp.add_argument("--r", type=_radius, help="disk domain: E is the disk of this radius")
    sp.add_argument("--flavor", choices=("pq", "(pq)"), default="pq")
    sp.add_argument("--gap-tol", type=float, default=1e-6)
    sp.add_argument("--max-iter", type=_positive_int, default=20_000)
    exps(sp, p=2.0, q="2")

    sp = add("suite", cmd_suite, "randomized capacity axiom checks (exit 2: any violation)")
    sp.add_argument("--shape", type=_int_list, default=(16, 16))
    sp.add_argument("--trials", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--flavor", choices=("pq", "(pq)"), default="pq")
    sp.add_argument("--chains", type=int, default=10)
    sp.add_argument("--mct-p", type=_exponent_p, default=3.0)
    sp.add_argument("--gap-tol", type=float, default=1e-5)
    exps(sp, p=2.0)

    sp = add("cross-validate", cmd_cross_validate, "grid against radial solver on the disk condenser (exit 0/1)")
    sp.add_argument("--r", type=_radius, default=0.5)
    sp.add_argument("--n", type=_dimension(2), default=2)
    sp.add_argument("--h", type=float, default=0.02)
    sp.add_argument("--M", type=_positive_int, default=2000)
    exps(sp, p=2.0, q="2")
    return ap


def _error(kind: str, message: str) -> None:
    sys.stderr.write(to_json({"error": kind, "message": message}) + "\n")


def _emit(text: str, out: Optional[str]) -> None:
    sys.stdout.write(text + "\n")
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad arguments; 2 is reserved for failed checks here
        if exc.code in (0, None):
            return EXIT_OK
        _error("usage", "invalid command-line arguments")
        return EXIT_INVALID
    try:
        text = a.func(a)
    except CheckFailed as exc:
        _emit(exc.payload, a.out)
        _error("check_failed", str(exc))
        return EXIT_CHECK_FAILED
    except CertificationError as exc:
        _error("check_failed", str(exc))
        return EXIT_CHECK_FAILED
    except (ValueError, KeyError, TypeError, OSError) as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_INVALID
    _emit(text, a.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
