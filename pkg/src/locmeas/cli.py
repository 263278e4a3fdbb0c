"""Command-line entry point.

Every command prints one JSON document to stdout; diagnostics go to
stderr. Exit codes: 0 ok, 1 verification failed, 2 invalid input,
3 internal or compilation error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bb84, qss, serialize
from .errors import LocMeasError
from .povm import random_qubit_povm, validate_povm
from .protocol import compile_povm
from .simulate import exact_state_distribution, locality_audit, plan_effective_povm, povm_distance, sample_state
from .subspace import random_encoding

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    pass


def _load(path, reader):
    try:
        return reader(serialize.load_file(path))
    except LocMeasError as e:
        raise InputError(f"{path}: {e}") from None
    except (TypeError, ValueError) as e:
        raise InputError(f"{path}: {e}") from None


def _load_povm(path, tol):
    p = _load(path, serialize.povm_from_json)
    bad = validate_povm(p, tol)
    if bad:
        v = bad[0]
        where = f" at element {v['index']} ({p.labels[v['index']]})" if v["index"] is not None else ""
        raise InputError(f"{path}: invalid POVM: {v['kind']}{where}, magnitude {v['magnitude']:.3e}")
    return p


def parse_input_state(text: str, dim: int, ls=None) -> np.ndarray:
    """Preset name, or a JSON list of length 2 (logical) or ``dim`` (full space)."""
    if text in bb84.INPUT_PRESETS:
        logical = bb84.INPUT_PRESETS[text]
    else:
        try:
            vals = [serialize.complex_from_json(z) for z in json.loads(text)]
        except (json.JSONDecodeError, TypeError, LocMeasError):
            raise InputError(f"cannot parse input state {text!r}") from None
        if len(vals) == dim and (dim != 2 or ls is None):
            return np.array(vals, dtype=complex)
        if len(vals) != 2:
            raise InputError(f"input state needs 2 or {dim} amplitudes, got {len(vals)}")
        logical = np.array(vals, dtype=complex)
    n = np.linalg.norm(logical)
    if n == 0:
        raise InputError("input state is zero")
    logical = logical / n
    if ls is None:
        return logical
    return ls.encode(logical[0], logical[1])


def _emit(doc, out=None):
    text = serialize.dumps(doc)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _audit_json(report):
    return {
        "path_monotonic": report.path_monotonic,
        "max_residual": report.max_residual,
        "passed": report.passed,
        "nodes": len(report.residuals),
    }


def cmd_compile(args) -> int:
    p = _load_povm(args.povm, args.tol)
    ls = _load(args.encoding, serialize.encoding_from_json)
    plan = compile_povm(ls, p, args.grouping, args.tol)
    _emit(serialize.plan_to_json(plan), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    plan = _load(args.plan, serialize.plan_from_json)
    p = _load_povm(args.povm, args.tol)
    ls = _load(args.encoding, serialize.encoding_from_json)
    if tuple(plan.dims) != ls.dims:
        raise InputError(f"plan dims {plan.dims} differ from encoding dims {ls.dims}")
    if set(plan.labels) != set(p.labels):
        raise InputError("plan and POVM labels differ")
    audit = locality_audit(plan, args.tol)
    dev = povm_distance(p, plan_effective_povm(plan, ls))
    ok = audit.passed and dev < args.tol
    _emit({**serialize.header("report"), "max_deviation": dev, "tolerance": args.tol, "audit": _audit_json(audit), "passed": ok})
    if not ok:
        print(f"verification failed: deviation {dev:.3e}, audit {'ok' if audit.passed else 'failed'}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAILED


def _results(plan, ls, psi, n, seed, workers, tol):
    dist = exact_state_distribution(plan, psi, ls, tol)
    doc = {
        **serialize.header("results"),
        "distribution": dist.probabilities,
        "outside_subspace": dist.outside_subspace,
        "leakage": dist.leakage,
        "seed": seed,
        "n": n,
        "audit": _audit_json(locality_audit(plan, tol)),
    }
    if n > 0:
        doc["counts"] = sample_state(plan, psi, n, seed, workers).counts
    if dist.outside_subspace:
        print(f"warning: input has weight {dist.leakage:.3e} outside the encoded subspace", file=sys.stderr)
    return doc


def cmd_simulate(args) -> int:
    plan = _load(args.plan, serialize.plan_from_json)
    ls = _load(args.encoding, serialize.encoding_from_json)
    psi = parse_input_state(args.input, ls.dim, ls)
    _emit(_results(plan, ls, psi, args.n, args.seed, args.workers, args.tol))
    return EXIT_OK


def cmd_demo_bb84(args) -> int:
    spec = bb84.BB84Spec(args.phi)
    ls, plan = bb84.compile_bb84(spec)
    psi = parse_input_state(args.input, ls.dim, ls)
    doc = _results(plan, ls, psi, args.n, args.seed, args.workers, args.tol)
    first = plan.stage_trace("")
    doc["phi"] = args.phi
    doc["strategy"] = first[0]["case"] if first else None
    doc["trace"] = [{k: serialize.plain(v) for k, v in t.items()} for t in plan.trace]
    _emit(doc)
    return EXIT_OK


def _qss_encoding(arg):
    if arg in qss.PRESETS:
        return qss.preset(arg)
    ls = _load(arg, serialize.encoding_from_json)
    if ls.dims != (2, 2):
        raise InputError("qss encodings must have dims [2, 2]")
    try:
        return qss.QssEncoding.from_states(ls.ket0, ls.ket1)
    except LocMeasError as e:
        raise InputError(str(e)) from None


def cmd_demo_qss(args) -> int:
    enc = _qss_encoding(args.encoding)
    doc = {
        **serialize.header("qss-report"),
        "p": enc.p,
        "q": enc.q,
        "is_teleport": enc.is_teleport,
        "is_product": enc.is_product,
        "is_eta_equal": enc.is_eta_equal,
    }
    if args.check in ("transfer", "both"):
        r = qss.check_perfect_transfer(enc)
        doc["transfer"] = {"min_deviation": r.min_deviation, "argmin_phi": serialize.vector_to_json(r.argmin_phi), "grid_size": r.grid_size}
    if args.check in ("basis", "both"):
        try:
            b = qss.check_basis_info(enc)
            doc["basis"] = {"commutator_norm": b.commutator_norm, "used_inverse_of": b.used_inverse_of}
        except LocMeasError as e:
            doc["basis"] = {"excluded": str(e)}
    _emit(doc)
    return EXIT_OK


def cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.what == "bb84-povm":
        doc = serialize.povm_to_json(bb84.build_bb84_povm())
    elif args.what == "bb84-encoding":
        doc = serialize.encoding_to_json(bb84.build_encoding(bb84.BB84Spec(args.phi)))
    elif args.what == "random-povm":
        doc = serialize.povm_to_json(random_qubit_povm(args.outcomes, rng))
    else:
        dims = tuple(int(x) for x in args.dims.split(","))
        doc = serialize.encoding_to_json(random_encoding(dims, rng))
    _emit(doc, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locmeas", description="Compile qubit POVMs on encoded subspaces into local feed-forward plans.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tol=1e-10):
        p.add_argument("--tol", type=float, default=tol, help="numerical tolerance (default: %(default)g)")

    def sampling(p):
        p.add_argument("--input", default="0", help="preset (0, 1, +, -, +i, -i) or JSON amplitude list")
        p.add_argument("--n", type=int, default=0, help="number of sampled trials (0: exact only)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("compile", help="compile a POVM against an encoding")
    p.add_argument("povm")
    p.add_argument("encoding")
    p.add_argument("--grouping", default="balanced", choices=["balanced", "sequential"])
    p.add_argument("-o", "--output")
    common(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("verify", help="check a plan against its target POVM")
    p.add_argument("plan")
    p.add_argument("povm")
    p.add_argument("encoding")
    common(p, 1e-9)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="run a plan on an input state")
    p.add_argument("plan")
    p.add_argument("encoding")
    sampling(p)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("demo", help="built-in demonstrations")
    demo = p.add_subparsers(dest="demo", required=True)
    d = demo.add_parser("bb84", help="BB84 measurement on a two-qubit encoding")
    d.add_argument("--phi", type=float, default=float(np.pi / 8))
    sampling(d)
    common(d)
    d.set_defaults(func=cmd_demo_bb84)
    d = demo.add_parser("qss", help="secret-sharing certificates")
    d.add_argument("--encoding", default="generic", help=f"preset ({', '.join(sorted(qss.PRESETS))}) or encoding file")
    d.add_argument("--check", choices=["transfer", "basis", "both"], default="both")
    d.set_defaults(func=cmd_demo_qss)

    p = sub.add_parser("generate", help="write example POVM or encoding files")
    p.add_argument("what", choices=["bb84-povm", "bb84-encoding", "random-povm", "random-encoding"])
    p.add_argument("--phi", type=float, default=float(np.pi / 8))
    p.add_argument("--outcomes", type=int, default=4)
    p.add_argument("--dims", default="2,2,2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except LocMeasError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
