"""Command-line front end: ``csm <subcommand> ...``.

Exit codes
----------
decompose : 0 ok, 2 invalid input
certify   : 0 certified, 1 refuted, 3 not certified, 2 invalid input
ks        : 0 SAT, 1 UNSAT, 2 indeterminate or invalid input
simulate  : 0 ok, 2 invalid input
bell      : 0 ok, 2 invalid input
selftest  : 0 all criteria pass, 1 otherwise
"""
from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager

import numpy as np

from . import ks
from .interferometer import ExperimentConfig, run_experiment
from .linalg import matrix_to_dict
from .stochastic import TransitionMatrix, constraint_residuals, lemma1_decompose, lemma1_reconstruct
from .unistochastic import CERTIFIED, REFUTED, CertifyOptions, certify_unistochastic

EXIT_INVALID = 2


class InputError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


@contextmanager
def _out(path: str | None):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _dump(obj, path: str | None):
    with _out(path) as fh:
        fh.write(json.dumps(obj, indent=2) + "\n")


def _load_json(path: str):
    text = _read(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _load_transition(path: str, tol: float | None) -> TransitionMatrix:
    d = _load_json(path)
    try:
        return TransitionMatrix.from_dict(d, tol) if tol is not None else TransitionMatrix.from_dict(d)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def cmd_decompose(args) -> int:
    pi = _load_transition(args.matrix, args.tol)
    dec = lemma1_decompose(pi)
    rec = np.asarray(lemma1_reconstruct(dec))
    report = {
        "n": pi.n,
        "r": dec.r.tolist(),
        "frame_initial": matrix_to_dict(dec.frame_initial.vectors),
        "frame_final": matrix_to_dict(dec.frame_final.vectors),
        "residuals": constraint_residuals(dec),
        "reconstruction_error": float(np.max(np.abs(rec - np.asarray(pi)))),
    }
    _dump(report, args.output)
    return 0


def cmd_certify(args) -> int:
    pi = _load_transition(args.matrix, None)
    try:
        opts = CertifyOptions(restarts=args.restarts, max_iters=args.max_iters,
                              tol_certify=args.tol, seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    res = certify_unistochastic(pi, opts)
    _dump(res.to_dict(), args.output)
    if res.status == CERTIFIED:
        return 0
    return 1 if res.status == REFUTED else 3


def cmd_ks(args) -> int:
    if args.generate is not None:
        s = ks.generate_cabello_shape(args.generate)
    elif args.structure:
        try:
            s = ks.parse_structure(_read(args.structure))
        except ks.StructureError as exc:
            raise InputError(f"{args.structure}: {exc}") from exc
    else:
        raise InputError("give a structure file or --generate SEED")
    cert = ks.parity_check(s)
    res = ks.search_assignment(s, args.mode, args.limit, use_parity=not args.no_parity)
    report = {"n_contexts": s.n_contexts, "n_classes": s.n_classes, "n_outcomes": s.n_outcomes,
              "parity_certificate": cert.to_dict() if cert else None, **res.to_dict()}
    if args.generate is not None:
        report["structure"] = s.to_dict()["contexts"]
    _dump(report, args.output)
    if res.status == ks.INDETERMINATE:
        print(f"indeterminate: {res.stats.get('reason', '')}", file=sys.stderr)
    return {ks.SAT: 0, ks.UNSAT: 1}.get(res.status, 2)


def cmd_simulate(args) -> int:
    d = _load_json(args.config)
    if args.seed is not None:
        d["seed"] = args.seed
    if args.shots is not None:
        d["shots"] = args.shots
    try:
        cfg = ExperimentConfig.from_dict(d)
    except ValueError as exc:
        raise InputError(f"{args.config}: {exc}") from exc
    res = run_experiment(cfg)
    with _out(args.output) as fh:
        fh.write(res.to_csv())
    if args.summary:
        _dump(res.summary(), args.summary)
    elif not args.quiet:
        print(json.dumps(res.summary()), file=sys.stderr)
    return 0


def _parse_vector(text: str) -> np.ndarray:
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise InputError(f"bad direction {text!r}") from exc
    if v.shape != (3,) or not np.linalg.norm(v) > 0:
        raise InputError(f"direction {text!r} must be a nonzero 3-vector")
    return v / np.linalg.norm(v)


def cmd_bell(args) -> int:
    from .spin import bell_report, planar_direction

    given = [args.a, args.a2, args.b, args.b2]
    if any(v is not None for v in given):
        if None in given:
            raise InputError("--a, --a2, --b and --b2 must be given together")
        dirs = [_parse_vector(v) for v in given]
    else:
        dirs = [planar_direction(a) for a in args.angles]
    _dump(bell_report(*dirs), args.output)
    return 0


def cmd_selftest(args) -> int:
    from .acceptance import TOLERANCES, run_all

    overrides = {}
    for item in args.tol or []:
        name, _, value = item.partition("=")
        if name not in TOLERANCES or not value:
            raise InputError(f"--tol expects NAME=VALUE with NAME in {sorted(TOLERANCES)}")
        overrides[name] = float(value)
    results = run_all(overrides)
    if args.json:
        _dump({"passed": all(r.passed for r in results), "criteria": [r.to_dict() for r in results]},
              args.output)
    else:
        with _out(args.output) as fh:
            for r in results:
                fh.write(r.line() + "\n")
            fh.write(f"{sum(r.passed for r in results)}/{len(results)} criteria passed\n")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="csm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="decompose a column-stochastic matrix")
    d.add_argument("matrix", help="TransitionMatrix JSON file, or - for stdin")
    d.add_argument("--tol", type=float, default=None, help="column-sum tolerance")
    d.add_argument("--output", "-o", default="-")
    d.set_defaults(func=cmd_decompose)

    c = sub.add_parser("certify", help="certify or refute unistochasticity")
    c.add_argument("matrix")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--restarts", type=int, default=256)
    c.add_argument("--max-iters", type=int, default=5000)
    c.add_argument("--tol", type=float, default=1e-8, help="certification tolerance")
    c.add_argument("--output", "-o", default="-")
    c.set_defaults(func=cmd_certify)

    k = sub.add_parser("ks", help="search a KS incidence structure")
    k.add_argument("structure", nargs="?")
    k.add_argument("--generate", type=int, metavar="SEED", help="use a generated cabello-shape structure")
    k.add_argument("--mode", choices=["backtracking", "exhaustive"], default="backtracking")
    k.add_argument("--limit", type=int, default=ks.DEFAULT_LIMIT)
    k.add_argument("--no-parity", action="store_true", help="skip the parity shortcut")
    k.add_argument("--output", "-o", default="-")
    k.set_defaults(func=cmd_ks)

    s = sub.add_parser("simulate", help="run a beam-splitter experiment")
    s.add_argument("config")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--shots", type=int, default=None)
    s.add_argument("--output", "-o", default="-", help="histogram CSV")
    s.add_argument("--summary", default=None, help="write the JSON summary here")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bell", help="singlet correlations and CHSH value")
    b.add_argument("--angles", nargs=4, type=float, metavar=("A", "A2", "B", "B2"),
                   default=[0.0, 90.0, 45.0, 135.0], help="in-plane angles from z, degrees")
    # one option per direction so that --b2=-1,0,1 parses
    for name in ("a", "a2", "b", "b2"):
        b.add_argument(f"--{name}", metavar="X,Y,Z", help="direction vector; overrides --angles")
    b.add_argument("--output", "-o", default="-")
    b.set_defaults(func=cmd_bell)

    t = sub.add_parser("selftest", help="run the acceptance checks")
    t.add_argument("--json", action="store_true")
    t.add_argument("--tol", action="append", metavar="NAME=VALUE")
    t.add_argument("--output", "-o", default="-")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"csm {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
