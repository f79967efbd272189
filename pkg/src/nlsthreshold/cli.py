"""Command-line entry point.

Exit codes: 0 success, 1 invariant failure, 2 invalid configuration, 3 inconclusive.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .exponents import DegenerateExponentError, PhysParams, describe
from .lab import (SUITES, BracketInvalidError, ConfigError, ExperimentConfig, NonNegativeEnergyError,
                  dump_json, negative_energy_witness, oscillation_sweep, run_simulation,
                  solve_ground_state, theorem2_demo, threshold_bisect, verify_suite)
from .trajectory import Verdict

OK, FAILED, BAD_CONFIG, INCONCLUSIVE = 0, 1, 2, 3


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _emit(pairs) -> None:
    for k, v in pairs:
        print(f"{k}={_fmt(v)}")


def _load(args) -> ExperimentConfig:
    path = Path(args.config)
    if not path.is_absolute() and not path.exists():
        path = Path(args.out) / path
    try:
        return ExperimentConfig.from_json(path)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {args.config}") from exc


def cmd_exponents(args) -> int:
    try:
        params = PhysParams(args.dim, args.power, args.sign)
        pairs = describe(params)
    except (ValueError, DegenerateExponentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_CONFIG
    _emit(pairs)
    return OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    rec = run_simulation(cfg, args.out)
    _emit([("verdict", rec.verdict.value), ("tail_slope", rec.classification.tail_slope),
           ("reason", rec.classification.reason), ("config_hash", rec.config_hash),
           ("run_dir", rec.run_dir)])
    return OK


def cmd_groundstate(args) -> int:
    cfg = _load(args)
    res, meta = solve_ground_state(cfg, args.out)
    _emit(sorted(meta.items()))
    return OK if res.converged and meta["energy"] < 0 else FAILED


def cmd_threshold(args) -> int:
    cfg = _load(args)
    try:
        res = threshold_bisect(cfg, args.out)
    except BracketInvalidError as exc:
        print(f"bracket invalid: {exc}", file=sys.stderr)
        return FAILED
    dump_json(Path(args.out) / f"{cfg.name}-threshold.json", res.to_dict())
    _emit([("c_lo", res.c_lo), ("c_hi", res.c_hi), ("ell_lo", res.ell_lo), ("ell_hi", res.ell_hi),
           ("budget_spent", res.budget_spent), ("undetermined", res.undetermined_count),
           ("ell_ground_state", res.ell_ground_state), ("eta", res.eta)])
    if res.inconclusive:
        return INCONCLUSIVE
    if res.eta is not None and not res.eta > 0:
        return FAILED
    return OK


def cmd_oscillate(args) -> int:
    cfg = _load(args)
    rep = oscillation_sweep(cfg, args.out)
    dump_json(Path(args.out) / f"{cfg.name}-oscillation.json", rep.to_dict())
    for e in rep.entries:
        print(f"b={e.b:+g} verdict={e.verdict.value} slope={e.tail_slope:.4f} "
              f"free_norm={e.free_norm:.6f} lens={e.lens:g}")
    _emit([("onset_positive", rep.onset["positive"]), ("onset_negative", rep.onset["negative"]),
           ("free_norm_monotone", all(rep.monotone.values()))])
    if not rep.precondition_ok or not all(rep.monotone.values()):
        return FAILED
    return OK if rep.ok else INCONCLUSIVE


def cmd_theorem2(args) -> int:
    cfg = _load(args)
    rep = theorem2_demo(cfg, args.out)
    witness_ok = None
    if rep.c0 is not None:
        try:
            w = negative_energy_witness(cfg.with_family(kind="scaled_ground_state", amplitude=rep.c0,
                                                        chirp=0.0, noise=0.0), args.out)
            witness_ok = w.ok
        except NonNegativeEnergyError:
            witness_ok = False
    _emit([("ell_ground_state", rep.ell_ground_state), ("c0", rep.c0), ("energy_c0", rep.energy_c0),
           ("ell_c0", rep.ell_c0), ("gap", rep.gap),
           ("verdict", rep.verdict.value if rep.verdict else None),
           ("energy_floor_held", witness_ok), ("message", rep.message)])
    if rep.verdict == Verdict.UNDETERMINED:
        return INCONCLUSIVE
    return OK if rep.ok and witness_ok else FAILED


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(sorted(SUITES))}", file=sys.stderr)
        return BAD_CONFIG
    rep = verify_suite(args.suite)
    for line in rep.lines():
        print(line)
    return OK if rep.ok else FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlsthreshold",
                                 description="Scattering-threshold experiments for focusing NLS.")
    ap.add_argument("--out", default=".", help="root directory for configs and outputs")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents", help="exponent system for (N, p)")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--power", type=float, required=True)
    p.add_argument("--sign", type=int, default=-1, choices=(-1, 1))
    p.set_defaults(func=cmd_exponents)

    for name, fn, text in (("simulate", cmd_simulate, "evolve and classify one datum"),
                           ("groundstate", cmd_groundstate, "solve for the ground state"),
                           ("threshold", cmd_threshold, "bisect the family amplitude"),
                           ("oscillate", cmd_oscillate, "chirp sweep"),
                           ("theorem2", cmd_theorem2, "non-minimality of the ground state")):
        p = sub.add_parser(name, help=text)
        p.add_argument("-c", "--config", required=True)
        p.set_defaults(func=fn)

    p = sub.add_parser("verify", help="run a pinned invariant suite")
    p.add_argument("suite")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
