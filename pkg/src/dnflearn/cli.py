"""Command-line front end.

Subcommands:
  gen          emit a random formula in the text format
  learn        run the full learner against a random or supplied target
  audit        run the invariant audit suite
  verify-ptf   build and brute-force-check a threshold representation
  noise-check  evaluate the noise-stability bounds on an instance
  bench        compare the compiled and pure-Python walk kernels

Exit codes: 0 learned / all checks pass; 2 structured incomplete result;
3 invariant violation or failed check.
"""

import argparse
import json
import os
import sys

import numpy as np

from .booleans import Dnf, ScaleProfile, dnf_from_text, dnf_to_text
from .harness import (ExperimentSpec, audit_suite, bench_backends,
                      bench_summary, default_out_dir, random_target,
                      run_experiment)
from .learner import LearnerConfig, learn_dnf
from .noise import check_noise_claims, noise_claims_json
from .stems import StemFinderConfig
from .teacher import Teacher

EXIT_OK = 0
EXIT_INCOMPLETE = 2
EXIT_VIOLATION = 3

#: keys accepted in the flat key-value config file, with parsers
_CONFIG_KEYS = {
    "noise_mode": str, "cap_policy": str, "explicit_cap": int,
    "c0": float, "w_est": float, "kappa": float, "seed": int,
    "audit": lambda s: s.lower() in ("1", "true", "yes"),
    "max_restarts": int, "max_seconds": float, "reps": int,
    "noise_samples": int,
    # custom-profile fields
    "k": int, "tau": int, "medium_cutoff": int,
}


def _read_kv_file(path: str) -> dict:
    """Flat key-value config: one `key = value` or `key value` per line;
    blank lines and #-comments ignored."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, val = line.split("=", 1)
            else:
                parts = line.split(None, 1)
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: malformed line")
                key, val = parts
            key = key.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _CONFIG_KEYS[key](val.strip())
    return out


def _profile(arg: str, k: int) -> ScaleProfile:
    if arg == "desk":
        return ScaleProfile.desk(max(k, 1))
    if arg == "paper":
        return ScaleProfile.paper(max(k, 1))
    kv = _read_kv_file(arg)
    return ScaleProfile(k=kv.get("k", k), tau=kv["tau"],
                        medium_cutoff=kv["medium_cutoff"], kind="custom")


def _out_stream(path):
    if path is None or path == "-":
        return sys.stdout, False
    if not os.path.isabs(path):
        path = os.path.join(default_out_dir(), path)
    return open(path, "w"), True


def _emit(args, text: str):
    stream, close = _out_stream(getattr(args, "out", None))
    stream.write(text if text.endswith("\n") else text + "\n")
    if close:
        stream.close()


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--profile", default="desk",
                   help="desk | paper | path to a key-value profile file")
    p.add_argument("--out", default=None, help="output path (default stdout)")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dnflearn")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="emit a random formula")
    _add_common(p)
    p.add_argument("--lengths", type=int, nargs="*", default=None)

    p = sub.add_parser("learn", help="run the learner")
    _add_common(p)
    p.add_argument("--reps", type=int, default=None,
                   help="stem-search walk repetitions")
    p.add_argument("--cap", type=int, default=None,
                   help="explicit per-run mistake cap")
    p.add_argument("--oracle", choices=["enum", "ie", "sampled"],
                   default="ie")
    p.add_argument("--transcript", action="store_true",
                   help="record the full query transcript")
    p.add_argument("--target", default=None,
                   help="path to a formula in the text format")
    p.add_argument("--config", default=None,
                   help="flat key-value file of learner settings")
    p.add_argument("--lengths", type=int, nargs="*", default=None)
    p.add_argument("--audit", action="store_true")

    p = sub.add_parser("audit", help="run the invariant audit suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("verify-ptf", help="brute-force a PTF representation")
    _add_common(p)
    p.add_argument("--lengths", type=int, nargs="*", default=None)
    p.add_argument("--target", default=None)

    p = sub.add_parser("noise-check", help="check noise-stability bounds")
    _add_common(p)
    p.add_argument("--oracle", choices=["enum", "ie", "sampled", "auto"],
                   default="auto")
    p.add_argument("--lengths", type=int, nargs="*", default=None)
    p.add_argument("--target", default=None)

    p = sub.add_parser("bench", help="compare walk-kernel backends")
    _add_common(p)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--grid", action="store_true",
                   help="also run a small learning grid and print medians")
    return ap


def _load_target(args) -> Dnf:
    if getattr(args, "target", None):
        with open(args.target) as fh:
            return dnf_from_text(fh.read())
    rng = np.random.default_rng(args.seed)
    return random_target(args.n, args.k, rng, getattr(args, "lengths", None))


_ORACLE = {"enum": "exact_enum", "ie": "exact_ie", "sampled": "sampled",
           "auto": "auto"}


def cmd_gen(args) -> int:
    _emit(args, dnf_to_text(_load_target(args)))
    return EXIT_OK


def cmd_learn(args) -> int:
    target = _load_target(args)
    kv = _read_kv_file(args.config) if args.config else {}
    profile = _profile(args.profile, target.k)
    reps = args.reps if args.reps is not None else kv.pop("reps", None)
    cfg_kwargs = dict(
        profile=profile,
        stem_cfg=StemFinderConfig(reps=reps, seed=kv.get("seed", args.seed)),
        noise_mode=_ORACLE[args.oracle],
        seed=args.seed,
        audit=args.audit,
    )
    if args.cap is not None:
        cfg_kwargs.update(cap_policy="explicit", explicit_cap=args.cap)
    for key in ("noise_mode", "cap_policy", "explicit_cap", "c0", "w_est",
                "kappa", "seed", "audit", "max_restarts", "max_seconds",
                "noise_samples"):
        if key in kv:
            cfg_kwargs[key] = kv[key]
    cfg = LearnerConfig(**cfg_kwargs)
    teacher = Teacher(target, transcript=args.transcript)
    try:
        rep = learn_dnf(teacher, cfg)
    except AssertionError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    payload = rep.summary()
    payload["target"] = dnf_to_text(target)
    if args.transcript:
        payload["transcript"] = teacher.log.transcript
    _emit(args, json.dumps(payload, sort_keys=True, indent=2))
    return EXIT_OK if rep.kind == "Learned" else EXIT_INCOMPLETE


def cmd_audit(args) -> int:
    report = audit_suite(seed=args.seed)
    _emit(args, json.dumps(report, sort_keys=True, indent=2))
    return EXIT_OK if report["pass"] else EXIT_VIOLATION


def cmd_verify_ptf(args) -> int:
    from .chebptf import build_aug_ptf, expressive_catalog, verify_ptf
    target = _load_target(args)
    catalog = expressive_catalog(target)
    ptf = build_aug_ptf(target, catalog)
    ok = verify_ptf(target, ptf)
    _emit(args, json.dumps({
        "target": dnf_to_text(target),
        "degree": ptf.degree,
        "monomials": len(ptf.monomials),
        "weight_total": str(ptf.weight_total()),
        "theta": str(ptf.theta),
        "pass": ok,
    }, sort_keys=True, indent=2))
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_noise_check(args) -> int:
    target = _load_target(args)
    profile = _profile(args.profile, max(target.k, 1))
    report = check_noise_claims(target, profile, mode=_ORACLE[args.oracle],
                                seed=args.seed)
    _emit(args, noise_claims_json(report))
    ok = all(c["pass"] for c in report["checks"].values())
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_bench(args) -> int:
    result = bench_backends(seed=args.seed, n=args.n, k=max(args.k, 1),
                            reps=args.reps)
    if args.grid:
        spec = ExperimentSpec(
            cells=({"n": 8, "k": 2, "trials": 3},
                   {"n": 10, "k": 2, "trials": 3}),
            seed=args.seed,
            out_path=os.path.join(default_out_dir(), "bench_grid.jsonl"),
            record_timing=True)
        result["grid"] = bench_summary(run_experiment(spec))
    _emit(args, json.dumps(result, sort_keys=True, indent=2))
    return EXIT_OK if result["backends_agree"] else EXIT_VIOLATION


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "gen": cmd_gen,
        "learn": cmd_learn,
        "audit": cmd_audit,
        "verify-ptf": cmd_verify_ptf,
        "noise-check": cmd_noise_check,
        "bench": cmd_bench,
    }[args.cmd]
    try:
        return handler(args)
    except AssertionError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
