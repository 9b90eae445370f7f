"""Batch experiment runner: instance generation, learning-run grids with
JSONL/CSV output, the invariant audit suite, and backend benchmarks.

Every trial is reproducible from (master seed, cell index, trial index); the
primary JSONL output is deterministic byte for byte, so reruns can be
hash-compared.  Wall-clock fields are nulled in deterministic mode and live
in the CSV projection's companion column only when timing mode is requested.
"""

import csv
import hashlib
import json
import os
import time
from dataclasses import dataclass

import numpy as np

from .booleans import (Assignment, Dnf, ScaleProfile, Term, dnf_to_text,
                       gen_random_dnf)
from .chebptf import (build_aug_ptf, cheb_degree, cheb_exponent, chebyshev,
                      expressive_catalog, qpoly, verify_ptf)
from .learner import LearnerConfig, learn_dnf
from .noise import check_noise_claims
from .stems import audit_walk, run_walk
from .teacher import Teacher

SCHEMA_VERSION = 1

__all__ = [
    "ExperimentSpec", "run_experiment", "audit_suite", "bench_backends",
    "random_target", "trial_seed", "default_out_dir",
]


def default_out_dir() -> str:
    return os.environ.get("DNFLEARN_OUT_DIR", ".")


# ---------------------------------------------------------------------------
# Experiment grids


@dataclass(frozen=True)
class ExperimentSpec:
    """A grid of learning runs.

    cells: sequence of dicts with keys n, k, trials and optionally
    lengths (explicit term-length profile; None = uniform random) and
    profile ("desk" | "paper").
    """

    cells: tuple
    seed: int = 0
    out_path: str = "results.jsonl"
    oracle: str = "exact_ie"  # enum | ie | sampled aliases accepted
    audit: bool = True
    record_timing: bool = False  # True breaks byte-determinism of the JSONL

    def validate(self):
        if not self.cells:
            raise ValueError("experiment grid is empty")
        for cell in self.cells:
            n, k = int(cell["n"]), int(cell["k"])
            if n < 1 or k < 0:
                raise ValueError(f"bad cell {cell}")
            lengths = cell.get("lengths")
            if lengths is not None and any(m > n for m in lengths):
                raise ValueError(f"infeasible length profile in cell {cell}")


_ORACLE_ALIASES = {"enum": "exact_enum", "ie": "exact_ie",
                   "exact_enum": "exact_enum", "exact_ie": "exact_ie",
                   "sampled": "sampled"}


def trial_seed(master: int, cell_index: int, trial: int) -> int:
    """Stable per-trial seed: SHA-256 of the coordinates, truncated."""
    blob = f"{master}:{cell_index}:{trial}".encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def random_target(n: int, k: int, rng, lengths=None) -> Dnf:
    if lengths is None:
        lengths = [int(rng.integers(1, n + 1)) for _ in range(k)]
    return gen_random_dnf(n, k, list(lengths), rng)


def _run_one_trial(spec: ExperimentSpec, cell_index: int, cell: dict,
                   trial: int) -> dict:
    seed = trial_seed(spec.seed, cell_index, trial)
    n, k = int(cell["n"]), int(cell["k"])
    profile_kind = cell.get("profile", "desk")
    profile = ScaleProfile.paper(k) if profile_kind == "paper" \
        else ScaleProfile.desk(max(k, 1))
    rng = np.random.default_rng(seed)
    target = random_target(n, k, rng, cell.get("lengths"))
    record = {
        "schema_version": SCHEMA_VERSION,
        "cell": cell_index,
        "trial": trial,
        "seed": seed,
        "config": {
            "n": n, "k": k, "lengths": [len(t) for t in target.terms],
            "profile": profile_kind, "oracle": spec.oracle,
            "audit": spec.audit, "master_seed": spec.seed,
        },
        "target": dnf_to_text(target),
    }
    t0 = time.perf_counter()
    try:
        cfg = LearnerConfig(profile=profile,
                            noise_mode=_ORACLE_ALIASES[spec.oracle],
                            audit=spec.audit, seed=seed)
        rep = learn_dnf(Teacher(target), cfg)
        record.update({
            "kind": rep.kind,
            "reason": rep.reason,
            "mistakes": rep.mistakes,
            "mq_total": rep.mq_total,
            "eq_total": rep.eq_total,
            "magic_moments": rep.magic_moments,
            "rel_var_updates": rep.rel_var_updates,
            "restarts": rep.restarts,
            "catalog_pairs": rep.catalog_pairs,
            "feature_count": rep.feature_count,
            "audit_verdicts": rep.audit_verdicts,
        })
    except Exception as exc:  # partial failures are recorded, not raised
        record.update({
            "kind": "Incomplete",
            "reason": f"{type(exc).__name__}: {exc}",
            "mistakes": None, "mq_total": None, "eq_total": None,
            "magic_moments": None, "rel_var_updates": None, "restarts": None,
            "catalog_pairs": None, "feature_count": None,
            "audit_verdicts": {},
        })
    record["wall_time"] = round(time.perf_counter() - t0, 6) \
        if spec.record_timing else None
    return record


_CSV_COLUMNS = ["cell", "trial", "seed", "kind", "mistakes", "mq_total",
                "eq_total", "magic_moments", "restarts", "catalog_pairs",
                "feature_count", "wall_time"]


def run_experiment(spec: ExperimentSpec) -> list:
    """Run every trial of the grid; write one JSON object per line to
    spec.out_path plus a flat CSV projection alongside.  Returns the
    records."""
    spec.validate()
    records = []
    for ci, cell in enumerate(spec.cells):
        for trial in range(int(cell.get("trials", 1))):
            records.append(_run_one_trial(spec, ci, cell, trial))
    out = spec.out_path
    if not os.path.isabs(out):
        out = os.path.join(default_out_dir(), out)
    with open(out, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    with open(os.path.splitext(out)[0] + ".csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CSV_COLUMNS,
                                extrasaction="ignore")
        writer.writeheader()
        for rec in records:
            writer.writerow({c: rec.get(c) for c in _CSV_COLUMNS})
    return records


def bench_summary(records: list) -> list:
    """Per-cell medians of mistakes and query counts."""
    cells = {}
    for rec in records:
        cells.setdefault(rec["cell"], []).append(rec)
    rows = []
    for ci in sorted(cells):
        recs = cells[ci]
        ok = [r for r in recs if r["kind"] == "Learned"]

        def med(key):
            vals = sorted(r[key] for r in ok if r[key] is not None)
            return vals[len(vals) // 2] if vals else None

        rows.append({
            "cell": ci,
            "config": recs[0]["config"],
            "trials": len(recs),
            "learned": len(ok),
            "median_mistakes": med("mistakes"),
            "median_mq": med("mq_total"),
            "median_eq": med("eq_total"),
        })
    return rows


# ---------------------------------------------------------------------------
# Invariant audit suite


def _check(report: list, anchor: str, passed: bool, detail: str = ""):
    report.append({"anchor": anchor, "pass": bool(passed), "detail": detail})


def audit_suite(seed: int = 0) -> dict:
    """Run the lemma/claim-level property suites at desk scale and return a
    structured pass/fail report naming each anchor."""
    checks = []
    rng = np.random.default_rng(seed)

    # Polynomial recurrence: degree, leading coefficient, endpoint value.
    for d in (0, 1, 2, 5, 9):
        p = chebyshev(d)
        _check(checks, f"cheb-recurrence degree d={d}",
               p.degree == d, f"degree {p.degree}")
        _check(checks, f"cheb-recurrence endpoint d={d}",
               p.eval(1) == 1, f"T_d(1) = {p.eval(1)}")
        if d >= 1:
            _check(checks, f"cheb-recurrence leading d={d}",
                   p.coeffs[-1] == 2 ** (d - 1),
                   f"lead {p.coeffs[-1]}")

    # Scaled-polynomial extremal bounds, exact rational arithmetic.
    from fractions import Fraction
    for k in range(2, 9):
        poly, D = qpoly(k)

        def q(S):
            acc = Fraction(0)
            for c in reversed(poly):
                acc = acc * S + c
            return acc

        bad = [S for S in range(0, 2 * k) if abs(q(S)) > Fraction(1, 2 * k)]
        _check(checks, f"extremal-bound k={k}",
               not bad and q(2 * k) == 1,
               f"violations at S={bad}" if bad else "tight")

    # Degree bound for the construction at the spec'd scale.
    for k in range(2, 9):
        deg = cheb_degree(k) * cheb_exponent(k)
        _check(checks, f"ptf-degree k={k}", deg <= 40, f"degree {deg}")

    # Walk audits: structural invariants on instrumented random walks.
    violations = 0
    walks = 0
    for _ in range(40):
        n = int(rng.integers(6, 11))
        k = int(rng.integers(1, 4))
        lengths = [int(rng.integers(1, n + 1)) for _ in range(k)]
        f = gen_random_dnf(n, k, lengths, rng)
        profile = ScaleProfile.desk(k)
        teacher = Teacher(f)
        pos = np.nonzero(np.asarray(
            [int(x) for x in teacher._target_table()]))[0]
        if pos.size == 0:
            continue
        y = Assignment(n, int(pos[rng.integers(0, pos.size)]))
        for _ in range(5):
            perm = rng.permutation(n) + 1
            trace = run_walk(teacher.mq, y, perm)
            rep = audit_walk(f, trace, profile)
            walks += 1
            violations += len(rep.violations)
    _check(checks, "walk-invariants random suite",
           violations == 0 and walks >= 100,
           f"{walks} walks, {violations} violations")

    # Noise claims on a crafted short/long instance.
    prof = ScaleProfile(k=2, tau=8, medium_cutoff=200, kind="custom")
    f = Dnf(220, [Term.of(1, 2, 3),
                  Term.of(*range(4, 215))])
    rep = check_noise_claims(f, prof, mode="exact_ie", seed=seed)
    for name, entry in rep["checks"].items():
        _check(checks, f"noise-stability {name}", entry["pass"],
               f"bound {entry['bound']:.4g} worst {entry['worst']:.4g}")

    # PTF verification on random small instances.
    ptf_fail = 0
    for _ in range(10):
        n = int(rng.integers(4, 11))
        k = int(rng.integers(1, 4))
        lengths = [int(rng.integers(1, n + 1)) for _ in range(k)]
        f = gen_random_dnf(n, k, lengths, rng)
        catalog = expressive_catalog(f)
        ptf = build_aug_ptf(f, catalog)
        if not verify_ptf(f, ptf):
            ptf_fail += 1
    _check(checks, "ptf-verify random suite", ptf_fail == 0,
           f"{ptf_fail} failures of 10")

    return {"pass": all(c["pass"] for c in checks), "checks": checks}


# ---------------------------------------------------------------------------
# Backend benchmark


def bench_backends(seed: int = 0, n: int = 14, k: int = 3,
                   reps: int = 200) -> dict:
    """Time the stem-walk inner loop on the compiled kernel versus the pure
    NumPy fallback, plus a full learning run, on one instance."""
    from . import kern
    from .tables import term_from_mask_val
    rng = np.random.default_rng(seed)
    lengths = [n - 1] + [int(rng.integers(1, n + 1)) for _ in range(k - 1)]
    f = gen_random_dnf(n, k, lengths, rng)
    profile = ScaleProfile.desk(k)
    teacher = Teacher(f)
    pos = np.nonzero(teacher._target_table())[0]
    y = Assignment(n, int(pos[0]))
    table = teacher._target_table()

    perms = np.stack([np.random.default_rng([seed, r]).permutation(n) + 1
                      for r in range(reps)])
    flipbits = (np.uint64(1) << (np.uint64(n) - perms.astype(np.uint64)))
    timings = {}
    candidates = {}
    for backend, mod in kern.available_backends().items():
        t0 = time.perf_counter()
        masks, vals = mod.stem_walks(table, n, y.bits, flipbits)
        timings[backend] = time.perf_counter() - t0
        candidates[backend] = sorted(
            str(term_from_mask_val(n, m, v))
            for m, v in zip(masks.tolist(), vals.tolist()))

    t0 = time.perf_counter()
    rep = learn_dnf(Teacher(f), LearnerConfig(
        profile=profile, noise_mode="exact_ie", seed=seed))
    learn_time = time.perf_counter() - t0

    agree = len(set(map(tuple, candidates.values()))) == 1
    return {
        "instance": {"n": n, "k": k, "lengths": lengths, "reps": reps},
        "stem_walk_seconds": {b: round(t, 6) for b, t in timings.items()},
        "backends_agree": agree,
        "learn": {"kind": rep.kind, "mistakes": rep.mistakes,
                  "mq_total": rep.mq_total, "eq_total": rep.eq_total,
                  "seconds": round(learn_time, 3)},
    }
