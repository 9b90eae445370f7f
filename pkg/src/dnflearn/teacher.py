"""The oracle side of the exact-learning protocol.

A Teacher holds the hidden target DNF, answers membership queries from a
precomputed truth table, answers equivalence queries by exhaustive hypercube
scan (up to a hard dimension cap), picks counterexamples by policy, and
accounts every query in a QueryLog.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .booleans import Assignment, Dnf, eval_dnf
from .tables import dnf_truth_table


@dataclass
class QueryLog:
    mq_count: int = 0
    eq_count: int = 0
    by_phase: dict = field(default_factory=dict)
    transcript: list = None
    _phase: str = ""

    def add_mq(self, count: int = 1):
        self.mq_count += count
        if self._phase:
            key = ("mq", self._phase)
            self.by_phase[key] = self.by_phase.get(key, 0) + count

    def add_eq(self):
        self.eq_count += 1
        if self._phase:
            key = ("eq", self._phase)
            self.by_phase[key] = self.by_phase.get(key, 0) + 1

    @contextmanager
    def phase(self, name: str):
        prev = self._phase
        self._phase = name
        try:
            yield
        finally:
            self._phase = prev

    def record(self, kind, inp, answer):
        if self.transcript is not None:
            self.transcript.append({
                "kind": kind,
                "input": inp,
                "answer": answer,
                "phase": self._phase,
                "mq_count": self.mq_count,
                "eq_count": self.eq_count,
            })

    def snapshot(self) -> "QueryLog":
        snap = QueryLog(self.mq_count, self.eq_count, dict(self.by_phase))
        return snap

    def phase_counts(self) -> dict:
        return {f"{k[0]}:{k[1]}": v for k, v in sorted(self.by_phase.items())}

    def transcript_jsonl(self) -> str:
        if self.transcript is None:
            return ""
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.transcript)


@dataclass(frozen=True)
class CounterexamplePolicy:
    kind: str = "lex_min"  # lex_min | uniform_random | positive_first_lex
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("lex_min", "uniform_random", "positive_first_lex"):
            raise ValueError(f"unknown counterexample policy {self.kind!r}")


class Teacher:
    """MQ/EQ oracle for a hidden DNF target.

    Equivalence queries are answered exactly by scanning all 2^n points, so
    the dimension is capped (default 26, ~6.7e7 evaluations worst case).  A
    sampling-based approximate mode exists for larger n but is never used by
    the acceptance suite.
    """

    def __init__(self, target: Dnf, policy: CounterexamplePolicy = CounterexamplePolicy(),
                 n_cap: int = 26, transcript: bool = False, approx_eq_samples: int = 0):
        if target.n > n_cap and approx_eq_samples == 0:
            raise ValueError(f"dimension {target.n} exceeds n_cap {n_cap} in exact mode")
        self._target = target
        self.policy = policy
        self.n_cap = n_cap
        self.log = QueryLog()
        if transcript:
            self.log.transcript = []
        self.approx_eq_samples = approx_eq_samples
        self._table = None
        self._rng = np.random.default_rng(policy.seed)
        self._hyp_counter = 0

    @property
    def n(self) -> int:
        return self._target.n

    def _target_table(self) -> np.ndarray:
        if self._table is None:
            self._table = dnf_truth_table(self._target)
        return self._table

    # -- membership queries

    def mq(self, x: Assignment) -> int:
        if x.n != self._target.n:
            raise ValueError("dimension mismatch")
        return self.mq_bits(x.bits)

    def mq_bits(self, bits: int) -> int:
        if self._target.n <= self.n_cap:
            ans = int(self._target_table()[bits])
        else:
            ans = eval_dnf(self._target, Assignment(self._target.n, bits))
        self.log.add_mq()
        self.log.record("mq", format(bits, f"0{self._target.n}b"), ans)
        return ans

    def bulk_mq_handle(self):
        """Fast path for compiled kernels: the target truth table plus a
        charge callback.  The caller must charge exactly the number of
        lookups it performs."""
        if self.log.transcript is not None:
            return None  # transcripts require the per-query path
        return self._target_table(), self.log.add_mq

    # -- equivalence queries

    def eq(self, hypothesis):
        """Returns None if the hypothesis agrees with the target everywhere,
        else a counterexample Assignment chosen by policy.

        The hypothesis must expose truth_table(n) -> array of 0/1 over all
        2^n packed assignments, or be a callable on Assignments.
        """
        n = self._target.n
        self.log.add_eq()
        self._hyp_counter += 1
        if n > self.n_cap:
            return self._approx_eq(hypothesis)
        h_table = _hypothesis_table(hypothesis, n)
        diff = np.nonzero(h_table != self._target_table())[0]
        if diff.size == 0:
            self.log.record("eq", f"hyp-{self._hyp_counter}", "correct")
            return None
        bits = self._pick(diff)
        self.log.record("eq", f"hyp-{self._hyp_counter}",
                        format(bits, f"0{n}b"))
        return Assignment(n, bits)

    def _pick(self, diff: np.ndarray) -> int:
        if self.policy.kind == "lex_min":
            return int(diff[0])
        if self.policy.kind == "uniform_random":
            return int(diff[self._rng.integers(0, diff.size)])
        # positive_first_lex: lexicographically first disagreement that the
        # target labels positive, else the lexicographically first overall.
        tt = self._target_table()
        pos = diff[tt[diff] == 1]
        return int(pos[0]) if pos.size else int(diff[0])

    def _approx_eq(self, hypothesis):
        n = self._target.n
        for _ in range(self.approx_eq_samples):
            bits = int(self._rng.integers(0, 1 << n))
            x = Assignment(n, bits)
            hv = _hypothesis_eval(hypothesis, x)
            if hv != eval_dnf(self._target, x):
                return x
        return None

    def stats(self) -> QueryLog:
        return self.log.snapshot()

    # White-box access for audits and exact noise oracles; the learner
    # proper never touches this.
    def reveal_target(self) -> Dnf:
        return self._target


def _hypothesis_table(hypothesis, n: int) -> np.ndarray:
    tab = getattr(hypothesis, "truth_table", None)
    if tab is not None:
        return np.asarray(tab(n), dtype=np.uint8)
    out = np.empty(1 << n, dtype=np.uint8)
    for bits in range(1 << n):
        out[bits] = _hypothesis_eval(hypothesis, Assignment(n, bits))
    return out


def _hypothesis_eval(hypothesis, x: Assignment) -> int:
    ev = getattr(hypothesis, "eval", None)
    if ev is not None:
        return int(ev(x))
    return int(hypothesis(x))


class TableHypothesis:
    """Adapter wrapping a precomputed truth table as an eq() hypothesis."""

    def __init__(self, table):
        self._table = np.asarray(table, dtype=np.uint8)

    def truth_table(self, n: int):
        if self._table.size != 1 << n:
            raise ValueError("table size does not match dimension")
        return self._table

    def eval(self, x: Assignment) -> int:
        return int(self._table[x.bits])


class ConstantHypothesis:
    def __init__(self, value: int):
        self.value = int(value)

    def truth_table(self, n: int):
        return np.full(1 << n, self.value, dtype=np.uint8)

    def eval(self, x: Assignment) -> int:
        return self.value
