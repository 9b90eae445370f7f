"""Attribute-efficient multiplicative-weights threshold learning.

The learner keeps two strictly positive weight tracks per 0/1 feature so
that general-sign targets are realizable.  Updates multiply the tracks by
alpha and 1/alpha on mistakes, so each feature's state is a single integer
exponent c with w+ = alpha^c and w- = alpha^-c; weights can never
underflow to zero.  With alpha = 2 and bounded exponents every net weight
and every partial sum is an exactly representable dyadic float, which lets
an incrementally maintained score table answer equivalence queries without
rounding discrepancies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .booleans import Assignment
from .chebptf import FeatureCatalog
from .tables import conj_table

#: |exponent| cap keeping dyadic float arithmetic exact (range + granularity
#: must fit in a 53-bit significand with room for sums over many features)
_EXP_GUARD = 18


class CatalogFeatureSpace:
    """Augmented-monomial features of a catalog over {0,1}^n.

    Feature order is the catalog's canonical order (pair-major, local
    bitmask ascending).  Supports active-set queries at a point and
    incremental score-table updates for equivalence queries.
    """

    def __init__(self, catalog: FeatureCatalog, n: int):
        self.catalog = catalog
        self.n = n
        self.snapshot_id = catalog.snapshot_id
        self._pairs = []
        offset = 0
        for p in catalog.pairs:
            r = sorted(p.R)
            all_bm = np.arange(1 << len(r), dtype=np.int64)
            pop = np.zeros(1 << len(r), dtype=np.int64)
            for i in range(len(r)):
                pop += (all_bm >> i) & 1
            masks = all_bm[pop <= catalog.d_max]
            mask, val = p.stem.mask_val(n)
            self._pairs.append({
                "r": r, "masks": masks,
                "stem_mask": mask, "stem_val": val,
                "offset": offset, "codes": None, "sat": None,
            })
            offset += len(masks)
        self.n_features = offset

    def check_snapshot(self, snapshot_id: int):
        if snapshot_id != self.snapshot_id:
            raise ValueError("feature-space snapshot mismatch")

    def _local_mask(self, info, x: Assignment) -> int:
        bm = 0
        for i, v in enumerate(info["r"]):
            if x.bit(v):
                bm |= 1 << i
        return bm

    def active_indices(self, x: Assignment) -> list:
        """Global indices of all features with value 1 at x."""
        out = []
        for info in self._pairs:
            if (x.bits & info["stem_mask"]) != info["stem_val"]:
                continue
            b = self._local_mask(info, x)
            masks = info["masks"]
            local = np.nonzero((masks & ~b) == 0)[0]
            out.extend((info["offset"] + local).tolist())
        return out

    # -- score-table support

    def _tables(self, info):
        if info["sat"] is None:
            idx = np.arange(1 << self.n, dtype=np.uint64)
            info["sat"] = conj_table(self.n, info["stem_mask"], info["stem_val"])
            codes = np.zeros(1 << self.n, dtype=np.int64)
            for i, v in enumerate(info["r"]):
                codes |= (((idx >> np.uint64(self.n - v)) & np.uint64(1))
                          << np.uint64(i)).astype(np.int64)
            info["codes"] = codes
        return info["sat"], info["codes"]

    def new_score_table(self) -> np.ndarray:
        return np.zeros(1 << self.n, dtype=np.float64)

    def apply_deltas(self, table: np.ndarray, deltas: dict):
        """Add per-feature weight deltas onto the score table."""
        by_pair = {}
        for gidx, d in deltas.items():
            pi = self._pair_of(gidx)
            by_pair.setdefault(pi, []).append((gidx, d))
        for pi, items in by_pair.items():
            info = self._pairs[pi]
            r = info["r"]
            lut = np.zeros(1 << len(r), dtype=np.float64)
            local = np.asarray([gidx - info["offset"] for gidx, _ in items])
            np.add.at(lut, info["masks"][local],
                      np.asarray([d for _, d in items], dtype=np.float64))
            for i in range(len(r)):
                half = lut.reshape(-1, 2, 1 << i)
                half[:, 1, :] += half[:, 0, :]
            sat, codes = self._tables(info)
            table[sat] += lut[codes[sat]]

    def _pair_of(self, gidx: int) -> int:
        for pi in range(len(self._pairs) - 1, -1, -1):
            if gidx >= self._pairs[pi]["offset"]:
                return pi
        raise IndexError(gidx)


@dataclass
class WinnowState:
    space: object
    alpha: float = 2.0
    theta: float = None
    exponents: dict = field(default_factory=dict)  # feature -> int c
    mistakes: int = 0
    snapshot_id: int = None

    def __post_init__(self):
        if self.alpha <= 1:
            raise ValueError("alpha must exceed 1")
        if self.space.n_features < 1:
            raise ValueError("feature space is empty")
        if self.theta is None:
            self.theta = float(self.space.n_features)
        if self.snapshot_id is None:
            self.snapshot_id = getattr(self.space, "snapshot_id", 0)

    def net_weight(self, idx: int) -> float:
        c = self.exponents.get(idx, 0)
        return self.alpha ** c - self.alpha ** (-c)

    def weight_tracks(self, idx: int):
        c = self.exponents.get(idx, 0)
        return self.alpha ** c, self.alpha ** (-c)

    def score_active(self, active) -> float:
        return sum(self.net_weight(j) for j in active if j in self.exponents)

    def predict_active(self, active) -> int:
        return int(self.score_active(active) >= self.theta)

    def update_active(self, active, true_label: int) -> dict:
        """Apply the mistake-driven update; returns per-feature net-weight
        deltas.  Caller guarantees the current prediction differs from
        true_label."""
        step = 1 if true_label == 1 else -1
        deltas = {}
        for j in active:
            old = self.net_weight(j)
            c = self.exponents.get(j, 0) + step
            if abs(c) > _EXP_GUARD:
                c = _EXP_GUARD if c > 0 else -_EXP_GUARD
            self.exponents[j] = c
            deltas[j] = (self.alpha ** c - self.alpha ** (-c)) - old
        self.mistakes += 1
        return deltas


def winnow_new(space, alpha: float = 2.0, theta_policy=None) -> WinnowState:
    theta = float(theta_policy(space.n_features)) if theta_policy else None
    return WinnowState(space, alpha=alpha, theta=theta)


def winnow_predict(state: WinnowState, x: Assignment) -> int:
    state.space.check_snapshot(state.snapshot_id)
    return state.predict_active(state.space.active_indices(x))


def winnow_update(state: WinnowState, x: Assignment, true_label: int) -> dict:
    state.space.check_snapshot(state.snapshot_id)
    active = state.space.active_indices(x)
    if state.predict_active(active) == true_label:
        raise ValueError("update called on a non-mistake")
    return state.update_active(active, true_label)


class _TableHypothesis:
    def __init__(self, table: np.ndarray, theta: float):
        self.table = table
        self.theta = theta

    def truth_table(self, n: int):
        return (self.table >= self.theta).astype(np.uint8)

    def eval(self, x: Assignment) -> int:
        return int(self.table[x.bits] >= self.theta)


@dataclass
class WinnowExit:
    kind: str            # learned | cap_exceeded | aborted
    pos: list            # positive counterexamples of this run, in order
    mistakes: int
    state: WinnowState
    hypothesis: object = None

    def summary(self, cap: int) -> dict:
        return {
            "exit": self.kind,
            "mistakes": self.mistakes,
            "cap": cap,
            "snapshot_id": self.state.snapshot_id,
            "feature_count": self.state.space.n_features,
        }

    def summary_json(self, cap: int) -> str:
        return json.dumps(self.summary(cap), sort_keys=True)


def winnow_run(teacher, space: CatalogFeatureSpace, cap: int,
               on_negative=None, on_positive=None) -> WinnowExit:
    """Equivalence-query loop: query, update on the counterexample, stop on
    Learned or when mistakes exceed the cap.  ``on_negative`` is invoked on
    every negative counterexample before the update; a truthy return aborts
    the run (the caller grows the feature space and restarts).
    ``on_positive`` observes every positive counterexample as it arrives."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    state = winnow_new(space)
    table = space.new_score_table()
    pos = []
    while True:
        cx = teacher.eq(_TableHypothesis(table, state.theta))
        if cx is None:
            return WinnowExit("learned", pos, state.mistakes, state,
                              _TableHypothesis(table, state.theta))
        label = 1 - int(table[cx.bits] >= state.theta)
        if label == 1:
            pos.append(cx)
            if on_positive is not None:
                on_positive(cx)
        elif on_negative is not None and on_negative(cx):
            return WinnowExit("aborted", pos, state.mistakes, state)
        deltas = winnow_update(state, cx, label)
        space.apply_deltas(table, deltas)
        if state.mistakes > cap:
            return WinnowExit("cap_exceeded", pos, state.mistakes, state)


# ---------------------------------------------------------------------------
# Pool-based linear-threshold teacher (mistake-bound calibration / tests)


class VectorFeatureSpace:
    """Features given directly as coordinates of 0/1 example vectors."""

    def __init__(self, n_features: int):
        self.n_features = n_features
        self.snapshot_id = 0

    def check_snapshot(self, snapshot_id: int):
        if snapshot_id != self.snapshot_id:
            raise ValueError("feature-space snapshot mismatch")

    def active_indices(self, vec) -> list:
        return list(np.nonzero(vec)[0])


class LtfPoolTeacher:
    """Equivalence oracle for an integer-weight threshold target over an
    explicit pool of example vectors.  Counterexamples are the smallest-index
    pool disagreement (the deterministic analogue of the lexicographic-
    minimum policy on an enumerable domain)."""

    def __init__(self, pool: np.ndarray, weights: np.ndarray, theta: float):
        self.pool = np.asarray(pool, dtype=np.float64)
        self.labels = (self.pool @ np.asarray(weights, float) >= theta).astype(np.uint8)
        self.eq_count = 0

    def eq_state(self, state: WinnowState):
        self.eq_count += 1
        net = np.zeros(self.pool.shape[1])
        for j, c in state.exponents.items():
            net[j] = state.alpha ** c - state.alpha ** (-c)
        preds = (self.pool @ net >= state.theta).astype(np.uint8)
        diff = np.nonzero(preds != self.labels)[0]
        if diff.size == 0:
            return None
        i = int(diff[0])
        return self.pool[i].astype(np.uint8), int(self.labels[i])


def winnow_run_pool(teacher: LtfPoolTeacher, space: VectorFeatureSpace,
                    cap: int) -> WinnowExit:
    state = winnow_new(space)
    pos = []
    while True:
        res = teacher.eq_state(state)
        if res is None:
            return WinnowExit("learned", pos, state.mistakes, state)
        vec, label = res
        if label == 1:
            pos.append(vec)
        state.update_active(space.active_indices(vec), label)
        if state.mistakes > cap:
            return WinnowExit("cap_exceeded", pos, state.mistakes, state)
