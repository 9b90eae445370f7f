"""Exact-rational Chebyshev threshold machinery.

Everything here is computed in arbitrary-precision integer / rational
arithmetic: Chebyshev polynomials of the first kind, the conjunction
approximator q_B, eligible pairs and catalogs of augmented-monomial
features, and the construction plus brute-force verification of the
augmented polynomial threshold function that expresses a k-term DNF over a
fully expressive catalog.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, gcd

import numpy as np

from .booleans import Dnf, Term, is_valid_stem


# ---------------------------------------------------------------------------
# Integer / rational polynomials (dense, index = degree)


@dataclass(frozen=True)
class IntPoly:
    coeffs: tuple  # exact ints, trailing zeros trimmed

    @staticmethod
    def make(cs) -> "IntPoly":
        cs = list(cs)
        while cs and cs[-1] == 0:
            cs.pop()
        return IntPoly(tuple(int(c) for c in cs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1 if self.coeffs else -1

    def coeff_abs_sum(self) -> int:
        return sum(abs(c) for c in self.coeffs)

    def eval(self, t):
        """Exact Horner evaluation; t may be int, Fraction or float."""
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc


def chebyshev(d: int) -> IntPoly:
    """Degree-d Chebyshev polynomial of the first kind, exact integers."""
    if d < 0:
        raise ValueError("degree must be nonnegative")
    prev, cur = [1], [0, 1]
    if d == 0:
        return IntPoly.make(prev)
    for _ in range(d - 1):
        nxt = [0] + [2 * c for c in cur]
        for i, c in enumerate(prev):
            nxt[i] -= c
        prev, cur = cur, nxt
    return IntPoly.make(cur)


def _poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] += ca * cb
    return out


def cheb_degree(k: int) -> int:
    return math.ceil(math.sqrt(2 * k))


def cheb_exponent(k: int) -> int:
    return math.ceil(math.log2(2 * k))


def d_max(k: int) -> int:
    """Augmentation degree bound: the exact degree of q_B in the variables."""
    return cheb_degree(k) * cheb_exponent(k)


def qpoly(k: int):
    """The univariate polynomial p with q_B(x) = p(S(x)), as exact Fraction
    coefficients, together with the shared integer denominator D.

    p(S) = C_d(S/(2k) * (1 + 1/(2k)))^e / C_d(1 + 1/(2k))^e with
    d = ceil(sqrt(2k)) and e = ceil(log2(2k)); p depends only on k, so one
    denominator D (the lcm of the reduced coefficient denominators) is
    shared by every conjunction of length at most 2k.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    d = cheb_degree(k)
    e = cheb_exponent(k)
    C = chebyshev(d)
    a = Fraction(2 * k + 1, (2 * k) ** 2)  # argument scale: S -> a*S
    inner = [Fraction(c) * a ** i for i, c in enumerate(C.coeffs)]
    poly = [Fraction(1)]
    for _ in range(e):
        poly = _poly_mul(poly, inner)
    denom_val = Fraction(C.eval(Fraction(2 * k + 1, 2 * k))) ** e
    poly = [c / denom_val for c in poly]
    D = 1
    for c in poly:
        D = D * c.denominator // gcd(D, c.denominator)
    return poly, D


def build_qB(m: int, k: int):
    """Evaluator for the length-m conjunction approximator: maps the slack
    count S in {0..2k} to the exact rational q value.  q(2k) = 1 and
    |q(S)| <= 1/(2k) for S < 2k."""
    if not 0 <= m <= 2 * k:
        raise ValueError("conjunction length must be in [0, 2k]")
    poly, _ = qpoly(k)

    def q(S: int) -> Fraction:
        if not 0 <= S <= 2 * k:
            raise ValueError("S out of range")
        acc = Fraction(0)
        for c in reversed(poly):
            acc = acc * S + c
        return acc

    return q


# ---------------------------------------------------------------------------
# Eligible pairs and feature catalogs


@dataclass(frozen=True)
class EligiblePair:
    stem: Term
    R: frozenset

    def __post_init__(self):
        if self.R & self.stem.indices():
            raise ValueError("R must be disjoint from the stem's variables")


class FeatureCatalog:
    """Ordered set of eligible pairs with the induced augmented-monomial
    feature enumeration.

    Features are ordered pair-major; within a pair, subsets of R are in
    colex order (ascending local bitmask over sorted(R)).  Appending a pair
    never renumbers existing features; any mutation bumps the snapshot id.
    """

    def __init__(self, k: int, pairs=None):
        self.k = k
        self.d_max = d_max(k)
        self.pairs = []
        self.snapshot_id = 0
        self._features = None
        if pairs is None:
            pairs = [EligiblePair(Term(), frozenset())]
        for p in pairs:
            self.pairs.append(p)
        if not any(p.stem == Term() for p in self.pairs):
            raise ValueError("catalog must contain the empty-stem pair")

    def add_pair(self, pair: EligiblePair) -> bool:
        """Append if not already present (by (stem, R) equality)."""
        if pair in self.pairs:
            return False
        self.pairs.append(pair)
        self._touch()
        return True

    def has_stem(self, stem: Term) -> bool:
        return any(p.stem == stem for p in self.pairs)

    def grow_r(self, pair_index: int, new_index: int):
        old = self.pairs[pair_index]
        if new_index in old.R or new_index in old.stem.indices():
            raise ValueError("index already present in the pair")
        self.pairs[pair_index] = EligiblePair(old.stem, old.R | {new_index})
        self._touch()

    def _touch(self):
        self.snapshot_id += 1
        self._features = None

    def pair_feature_count(self, pair: EligiblePair) -> int:
        return sum(comb(len(pair.R), d) for d in range(0, self.d_max + 1))

    def feature_count(self) -> int:
        return sum(self.pair_feature_count(p) for p in self.pairs)

    def features(self) -> list:
        """List of (pair_index, frozenset subset) in the canonical order."""
        if self._features is None:
            out = []
            for j, p in enumerate(self.pairs):
                r = sorted(p.R)
                for bm in range(1 << len(r)):
                    s = [r[i] for i in range(len(r)) if bm >> i & 1]
                    if len(s) <= self.d_max:
                        out.append((j, frozenset(s)))
            self._features = out
        return self._features

    def feature_index(self, pair_index: int, subset: frozenset) -> int:
        return self.features().index((pair_index, subset))


def is_fully_expressive(f: Dnf, catalog: FeatureCatalog):
    """Returns (True, witnesses) or (False, first unwitnessed term).  A
    witness for term T is a pair whose stem is a valid stem of T and whose R
    covers the leftover variables; when several qualify the one with
    smallest |R| wins, ties broken by catalog order."""
    witnesses = []
    for t in f.terms:
        best = None
        for j, p in enumerate(catalog.pairs):
            if is_valid_stem(p.stem, t, 2 * catalog.k) and \
                    (t.indices() - p.stem.indices()) <= p.R:
                if best is None or len(p.R) < len(catalog.pairs[best].R):
                    best = j
        if best is None:
            return False, t
        witnesses.append(best)
    return True, witnesses


# ---------------------------------------------------------------------------
# Augmented PTFs


@dataclass
class AugPtf:
    catalog: FeatureCatalog
    monomials: list       # (pair_index, sorted tuple of variable indices)
    weights: list         # exact ints, parallel to monomials
    theta: int
    degree: int           # construction degree ceil(sqrt(2k))*ceil(log2(2k))
    D: int

    def weight_total(self) -> int:
        return sum(abs(w) for w in self.weights)

    def to_json(self) -> str:
        return json.dumps({
            "monomials": [
                {"stem": sorted(self.catalog.pairs[j].stem.signed_sorted()),
                 "vars": list(s)}
                for j, s in self.monomials],
            "weights": [str(w) for w in self.weights],
            "theta": str(self.theta),
            "degree": self.degree,
            "D": str(self.D),
        }, sort_keys=True)


def _multilinear_expand(poly, base: int, literals):
    """Multilinear coefficients of p(base + sum of arithmetized literals)
    over the literal index set, via evaluation at all points and a Moebius
    transform.  Returns {frozenset indices: Fraction coefficient}."""
    lits = sorted(literals, key=lambda l: l.index)
    m = len(lits)
    vals = []
    for b in range(1 << m):
        S = base
        for i, l in enumerate(lits):
            x = b >> i & 1
            S += x if l.positive else 1 - x
        acc = Fraction(0)
        for c in reversed(poly):
            acc = acc * S + c
        vals.append(acc)
    out = {}
    for sup in range(1 << m):
        coef = Fraction(0)
        sub = sup
        while True:
            sign = -1 if (bin(sup ^ sub).count("1")) & 1 else 1
            coef += sign * vals[sub]
            if sub == 0:
                break
            sub = (sub - 1) & sup
        if coef:
            out[frozenset(lits[i].index for i in range(m) if sup >> i & 1)] = coef
    return out


def build_aug_ptf(f: Dnf, catalog: FeatureCatalog, profile=None) -> AugPtf:
    """Express f as an augmented PTF over the catalog: sum over terms of
    D * stem_i * q_{B_i}, thresholded at ceil(3D/4)."""
    k = max(f.k, 1)
    if catalog.k != k:
        raise ValueError("catalog k does not match the formula")
    ok, witnesses = is_fully_expressive(f, catalog)
    if not ok:
        raise ValueError(f"catalog is not fully expressive: no valid witness "
                         f"for term ({witnesses})")
    poly, D = qpoly(k)
    acc = {}  # (pair_index, frozenset) -> Fraction weight
    for t, j in zip(f.terms, witnesses):
        pair = catalog.pairs[j]
        leftover = [l for l in t.literals if l.index not in pair.stem.indices()]
        m = len(leftover)
        base = 2 * k - m
        for subset, coef in _multilinear_expand(poly, base, leftover).items():
            key = (j, subset)
            acc[key] = acc.get(key, Fraction(0)) + D * coef
    feature_order = {feat: i for i, feat in enumerate(catalog.features())}
    monomials, weights = [], []
    for key in sorted(acc, key=feature_order.__getitem__):
        w = acc[key]
        if w.denominator != 1:
            raise AssertionError("shared denominator failed to clear")
        if w == 0:
            continue
        monomials.append((key[0], tuple(sorted(key[1]))))
        weights.append(int(w))
    theta = -((-3 * D) // 4)  # ceil(3D/4)
    return AugPtf(catalog, monomials, weights, theta,
                  degree=d_max(k), D=D)


def ptf_scores(p: AugPtf, n: int) -> np.ndarray:
    """Exact big-integer PTF polynomial values over all 2^n points."""
    from .tables import conj_table
    idx = np.arange(1 << n, dtype=np.uint64)
    score = np.zeros(1 << n, dtype=object)
    by_pair = {}
    for (j, s), w in zip(p.monomials, p.weights):
        by_pair.setdefault(j, []).append((s, w))
    for j, mons in by_pair.items():
        pair = p.catalog.pairs[j]
        r = sorted(pair.R)
        pos = {v: i for i, v in enumerate(r)}
        codes = np.zeros(1 << n, dtype=np.int64)
        for v, i in pos.items():
            codes |= (((idx >> np.uint64(n - v)) & np.uint64(1)) << np.uint64(i)).astype(np.int64)
        # subset-sum (zeta) transform of the per-subset weights over R
        lut = np.zeros(1 << len(r), dtype=object)
        for s, w in mons:
            lut[sum(1 << pos[v] for v in s)] += w
        for i in range(len(r)):
            bit = 1 << i
            for bm in range(1 << len(r)):
                if bm & bit:
                    lut[bm] += lut[bm ^ bit]
        mask, val = pair.stem.mask_val(n)
        sat = conj_table(n, mask, val)
        score[sat] += lut[codes[sat]]
    return score


def ptf_truth_table(p: AugPtf, n: int) -> np.ndarray:
    return (ptf_scores(p, n) >= p.theta).astype(np.uint8)


def verify_ptf(f: Dnf, p: AugPtf) -> bool:
    """Brute-force check that the PTF computes f over all 2^n points."""
    if f.n > 24:
        raise ValueError("dimension too large for brute-force verification")
    from .tables import dnf_truth_table
    return bool(np.array_equal(ptf_truth_table(p, f.n), dnf_truth_table(f)))


def expressive_catalog(f: Dnf) -> FeatureCatalog:
    """Deterministic fully expressive catalog for a known formula: each term
    contributes (stem = all but its 2k largest-index literals, R = the
    dropped indices), alongside the mandatory empty-stem pair."""
    k = max(f.k, 1)
    pairs = [EligiblePair(Term(), frozenset())]
    for t in f.terms:
        lits = sorted(t.literals, key=lambda l: l.index)
        cut = max(0, len(lits) - 2 * k)
        pair = EligiblePair(Term(frozenset(lits[:cut])),
                            frozenset(l.index for l in lits[cut:]))
        if pair not in pairs:
            pairs.append(pair)
    return FeatureCatalog(k, pairs)
