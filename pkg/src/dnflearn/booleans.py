"""Value types and pure operations for literals, terms, DNFs and assignments.

Conventions used throughout the package:

* Variable indices are 1-based and live in [1..n].
* An assignment over n variables is stored as a packed integer whose binary
  digits, read most-significant first, spell the string x_1 x_2 ... x_n.
  With this layout the integer order of assignments equals the lexicographic
  order of their bit strings, and flipping one variable is a single XOR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence


class Literal(NamedTuple):
    index: int
    positive: bool

    @staticmethod
    def from_signed(v: int) -> "Literal":
        if v == 0:
            raise ValueError("literal index 0 is not allowed")
        return Literal(abs(v), v > 0)

    def signed(self) -> int:
        return self.index if self.positive else -self.index

    def negated(self) -> "Literal":
        return Literal(self.index, not self.positive)


@dataclass(frozen=True)
class Term:
    """A conjunction, viewed as a set of literals.

    No index may appear with both polarities; the empty term is the
    constant-1 function.
    """

    literals: frozenset = frozenset()

    def __post_init__(self):
        if not isinstance(self.literals, frozenset):
            object.__setattr__(self, "literals", frozenset(self.literals))
        idx = [l.index for l in self.literals]
        if len(set(idx)) != len(idx):
            raise ValueError("term contains contradictory or duplicate literals")

    @staticmethod
    def of(*signed: int) -> "Term":
        return Term(frozenset(Literal.from_signed(v) for v in signed))

    def __len__(self) -> int:
        return len(self.literals)

    def indices(self) -> frozenset:
        return frozenset(l.index for l in self.literals)

    def signed_sorted(self) -> tuple:
        return tuple(sorted((l.signed() for l in self.literals), key=abs))

    def mask_val(self, n: int) -> tuple:
        """Packed (mask, value) pair: the term is satisfied by bits b iff
        (b & mask) == value."""
        mask = 0
        val = 0
        for l in self.literals:
            bit = 1 << (n - l.index)
            mask |= bit
            if l.positive:
                val |= bit
        return mask, val

    def contradicts(self, other: "Term") -> bool:
        mine = {l.index: l.positive for l in self.literals}
        return any(l.index in mine and mine[l.index] != l.positive for l in other.literals)

    def __le__(self, other: "Term") -> bool:
        return self.literals <= other.literals

    def __str__(self) -> str:
        return " ".join(f"{v:+d}" for v in self.signed_sorted()) if self.literals else "(empty)"


@dataclass(frozen=True)
class Assignment:
    n: int
    bits: int

    def __post_init__(self):
        if not 0 <= self.bits < (1 << self.n):
            raise ValueError("assignment bits out of range for dimension")

    @staticmethod
    def from_string(s: str) -> "Assignment":
        return Assignment(len(s), int(s, 2) if s else 0)

    def to_string(self) -> str:
        return format(self.bits, f"0{self.n}b") if self.n else ""

    def bit(self, i: int) -> int:
        return (self.bits >> (self.n - i)) & 1

    def flip(self, i: int) -> "Assignment":
        return Assignment(self.n, self.bits ^ (1 << (self.n - i)))

    def __str__(self) -> str:
        return self.to_string()


@dataclass(frozen=True)
class Dnf:
    """A DNF formula: an ordered list of terms over n variables.

    Term order is stable and explicit so that audit traces are reproducible,
    but no operation's semantics may depend on it.  A DNF with zero terms is
    the constant-0 function (needed to represent restrictions that kill
    every term; the constant-false target is also a legal teacher input).

    ``pinned`` records coordinates fixed by a restriction, as (index, bit)
    pairs; downstream noise operators never perturb pinned coordinates.
    """

    n: int
    terms: tuple = ()
    pinned: tuple = ()

    def __post_init__(self):
        for t in self.terms:
            for l in t.literals:
                if not 1 <= l.index <= self.n:
                    raise ValueError(f"literal index {l.index} outside [1..{self.n}]")
        pidx = [i for i, _ in self.pinned]
        if len(set(pidx)) != len(pidx):
            raise ValueError("duplicate pinned coordinate")

    @property
    def k(self) -> int:
        return len(self.terms)

    def free_indices(self) -> list:
        pinned = {i for i, _ in self.pinned}
        return [i for i in range(1, self.n + 1) if i not in pinned]

    def term_lengths(self) -> tuple:
        return tuple(len(t) for t in self.terms)

    def __str__(self) -> str:
        return " OR ".join(f"({t})" for t in self.terms) if self.terms else "(false)"


def eval_term(t: Term, x: Assignment) -> int:
    for l in t.literals:
        if l.index > x.n:
            raise ValueError("term literal outside assignment dimension")
        if x.bit(l.index) != int(l.positive):
            return 0
    return 1


def eval_dnf(f: Dnf, x: Assignment) -> int:
    if x.n != f.n:
        raise ValueError("dimension mismatch")
    return int(any(eval_term(t, x) for t in f.terms))


def satisfied_terms(f: Dnf, x: Assignment) -> set:
    if x.n != f.n:
        raise ValueError("dimension mismatch")
    return {i for i, t in enumerate(f.terms) if eval_term(t, x)}


def split_by_length(f: Dnf, L: int) -> tuple:
    low = tuple(t for t in f.terms if len(t) <= L)
    high = tuple(t for t in f.terms if len(t) > L)
    return Dnf(f.n, low, f.pinned), Dnf(f.n, high, f.pinned)


def protected_set(f: Dnf, y: Assignment) -> set:
    """For each term y does not satisfy, the smallest index whose literal in
    that term is violated by y."""
    out = set()
    for t in f.terms:
        violated = [l.index for l in t.literals if y.bit(l.index) != int(l.positive)]
        if violated:
            out.add(min(violated))
    return out


def unanimous_indices(terms: Iterable[Term]) -> set:
    terms = list(terms)
    if not terms:
        raise ValueError("unanimous_indices is undefined for an empty term set")
    common = set(terms[0].literals)
    for t in terms[1:]:
        common &= t.literals
    return {l.index for l in common}


def strip_terms(terms: Iterable[Term], S: set) -> set:
    return {Term(frozenset(l for l in t.literals if l.index not in S)) for t in terms}


def restrict(f: Dnf, stem: Term) -> Dnf:
    """Fix every variable of the stem to the value its stem literal demands.

    Terms contradicting the stem are dropped; stem literals are removed from
    surviving terms; the pinned coordinates are recorded on the result.
    """
    stem_pol = {l.index: l.positive for l in stem.literals}
    out = []
    for t in f.terms:
        if stem.contradicts(t):
            continue
        out.append(Term(frozenset(l for l in t.literals if l.index not in stem_pol)))
    pinned = dict(f.pinned)
    for i, pos in stem_pol.items():
        if i in pinned and pinned[i] != int(pos):
            raise ValueError("stem contradicts an already-pinned coordinate")
        pinned[i] = int(pos)
    return Dnf(f.n, tuple(out), tuple(sorted(pinned.items())))


def hybrid(z: Assignment, y: Assignment, R: set) -> Assignment:
    """The point that agrees with z on R and with y off R."""
    if z.n != y.n:
        raise ValueError("dimension mismatch")
    mask = 0
    for i in R:
        mask |= 1 << (z.n - i)
    return Assignment(z.n, (z.bits & mask) | (y.bits & ~mask))


def is_valid_stem(stem: Term, t: Term, slack: int) -> bool:
    return stem <= t and len(t) - len(stem) <= slack


def gen_random_dnf(n: int, k: int, lengths: Sequence[int], rng) -> Dnf:
    """Random k-term DNF with the given term lengths; variables and
    polarities uniform, no index repeated within a term."""
    if len(lengths) != k:
        raise ValueError("need one length per term")
    if k < 1:
        raise ValueError("k must be at least 1")
    if any(m > n or m < 0 for m in lengths):
        raise ValueError("infeasible length profile")
    terms = []
    for m in lengths:
        idx = rng.choice(n, size=m, replace=False) + 1
        pols = rng.integers(0, 2, size=m)
        terms.append(Term(frozenset(Literal(int(i), bool(p)) for i, p in zip(idx, pols))))
    return Dnf(n, tuple(terms))


# ---------------------------------------------------------------------------
# Scale profiles


@dataclass(frozen=True)
class ScaleProfile:
    """The analysis constants, decoupled from their headline magnitudes.

    The paper-scale values (tau = 1000k, medium cutoff 1000*tau*log k) are
    the defaults of record; the desk preset shrinks them so instances with
    genuinely long terms fit in n <= 24.  All derived tolerances are
    computed from the profile's fields, never hardcoded.
    """

    k: int
    tau: int
    medium_cutoff: int
    kind: str = "custom"

    def __post_init__(self):
        if self.tau < self.k:
            raise ValueError("tau must be at least k")
        if self.medium_cutoff < self.tau:
            raise ValueError("medium cutoff must be at least tau")

    @property
    def rho(self) -> float:
        return 1.0 - 1.0 / (10.0 * self.tau)

    @property
    def stem_slack(self) -> int:
        return 2 * self.k

    @property
    def r_max(self) -> int:
        return self.medium_cutoff * self.k

    @property
    def gap(self) -> float:
        """Line-search jump threshold: k^-3 at paper scale, the same
        derivation at scaled constants otherwise."""
        if self.kind == "paper":
            return self.k ** -3
        return 1.0 / (2.0 * self.r_max)

    @staticmethod
    def paper(k: int) -> "ScaleProfile":
        tau = 1000 * k
        mc = 1000 * tau * max(1, math.ceil(math.log2(max(k, 2))))
        return ScaleProfile(k=k, tau=tau, medium_cutoff=mc, kind="paper")

    @staticmethod
    def desk(k: int) -> "ScaleProfile":
        tau = 4 * k
        mc = 8 * k * math.ceil(math.log2(k + 1))
        return ScaleProfile(k=k, tau=tau, medium_cutoff=max(mc, tau), kind="desk")

    def claim_pos_bound(self) -> float:
        """Lower bound on the noised value at a point satisfying a short
        term: 1 - tau*(1-rho) = 0.9 at any profile."""
        return 1.0 - self.tau * (1.0 - self.rho)

    def claim_neg_bound(self) -> float:
        """Parametric upper bound on the noised value at a point satisfying
        no short or medium term."""
        return 0.01 + self.k * self.rho ** self.medium_cutoff + (1.0 - self.rho ** self.k)

    def claim_flip_bound(self) -> float:
        """Parametric bound on the noised-value change under flipping
        coordinates that appear only in long terms."""
        return 2.0 * self.k * self.rho ** self.medium_cutoff


# ---------------------------------------------------------------------------
# Text format: line 1 = "n k"; then k lines of signed 1-indexed integers,
# a blank line denoting the empty term.


def dnf_to_text(f: Dnf) -> str:
    lines = [f"{f.n} {f.k}"]
    for t in f.terms:
        lines.append(" ".join(f"{v:+d}" for v in t.signed_sorted()))
    return "\n".join(lines) + "\n"


def dnf_from_text(text: str) -> Dnf:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines = lines[:-1]
    if not lines:
        raise ValueError("empty DNF text")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError("first line must be 'n k'")
    n, k = int(head[0]), int(head[1])
    if len(lines) - 1 != k:
        raise ValueError(f"expected {k} term lines, found {len(lines) - 1}")
    terms = []
    for line in lines[1:]:
        terms.append(Term.of(*(int(v) for v in line.split())))
    return Dnf(n, tuple(terms))
