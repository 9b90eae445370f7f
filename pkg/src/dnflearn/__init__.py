"""Exact learning of k-term DNF formulas from membership and equivalence
queries, at desk scale: randomized stem search, noise-operator variable
discovery, Chebyshev-based augmented threshold representations, and a
multiplicative-weights online learner, with instrumented invariant audits.
"""

__version__ = "1.0.0"

from .booleans import (Assignment, Dnf, Literal, ScaleProfile, Term,
                       dnf_from_text, dnf_to_text, gen_random_dnf)
from .learner import LearnerConfig, RunReport, learn_dnf, learn_kcnf_baseline
from .teacher import CounterexamplePolicy, Teacher

__all__ = [
    "Assignment", "Dnf", "Literal", "ScaleProfile", "Term",
    "dnf_from_text", "dnf_to_text", "gen_random_dnf",
    "LearnerConfig", "RunReport", "learn_dnf", "learn_kcnf_baseline",
    "CounterexamplePolicy", "Teacher", "__version__",
]
