"""Moment-matrix relaxations for the two-party two-setting scenario.

Builds the level-1, level-1+AB and level-2 moment structures from symbolic
operator words, expresses the noisy-violation coefficients as linear
functionals on the free matrix entries, and runs the certified bisection that
yields the lower bound ``eta_npa`` on the minimum detector efficiency.

Words are sequences over the four dichotomic observables A0, A1, B0, B1.
Canonical form commutes every B past every A (spacelike separation), cancels
adjacent repetitions (each observable squares to the identity), and leaves
the within-party order untouched.  Cells of the moment matrix that reduce to
the same canonical word carry equal entries; those word-identity equalities
are exactly the constraints the relaxation needs beyond the unit diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .behavior import DomainError
from .quantum import ETA_THRESHOLD, Q_MAX_VIOLATION, InfeasibleViolationError, QuantumRealization
from .sdp import DenseSdp, SdpSolution, solve_sdp

__all__ = [
    "LETTERS",
    "OperatorWord",
    "MomentStructure",
    "LinearFunctional",
    "SdpCertificate",
    "NpaBisectionResult",
    "build_moment_structure",
    "probability_functional",
    "eberhard_coefficient_functionals",
    "noisy_eberhard_functional",
    "dense_sdp_for_noise",
    "sdp_interchange",
    "max_noisy_eberhard_sdp",
    "min_efficiency_npa",
    "moment_matrix_from_realization",
]

# Letter codes: 0 -> A0, 1 -> A1, 2 -> B0, 3 -> B1.
LETTERS = ("A0", "A1", "B0", "B1")

_LEVELS = ("1", "1+AB", "2")

# Operator lists per level, in the fixed order the functionals below rely on
# (index 1 is A0, index 3 is B0, indices 6, 7, 9, 10 at level 2 are the four
# AB products).
_WORDS_L1: tuple[tuple[int, ...], ...] = ((), (0,), (1,), (2,), (3,))
_WORDS_L1AB = _WORDS_L1 + ((0, 2), (0, 3), (1, 2), (1, 3))
_WORDS_L2: tuple[tuple[int, ...], ...] = (
    (),
    (0,),
    (1,),
    (2,),
    (3,),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 0),
    (1, 2),
    (1, 3),
    (2, 3),
    (3, 2),
)

_LEVEL_WORDS = {"1": _WORDS_L1, "1+AB": _WORDS_L1AB, "2": _WORDS_L2}


def _cancel_adjacent(seq: Iterable[int]) -> tuple[int, ...]:
    stack: list[int] = []
    for letter in seq:
        if stack and stack[-1] == letter:
            stack.pop()
        else:
            stack.append(letter)
    return tuple(stack)


def canonical_letters(letters: Sequence[int]) -> tuple[int, ...]:
    """Sort parties apart and cancel squares; within-party order is kept."""
    alice = _cancel_adjacent(l for l in letters if l < 2)
    bob = _cancel_adjacent(l for l in letters if l >= 2)
    return alice + bob


@dataclass(frozen=True)
class OperatorWord:
    """Product of dichotomic observables, possibly in canonical form."""

    letters: tuple[int, ...]
    canonical: bool = False

    def __post_init__(self):
        letters = tuple(int(l) for l in self.letters)
        if any(l not in (0, 1, 2, 3) for l in letters):
            raise DomainError(f"unknown letters in {letters}")
        object.__setattr__(self, "letters", letters)
        if self.canonical and letters != canonical_letters(letters):
            raise DomainError(f"{letters} is not canonical")

    def canonicalize(self) -> "OperatorWord":
        return OperatorWord(canonical_letters(self.letters), canonical=True)

    def adjoint(self) -> "OperatorWord":
        # generators are Hermitian, so the adjoint reverses the letters
        return OperatorWord(tuple(reversed(self.letters)))

    def __mul__(self, other: "OperatorWord") -> "OperatorWord":
        return OperatorWord(self.letters + other.letters)

    @property
    def name(self) -> str:
        return "".join(LETTERS[l] for l in self.letters) or "I"


def cell_word(word_i: OperatorWord, word_j: OperatorWord) -> OperatorWord:
    """Canonical word of the moment-matrix cell (i, j): adjoint(w_i) * w_j."""
    return (word_i.adjoint() * word_j).canonicalize()


@dataclass(frozen=True)
class MomentStructure:
    """Index algebra of a moment matrix: words, cell classes, free entries.

    ``entry_class`` maps every cell (i, j) to the class id of its canonical
    word; it is symmetric because the matrix variable is and cell (j, i)
    carries the adjoint word.  ``unit_classes`` collect the cells whose word
    reduces to the identity (at these levels: exactly the diagonal).
    """

    level: str
    words: tuple[OperatorWord, ...]
    entry_class: Mapping[tuple[int, int], int]
    class_cells: Mapping[int, tuple[tuple[int, int], ...]]
    class_words: Mapping[int, str]
    free_entries: tuple[int, ...]
    unit_classes: tuple[int, ...]
    _word_class: Mapping[tuple[int, ...], int] = field(repr=False, default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.words)

    def class_of_word(self, letters: Sequence[int]) -> int:
        key = canonical_letters(letters)
        try:
            return self._word_class[key]
        except KeyError:
            raise DomainError(
                f"word {key} does not appear in the level-{self.level} structure"
            ) from None

    def equalities(self) -> list[tuple[tuple[int, int], ...]]:
        """Upper-triangle cell groups forced equal by word identity.

        Groups with k cells stand for k-1 scalar equalities; at level 2 these
        are exactly the forty constraints beyond the unit diagonal.
        """
        return [
            cells
            for cid, cells in sorted(self.class_cells.items())
            if cid not in self.unit_classes and len(cells) > 1
        ]

    def equality_count(self) -> int:
        return sum(len(g) - 1 for g in self.equalities())

    def representative_cell(self, cid: int) -> tuple[int, int]:
        return self.class_cells[cid][0]


def build_moment_structure(level: str | int) -> MomentStructure:
    """Group the cells of the level's moment matrix by canonical word."""
    level = str(level)
    if level not in _LEVELS:
        raise DomainError(f"level must be one of {_LEVELS}, got {level!r}")
    words = tuple(OperatorWord(w) for w in _LEVEL_WORDS[level])
    n = len(words)
    word_class: dict[tuple[int, ...], int] = {}
    entry_class: dict[tuple[int, int], int] = {}
    class_cells: dict[int, list[tuple[int, int]]] = {}
    for i in range(n):
        for j in range(i, n):
            key = cell_word(words[i], words[j]).letters
            cid = word_class.setdefault(key, len(word_class))
            entry_class[(i, j)] = cid
            entry_class[(j, i)] = cid
            class_cells.setdefault(cid, []).append((i, j))
    unit = tuple(cid for key, cid in word_class.items() if key == ())
    class_words = {cid: OperatorWord(key, canonical=True).name for key, cid in word_class.items()}
    free = tuple(cid for cid in sorted(class_cells) if cid not in unit)
    return MomentStructure(
        level=level,
        words=words,
        entry_class=entry_class,
        class_cells={cid: tuple(cells) for cid, cells in class_cells.items()},
        class_words=class_words,
        free_entries=free,
        unit_classes=unit,
        _word_class=word_class,
    )


# ---------------------------------------------------------------------------
# linear functionals on moment entries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearFunctional:
    """Affine map constant + sum of coefficients on entry classes."""

    constant: float
    coeffs: Mapping[int, float]

    def __post_init__(self):
        object.__setattr__(
            self,
            "coeffs",
            {int(c): float(v) for c, v in self.coeffs.items() if v != 0.0},
        )

    def check_against(self, s: MomentStructure) -> None:
        unknown = set(self.coeffs) - set(s.class_cells)
        if unknown:
            raise DomainError(f"functional references unknown classes {unknown}")

    def evaluate(self, values: Mapping[int, float]) -> float:
        return self.constant + sum(v * values[c] for c, v in self.coeffs.items())

    def scaled(self, factor: float) -> "LinearFunctional":
        return LinearFunctional(
            factor * self.constant, {c: factor * v for c, v in self.coeffs.items()}
        )

    def plus(self, other: "LinearFunctional") -> "LinearFunctional":
        coeffs = dict(self.coeffs)
        for c, v in other.coeffs.items():
            coeffs[c] = coeffs.get(c, 0.0) + v
        return LinearFunctional(self.constant + other.constant, coeffs)


def _outcome_sign(value) -> float:
    if value in (1, +1, "plus", "+"):
        return 1.0
    if value in (-1, 0, "zero", "0"):
        return -1.0
    raise DomainError(f"not an outcome label: {value!r}")


def probability_functional(s: MomentStructure, a, b, x: int, y: int) -> LinearFunctional:
    """P(ab|xy) as 1/4 (1 + a <Ax> + b <By> + ab <Ax By>) on moment entries."""
    sa, sb = _outcome_sign(a), _outcome_sign(b)
    ax = s.class_of_word((x,))
    by = s.class_of_word((2 + y,))
    axby = s.class_of_word((x, 2 + y))
    coeffs: dict[int, float] = {}
    for cid, weight in ((ax, 0.25 * sa), (by, 0.25 * sb), (axby, 0.25 * sa * sb)):
        coeffs[cid] = coeffs.get(cid, 0.0) + weight
    return LinearFunctional(0.25, coeffs)


def eberhard_coefficient_functionals(s: MomentStructure) -> dict[str, LinearFunctional]:
    """The five noise-polynomial coefficients as moment functionals.

    K and L are written directly in their half-correlator form; M, N, O are
    assembled by pushing each probability term through the reconstruction
    identity, which only needs first-order and AB moments.
    """
    a0 = s.class_of_word((0,))
    b0 = s.class_of_word((2,))
    k = LinearFunctional(
        0.5,
        {
            a0: 0.5,
            b0: 0.5,
            s.class_of_word((0, 2)): 0.25,
            s.class_of_word((0, 3)): 0.25,
            s.class_of_word((1, 2)): 0.25,
            s.class_of_word((1, 3)): -0.25,
        },
    )
    l = LinearFunctional(1.0, {a0: 0.5, b0: 0.5})

    def prob(a, b, x, y):
        return probability_functional(s, a, b, x, y)

    m = (
        prob(-1, +1, 0, 0)
        .plus(prob(+1, -1, 0, 0))
        .plus(prob(-1, +1, 0, 1))
        .plus(prob(+1, -1, 1, 0))
        .plus(prob(+1, -1, 0, 1))
        .plus(prob(-1, +1, 1, 0))
        .plus(prob(-1, +1, 1, 1).scaled(-1.0))
        .plus(prob(+1, -1, 1, 1).scaled(-1.0))
    )
    n = (
        prob(-1, -1, 0, 1)
        .plus(prob(-1, -1, 1, 0))
        .plus(prob(-1, +1, 0, 1))
        .plus(prob(+1, -1, 1, 0))
    )
    o = (
        prob(-1, -1, 0, 0)
        .plus(prob(-1, -1, 0, 1))
        .plus(prob(-1, -1, 1, 0))
        .plus(prob(-1, -1, 1, 1).scaled(-1.0))
    )
    return {"K": k, "L": l, "M": m, "N": n, "O": o}


def noisy_eberhard_functional(s: MomentStructure, eta: float, xi: float) -> LinearFunctional:
    """Objective K eta^2 - L eta + M xi eta - N xi + O xi^2 on moment entries."""
    f = eberhard_coefficient_functionals(s)
    out = f["K"].scaled(eta * eta).plus(f["L"].scaled(-eta))
    if xi != 0.0:
        out = (
            out.plus(f["M"].scaled(xi * eta))
            .plus(f["N"].scaled(-xi))
            .plus(f["O"].scaled(xi * xi))
        )
    return out


# ---------------------------------------------------------------------------
# SDP assembly and solution
# ---------------------------------------------------------------------------

def _symmetric_unit(n: int, i: int, j: int) -> np.ndarray:
    """Symmetric matrix with <A, X> = X_ij for symmetric X."""
    a = np.zeros((n, n))
    if i == j:
        a[i, i] = 1.0
    else:
        a[i, j] = a[j, i] = 0.5
    return a


def dense_sdp_for_noise(
    s: MomentStructure, eta: float, xi: float
) -> tuple[DenseSdp, LinearFunctional]:
    """Standard-form SDP maximizing the noisy violation over the structure."""
    functional = noisy_eberhard_functional(s, eta, xi)
    functional.check_against(s)
    n = s.dim
    c = np.zeros((n, n))
    for cid, coeff in functional.coeffs.items():
        i, j = s.representative_cell(cid)
        c += coeff * _symmetric_unit(n, i, j)
    constraints: list[tuple[np.ndarray, float]] = []
    for i in range(n):
        constraints.append((_symmetric_unit(n, i, i), 1.0))
    for group in s.equalities():
        i0, j0 = group[0]
        base = _symmetric_unit(n, i0, j0)
        for i, j in group[1:]:
            constraints.append((base - _symmetric_unit(n, i, j), 0.0))
    problem = DenseSdp(
        dim=n,
        objective=c,
        offset=functional.constant,
        constraints=tuple(constraints),
    )
    return problem, functional


@dataclass(frozen=True)
class SdpCertificate:
    """Optimizing moment vector together with the raw solver output."""

    moments: Mapping[int, float]
    class_words: Mapping[int, str]
    matrix: np.ndarray
    solution: SdpSolution

    def named_moments(self) -> dict[str, float]:
        return {self.class_words[cid]: v for cid, v in self.moments.items()}


def max_noisy_eberhard_sdp(
    eta: float,
    xi: float = 0.0,
    level: str | int = "2",
    gap_tol: float = 1e-9,
) -> tuple[float, SdpCertificate]:
    """Global maximum of the noisy violation over the level's moment cone."""
    if not (0.0 <= eta <= 1.0) or not (0.0 <= xi < 1.0):
        raise DomainError("eta must lie in [0, 1] and xi in [0, 1)")
    s = build_moment_structure(level)
    problem, _ = dense_sdp_for_noise(s, eta, xi)
    sol = solve_sdp(problem, tol=gap_tol)
    moments = {
        cid: float(np.mean([sol.X[i, j] for i, j in s.class_cells[cid]]))
        for cid in s.free_entries
    }
    cert = SdpCertificate(
        moments=moments, class_words=dict(s.class_words), matrix=sol.X, solution=sol
    )
    return sol.value, cert


@dataclass(frozen=True)
class BisectionStep:
    eta: float
    value: float
    feasible: bool


@dataclass(frozen=True)
class NpaBisectionResult:
    eta: float
    trace: tuple[BisectionStep, ...]
    e_obs: float
    xi: float
    level: str

    @property
    def iterations(self) -> int:
        return len(self.trace)


# Slack absorbing the solver's duality gap so reported bounds stay conservative.
_FEASIBILITY_SLACK = 1e-9


def min_efficiency_npa(
    e_obs: float,
    xi: float = 0.0,
    tol: float = 1e-7,
    level: str | int = "2",
) -> NpaBisectionResult:
    """Certified bisection for the least efficiency feasible at this level.

    Every inner solve is globally optimal and the feasible efficiency set is
    upper-closed, so the returned upper endpoint is the level's global
    minimum (up to ``tol``), hence a valid lower bound on the quantum one.
    """
    if not (0.0 < e_obs <= Q_MAX_VIOLATION + 1e-12):
        raise DomainError(
            f"observed violation must lie in (0, {Q_MAX_VIOLATION:.6f}], got {e_obs}"
        )
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    level = str(level)
    s = build_moment_structure(level)
    trace: list[BisectionStep] = []

    def feasible_at(eta: float) -> tuple[bool, float]:
        problem, _ = dense_sdp_for_noise(s, eta, xi)
        sol = solve_sdp(problem, tol=_FEASIBILITY_SLACK)
        ok = sol.value >= e_obs - _FEASIBILITY_SLACK
        trace.append(BisectionStep(eta, sol.value, ok))
        return ok, sol.value

    ok, value = feasible_at(1.0)
    if not ok:
        raise InfeasibleViolationError(e_obs, value)
    lower, upper = ETA_THRESHOLD, 1.0
    while upper - lower > tol:
        eta = 0.5 * (upper + lower)
        ok, _ = feasible_at(eta)
        if ok:
            upper = eta
        else:
            lower = eta
    return NpaBisectionResult(
        eta=float(upper), trace=tuple(trace), e_obs=float(e_obs), xi=float(xi), level=level
    )


# ---------------------------------------------------------------------------
# interchange and realization feasibility
# ---------------------------------------------------------------------------

def sdp_interchange(eta: float, xi: float = 0.0, level: str | int = "2") -> dict:
    """JSON-ready description of the noisy-violation SDP at this level.

    Carries the matrix dimension, the affine objective as a sparse list of
    per-class coefficients, and the class -> cells map (upper triangle).  The
    solver module can rebuild and solve the identical problem from this form.
    """
    s = build_moment_structure(level)
    functional = noisy_eberhard_functional(s, eta, xi)
    return {
        "dimension": s.dim,
        "level": s.level,
        "eta": float(eta),
        "xi": float(xi),
        "objective": {
            "constant": functional.constant,
            "coefficients": [
                {"class": cid, "coeff": coeff}
                for cid, coeff in sorted(functional.coeffs.items())
            ],
        },
        "classes": {
            str(cid): {
                "word": s.class_words[cid],
                "cells": [list(c) for c in cells],
            }
            for cid, cells in sorted(s.class_cells.items())
        },
        "unit_classes": list(s.unit_classes),
    }


def moment_matrix_from_realization(
    s: MomentStructure, r: QuantumRealization
) -> np.ndarray:
    """Exact moment matrix of a realization, for feasibility cross-checks."""
    z = np.array([[1.0, 0.0], [0.0, -1.0]])
    x = np.array([[0.0, 1.0], [1.0, 0.0]])

    def observable(angle: float) -> np.ndarray:
        return math.cos(angle) * z + math.sin(angle) * x

    single = {
        0: observable(r.theta_a0),
        1: observable(r.theta_a1),
        2: observable(r.theta_b0),
        3: observable(r.theta_b1),
    }
    eye = np.eye(2)
    psi = np.array([math.cos(r.theta), 0.0, 0.0, math.sin(r.theta)])

    def word_op(w: OperatorWord) -> np.ndarray:
        alice, bob = eye, eye
        for letter in w.letters:
            if letter < 2:
                alice = alice @ single[letter]
            else:
                bob = bob @ single[letter]
        return np.kron(alice, bob)

    ops = [word_op(w) for w in s.words]
    n = s.dim
    gamma = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            gamma[i, j] = psi @ (ops[i].T @ ops[j]) @ psi
    return gamma
