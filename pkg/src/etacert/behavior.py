"""Probability algebra for bipartite two-setting/two-outcome boxes.

A behavior is the table of sixteen conditional probabilities P(ab|xy) with
outcomes a, b in {plus, zero} and binary settings x, y.  This module holds the
behavior/correlator conversions, the CHSH and Eberhard functionals, the
no-signaling checks, the canonical distributions (deterministic points, PR
box, PR/deterministic mixtures), and the linear detector-noise channel
together with its polynomial coefficients.

Outcome encoding is fixed globally: ``plus`` maps to +1 and ``zero`` maps to
-1 (the "no click" outcome absorbs the -1 click).  Array axes are always
ordered ``[a, b, x, y]`` with index 0 = plus, 1 = zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "PLUS",
    "ZERO",
    "OUTCOME_VALUES",
    "NORMALIZATION_TOL",
    "NO_SIGNALING_TOL",
    "DomainError",
    "SignalingError",
    "Behavior",
    "Correlators",
    "NoiseParams",
    "EberhardCoefficients",
    "NsDecomposition",
    "NoSignalingReport",
    "CHSH_SATURATING_LD",
    "uniform_behavior",
    "pr_box",
    "ld_distribution",
    "ns_mixture",
    "correlators_from_behavior",
    "behavior_from_correlators",
    "chsh_value",
    "eberhard_value",
    "eberhard_from_chsh",
    "check_no_signaling",
    "apply_detection_noise",
    "eberhard_coefficients",
    "observed_eberhard",
]

PLUS = 0
ZERO = 1

# plus -> +1, zero -> -1 everywhere; never reorder.
OUTCOME_VALUES = (1.0, -1.0)

NORMALIZATION_TOL = 1e-12
NO_SIGNALING_TOL = 1e-10

_OUTCOME_ALIASES = {
    "plus": PLUS,
    "+": PLUS,
    "1": PLUS,
    1: PLUS,
    PLUS: PLUS,
    "zero": ZERO,
    "0": ZERO,
    "-1": ZERO,
    -1: ZERO,
    ZERO: ZERO,
}


class DomainError(ValueError):
    """An argument is outside the operation's stated domain."""


class SignalingError(ValueError):
    """A marginal-dependent quantity was requested for a signaling behavior."""

    def __init__(self, max_violation: float):
        self.max_violation = float(max_violation)
        super().__init__(
            f"behavior signals: max marginal inconsistency {self.max_violation:.3e}"
        )


def _as_outcome(value) -> int:
    try:
        return _OUTCOME_ALIASES[value]
    except (KeyError, TypeError):
        raise DomainError(f"not an outcome label: {value!r}") from None


@dataclass(frozen=True)
class Behavior:
    """Sixteen conditional probabilities P(ab|xy), indexed ``p[a, b, x, y]``."""

    p: np.ndarray
    label: str | None = None

    def __post_init__(self):
        arr = np.asarray(self.p, dtype=float)
        if arr.shape != (2, 2, 2, 2):
            raise DomainError(f"behavior table must be 2x2x2x2, got {arr.shape}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "p", arr)

    # -- structural checks -------------------------------------------------

    def normalization_error(self) -> float:
        """Largest deviation of any per-setting row sum from 1."""
        sums = self.p.sum(axis=(0, 1))
        return float(np.max(np.abs(sums - 1.0)))

    def negativity(self) -> float:
        """Most negative entry, as a nonnegative magnitude (0 if none)."""
        return float(max(0.0, -self.p.min()))

    @property
    def valid(self) -> bool:
        """Entries in [0, 1] and rows normalized, within 1e-12."""
        return (
            self.negativity() <= NORMALIZATION_TOL
            and float(self.p.max()) <= 1.0 + NORMALIZATION_TOL
            and self.normalization_error() <= NORMALIZATION_TOL
        )

    @property
    def no_signaling(self) -> bool:
        return check_no_signaling(self).passed

    # -- marginals ---------------------------------------------------------

    def marginal_a(self, x: int) -> np.ndarray:
        """P(a|x) for a in (plus, zero); requires no-signaling to be meaningful."""
        return self.p[:, :, x, :].sum(axis=1).mean(axis=1)

    def marginal_b(self, y: int) -> np.ndarray:
        return self.p[:, :, :, y].sum(axis=0).mean(axis=1)

    # -- serialization -----------------------------------------------------

    def to_table(self) -> np.ndarray:
        """4x4 table, rows (x0y0, x0y1, x1y0, x1y1), cols (++, +0, 0+, 00)."""
        table = np.empty((4, 4))
        for x in range(2):
            for y in range(2):
                for a in range(2):
                    for b in range(2):
                        table[2 * x + y, 2 * a + b] = self.p[a, b, x, y]
        return table

    @classmethod
    def from_table(cls, table, label: str | None = None) -> "Behavior":
        t = np.asarray(table, dtype=float)
        if t.shape != (4, 4):
            raise DomainError(f"behavior table must be 4x4, got {t.shape}")
        p = np.empty((2, 2, 2, 2))
        for x in range(2):
            for y in range(2):
                for a in range(2):
                    for b in range(2):
                        p[a, b, x, y] = t[2 * x + y, 2 * a + b]
        return cls(p, label=label)

    def to_json(self) -> str:
        doc: dict = {"p": self.to_table().tolist()}
        if self.label is not None:
            doc["label"] = self.label
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "Behavior":
        doc = json.loads(text)
        return cls.from_table(doc["p"], label=doc.get("label"))


@dataclass(frozen=True)
class Correlators:
    """Marginal expectations A[x], B[y] and joint expectations AB[x][y]."""

    A: np.ndarray
    B: np.ndarray
    AB: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float).reshape(2)
        B = np.asarray(self.B, dtype=float).reshape(2)
        AB = np.asarray(self.AB, dtype=float).reshape(2, 2)
        for arr in (A, B, AB):
            arr.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "AB", AB)

    @property
    def in_range(self) -> bool:
        return all(
            float(np.max(np.abs(arr))) <= 1.0 + NORMALIZATION_TOL
            for arr in (self.A, self.B, self.AB)
        )

    def chsh(self) -> float:
        return float(self.AB[0, 0] + self.AB[0, 1] + self.AB[1, 0] - self.AB[1, 1])


@dataclass(frozen=True)
class NoiseParams:
    """Per-party, per-setting efficiencies and dark-count rates.

    ``eta`` is the probability that a plus outcome survives; ``xi`` is the
    probability that a zero outcome is falsely registered as plus.  All four
    arrays are indexed by the local setting.
    """

    eta_A: tuple[float, float]
    eta_B: tuple[float, float]
    xi_A: tuple[float, float] = (0.0, 0.0)
    xi_B: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        for name in ("eta_A", "eta_B", "xi_A", "xi_B"):
            vals = tuple(float(v) for v in getattr(self, name))
            if len(vals) != 2:
                raise DomainError(f"{name} needs one entry per setting, got {vals}")
            if any(not 0.0 <= v <= 1.0 for v in vals):
                raise DomainError(f"{name} entries must lie in [0, 1], got {vals}")
            object.__setattr__(self, name, vals)

    @classmethod
    def symmetric(cls, eta: float, xi: float = 0.0) -> "NoiseParams":
        return cls((eta, eta), (eta, eta), (xi, xi), (xi, xi))

    @property
    def setting_independent(self) -> bool:
        return (
            self.eta_A[0] == self.eta_A[1]
            and self.eta_B[0] == self.eta_B[1]
            and self.xi_A[0] == self.xi_A[1]
            and self.xi_B[0] == self.xi_B[1]
        )

    @property
    def symmetric_parties(self) -> bool:
        return (
            self.setting_independent
            and self.eta_A[0] == self.eta_B[0]
            and self.xi_A[0] == self.xi_B[0]
        )

    def transition_matrix(self, party: str, setting: int) -> np.ndarray:
        """Column-stochastic map from true outcome to registered outcome."""
        if party == "A":
            eta, xi = self.eta_A[setting], self.xi_A[setting]
        elif party == "B":
            eta, xi = self.eta_B[setting], self.xi_B[setting]
        else:
            raise DomainError(f"unknown party {party!r}")
        # rows: registered (plus, zero); cols: true (plus, zero)
        return np.array([[eta, xi], [1.0 - eta, 1.0 - xi]])


@dataclass(frozen=True)
class EberhardCoefficients:
    """Coefficients of the noisy Eberhard polynomial of one behavior.

    The observed violation of a behavior passed through symmetric detector
    noise is ``K eta^2 - L eta + M xi eta - N xi + O xi^2`` with
    ``L = Lp + Lpp``.  ``source`` keeps the originating behavior so that
    setting-dependent noise can fall back to full channel expansion.
    """

    K: float
    Lp: float
    Lpp: float
    M: float
    N: float
    O: float
    source: Behavior | None = field(default=None, compare=False, repr=False)

    @property
    def L(self) -> float:
        return self.Lp + self.Lpp

    def symmetric_value(self, eta: float, xi: float = 0.0) -> float:
        return (
            self.K * eta * eta
            - self.L * eta
            + self.M * xi * eta
            - self.N * xi
            + self.O * xi * xi
        )


@dataclass(frozen=True)
class NsDecomposition:
    """Convex weights on the PR box and the eight CHSH-saturating points."""

    p_pr: float
    p1: float = 0.0
    p4: float = 0.0
    p5: float = 0.0
    p8: float = 0.0
    p9: float = 0.0
    p12: float = 0.0
    p14: float = 0.0
    p15: float = 0.0

    _NAMES = ("p_pr", "p1", "p4", "p5", "p8", "p9", "p12", "p14", "p15")

    def __post_init__(self):
        w = self.weights
        if min(w) < -NORMALIZATION_TOL:
            raise DomainError(f"decomposition weights must be nonnegative: {w}")
        if abs(sum(w) - 1.0) > 1e-9:
            raise DomainError(f"decomposition weights must sum to 1, got {sum(w)}")

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(float(getattr(self, n)) for n in self._NAMES)

    @property
    def alpha(self) -> float:
        """Weight 2(p1+p5+p9) + p14 + p15 entering the noisy-violation curve."""
        return 2.0 * (self.p1 + self.p5 + self.p9) + self.p14 + self.p15


@dataclass(frozen=True)
class NoSignalingReport:
    max_violation: float
    tolerance: float
    worst_condition: str

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


# ---------------------------------------------------------------------------
# canonical distributions
# ---------------------------------------------------------------------------

def uniform_behavior() -> Behavior:
    return Behavior(np.full((2, 2, 2, 2), 0.25), label="uniform")


def pr_box() -> Behavior:
    """The CHSH-violating PR box: perfect correlation except anti at (x1, y1)."""
    p = np.zeros((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            if x == 1 and y == 1:
                p[PLUS, ZERO, x, y] = 0.5
                p[ZERO, PLUS, x, y] = 0.5
            else:
                p[PLUS, PLUS, x, y] = 0.5
                p[ZERO, ZERO, x, y] = 0.5
    return Behavior(p, label="PR")


def ld_distribution(assignment: Sequence) -> Behavior:
    """Deterministic behavior for outcome assignment (a0, a1, b0, b1)."""
    if len(assignment) != 4:
        raise DomainError("assignment must be (a(x0), a(x1), b(y0), b(y1))")
    a0, a1, b0, b1 = (_as_outcome(v) for v in assignment)
    p = np.zeros((2, 2, 2, 2))
    for x, a in ((0, a0), (1, a1)):
        for y, b in ((0, b0), (1, b1)):
            p[a, b, x, y] = 1.0
    return Behavior(p, label=f"LD{(a0, a1, b0, b1)}")


# The eight deterministic points saturating CHSH = 2 and Eberhard = 0, keyed
# by the conventional index of the mixture decomposition.  Derived from the
# positions their weights occupy in the mixture table (see ns_mixture).
CHSH_SATURATING_LD: Mapping[int, tuple[int, int, int, int]] = {
    1: (PLUS, PLUS, PLUS, PLUS),
    4: (ZERO, ZERO, ZERO, ZERO),
    5: (PLUS, PLUS, PLUS, ZERO),
    8: (ZERO, ZERO, ZERO, PLUS),
    9: (PLUS, ZERO, PLUS, PLUS),
    12: (ZERO, PLUS, ZERO, ZERO),
    14: (PLUS, ZERO, ZERO, PLUS),
    15: (ZERO, PLUS, PLUS, ZERO),
}


def ns_mixture(d: NsDecomposition) -> Behavior:
    """Convex mixture of the PR box and the eight saturating points."""
    p = d.p_pr * pr_box().p
    weights = dict(zip(d._NAMES, d.weights))
    for index, assignment in CHSH_SATURATING_LD.items():
        p = p + weights[f"p{index}"] * ld_distribution(assignment).p
    return Behavior(p, label="ns-mixture")


# ---------------------------------------------------------------------------
# correlators and inequalities
# ---------------------------------------------------------------------------

def check_no_signaling(b: Behavior, tol: float = NO_SIGNALING_TOL) -> NoSignalingReport:
    """Largest violation over the eight marginal-equality conditions."""
    worst = 0.0
    label = "none"
    for a in range(2):
        for x in range(2):
            lhs = b.p[a, :, x, 0].sum()
            rhs = b.p[a, :, x, 1].sum()
            if abs(lhs - rhs) > worst:
                worst = abs(lhs - rhs)
                label = f"P(a={a}|x={x}) depends on y"
    for bb in range(2):
        for y in range(2):
            lhs = b.p[:, bb, 0, y].sum()
            rhs = b.p[:, bb, 1, y].sum()
            if abs(lhs - rhs) > worst:
                worst = abs(lhs - rhs)
                label = f"P(b={bb}|y={y}) depends on x"
    return NoSignalingReport(float(worst), float(tol), label)


def correlators_from_behavior(b: Behavior, tol: float = NO_SIGNALING_TOL) -> Correlators:
    """Marginal and joint expectations with plus -> +1, zero -> -1."""
    report = check_no_signaling(b, tol)
    if not report.passed:
        raise SignalingError(report.max_violation)
    vals = np.asarray(OUTCOME_VALUES)
    A = np.array([float(vals @ b.marginal_a(x)) for x in range(2)])
    B = np.array([float(vals @ b.marginal_b(y)) for y in range(2)])
    AB = np.einsum("a,b,abxy->xy", vals, vals, b.p)
    return Correlators(A, B, AB)


def behavior_from_correlators(c: Correlators) -> Behavior:
    """Reconstruct P(ab|xy) = (1 + a A[x] + b B[y] + ab AB[x][y]) / 4.

    The result round-trips with correlators_from_behavior.  Inconsistent
    correlators yield negative entries; the result then carries
    ``valid == False`` rather than raising.
    """
    vals = np.asarray(OUTCOME_VALUES)
    p = 0.25 * (
        1.0
        + np.einsum("a,x->ax", vals, c.A)[:, None, :, None]
        + np.einsum("b,y->by", vals, c.B)[None, :, None, :]
        + np.einsum("a,b,xy->abxy", vals, vals, c.AB)
    )
    return Behavior(p)


def chsh_value(b: Behavior, tol: float = NO_SIGNALING_TOL) -> float:
    """CHSH combination <A0B0> + <A0B1> + <A1B0> - <A1B1>."""
    return correlators_from_behavior(b, tol).chsh()


def eberhard_value(b: Behavior) -> float:
    """P(++|x0y0) - P(+0|x0y1) - P(0+|x1y0) - P(++|x1y1).

    Well defined pointwise, so signaling inputs are allowed.
    """
    p = b.p
    return float(
        p[PLUS, PLUS, 0, 0]
        - p[PLUS, ZERO, 0, 1]
        - p[ZERO, PLUS, 1, 0]
        - p[PLUS, PLUS, 1, 1]
    )


def eberhard_from_chsh(beta: float) -> float:
    """Linear equivalence on no-signaling behaviors: E = beta/4 - 1/2."""
    return beta / 4.0 - 0.5


# ---------------------------------------------------------------------------
# detector noise channel
# ---------------------------------------------------------------------------

def apply_detection_noise(b: Behavior, n: NoiseParams) -> Behavior:
    """Push a behavior through the per-party linear detector channel.

    Each party's registered outcome is drawn from its true outcome with the
    transition matrix of its local setting (plus survives with prob eta, zero
    converts to plus with prob xi).  The channel acts locally, so it maps
    no-signaling behaviors to no-signaling behaviors.
    """
    out = np.empty_like(b.p)
    for x in range(2):
        ta = n.transition_matrix("A", x)
        for y in range(2):
            tb = n.transition_matrix("B", y)
            out[:, :, x, y] = ta @ b.p[:, :, x, y] @ tb.T
    return Behavior(out, label=b.label)


def eberhard_coefficients(b: Behavior) -> EberhardCoefficients:
    """Coefficients K, L', L'', M, N, O of the symmetric noisy violation."""
    p = b.p
    K = (
        p[PLUS, PLUS, 0, 0]
        - p[PLUS, PLUS, 1, 1]
        + p[PLUS, PLUS, 0, 1]
        + p[PLUS, PLUS, 1, 0]
    )
    Lp = p[PLUS, ZERO, 0, 1] + p[PLUS, PLUS, 0, 1]
    Lpp = p[ZERO, PLUS, 1, 0] + p[PLUS, PLUS, 1, 0]
    M = (
        p[ZERO, PLUS, 0, 0]
        + p[PLUS, ZERO, 0, 0]
        + p[ZERO, PLUS, 0, 1]
        + p[PLUS, ZERO, 1, 0]
        + p[PLUS, ZERO, 0, 1]
        + p[ZERO, PLUS, 1, 0]
        - p[ZERO, PLUS, 1, 1]
        - p[PLUS, ZERO, 1, 1]
    )
    N = (
        p[ZERO, ZERO, 0, 1]
        + p[ZERO, ZERO, 1, 0]
        + p[ZERO, PLUS, 0, 1]
        + p[PLUS, ZERO, 1, 0]
    )
    O = (
        p[ZERO, ZERO, 0, 0]
        + p[ZERO, ZERO, 0, 1]
        + p[ZERO, ZERO, 1, 0]
        - p[ZERO, ZERO, 1, 1]
    )
    return EberhardCoefficients(
        float(K), float(Lp), float(Lpp), float(M), float(N), float(O), source=b
    )


def observed_eberhard(c: EberhardCoefficients, n: NoiseParams) -> float:
    """Observed Eberhard violation after the detector channel.

    Symmetric parameters use the closed polynomial in the six coefficients;
    party-asymmetric efficiencies without dark counts use the bilinear form
    ``K etaA etaB - L' etaA - L'' etaB``.  Any setting-dependent (or mixed
    dark-count asymmetric) case expands the channel on the source behavior,
    which must therefore be attached.
    """
    if n.symmetric_parties:
        return c.symmetric_value(n.eta_A[0], n.xi_A[0])
    if n.setting_independent and max(n.xi_A + n.xi_B) == 0.0:
        eta_a, eta_b = n.eta_A[0], n.eta_B[0]
        return c.K * eta_a * eta_b - c.Lp * eta_a - c.Lpp * eta_b
    if c.source is None:
        raise DomainError(
            "setting-dependent noise needs channel expansion; these coefficients "
            "carry no source behavior"
        )
    return eberhard_value(apply_detection_noise(c.source, n))
