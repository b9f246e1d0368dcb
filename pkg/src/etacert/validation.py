"""Property suites tying the implementation to its independent oracles.

Each suite returns a list of named pass/fail results with the measured worst
deviation, so the command-line ``validate`` subcommand and the test suite
share one source of truth.  Sampling helpers for no-signaling behaviors,
noise parameters, realizations and mixture decompositions live here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analytic, behavior, npa
from .behavior import (
    Behavior,
    CHSH_SATURATING_LD,
    NoiseParams,
    NsDecomposition,
    apply_detection_noise,
    behavior_from_correlators,
    check_no_signaling,
    chsh_value,
    correlators_from_behavior,
    eberhard_coefficients,
    eberhard_value,
    ld_distribution,
    ns_mixture,
    observed_eberhard,
    pr_box,
)
from .quantum import QuantumRealization, born_rule_oracle, probability_table
from .sdp import solve_sdp

__all__ = [
    "PropertyResult",
    "SUITE_NAMES",
    "run_suite",
    "suite_core",
    "suite_quantum",
    "suite_npa",
    "suite_analytic",
    "random_ns_behaviors",
    "random_noise_params",
    "random_realizations",
    "random_tsirelson_decompositions",
    "proposition1_monte_carlo",
]

SUITE_NAMES = ("core", "quantum", "npa", "analytic")


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{mark}] {self.name}: measured {self.measured:.3e} vs tol {self.tolerance:.1e}{extra}"


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def random_ns_behaviors(count: int, rng: np.random.Generator) -> np.ndarray:
    """No-signaling behavior tables drawn by rejection over correlators.

    Marginal and joint expectations are sampled uniformly on [-1, 1] and the
    reconstructed probabilities kept when all sixteen are nonnegative, which
    covers the full no-signaling polytope.  Returns shape (count, 2, 2, 2, 2).
    """
    vals = np.array([1.0, -1.0])
    kept: list[np.ndarray] = []
    total = 0
    while total < count:
        batch = max(4 * (count - total), 256)
        a = rng.uniform(-1.0, 1.0, size=(batch, 2))
        b = rng.uniform(-1.0, 1.0, size=(batch, 2))
        ab = rng.uniform(-1.0, 1.0, size=(batch, 2, 2))
        p = 0.25 * (
            1.0
            + np.einsum("a,nx->nax", vals, a)[:, :, None, :, None]
            + np.einsum("b,ny->nby", vals, b)[:, None, :, None, :]
            + np.einsum("a,b,nxy->nabxy", vals, vals, ab)
        )
        good = p[(p >= 0.0).all(axis=(1, 2, 3, 4))]
        kept.append(good[: count - total])
        total += len(kept[-1])
    return np.concatenate(kept)


def random_noise_params(rng: np.random.Generator, kind: str = "general") -> NoiseParams:
    if kind == "symmetric":
        return NoiseParams.symmetric(rng.uniform(0.0, 1.0), rng.uniform(0.0, 0.5))
    if kind == "party":
        eta_a, eta_b = rng.uniform(0.0, 1.0, 2)
        return NoiseParams(eta_A=(eta_a, eta_a), eta_B=(eta_b, eta_b))
    return NoiseParams(
        eta_A=tuple(rng.uniform(0.0, 1.0, 2)),
        eta_B=tuple(rng.uniform(0.0, 1.0, 2)),
        xi_A=tuple(rng.uniform(0.0, 0.5, 2)),
        xi_B=tuple(rng.uniform(0.0, 0.5, 2)),
    )


def random_realizations(count: int, rng: np.random.Generator) -> np.ndarray:
    """Angle matrices of shape (count, 5) over the full parameter box."""
    lo = np.array([0.0, 0.0, 0.0, 0.0, 0.0])
    hi = np.array([math.pi / 2, 2 * math.pi, 2 * math.pi, 2 * math.pi, 2 * math.pi])
    return rng.uniform(lo, hi, size=(count, 5))


def random_tsirelson_decompositions(count: int, rng: np.random.Generator) -> list[NsDecomposition]:
    out = []
    for _ in range(count):
        p_pr = rng.uniform(1e-6, analytic.Q_PR)
        rest = rng.dirichlet(np.ones(8)) * (1.0 - p_pr)
        out.append(
            NsDecomposition(
                p_pr, rest[0], rest[1], rest[2], rest[3], rest[4], rest[5], rest[6], rest[7]
            )
        )
    return out


def proposition1_monte_carlo(trials: int, rng: np.random.Generator) -> tuple[int, float]:
    """Vectorized search for counterexamples to the chain bound.

    Draws decompositions respecting the maximal quantum violation, samples an
    efficiency in the positive-violation range of each, and checks the
    closed-form bound never exceeds it.  Returns (counterexamples, worst
    margin), where positive margin means a violation of the bound.
    """
    p_pr = rng.uniform(1e-9, analytic.Q_PR, size=trials)
    weights = rng.dirichlet(np.ones(8), size=trials) * (1.0 - p_pr)[:, None]
    alpha = 2.0 * weights[:, [0, 2, 4]].sum(axis=1) + weights[:, 6] + weights[:, 7]
    # weights order: p1, p4, p5, p8, p9, p12, p14, p15
    eta_zero = (p_pr + alpha) / (1.5 * p_pr + alpha)
    eta = eta_zero + (1.0 - eta_zero) * rng.uniform(1e-9, 1.0, size=trials)
    e_obs = (1.5 * p_pr + alpha) * eta * eta - (p_pr + alpha) * eta
    valid = e_obs > 0.0
    bound = (1.0 + np.sqrt(1.0 + 6.0 * (e_obs[valid] / analytic.Q_PR))) / 3.0
    margin = bound - eta[valid]
    counterexamples = int(np.sum(margin > 1e-12))
    worst = float(margin.max()) if margin.size else -math.inf
    return counterexamples, worst


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def _table_max_row_error(tables: np.ndarray) -> float:
    return float(np.max(np.abs(tables.sum(axis=(1, 2)) - 1.0)))


def _ns_violation(tables: np.ndarray) -> float:
    """Worst marginal inconsistency across a batch of behavior tables."""
    pa = tables.sum(axis=2)  # (n, a, x, y)
    pb = tables.sum(axis=1)  # (n, b, x, y)
    va = np.max(np.abs(pa[..., 0] - pa[..., 1]))
    vb = np.max(np.abs(pb[:, :, 0, :] - pb[:, :, 1, :]))
    return float(max(va, vb))


def suite_core(rng_seed: int = 20240811) -> list[PropertyResult]:
    rng = np.random.default_rng(rng_seed)
    results = []

    tables = random_ns_behaviors(10_000, rng)

    # equivalence of the two inequalities on no-signaling behaviors
    vals = np.array([1.0, -1.0])
    ab = np.einsum("a,b,nabxy->nxy", vals, vals, tables)
    beta = ab[:, 0, 0] + ab[:, 0, 1] + ab[:, 1, 0] - ab[:, 1, 1]
    e_direct = tables[:, 0, 0, 0, 0] - tables[:, 0, 1, 0, 1] - tables[:, 1, 0, 1, 0] - tables[:, 0, 0, 1, 1]
    dev = float(np.max(np.abs(e_direct - (beta / 4.0 - 0.5))))
    results.append(PropertyResult("eberhard equals chsh/4 - 1/2 on NS behaviors", dev <= 1e-12, dev, 1e-12))

    # round trip through correlators
    worst_rt = 0.0
    for table in tables[:2000]:
        b = Behavior(table)
        back = behavior_from_correlators(correlators_from_behavior(b))
        worst_rt = max(worst_rt, float(np.max(np.abs(back.p - b.p))))
    results.append(PropertyResult("correlator round trip", worst_rt <= 1e-14, worst_rt, 1e-14))

    # channel keeps normalization and no-signaling
    noisy = []
    for table in tables[:1000]:
        n = random_noise_params(rng)
        noisy.append(apply_detection_noise(Behavior(table), n).p)
    noisy = np.stack(noisy)
    row_err = _table_max_row_error(noisy)
    ns_err = _ns_violation(noisy)
    results.append(PropertyResult("noise preserves normalization", row_err <= 1e-12, row_err, 1e-12))
    results.append(PropertyResult("noise preserves no-signaling", ns_err <= 1e-10, ns_err, 1e-10))

    # six coefficients against full channel expansion
    worst_coeff = 0.0
    for table in tables[:1000]:
        b = Behavior(table)
        coeffs = eberhard_coefficients(b)
        for kind in ("symmetric", "party", "general"):
            n = random_noise_params(rng, kind)
            direct = eberhard_value(apply_detection_noise(b, n))
            worst_coeff = max(worst_coeff, abs(direct - observed_eberhard(coeffs, n)))
    results.append(
        PropertyResult("coefficient polynomial matches channel", worst_coeff <= 1e-12, worst_coeff, 1e-12)
    )

    # sixteen deterministic points: violation never positive, eight saturate
    e_vals = {}
    for a0 in (0, 1):
        for a1 in (0, 1):
            for b0 in (0, 1):
                for b1 in (0, 1):
                    e_vals[(a0, a1, b0, b1)] = eberhard_value(ld_distribution((a0, a1, b0, b1)))
    max_ld = max(e_vals.values())
    saturating = {k for k, v in e_vals.items() if v == 0.0}
    expected = set(CHSH_SATURATING_LD.values())
    ok = max_ld <= 0.0 and saturating == expected and all(
        chsh_value(ld_distribution(k)) == 2.0 for k in expected
    )
    results.append(PropertyResult("deterministic points saturate as expected", ok, max_ld, 0.0))

    # PR box values
    pr = pr_box()
    ok = chsh_value(pr) == 4.0 and eberhard_value(pr) == 0.5
    results.append(PropertyResult("PR box reaches 4 and 1/2", ok, eberhard_value(pr), 0.5))

    # mixture table fixture (one nontrivial decomposition, checked cell-wise)
    d = NsDecomposition(0.3, 0.1, 0.05, 0.05, 0.1, 0.08, 0.02, 0.15, 0.15)
    mix = ns_mixture(d)
    q = d.p_pr / 2.0
    expected_table = np.array(
        [
            [d.p1 + d.p5 + d.p9 + q, d.p14, d.p15, d.p4 + d.p8 + d.p12 + q],
            [d.p1 + d.p9 + d.p14 + q, d.p5, d.p8, d.p4 + d.p12 + d.p15 + q],
            [d.p1 + d.p5 + d.p15 + q, d.p12, d.p9, d.p4 + d.p8 + d.p14 + q],
            [d.p1, d.p5 + d.p12 + d.p15 + q, d.p8 + d.p9 + d.p14 + q, d.p4],
        ]
    )
    dev = float(np.max(np.abs(mix.to_table() - expected_table)))
    e_dev = abs(eberhard_value(mix) - d.p_pr / 2.0)
    results.append(PropertyResult("mixture matches its table", dev <= 1e-15, dev, 1e-15))
    results.append(PropertyResult("mixture violation is p_PR/2", e_dev <= 1e-15, e_dev, 1e-15))
    return results


def suite_quantum(rng_seed: int = 20240812, oracle_count: int = 10_000) -> list[PropertyResult]:
    rng = np.random.default_rng(rng_seed)
    results = []

    angles = random_realizations(oracle_count, rng)
    closed = probability_table(angles[:, 0], angles[:, 1], angles[:, 2], angles[:, 3], angles[:, 4])
    worst = 0.0
    for k in range(oracle_count):
        oracle = born_rule_oracle(QuantumRealization.from_angles(angles[k]))
        worst = max(worst, float(np.max(np.abs(closed[k] - oracle.p))))
    results.append(PropertyResult("closed forms match Born rule", worst <= 1e-12, worst, 1e-12))

    row_err = _table_max_row_error(closed)
    ns_err = _ns_violation(closed)
    neg = float(max(0.0, -closed.min()))
    results.append(PropertyResult("realizations normalized", row_err <= 1e-12, row_err, 1e-12))
    results.append(PropertyResult("realizations no-signaling", ns_err <= 1e-12, ns_err, 1e-12))
    results.append(PropertyResult("realizations nonnegative", neg <= 1e-12, neg, 1e-12))

    r = QuantumRealization(math.pi / 4, 0.0, math.pi / 2, math.pi / 4, 7 * math.pi / 4)
    beta = chsh_value(born_rule_oracle(r))
    dev = abs(beta - 2.0 * math.sqrt(2.0))
    results.append(PropertyResult("maximal-violation settings reach 2 sqrt 2", dev <= 1e-12, dev, 1e-12))

    # upper-closedness of the feasible-efficiency set, on random realizations
    worst_drop = 0.0
    checked = 0
    for k in range(min(2000, oracle_count)):
        coeffs = eberhard_coefficients(Behavior(closed[k]))
        eta0 = rng.uniform(2.0 / 3.0, 1.0)
        base = coeffs.symmetric_value(eta0)
        if base <= 0.0:
            continue
        checked += 1
        etas = np.linspace(eta0, 1.0, 16)
        curve = coeffs.K * etas * etas - coeffs.L * etas
        worst_drop = max(worst_drop, float(np.max(base - curve)))
    results.append(
        PropertyResult(
            "feasible efficiencies are upper-closed",
            worst_drop <= 1e-12,
            worst_drop,
            1e-12,
            detail=f"{checked} positive-violation samples",
        )
    )
    return results


_LEVEL2_EQUALITY_FIXTURE = [
    [(0, 1), (2, 8), (3, 6), (4, 7)],
    [(0, 2), (1, 5), (3, 9), (4, 10)],
    [(0, 3), (1, 6), (2, 9), (4, 12)],
    [(0, 4), (1, 7), (2, 10), (3, 11)],
    [(0, 5), (1, 2), (6, 9), (7, 10)],
    [(0, 6), (1, 3), (8, 9), (7, 12)],
    [(0, 7), (1, 4), (6, 11), (8, 10)],
    [(0, 9), (2, 3), (5, 6), (10, 12)],
    [(0, 10), (2, 4), (5, 7), (9, 11)],
    [(0, 11), (3, 4), (6, 7), (9, 10)],
    [(1, 9), (3, 5)],
    [(1, 10), (4, 5)],
    [(1, 11), (3, 7)],
    [(1, 12), (4, 6)],
    [(2, 6), (3, 8)],
    [(2, 7), (4, 8)],
    [(2, 11), (3, 10)],
    [(2, 12), (4, 9)],
    [(6, 10), (8, 11)],
    [(7, 9), (8, 12)],
]


def suite_npa(rng_seed: int = 20240813) -> list[PropertyResult]:
    rng = np.random.default_rng(rng_seed)
    results = []

    s2 = npa.build_moment_structure("2")
    generated = {frozenset(g) for g in s2.equalities()}
    fixture = {frozenset(g) for g in _LEVEL2_EQUALITY_FIXTURE}
    match = generated == fixture and s2.equality_count() == 40
    results.append(
        PropertyResult("level-2 equalities match the forty known identities", match, float(s2.equality_count()), 40.0)
    )

    s1 = npa.build_moment_structure("1")
    expected_words = ["A0", "A1", "B0", "B1", "A0A1", "A0B0", "A0B1", "A1B0", "A1B1", "B0B1"]
    layout = [
        s1.class_words[s1.entry_class[(i, j)]]
        for i in range(5)
        for j in range(i + 1, 5)
    ]
    ok = sorted(layout) == sorted(expected_words) and len(set(layout)) == 10
    results.append(PropertyResult("level-1 grid holds the ten expected moments", ok, float(len(set(layout))), 10.0))

    # probability functionals: normalization and reconstruction signs
    f_sum = None
    for a in (+1, -1):
        for b in (+1, -1):
            pf = npa.probability_functional(s2, a, b, 0, 0)
            f_sum = pf if f_sum is None else f_sum.plus(pf)
    norm_ok = abs(f_sum.constant - 1.0) < 1e-15 and not f_sum.coeffs
    results.append(PropertyResult("probability functionals normalize", norm_ok, f_sum.constant, 1.0))

    # the direct half-correlator forms agree with probability assembly
    funcs = npa.eberhard_coefficient_functionals(s2)
    k_prob = (
        npa.probability_functional(s2, 1, 1, 0, 0)
        .plus(npa.probability_functional(s2, 1, 1, 1, 1).scaled(-1.0))
        .plus(npa.probability_functional(s2, 1, 1, 0, 1))
        .plus(npa.probability_functional(s2, 1, 1, 1, 0))
    )
    l_prob = (
        npa.probability_functional(s2, 1, 1, 0, 1)
        .plus(npa.probability_functional(s2, 1, 1, 1, 0))
        .plus(npa.probability_functional(s2, 1, -1, 0, 1))
        .plus(npa.probability_functional(s2, -1, 1, 1, 0))
    )

    def functional_gap(f, g):
        keys = set(f.coeffs) | set(g.coeffs)
        gap = abs(f.constant - g.constant)
        for key in keys:
            gap = max(gap, abs(f.coeffs.get(key, 0.0) - g.coeffs.get(key, 0.0)))
        return gap

    dev = max(functional_gap(funcs["K"], k_prob), functional_gap(funcs["L"], l_prob))
    results.append(PropertyResult("K and L forms agree with probability sums", dev <= 1e-15, dev, 1e-15))

    # moment matrices of actual realizations are feasible
    worst_eig = 0.0
    worst_eq = 0.0
    for angles in random_realizations(200, rng):
        gamma = npa.moment_matrix_from_realization(s2, QuantumRealization.from_angles(angles))
        worst_eig = max(worst_eig, float(max(0.0, -np.linalg.eigvalsh(gamma)[0])))
        for group in s2.equalities():
            base = gamma[group[0]]
            for cell in group[1:]:
                worst_eq = max(worst_eq, abs(gamma[cell] - base))
        worst_eq = max(worst_eq, float(np.max(np.abs(np.diag(gamma) - 1.0))))
    results.append(PropertyResult("realization moments are PSD", worst_eig <= 1e-10, worst_eig, 1e-10))
    results.append(PropertyResult("realization moments satisfy the equalities", worst_eq <= 1e-12, worst_eq, 1e-12))

    # relaxation value nondecreasing in the efficiency, and levels nested
    etas = np.linspace(2.0 / 3.0, 1.0, 8)
    values = []
    for eta in etas:
        problem, _ = npa.dense_sdp_for_noise(s2, float(eta), 0.0)
        values.append(solve_sdp(problem, tol=1e-9).value)
    drops = float(max(0.0, np.max(np.diff(values) * -1.0)))
    results.append(PropertyResult("relaxation value nondecreasing in efficiency", drops <= 1e-8, drops, 1e-8))

    nested_ok = True
    worst_nest = 0.0
    for eta in (0.75, 0.9, 1.0):
        vals = []
        for level in ("1", "1+AB", "2"):
            value, _ = npa.max_noisy_eberhard_sdp(eta, 0.0, level)
            vals.append(value)
        worst_nest = max(worst_nest, vals[1] - vals[0], vals[2] - vals[1])
        nested_ok = nested_ok and vals[0] >= vals[1] - 1e-8 and vals[1] >= vals[2] - 1e-8
    results.append(PropertyResult("levels nest (coarser never smaller)", nested_ok, worst_nest, 1e-8))
    return results


def suite_analytic(rng_seed: int = 20240814, mc_trials: int = 100_000) -> list[PropertyResult]:
    rng = np.random.default_rng(rng_seed)
    results = []

    grid = np.linspace(1e-6, analytic.Q_PR / 2.0, 2000)
    bounds = np.array([analytic.eta_ns(float(e)) for e in grid])
    q = analytic.Q_PR
    residual = float(np.max(np.abs(1.5 * q * bounds**2 - q * bounds - grid)))
    results.append(PropertyResult("closed form solves its quadratic", residual <= 1e-13, residual, 1e-13))

    increasing = bool(np.all(np.diff(bounds) > 0.0))
    results.append(PropertyResult("bound strictly increasing", increasing, float(np.min(np.diff(bounds))), 0.0))

    endpoint = analytic.eta_ns(analytic.Q_PR / 2.0)
    results.append(PropertyResult("endpoint maps to one exactly", endpoint == 1.0, endpoint, 1.0))

    counterexamples, worst_margin = proposition1_monte_carlo(mc_trials, rng)
    results.append(
        PropertyResult(
            "no counterexample to the domination chain",
            counterexamples == 0,
            worst_margin,
            0.0,
            detail=f"{mc_trials} decompositions",
        )
    )

    # chain-link reports on a small structured sample
    chain_ok = True
    for d in random_tsirelson_decompositions(200, rng):
        eta_zero = (d.p_pr + d.alpha) / (1.5 * d.p_pr + d.alpha)
        eta = float(min(1.0, eta_zero + 0.5 * (1.0 - eta_zero)))
        report = analytic.verify_proposition1(d, eta)
        if report.e_obs > 0:
            chain_ok = chain_ok and report.passed
    results.append(PropertyResult("chain links hold on sampled decompositions", chain_ok, 0.0, 0.0))

    # formula agrees with pushing the mixture through the channel
    worst = 0.0
    for d in random_tsirelson_decompositions(300, rng):
        eta = rng.uniform(0.0, 1.0)
        direct = eberhard_value(
            apply_detection_noise(ns_mixture(d), NoiseParams.symmetric(eta))
        )
        worst = max(worst, abs(direct - analytic.noisy_eberhard_ns_mixture(d, eta)))
    results.append(PropertyResult("mixture curve matches channel", worst <= 1e-12, worst, 1e-12))

    # tight case: extremal mixture with alpha = 0 gives the bound exactly
    d = NsDecomposition(p_pr=analytic.Q_PR, p4=1.0 - analytic.Q_PR)
    worst_tight = 0.0
    for eta in np.linspace(0.67, 1.0, 12):
        e_obs = analytic.noisy_eberhard_ns_mixture(d, float(eta))
        if e_obs > 0:
            worst_tight = max(worst_tight, abs(analytic.eta_ns(e_obs) - eta))
    results.append(PropertyResult("extremal mixture saturates the bound", worst_tight <= 1e-9, worst_tight, 1e-9))
    return results


def run_suite(name: str, **kwargs) -> list[PropertyResult]:
    if name == "core":
        return suite_core(**kwargs)
    if name == "quantum":
        return suite_quantum(**kwargs)
    if name == "npa":
        return suite_npa(**kwargs)
    if name == "analytic":
        return suite_analytic(**kwargs)
    if name == "all":
        out = []
        for suite in SUITE_NAMES:
            out.extend(run_suite(suite))
        return out
    raise behavior.DomainError(f"unknown suite {name!r}; choose from {SUITE_NAMES + ('all',)}")
