"""Solver contract: analytic optima, certificates, determinism, interchange."""

import math

import numpy as np
import pytest

from etacert.behavior import DomainError
from etacert.npa import build_moment_structure, dense_sdp_for_noise, sdp_interchange
from etacert.sdp import DenseSdp, dense_sdp_from_interchange, solve_sdp


def _sym_unit(n, i, j):
    a = np.zeros((n, n))
    if i == j:
        a[i, i] = 1.0
    else:
        a[i, j] = a[j, i] = 0.5
    return a


class TestContract:
    def test_two_by_two_correlation(self):
        # maximize the off-diagonal of a 2x2 PSD matrix with unit diagonal
        c = _sym_unit(2, 0, 1)
        p = DenseSdp(2, c, 0.0, ((_sym_unit(2, 0, 0), 1.0), (_sym_unit(2, 1, 1), 1.0)))
        sol = solve_sdp(p, tol=1e-9)
        assert sol.optimal
        assert sol.value == pytest.approx(1.0, abs=1e-8)

    def test_correlator_bounded_by_one(self):
        s1 = build_moment_structure("1")
        n = s1.dim
        i, j = s1.representative_cell(s1.class_of_word((0, 2)))  # <A0 B0>
        c = _sym_unit(n, i, j)
        constraints = [(_sym_unit(n, k, k), 1.0) for k in range(n)]
        for group in s1.equalities():
            base = _sym_unit(n, *group[0])
            for cell in group[1:]:
                constraints.append((base - _sym_unit(n, *cell), 0.0))
        sol = solve_sdp(DenseSdp(n, c, 0.0, tuple(constraints)), tol=1e-9)
        assert sol.optimal
        assert sol.value == pytest.approx(1.0, abs=1e-8)

    def test_chsh_reaches_tsirelson_at_level_one(self):
        s1 = build_moment_structure("1")
        n = s1.dim
        c = np.zeros((n, n))
        for word, sign in (((0, 2), 1.0), ((0, 3), 1.0), ((1, 2), 1.0), ((1, 3), -1.0)):
            i, j = s1.representative_cell(s1.class_of_word(word))
            c += sign * _sym_unit(n, i, j)
        constraints = [(_sym_unit(n, k, k), 1.0) for k in range(n)]
        sol = solve_sdp(DenseSdp(n, c, 0.0, tuple(constraints)), tol=1e-9)
        assert sol.optimal
        assert sol.value == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-7)

    def test_eberhard_maximum_level_two(self):
        problem, _ = dense_sdp_for_noise(build_moment_structure("2"), 1.0, 0.0)
        sol = solve_sdp(problem, tol=1e-9)
        assert sol.optimal
        assert sol.value == pytest.approx((math.sqrt(2.0) - 1.0) / 2.0, abs=1e-7)

    def test_certificates(self):
        problem, _ = dense_sdp_for_noise(build_moment_structure("2"), 0.85, 0.0)
        sol = solve_sdp(problem, tol=1e-9)
        assert sol.optimal
        assert sol.gap <= 1e-9
        # independent checks, not trusting solver internals
        assert np.linalg.eigvalsh(sol.X)[0] >= -1e-9
        for a, b in problem.constraints:
            assert abs(np.sum(a * sol.X) - b) <= 1e-9
        assert sol.dual_value >= sol.value - 1e-12

    def test_determinism(self):
        problem, _ = dense_sdp_for_noise(build_moment_structure("1+AB"), 0.8, 0.01)
        first = solve_sdp(problem, tol=1e-9)
        second = solve_sdp(problem, tol=1e-9)
        assert abs(first.value - second.value) <= 1e-10
        assert np.array_equal(first.X, second.X)

    def test_shape_validation(self):
        with pytest.raises(DomainError):
            DenseSdp(2, np.zeros((3, 3)), 0.0, ())
        with pytest.raises(DomainError):
            DenseSdp(2, np.array([[0.0, 1.0], [0.5, 0.0]]), 0.0, ())
        with pytest.raises(DomainError):
            solve_sdp(DenseSdp(2, np.zeros((2, 2)), 0.0, ()), tol=1e-9)
        with pytest.raises(DomainError):
            solve_sdp(
                DenseSdp(2, np.zeros((2, 2)), 0.0, ((_sym_unit(2, 0, 0), 1.0),)),
                tol=-1.0,
            )


class TestInterchange:
    @pytest.mark.parametrize("level", ["1", "1+AB", "2"])
    def test_round_trip_matches_direct_assembly(self, level):
        eta, xi = 0.82, 0.005
        doc = sdp_interchange(eta, xi, level)
        rebuilt = dense_sdp_from_interchange(doc)
        direct, functional = dense_sdp_for_noise(build_moment_structure(level), eta, xi)
        assert rebuilt.dim == direct.dim
        assert rebuilt.offset == pytest.approx(direct.offset, abs=1e-15)
        sol_direct = solve_sdp(direct, tol=1e-9)
        sol_rebuilt = solve_sdp(rebuilt, tol=1e-9)
        assert sol_rebuilt.value == pytest.approx(sol_direct.value, abs=1e-8)

    def test_document_schema(self):
        doc = sdp_interchange(0.9, 0.0, "2")
        assert doc["dimension"] == 13
        assert doc["level"] == "2"
        assert {"constant", "coefficients"} <= set(doc["objective"])
        assert all({"class", "coeff"} == set(item) for item in doc["objective"]["coefficients"])
        cells = [tuple(c) for spec in doc["classes"].values() for c in spec["cells"]]
        assert len(cells) == len(set(cells)) == 13 * 14 // 2
