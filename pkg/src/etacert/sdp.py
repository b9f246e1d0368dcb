"""Dense semidefinite programming sized for small moment-matrix problems.

Solves   maximize  <C, X> + offset
         s.t.      <A_k, X> = b_k   (k = 1..m),   X >= 0 (PSD)

with a primal-dual path-following interior-point method using the
Nesterov-Todd scaling.  Everything is dense: the matrices here are at most
16x16 with fewer than ~100 equality constraints, so full factorizations per
iteration are cheap and keep the loop auditable.

The dual problem is  minimize b'y  s.t.  Z = sum_k y_k A_k - C >= 0; with
both iterates feasible the duality gap equals <X, Z>, which is driven to the
requested tolerance.  Iterates start at X = I (strictly feasible for the
moment problems this package builds, whose constraints pin the diagonal to
one) and a multiple of the identity for Z.

Degenerate optimal faces make the late Newton systems as ill-conditioned as
1/gap^2, which float64 cannot solve below gaps of roughly 1e-8.  The loop
therefore runs in float64 while it is cheap and switches the linear algebra
to extended precision (x86 long double) for the final decade, using local
Cholesky and triangular kernels since LAPACK only covers float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, eigvalsh, solve_triangular, svd

from .behavior import DomainError

__all__ = [
    "DenseSdp",
    "SdpSolution",
    "solve_sdp",
    "dense_sdp_from_interchange",
]

_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class DenseSdp:
    """Maximization-sense SDP data: objective C (+ offset) and equalities."""

    dim: int
    objective: np.ndarray
    offset: float
    constraints: tuple[tuple[np.ndarray, float], ...]

    def __post_init__(self):
        n = int(self.dim)
        c = np.asarray(self.objective, dtype=float)
        if c.shape != (n, n):
            raise DomainError(f"objective must be {n}x{n}, got {c.shape}")
        if np.max(np.abs(c - c.T)) > _SYMMETRY_TOL:
            raise DomainError("objective matrix must be symmetric")
        frozen = []
        for a, b in self.constraints:
            a = np.asarray(a, dtype=float)
            if a.shape != (n, n):
                raise DomainError(f"constraint matrix must be {n}x{n}, got {a.shape}")
            if np.max(np.abs(a - a.T)) > _SYMMETRY_TOL:
                raise DomainError("constraint matrices must be symmetric")
            a = a.copy()
            a.flags.writeable = False
            frozen.append((a, float(b)))
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "dim", n)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraints", tuple(frozen))

    @property
    def m(self) -> int:
        return len(self.constraints)


@dataclass(frozen=True)
class SdpSolution:
    value: float
    X: np.ndarray
    y: np.ndarray
    dual_value: float
    gap: float
    status: str
    iterations: int
    primal_residual: float
    dual_residual: float

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


# ---------------------------------------------------------------------------
# precision-agnostic linear algebra kernels
# ---------------------------------------------------------------------------

def _chol(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; local kernel for dtypes LAPACK cannot take."""
    if a.dtype == np.float64:
        return cholesky(a, lower=True)
    n = a.shape[0]
    l = np.zeros_like(a)
    for j in range(n):
        s = a[j, j] - l[j, :j] @ l[j, :j]
        if s <= 0.0:
            raise np.linalg.LinAlgError("matrix is not positive definite")
        l[j, j] = np.sqrt(s)
        if j + 1 < n:
            l[j + 1 :, j] = (a[j + 1 :, j] - l[j + 1 :, :j] @ l[j, :j]) / l[j, j]
    return l


def _solve_lower(l: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = np.array(b, dtype=l.dtype, copy=True)
    for i in range(l.shape[0]):
        x[i] = (x[i] - l[i, :i] @ x[:i]) / l[i, i]
    return x


def _solve_upper(u: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = u.shape[0]
    x = np.array(b, dtype=u.dtype, copy=True)
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - u[i, i + 1 :] @ x[i + 1 :]) / u[i, i]
    return x


def _spd_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    l = _chol(a)
    return _solve_upper(l.T, _solve_lower(l, b))


def _qr_r(a: np.ndarray) -> np.ndarray:
    """Triangular factor of a tall matrix by Householder reflections.

    Local kernel for dtypes LAPACK cannot take; only R is needed since the
    callers solve normal equations R'R x = rhs.
    """
    r = np.array(a, copy=True)
    rows, cols = r.shape
    for k in range(cols):
        col = r[k:, k]
        alpha = np.sqrt(col @ col)
        if alpha == 0.0:
            raise np.linalg.LinAlgError("rank-deficient constraint basis")
        if col[0] > 0:
            alpha = -alpha
        v = col.copy()
        v[0] -= alpha
        vn = v @ v
        if vn > 0.0:
            w = (v @ r[k:, k:]) * (2.0 / vn)
            r[k:, k:] -= np.outer(v, w)
        r[k, k] = alpha
        r[k + 1 :, k] = 0.0
    return r[:cols, :cols]


def _max_step(s: np.ndarray, ds: np.ndarray) -> float:
    """Largest alpha with s + alpha ds still positive definite (0 if s isn't)."""
    s64 = np.asarray(s, dtype=np.float64)
    ds64 = np.asarray(ds, dtype=np.float64)
    try:
        l = cholesky(s64, lower=True)
    except np.linalg.LinAlgError:
        return 0.0
    w = np.linalg.solve(l, np.linalg.solve(l, ds64.T).T)
    lam = float(eigvalsh(0.5 * (w + w.T), check_finite=False)[0])
    if lam >= -1e-16:
        return math.inf
    return -1.0 / lam


def _nt_factor(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Factor T of the scaling point W = T T' with W Z W = X.

    The SVD runs in float64 (accuracy of the scaling point itself is not
    critical, only consistency of its use); factors are formed in the working
    precision.
    """
    lx = _chol(x)
    lz = _chol(z)
    _, sig, vt = svd(np.asarray(lz.T @ lx, dtype=np.float64))
    return lx @ vt.T.astype(x.dtype) / np.sqrt(sig.astype(x.dtype))


def solve_sdp(p: DenseSdp, tol: float = 1e-9, max_iterations: int = 200) -> SdpSolution:
    """Primal-dual solve to the requested absolute duality gap."""
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    n, m = p.dim, p.m
    if m == 0:
        raise DomainError("problem needs at least one equality constraint")
    c64 = p.objective
    a64 = np.stack([a for a, _ in p.constraints])
    b64 = np.array([bk for _, bk in p.constraints])

    # extended precision engages for the final decade where float64 stalls
    switch_gap = max(200.0 * tol, 1e-7)
    work = np.float64
    c, a_stack, b = c64, a64, b64
    x = np.eye(n)
    y = np.zeros(m)
    z = (1.0 + float(np.linalg.norm(c64, 2))) * np.eye(n)

    def lift(dtype):
        nonlocal c, a_stack, b, x, y, z, work
        work = dtype
        c = c64.astype(dtype)
        a_stack = a64.astype(dtype)
        b = b64.astype(dtype)
        x = x.astype(dtype)
        y = y.astype(dtype)
        z = z.astype(dtype)

    def apply_a(mat: np.ndarray) -> np.ndarray:
        return np.einsum("kab,ba->k", a_stack, mat)

    def adjoint_a(vec: np.ndarray) -> np.ndarray:
        return np.einsum("k,kab->ab", vec, a_stack)

    def residuals():
        rp = b - apply_a(x)
        rd = c + z - adjoint_a(y)
        return rp, rd, float(np.sum(x * z))

    status = "max_iter"
    it = 0
    best = (math.inf, x, y, z)
    for it in range(1, max_iterations + 1):
        rp, rd, compl = residuals()
        pres = float(np.max(np.abs(rp)))
        dres = float(np.max(np.abs(rd)))
        score = max(abs(compl), pres, dres)
        if score < best[0]:
            best = (score, x.copy(), y.copy(), z.copy())
        if compl <= tol and pres <= tol and dres <= tol:
            status = "optimal"
            break
        if work == np.float64 and compl <= switch_gap and np.longdouble is not np.float64:
            lift(np.longdouble)
            rp, rd, compl = residuals()

        mu = compl / n
        try:
            t = _nt_factor(x, z)
            zl = _chol(z)
            zinv = _solve_upper(zl.T, _solve_lower(zl, np.eye(n, dtype=work)))
            scaled_a = np.einsum("ai,kij,jb->kab", t.T, a_stack, t)
            basis = scaled_a.reshape(m, n * n)
            # Schur complement <A_j, W A_k W> is the Gram matrix of the
            # scaled constraints; going through the QR factor of their span
            # halves the condition-number exponent near the boundary
            if work == np.float64:
                r_factor = np.linalg.qr(basis.T, mode="r")
            else:
                r_factor = _qr_r(basis.T)
        except np.linalg.LinAlgError:
            break

        rd_scaled = t.T @ rd @ t
        base_rhs = np.einsum("kab,ba->k", scaled_a, rd_scaled) - b
        a_zinv = apply_a(zinv)

        def schur_solve(rhs: np.ndarray) -> np.ndarray:
            def tri(v: np.ndarray) -> np.ndarray:
                if work == np.float64:
                    u = solve_triangular(r_factor.T, v, lower=True)
                    return solve_triangular(r_factor, u, lower=False)
                return _solve_upper(r_factor, _solve_lower(r_factor.T, v))

            dy = tri(rhs)
            for _ in range(2):
                dy = dy + tri(rhs - basis @ (dy @ basis))
            return dy

        def direction(sigma_mu: float):
            # dX + W dZ W = sigma_mu Z^{-1} - X ; dZ = A*(dy) - Rd ; A(dX) = rp
            rhs = sigma_mu * a_zinv + base_rhs
            dy = schur_solve(rhs)
            dz = adjoint_a(dy) - rd
            dz = 0.5 * (dz + dz.T)
            dx = sigma_mu * zinv - x - t @ (t.T @ dz @ t) @ t.T
            return 0.5 * (dx + dx.T), dy, dz

        # affine direction fixes the centering weight; never aim far below
        # the requested gap, where even exact directions buy nothing
        dx_a, _, dz_a = direction(work(0.0))
        ap = min(1.0, 0.99 * _max_step(x, dx_a))
        ad = min(1.0, 0.99 * _max_step(z, dz_a))
        mu_aff = float(np.sum((x + ap * dx_a) * (z + ad * dz_a))) / n
        sigma = min(0.99, max((mu_aff / mu) ** 3, 0.2 * tol / (n * mu), 1e-6))

        dx, dy, dz = direction(work(sigma * mu))
        ap = min(1.0, 0.99 * _max_step(x, dx))
        ad = min(1.0, 0.99 * _max_step(z, dz))
        if min(ap, ad) < 1e-10:
            break
        # keep the iterate inside a wide centrality neighborhood so the next
        # scaling point stays meaningful
        for _ in range(30):
            xn = np.asarray(x + ap * dx, dtype=np.float64)
            zn = np.asarray(z + ad * dz, dtype=np.float64)
            mu_next = float(np.sum(xn * zn)) / n
            try:
                lzn = cholesky(zn, lower=True)
                lam = eigvalsh(lzn.T @ xn @ lzn, check_finite=False)
            except np.linalg.LinAlgError:
                lam = np.array([-1.0])
            if lam[0] >= 0.02 * mu_next:
                break
            ap *= 0.7
            ad *= 0.7
        x = 0.5 * ((x + ap * dx) + (x + ap * dx).T)
        y = y + ad * dy
        z = 0.5 * ((z + ad * dz) + (z + ad * dz).T)

    if status != "optimal":
        rp, rd, compl = residuals()
        if max(abs(compl), float(np.max(np.abs(rp))), float(np.max(np.abs(rd)))) > best[0]:
            _, x, y, z = best

    x64 = np.asarray(x, dtype=np.float64)
    y64 = np.asarray(y, dtype=np.float64)
    z64 = np.asarray(z, dtype=np.float64)
    rp = b64 - np.einsum("kab,ba->k", a64, x64)
    rd = c64 + z64 - np.einsum("k,kab->ab", y64, a64)
    value = float(np.sum(c64 * x64)) + p.offset
    dual_value = float(b64 @ y64) + p.offset
    return SdpSolution(
        value=value,
        X=x64,
        y=y64,
        dual_value=dual_value,
        gap=float(abs(dual_value - value)),
        status=status,
        iterations=it,
        primal_residual=float(np.max(np.abs(rp))),
        dual_residual=float(np.max(np.abs(rd))),
    )


def dense_sdp_from_interchange(doc: dict) -> DenseSdp:
    """Rebuild a solvable problem from the moment-module interchange form.

    The document carries the matrix dimension, an affine objective as sparse
    per-class coefficients, and the class -> cells map; unit classes pin
    their cells to one, every other class's cells are chained equal.
    """
    n = int(doc["dimension"])
    classes = {int(cid): spec for cid, spec in doc["classes"].items()}
    unit = set(int(cid) for cid in doc.get("unit_classes", ()))

    def sym_unit(i: int, j: int) -> np.ndarray:
        a = np.zeros((n, n))
        if i == j:
            a[i, i] = 1.0
        else:
            a[i, j] = a[j, i] = 0.5
        return a

    constraints: list[tuple[np.ndarray, float]] = []
    for cid in sorted(classes):
        cells = [tuple(cell) for cell in classes[cid]["cells"]]
        if cid in unit:
            for i, j in cells:
                constraints.append((sym_unit(i, j), 1.0))
        elif len(cells) > 1:
            base = sym_unit(*cells[0])
            for i, j in cells[1:]:
                constraints.append((base - sym_unit(i, j), 0.0))

    c = np.zeros((n, n))
    for item in doc["objective"]["coefficients"]:
        cid = int(item["class"])
        i, j = classes[cid]["cells"][0]
        c += float(item["coeff"]) * sym_unit(i, j)
    return DenseSdp(
        dim=n,
        objective=c,
        offset=float(doc["objective"]["constant"]),
        constraints=tuple(constraints),
    )
