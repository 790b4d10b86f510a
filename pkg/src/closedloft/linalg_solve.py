"""Collocation-system assembly, dense/banded solves, stiffness matrices by
Gauss quadrature, KKT saddle-point solves, and rank diagnostics.

Dense factorizations are delegated to LAPACK (scipy/numpy); the no-pivot
banded elimination and all assembly code live here.  Sizes are desk scale
(a few hundred unknowns), so everything is dense row-major.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .errors import InvalidInputError, SingularSystemError, ZeroPivotError
from .spline_core import CYCLIC, CLAMPED

# A pivot below this fraction of the largest matrix entry is treated as an
# exact zero (numerically singular).
PIVOT_TOL = 1e-14


@dataclass(frozen=True)
class RankReport:
    """Singular-value summary of a matrix."""

    rank: int
    singular_values: np.ndarray
    condition: float
    tolerance: float

    @property
    def sigma_ratio(self):
        s = self.singular_values
        return float(s[-1] / s[0]) if s.size and s[0] > 0 else 0.0


def rank_report(matrix, rel_tol=1e-12):
    """Rank and condition estimate via singular values (LAPACK bidiagonalization)."""
    m = np.asarray(matrix, dtype=float)
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return RankReport(0, s, float("inf"), rel_tol)
    rank = int(np.sum(s > rel_tol * s[0]))
    cond = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")
    return RankReport(rank, s, cond, rel_tol)


@dataclass(frozen=True)
class ClosedSystemShape:
    """Block layout of the closed system matrix [N; A]."""

    n: int      # highest data-point index
    nhat: int   # highest distinct-control index
    degree: int

    @property
    def rows(self):
        return self.n + self.degree + 1

    @property
    def cols(self):
        return self.nhat + self.degree + 1

    @property
    def top_rows(self):
        return self.n + 1


def assemble_open_collocation(params, kv):
    """Collocation matrix N with N[i, j] = N_{j,p}(t_i) over a clamped knot vector."""
    if kv.style != CLAMPED:
        raise InvalidInputError("open collocation requires a clamped knot vector")
    t = params.values
    if t[0] < 0.0 or t[-1] > 1.0:
        raise InvalidInputError("parameters outside the knot vector domain")
    return _kernels.collocation_matrix(kv.knots, kv.degree, kv.n_basis, t)


def assemble_closed_system(params, kv, nhat):
    """Closed system matrix: basis rows stacked over the p wrap-constraint rows.

    Row r of the constraint block reads +1 at column r and -1 at column
    n̂+1+r, enforcing the control-point wrap of the cyclic representation.
    """
    if kv.style != CYCLIC:
        raise InvalidInputError("closed systems require a cyclic knot vector")
    p = kv.degree
    nhat = int(nhat)
    if kv.n_basis != nhat + p + 1:
        raise InvalidInputError(
            f"knot vector supports {kv.n_basis} basis functions, expected {nhat + p + 1}"
        )
    t = params.values
    if t[0] < 0.0 or t[-1] >= 1.0:
        raise InvalidInputError("closed collocation parameters must lie in [0, 1)")
    n = t.size - 1
    shape = ClosedSystemShape(n, nhat, p)
    matrix = np.zeros((shape.rows, shape.cols))
    matrix[: shape.top_rows] = _kernels.collocation_matrix(kv.knots, p, shape.cols, t)
    for r in range(p):
        matrix[shape.top_rows + r, r] = 1.0
        matrix[shape.top_rows + r, nhat + 1 + r] = -1.0
    return matrix, shape


def stack_closed_rhs(points, degree):
    """Right-hand side for the closed system: the data points over p zero rows."""
    pts = np.asarray(points, dtype=float)
    return np.vstack([pts, np.zeros((degree, pts.shape[1]))])


def solve_dense(matrix, rhs):
    """LU solve with partial pivoting; raises on numerically singular input."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError("solve_dense requires a square matrix")
    scale = np.abs(m).max()
    if scale == 0.0:
        raise SingularSystemError("zero matrix")
    with warnings.catch_warnings():
        # singularity is detected below via the pivot magnitudes
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    if np.abs(np.diag(lu)).min() <= PIVOT_TOL * scale:
        raise SingularSystemError(
            "matrix is numerically singular", rank_report=rank_report(m)
        )
    return scipy.linalg.lu_solve((lu, piv), np.asarray(rhs, dtype=float), check_finite=False)


def solve_banded_no_pivot(matrix, semi_bandwidth, rhs):
    """Gaussian elimination without pivoting, restricted to the band.

    Meant for the totally-positive banded systems of open averaging-knot
    interpolation; a vanishing pivot raises :class:`ZeroPivotError` so the
    caller can fall back to the pivoted dense solver.
    """
    a = np.array(matrix, dtype=float)
    b = np.atleast_2d(np.asarray(rhs, dtype=float).T).T.copy()
    n = a.shape[0]
    if a.shape[1] != n:
        raise InvalidInputError("banded solver requires a square matrix")
    bw = int(semi_bandwidth)
    scale = np.abs(a).max()
    for k in range(n):
        piv = a[k, k]
        if abs(piv) <= PIVOT_TOL * scale:
            raise ZeroPivotError(f"zero pivot at row {k}")
        hi = min(k + bw + 1, n)
        for i in range(k + 1, hi):
            if a[i, k] != 0.0:
                f = a[i, k] / piv
                a[i, k:hi] -= f * a[k, k:hi]
                b[i] -= f * b[k]
    x = np.empty_like(b)
    for i in range(n - 1, -1, -1):
        hi = min(i + bw + 1, n)
        x[i] = (b[i] - a[i, i + 1: hi].T @ x[i + 1: hi]) / a[i, i]
    return x if np.ndim(rhs) > 1 else x[:, 0]


def semi_bandwidth(matrix, tol=0.0):
    """Largest |i - j| with a nonzero entry."""
    m = np.asarray(matrix)
    rows, cols = np.nonzero(np.abs(m) > tol)
    return int(np.abs(rows - cols).max()) if rows.size else 0


def stiffness_matrix(kv, alpha=1.0, beta=0.2):
    """Gram matrix of basis derivatives: ∫ α N'N'ᵀ + β N''N''ᵀ over [0, 1].

    Uses (p+1)-point Gauss-Legendre per distinct knot span, which integrates
    the piecewise-polynomial integrands (degree <= 2p-2) exactly.  For a
    cyclic knot vector the integral covers one period only.  The result is
    exactly symmetric and banded with bandwidth 2p+1.
    """
    if alpha < 0.0 or beta < 0.0:
        raise InvalidInputError("stretch and bend weights must be non-negative")
    p = kv.degree
    if beta > 0.0 and p < 2:
        raise InvalidInputError("bend energy requires degree >= 2")
    nb = kv.n_basis
    stiff = np.zeros((nb, nb))
    if alpha == 0.0 and beta == 0.0:
        return stiff
    order = 2 if beta > 0.0 else 1
    nodes, weights = np.polynomial.legendre.leggauss(p + 1)
    d = kv.domain_knots
    for a, b in zip(d[:-1], d[1:]):
        if b - a <= 0.0:
            continue
        mid, half = (a + b) / 2.0, (b - a) / 2.0
        for x, w in zip(nodes, weights):
            u = mid + half * x
            span = int(_kernels.find_span(kv.knots, p, u))
            ders = _kernels.ders_basis_funs(kv.knots, p, span, u, order)
            sl = slice(span - p, span + 1)
            if alpha > 0.0:
                stiff[sl, sl] += (alpha * w * half) * np.outer(ders[1], ders[1])
            if beta > 0.0:
                stiff[sl, sl] += (beta * w * half) * np.outer(ders[2], ders[2])
    return stiff


def curve_energy(stiff, controls):
    """Total PᵀKP energy summed over the coordinate columns."""
    c = np.asarray(controls, dtype=float)
    return float(np.sum(c * (stiff @ c)))


def solve_kkt(stiff, constraints, rhs):
    """Minimize PᵀKP subject to C P = rhs via the Lagrange saddle system.

    Returns ``(P, multipliers)``; rhs may have several columns (one per
    coordinate).
    """
    k = np.asarray(stiff, dtype=float)
    c = np.asarray(constraints, dtype=float)
    r = np.asarray(rhs, dtype=float)
    nb = k.shape[0]
    nc = c.shape[0]
    if k.shape != (nb, nb) or c.shape[1] != nb or r.shape[0] != nc:
        raise InvalidInputError("inconsistent KKT block dimensions")
    kkt = np.zeros((nb + nc, nb + nc))
    kkt[:nb, :nb] = k
    kkt[:nb, nb:] = c.T
    kkt[nb:, :nb] = c
    full_rhs = np.vstack([np.zeros((nb,) + r.shape[1:]), r])
    try:
        sol = solve_dense(kkt, full_rhs)
    except SingularSystemError as exc:
        c_report = rank_report(c)
        if c_report.rank < nc:
            raise SingularSystemError(
                f"constraint block is rank-deficient (rank {c_report.rank} of {nc})",
                rank_report=c_report,
            ) from exc
        raise SingularSystemError(
            "KKT matrix is singular (stiffness block degenerate on the feasible set)",
            rank_report=exc.rank_report,
        ) from exc
    return sol[:nb], sol[nb:]
