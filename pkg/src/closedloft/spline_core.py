"""B-spline primitives: knot vectors, basis evaluation, open/closed curves,
tensor-product surfaces, clamping, knot refinement and knot-vector merging.

Conventions used throughout the package:

* All knot vectors are normalized to the domain ``[0, 1]``.
* Points are float64 arrays of shape ``(n, 3)``; single points are ``(3,)``.
* Closed curves are stored in canonical form: the distinct control points
  only, with the wrap handled by :meth:`BSplineCurve.expanded_controls`.
* Evaluation at the right domain endpoint is the limit from the left, so
  ``eval_curve(c, 1.0)`` is always defined.

Everything here is a pure function over immutable values; arrays are never
mutated after construction.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, InvalidInputError

CLAMPED = "clamped"
CYCLIC = "cyclic"

# Knots closer than this (on the normalized [0,1] domain) are treated as the
# same knot when merging and counting multiplicities.
KNOT_TOL = 1e-10


def as_points(points, min_count=1):
    """Validate and return an (n, 3) float64 point array."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise InvalidInputError(f"expected an (n, 3) point array, got shape {pts.shape}")
    if pts.shape[0] < min_count:
        raise InvalidInputError(f"need at least {min_count} points, got {pts.shape[0]}")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("point coordinates must be finite")
    return pts


def bbox_diagonal(points):
    pts = np.asarray(points, dtype=float)
    return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))


def validate_domain_knots(values):
    """Validate a domain-knot sequence u_0 < ... < u_{n+1} with u_0 = 0, u_{n+1} = 1."""
    d = np.asarray(values, dtype=float)
    if d.ndim != 1 or d.size < 2:
        raise InvalidInputError("domain knots must be a 1-D sequence of length >= 2")
    if not np.all(np.isfinite(d)):
        raise InvalidInputError("domain knots must be finite")
    if abs(d[0]) > 1e-12 or abs(d[-1] - 1.0) > 1e-12:
        raise InvalidInputError("domain knots must start at 0 and end at 1")
    if np.any(np.diff(d) <= 0):
        raise InvalidInputError("domain knots must be strictly increasing")
    return d


@dataclass(frozen=True)
class KnotVector:
    """A full knot array with its degree and style (clamped or cyclic).

    ``knots`` is the complete array including the p+1 repeated end knots
    (clamped) or the p cyclically-extended knots on each side (cyclic).
    """

    knots: np.ndarray
    degree: int
    style: str

    def __post_init__(self):
        kv = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", kv)
        p = self.degree
        if p < 1:
            raise InvalidInputError(f"degree must be >= 1, got {p}")
        if self.style not in (CLAMPED, CYCLIC):
            raise InvalidInputError(f"unknown knot-vector style {self.style!r}")
        if kv.ndim != 1 or kv.size < 2 * p + 2:
            raise InvalidInputError("knot array too short for degree")
        if np.any(np.diff(kv) < 0):
            raise InvalidInputError("knots must be non-decreasing")
        lo, hi = kv[p], kv[kv.size - p - 1]
        if abs(lo) > 1e-12 or abs(hi - 1.0) > 1e-12:
            raise InvalidInputError("domain must be [0, 1]")
        if self.style == CLAMPED:
            if np.any(kv[: p + 1] != kv[0]) or np.any(kv[-(p + 1):] != kv[-1]):
                raise InvalidInputError("clamped style requires p+1 equal end knots")
        else:
            self._check_cyclic_extension(kv, p)

    @staticmethod
    def _check_cyclic_extension(kv, p):
        n1 = kv.size - 2 * p - 1  # domain index of u_{n+1}
        for i in range(1, p + 1):
            left = kv[p - i]
            left_ref = kv[p - i + 1] + kv[p + n1 - i] - kv[p + n1 - i + 1]
            right = kv[p + n1 + i]
            right_ref = kv[p + n1 + i - 1] + kv[p + i] - kv[p + i - 1]
            if abs(left - left_ref) > 1e-9 or abs(right - right_ref) > 1e-9:
                raise InvalidInputError("knots do not satisfy the cyclic extension recurrences")

    @property
    def size(self):
        return int(self.knots.size)

    @property
    def n_basis(self):
        """Number of basis functions defined over this knot vector."""
        return self.size - self.degree - 1

    @property
    def domain_knots(self):
        """The domain segment u_0 .. u_{n+1} (a view)."""
        return self.knots[self.degree: self.size - self.degree]

    def interior_count(self):
        """Number of domain knots strictly inside (0, 1), with multiplicity."""
        d = self.domain_knots
        return int(np.sum((d > KNOT_TOL) & (d < 1.0 - KNOT_TOL)))

    def multiplicities(self):
        return knot_multiplicities(self.knots)

    def __eq__(self, other):
        if not isinstance(other, KnotVector):
            return NotImplemented
        return (
            self.degree == other.degree
            and self.style == other.style
            and self.knots.shape == other.knots.shape
            and bool(np.all(self.knots == other.knots))
        )


def cyclic_knot_vector(domain, degree):
    """Extend domain knots by the period-preserving recurrences on both sides.

    The p knots on each side are u_{-i} = u_{-(i-1)} + u_{n-i+1} - u_{n-i+2}
    and u_{n+i+1} = u_{n+i} + u_i - u_{i-1}; the domain segment is preserved
    verbatim.
    """
    d = validate_domain_knots(domain)
    p = int(degree)
    if p < 1:
        raise InvalidInputError(f"degree must be >= 1, got {p}")
    n1 = d.size - 1  # index of u_{n+1}
    full = np.empty(d.size + 2 * p)
    full[p: p + d.size] = d
    # The recurrences may reference already-extended knots when the domain is
    # shorter than the degree (e.g. a single span), so index the full array.
    for i in range(1, p + 1):
        full[p - i] = full[p - i + 1] + full[p + n1 - i] - full[p + n1 - i + 1]
        full[p + n1 + i] = full[p + n1 + i - 1] + full[p + i] - full[p + i - 1]
    return KnotVector(full, p, CYCLIC)


def clamped_knot_vector(domain, degree):
    """Clamped knot vector: p+1 zeros, the interior domain knots, p+1 ones."""
    d = validate_domain_knots(domain)
    p = int(degree)
    if p < 1:
        raise InvalidInputError(f"degree must be >= 1, got {p}")
    full = np.concatenate([np.zeros(p), d, np.ones(p)])
    return KnotVector(full, p, CLAMPED)


def _check_in_domain(u):
    u = np.asarray(u, dtype=float)
    if np.any(u < 0.0) or np.any(u > 1.0):
        bad = u[(u < 0.0) | (u > 1.0)]
        raise DomainError(f"parameter {float(np.atleast_1d(bad)[0])} outside domain [0, 1]")
    return u


def find_span(kv, u):
    _check_in_domain(u)
    return int(_kernels.find_span(kv.knots, kv.degree, float(u)))


def nonzero_basis(kv, u):
    """The p+1 nonzero basis values at u, with the containing span index."""
    _check_in_domain(u)
    span = int(_kernels.find_span(kv.knots, kv.degree, float(u)))
    return span, _kernels.basis_funs(kv.knots, kv.degree, span, float(u))


def basis_functions(kv, u):
    """Full row of basis values N_{j,p}(u), j = 0 .. n_basis-1."""
    _check_in_domain(u)
    row = _kernels.collocation_matrix(kv.knots, kv.degree, kv.n_basis, np.array([float(u)]))
    return row[0]


def basis_derivatives(kv, u, order, full=False):
    """Derivatives of the nonzero basis functions at u, orders 0 .. order.

    Returns ``(span, ders)`` with ders of shape (order+1, p+1), or the full
    (order+1, n_basis) array when ``full`` is set.  order = 0 reproduces
    :func:`nonzero_basis`.
    """
    _check_in_domain(u)
    k = int(order)
    if k < 0 or k > kv.degree:
        raise InvalidInputError(f"derivative order {k} outside 0..{kv.degree}")
    span = int(_kernels.find_span(kv.knots, kv.degree, float(u)))
    ders = _kernels.ders_basis_funs(kv.knots, kv.degree, span, float(u), k)
    if not full:
        return span, ders
    out = np.zeros((k + 1, kv.n_basis))
    out[:, span - kv.degree: span + 1] = ders
    return out


@dataclass(frozen=True)
class BSplineCurve:
    """Control points plus a knot vector.

    * ``kind == "open"``: ``control_points`` has ``n_basis`` rows and the
      knot vector is clamped.
    * ``kind == "closed"``: the knot vector is cyclic and ``control_points``
      holds only the distinct points (``n_basis - p`` rows); the expanded
      solver form repeats the first p points at the end.
    """

    degree: int
    knots: KnotVector
    control_points: np.ndarray
    kind: str = "open"

    def __post_init__(self):
        object.__setattr__(self, "control_points", as_points(self.control_points))
        if self.degree != self.knots.degree:
            raise InvalidInputError("curve degree does not match knot vector degree")
        n = self.control_points.shape[0]
        if self.kind == "open":
            if self.knots.style != CLAMPED:
                raise InvalidInputError("open curves require a clamped knot vector")
            if n != self.knots.n_basis:
                raise InvalidInputError(
                    f"open curve needs {self.knots.n_basis} control points, got {n}"
                )
        elif self.kind == "closed":
            if self.knots.style != CYCLIC:
                raise InvalidInputError("closed curves require a cyclic knot vector")
            if n != self.knots.n_basis - self.degree:
                raise InvalidInputError(
                    f"closed curve needs {self.knots.n_basis - self.degree} distinct "
                    f"control points, got {n}"
                )
        else:
            raise InvalidInputError(f"unknown curve kind {self.kind!r}")

    def expanded_controls(self):
        """Solver storage: distinct controls followed by a copy of the first p."""
        if self.kind == "open":
            return self.control_points
        return np.vstack([self.control_points, self.control_points[: self.degree]])

    @property
    def n_distinct(self):
        return self.control_points.shape[0]


def closed_curve_from_expanded(kv, expanded, snap=True):
    """Build a closed curve from expanded (n̂+p+1) solver controls.

    With ``snap`` (default) the wrap rows are discarded and the first p
    points are authoritative, which keeps the wrap identity exact.
    """
    expanded = as_points(expanded)
    p = kv.degree
    if expanded.shape[0] != kv.n_basis:
        raise InvalidInputError("expanded control count does not match knot vector")
    if not snap:
        dev = np.linalg.norm(expanded[-p:] - expanded[:p], axis=1).max() if p else 0.0
        if dev > 1e-9 * max(bbox_diagonal(expanded), 1.0):
            raise InvalidInputError("expanded controls do not satisfy the wrap identity")
    return BSplineCurve(p, kv, expanded[: kv.n_basis - p].copy(), kind="closed")


def eval_curve(curve, u):
    """Point(s) on the curve; scalar u gives (3,), array u gives (m, 3)."""
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    _check_in_domain(u_arr)
    pts = _kernels.curve_points(
        curve.knots.knots, curve.degree, curve.expanded_controls(), u_arr
    )
    return pts[0] if np.isscalar(u) or np.ndim(u) == 0 else pts


def curve_derivatives(curve, u, order):
    """Derivatives d^k C / du^k for k = 0 .. order at u; shape (order+1, 3)."""
    if order < 0 or order > curve.degree:
        raise InvalidInputError(f"derivative order {order} outside 0..{curve.degree}")
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    _check_in_domain(u_arr)
    ders = _kernels.curve_derivatives(
        curve.knots.knots, curve.degree, curve.expanded_controls(), u_arr, int(order)
    )
    return ders[0] if np.isscalar(u) or np.ndim(u) == 0 else ders


@dataclass(frozen=True)
class BSplineSurface:
    """Tensor-product surface, open in u; v may be clamped or cyclic.

    For a cyclic v knot vector the net stores distinct columns only and
    evaluation wraps them, mirroring the closed-curve convention.
    ``closed_v`` marks surfaces that are geometrically closed in v even when
    stored over a clamped v knot vector (the lofting pipelines clamp rows
    before assembling the net).
    """

    degree_u: int
    degree_v: int
    knots_u: KnotVector
    knots_v: KnotVector
    control_net: np.ndarray
    closed_v: bool = False

    def __post_init__(self):
        net = np.asarray(self.control_net, dtype=float)
        object.__setattr__(self, "control_net", net)
        if net.ndim != 3 or net.shape[2] != 3:
            raise InvalidInputError("control net must have shape (rows, cols, 3)")
        if not np.all(np.isfinite(net)):
            raise InvalidInputError("control net must be finite")
        if self.knots_u.style != CLAMPED:
            raise InvalidInputError("surfaces are open (clamped) in the u direction")
        if self.degree_u != self.knots_u.degree or self.degree_v != self.knots_v.degree:
            raise InvalidInputError("surface degrees do not match knot vectors")
        if net.shape[0] != self.knots_u.n_basis:
            raise InvalidInputError("control net row count does not match u knot vector")
        want_cols = self.knots_v.n_basis
        if self.knots_v.style == CYCLIC:
            want_cols -= self.degree_v
            if not self.closed_v:
                object.__setattr__(self, "closed_v", True)
        if net.shape[1] != want_cols:
            raise InvalidInputError(
                f"control net needs {want_cols} columns, got {net.shape[1]}"
            )

    def expanded_net(self):
        if self.knots_v.style == CYCLIC:
            return np.concatenate(
                [self.control_net, self.control_net[:, : self.degree_v]], axis=1
            )
        return self.control_net

    @property
    def net_shape(self):
        return self.control_net.shape[:2]


def eval_surface(surface, u, v):
    """Point(s) on the surface at (u, v); accepts scalars or 1-1 arrays."""
    scalar = np.ndim(u) == 0 and np.ndim(v) == 0
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    v_arr = np.atleast_1d(np.asarray(v, dtype=float))
    if u_arr.shape != v_arr.shape:
        raise InvalidInputError("u and v sample arrays must have equal length")
    _check_in_domain(u_arr)
    _check_in_domain(v_arr)
    pts = _kernels.surface_points(
        surface.knots_u.knots, surface.degree_u,
        surface.knots_v.knots, surface.degree_v,
        surface.expanded_net(), u_arr, v_arr,
    )
    return pts[0] if scalar else pts


def surface_partial(surface, u, v, du, dv):
    """The (du, dv) mixed partial of the surface at (u, v)."""
    if du < 0 or du > surface.degree_u or dv < 0 or dv > surface.degree_v:
        raise InvalidInputError("partial order outside the degree range")
    scalar = np.ndim(u) == 0 and np.ndim(v) == 0
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    v_arr = np.atleast_1d(np.asarray(v, dtype=float))
    _check_in_domain(u_arr)
    _check_in_domain(v_arr)
    pts = _kernels.surface_partial(
        surface.knots_u.knots, surface.degree_u,
        surface.knots_v.knots, surface.degree_v,
        surface.expanded_net(), u_arr, v_arr, int(du), int(dv),
    )
    return pts[0] if scalar else pts


def clamp_closed_curve(curve):
    """Re-express a closed curve over a clamped knot vector (Procedure-1 style).

    The two triangular passes blend the first/last control points with
    alpha ratios taken from the cyclic extension knots; the curve is
    pointwise unchanged on [0, 1].  The two extreme knots are untouched by
    the passes and are set to the domain endpoints afterwards.
    """
    if curve.kind != "closed" or curve.knots.style != CYCLIC:
        raise InvalidInputError("clamp_closed_curve expects a closed curve on a cyclic knot vector")
    p = curve.degree
    ctrl = curve.expanded_controls().copy()
    knots = curve.knots.knots.copy()
    n = ctrl.shape[0] - 1  # highest expanded control index

    for i in range(p - 2, -1, -1):
        for j in range(i + 1):
            den = knots[p + j + 1] - knots[p - 1 - i + j]
            alpha = (knots[p] - knots[p - 1 - i + j]) / den
            ctrl[j] = (1.0 - alpha) * ctrl[j] + alpha * ctrl[j + 1]
        knots[p - i - 1] = knots[p]

    for i in range(p - 2, -1, -1):
        for j in range(i + 1):
            den = knots[n - j + i + 2] - knots[n - j]
            alpha = (knots[n + 1] - knots[n - j]) / den
            # mirror of the left pass: the convex weight on the inner
            # neighbour must be 1 - alpha or the end evaluations change
            ctrl[n - j] = alpha * ctrl[n - j] + (1.0 - alpha) * ctrl[n - j - 1]
        knots[n + i + 2] = knots[n + 1]

    knots[0] = knots[p]
    knots[n + p + 1] = knots[n + 1]
    return BSplineCurve(p, KnotVector(knots, p, CLAMPED), ctrl, kind="open")


def _insert_knot(knots, degree, ctrl, u):
    p = degree
    span = int(_kernels.find_span(knots, p, u))
    new_ctrl = np.empty((ctrl.shape[0] + 1, ctrl.shape[1]))
    new_ctrl[: span - p + 1] = ctrl[: span - p + 1]
    for i in range(span - p + 1, span + 1):
        den = knots[i + p] - knots[i]
        if den <= 0.0:
            raise InvalidInputError(
                f"inserting {u} would raise a knot multiplicity beyond the degree"
            )
        alpha = (u - knots[i]) / den
        new_ctrl[i] = alpha * ctrl[i] + (1.0 - alpha) * ctrl[i - 1]
    new_ctrl[span + 1:] = ctrl[span:]
    new_knots = np.insert(knots, span + 1, u)
    return new_knots, new_ctrl


def refine_knots(curve, new_knots):
    """Insert knots into an open (clamped) curve; the shape is unchanged."""
    if curve.kind != "open":
        raise InvalidInputError("refine_knots operates on clamped (open) curves")
    add = np.atleast_1d(np.asarray(new_knots, dtype=float))
    if add.size == 0:
        return curve
    if np.any(add <= 0.0) or np.any(add >= 1.0):
        raise InvalidInputError("refinement knots must lie strictly inside (0, 1)")
    knots = curve.knots.knots.copy()
    ctrl = curve.control_points.copy()
    for u in np.sort(add):
        knots, ctrl = _insert_knot(knots, curve.degree, ctrl, float(u))
    return BSplineCurve(curve.degree, KnotVector(knots, curve.degree, CLAMPED), ctrl, kind="open")


def knot_multiplicities(knots, tol=KNOT_TOL):
    """Group a sorted knot array into (values, counts); values within tol of
    the group representative collapse together."""
    arr = np.asarray(knots, dtype=float)
    values, counts = [], []
    for x in arr:
        if values and x - values[-1] <= tol:
            counts[-1] += 1
        else:
            values.append(float(x))
            counts.append(1)
    return values, counts


def _merge_multisets(va, ca, vb, cb, tol=KNOT_TOL):
    out_v, out_c = [], []
    i = j = 0
    while i < len(va) or j < len(vb):
        if j >= len(vb) or (i < len(va) and va[i] < vb[j] - tol):
            out_v.append(va[i]); out_c.append(ca[i]); i += 1
        elif i >= len(va) or vb[j] < va[i] - tol:
            out_v.append(vb[j]); out_c.append(cb[j]); j += 1
        else:
            # same knot up to tolerance: smaller representative, max multiplicity
            out_v.append(min(va[i], vb[j])); out_c.append(max(ca[i], cb[j]))
            i += 1; j += 1
    return out_v, out_c


def merge_knot_vectors(a, b):
    """Union of two clamped knot vectors, per-knot multiplicity = max of the two."""
    if a.degree != b.degree:
        raise InvalidInputError("cannot merge knot vectors of different degree")
    if a.style != CLAMPED or b.style != CLAMPED:
        raise InvalidInputError("merge_knot_vectors expects clamped knot vectors")
    va, ca = knot_multiplicities(a.knots)
    vb, cb = knot_multiplicities(b.knots)
    out_v, out_c = _merge_multisets(va, ca, vb, cb)
    merged = np.repeat(out_v, out_c)
    return KnotVector(merged, a.degree, CLAMPED)


def merge_domain_knots(a, b, tol=KNOT_TOL):
    """Sorted union of two strictly-increasing domain-knot sequences."""
    va = [float(x) for x in np.asarray(a, dtype=float)]
    vb = [float(x) for x in np.asarray(b, dtype=float)]
    out_v, _ = _merge_multisets(va, [1] * len(va), vb, [1] * len(vb), tol)
    return np.asarray(out_v)


def missing_knots(target, base, tol=KNOT_TOL):
    """Knots (with multiplicity) present in target but not in base."""
    vt, ct = knot_multiplicities(target.knots, tol)
    vb, cb = knot_multiplicities(base.knots, tol)
    out = []
    j = 0
    for v, c in zip(vt, ct):
        while j < len(vb) and vb[j] < v - tol:
            j += 1
        have = cb[j] if j < len(vb) and abs(vb[j] - v) <= tol else 0
        out.extend([v] * max(0, c - have))
    return np.asarray(out)
