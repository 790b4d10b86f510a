"""Parameter assignment and domain-knot selection for closed (and open)
point sequences, plus the sufficient-condition checkers used to guarantee
invertible / full-rank closed collocation systems.

The closed interpolation condition has two parity forms.  For odd degree the
domain knots must lie strictly between consecutive chord midpoints of the
parameter values; for even degree the parameters are first shifted by half
the wrap gap (t̃_i = t_i + d_n/2) and each domain knot must lie strictly
between consecutive shifted parameters.  Both forms reduce to the same
bracket test against the anchor/bound vectors, which is what the knot
selection procedures exploit.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, InvalidInputError
from .spline_core import (
    KNOT_TOL,
    as_points,
    clamped_knot_vector,
    validate_domain_knots,
)

NATURAL = "natural"
AVERAGING = "averaging"
SHIFTING = "shifting"

# Strictness margin for the open-interval tests below: a knot this close to a
# bracket endpoint counts as violating the (strict) condition.
STRICT_TOL = KNOT_TOL


@dataclass(frozen=True)
class ParameterValues:
    """Assigned parameters t_0 .. t_n (or the shifted t̃_i for even degree).

    ``exponent`` records the e of the general exponent form used to compute
    them (1 = chord length, 0.5 = centripetal).
    """

    values: np.ndarray
    shifted: bool = False
    exponent: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size < 2:
            raise InvalidInputError("parameter values must be a 1-D sequence, length >= 2")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("parameter values must be finite")
        if np.any(np.diff(v) <= 0):
            raise InvalidInputError("parameter values must be strictly increasing")
        if not 0.0 < self.exponent <= 1.0:
            raise InvalidInputError("exponent must lie in (0, 1]")
        if self.shifted:
            if v[0] <= 0.0 or v[-1] >= 1.0:
                raise InvalidInputError("shifted parameters must lie strictly inside (0, 1)")
        else:
            if v[0] != 0.0:
                raise InvalidInputError("unshifted parameters must start at t_0 = 0")
            if v[-1] > 1.0:
                raise InvalidInputError("parameters must not exceed 1")

    @property
    def n(self):
        return self.values.size - 1

    def __len__(self):
        return self.values.size


def _wrap_chords(points):
    pts = as_points(points, min_count=3)
    diffs = np.roll(pts, -1, axis=0) - pts
    return np.linalg.norm(diffs, axis=1)


def closed_parameters(points, exponent=1.0):
    """Cumulative exponent-form parameters for a closed contour.

    t_0 = 0 and t_i is the cumulative ||ΔQ||^e over the total, with the wrap
    chord from the last point back to the first included in the total, so
    t_n < 1.
    """
    chords = _wrap_chords(points)
    if np.any(chords == 0.0):
        bad = int(np.argmin(chords))
        raise InvalidInputError(
            f"coincident consecutive points at index {bad} (wrap included)"
        )
    w = chords ** float(exponent)
    t = np.concatenate([[0.0], np.cumsum(w[:-1])]) / w.sum()
    return ParameterValues(t, shifted=False, exponent=float(exponent))


def open_parameters(points, exponent=1.0):
    """Cumulative exponent-form parameters for an open run of points (t_n = 1)."""
    pts = as_points(points, min_count=2)
    chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if np.any(chords == 0.0):
        bad = int(np.argmin(chords))
        raise InvalidInputError(f"coincident consecutive points at index {bad}")
    w = chords ** float(exponent)
    t = np.concatenate([[0.0], np.cumsum(w)]) / w.sum()
    t[-1] = 1.0
    return ParameterValues(t, shifted=False, exponent=float(exponent))


def shift_parameters(params):
    """t̃_i = t_i + d_n/2 with d_n = 1 - t_n; inputs must be closed-style."""
    if params.shifted:
        return params
    t = params.values
    if t[-1] >= 1.0:
        raise InvalidInputError("closed parameters require t_n < 1")
    return ParameterValues(t + (1.0 - t[-1]) / 2.0, shifted=True, exponent=params.exponent)


def averaging_knots_open(params, degree):
    """Clamped knot vector via knot averaging: u_i is the mean of the p
    preceding parameters, for i = p+1 .. n."""
    if params.shifted:
        raise ContractError("averaging knots expect unshifted open-style parameters")
    t = params.values
    if t[-1] != 1.0:
        raise InvalidInputError("open-style parameters must end at t_n = 1")
    p = int(degree)
    n = t.size - 1
    if n < p:
        raise InvalidInputError(f"need at least p+1 = {p + 1} parameters, got {n + 1}")
    interior = np.array([t[i - p: i].mean() for i in range(p + 1, n + 1)])
    return clamped_knot_vector(np.concatenate([[0.0], interior, [1.0]]), p)


def closed_knots(params, method, degree):
    """Domain knots for closed interpolation by the natural, averaging or
    shifting method.

    Returns ``(domain_knots, params_out)``; the shifting method replaces the
    parameters by their shifted form, the other two return them unchanged.
    """
    if params.shifted:
        raise ContractError("closed_knots expects unshifted parameters")
    t = params.values
    if t[-1] >= 1.0:
        raise InvalidInputError("closed parameters require t_n < 1")
    p = int(degree)
    n = t.size - 1
    if n < p:
        raise InvalidInputError(f"need at least p+1 = {p + 1} parameters, got {n + 1}")
    if method == NATURAL:
        interior = t[1:]
    elif method == AVERAGING:
        ext = np.concatenate([t, [1.0]])
        interior = (ext[:-2] + ext[1:-1] + ext[2:]) / 3.0
    elif method == SHIFTING:
        dn = 1.0 - t[-1]
        # closed form of the half-gap running sum, extended through i = n so
        # every interior knot is defined: u_i = (t̃_{i-1} + t̃_i)/2
        interior = (t[:-1] + t[1:]) / 2.0 + dn / 2.0
        shifted = ParameterValues(t + dn / 2.0, shifted=True, exponent=params.exponent)
        domain = np.concatenate([[0.0], interior, [1.0]])
        return validate_domain_knots(domain), shifted
    else:
        raise InvalidInputError(f"unknown closed knot method {method!r}")
    domain = np.concatenate([[0.0], interior, [1.0]])
    return validate_domain_knots(domain), params


@dataclass(frozen=True)
class AnchorVectors:
    """Anchor domain knots u_i^p and bound values x_i for a degree.

    The bounds interlace the anchors strictly: x_{i-1} < u_i^p < x_i, so the
    open interval (x_{i-1}, x_i) is the feasibility bracket of knot i.
    """

    anchors: np.ndarray
    bounds: np.ndarray
    degree: int

    @property
    def n(self):
        return self.bounds.size - 1


def anchor_vectors(params, degree):
    """Anchors and bounds for selecting domain knots against existing ones.

    Odd degree: u_i^p = t_i and x_i = (t_i + t_{i+1})/2 (with t_{n+1} = 1).
    Even degree: u_i^p = d_n/2 + (t_{i-1} + t_i)/2 and x_i = d_n/2 + t_i.
    """
    if params.shifted:
        raise ContractError("anchor_vectors expects unshifted parameters")
    t = params.values
    if t[-1] >= 1.0:
        raise InvalidInputError("closed parameters require t_n < 1")
    p = int(degree)
    n = t.size - 1
    if p % 2 == 1:
        ext = np.concatenate([t, [1.0]])
        anchors = np.concatenate([[0.0], t[1:], [1.0]])
        bounds = (ext[:-1] + ext[1:]) / 2.0
    else:
        dn = 1.0 - t[-1]
        anchors = np.concatenate([[0.0], (t[:-1] + t[1:]) / 2.0 + dn / 2.0, [1.0]])
        bounds = t + dn / 2.0
    assert anchors.size == n + 2 and bounds.size == n + 1
    return AnchorVectors(anchors, bounds, p)


def condition_brackets(params, degree):
    """The open intervals (lo_i, hi_i), i = 1..n, that the interior domain
    knots must occupy for the closed interpolation condition.

    Odd degree takes unshifted parameters (chord-midpoint brackets); even
    degree takes shifted parameters (consecutive t̃ brackets).  The two forms
    coincide with the anchor bounds.
    """
    p = int(degree)
    t = params.values
    if p % 2 == 1:
        if params.shifted:
            raise ContractError("odd degree uses unshifted parameters")
        ext = np.concatenate([t, [1.0]])
        mids = (ext[:-1] + ext[1:]) / 2.0
        return mids[:-1], mids[1:]
    if not params.shifted:
        raise ContractError("even degree uses shifted parameters")
    return t[:-1], t[1:]


def check_conjecture1(params, domain_knots, degree):
    """Whether (parameters, domain knots) satisfy the sufficient condition for
    an invertible square closed system of the given degree.

    Strictness is conservative: a knot within the knot tolerance of a bracket
    endpoint counts as violating.
    """
    d = validate_domain_knots(domain_knots)
    lo, hi = condition_brackets(params, degree)
    if d.size != lo.size + 2:
        raise InvalidInputError(
            f"domain knots must have n+2 = {lo.size + 2} entries, got {d.size}"
        )
    interior = d[1:-1]
    return bool(np.all(interior > lo + STRICT_TOL) and np.all(interior < hi - STRICT_TOL))


def check_conjecture2(params, domain_knots, degree):
    """Whether some (n+2)-subsequence of the domain knots satisfies the
    square condition; returns (verdict, witness domain knots or None).

    The witness is found by a greedy left-to-right scan picking the earliest
    feasible knot per bracket, which is exact for these ordered brackets
    (verified against exhaustive search in the tests).
    """
    d = validate_domain_knots(domain_knots)
    lo, hi = condition_brackets(params, degree)
    n = lo.size
    if d.size < n + 2:
        return False, None
    candidates = d[1:-1]
    chosen = np.empty(n)
    idx = 0
    for i in range(n):
        while idx < candidates.size and candidates[idx] <= lo[i] + STRICT_TOL:
            idx += 1
        if idx >= candidates.size or candidates[idx] >= hi[i] - STRICT_TOL:
            return False, None
        chosen[i] = candidates[idx]
        idx += 1
    return True, np.concatenate([[0.0], chosen, [1.0]])


def exhaustive_witness_exists(params, domain_knots, degree):
    """Brute-force subset search for the condition of check_conjecture2.

    Depth-first over the interior knots in order; intended for small n as an
    oracle for the greedy scan.
    """
    d = validate_domain_knots(domain_knots)
    lo, hi = condition_brackets(params, degree)
    n = lo.size
    candidates = d[1:-1]

    def feasible(bracket, start):
        if bracket == n:
            return True
        for k in range(start, candidates.size - (n - bracket - 1)):
            x = candidates[k]
            if x >= hi[bracket] - STRICT_TOL:
                return False
            if x > lo[bracket] + STRICT_TOL:
                if feasible(bracket + 1, k + 1):
                    return True
        return False

    return feasible(0, 0)
