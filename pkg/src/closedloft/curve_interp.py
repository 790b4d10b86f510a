"""Open and closed B-spline curve interpolation, the energy-minimizing
under-determined variant, and the condition-guided knot selection used when
interpolating against an existing knot vector.

The closed solvers work on the expanded control storage (distinct controls
followed by the first p repeated); after solving, the wrap rows are snapped
to exact copies so closure can never drift downstream.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractError, InvalidInputError, PreconditionError, SingularSystemError, ZeroPivotError
from .linalg_solve import (
    RankReport,
    assemble_closed_system,
    assemble_open_collocation,
    rank_report,
    semi_bandwidth,
    solve_banded_no_pivot,
    solve_dense,
    stack_closed_rhs,
    stiffness_matrix,
    solve_kkt,
)
from .param_knots import (
    STRICT_TOL,
    anchor_vectors,
    check_conjecture1,
    check_conjecture2,
    shift_parameters,
)
from .spline_core import (
    BSplineCurve,
    KnotVector,
    as_points,
    bbox_diagonal,
    clamp_closed_curve,
    closed_curve_from_expanded,
    cyclic_knot_vector,
    eval_curve,
    knot_multiplicities,
    merge_knot_vectors,
    validate_domain_knots,
)

OPEN_RESIDUAL_TOL = 1e-9
CLOSED_RESIDUAL_TOL = 1e-8

# Selected knots keep this margin to their bracket endpoints so the outputs
# of the selection procedures always pass the strict condition checks.
SELECT_MARGIN = 10.0 * STRICT_TOL


@dataclass(frozen=True)
class InterpolationResult:
    """A solved interpolation: the curve, its worst residual (model units),
    and diagnostics of the system that produced it."""

    curve: BSplineCurve
    max_residual: float
    diagnostics: RankReport
    condition_ok: Optional[bool] = None
    wrap_deviation: float = 0.0


@dataclass(frozen=True)
class ClosedInterpolationProblem:
    """Data points with their parameters and candidate domain knots.

    The parity contract (even degree uses shifted parameters, odd unshifted)
    is reported by :attr:`parity_ok`; the solvers warn when it is broken
    because the sufficient condition can then not be evaluated.
    """

    points: np.ndarray
    params: object
    domain_knots: np.ndarray
    degree: int

    def __post_init__(self):
        pts = as_points(self.points, min_count=3)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "domain_knots", validate_domain_knots(self.domain_knots))
        p = int(self.degree)
        if pts.shape[0] != self.params.values.size:
            raise InvalidInputError("one parameter per data point is required")
        if pts.shape[0] < p + 2:
            raise InvalidInputError(
                f"closed degree-{p} interpolation needs at least {p + 2} points"
            )
        if self.params.values[-1] >= 1.0:
            raise InvalidInputError("closed parameters must lie in [0, 1)")
        if self.nhat < self.n:
            raise InvalidInputError("domain knots provide fewer knots than data points")

    @property
    def n(self):
        return self.points.shape[0] - 1

    @property
    def nhat(self):
        return self.domain_knots.size - 2

    @property
    def parity_ok(self):
        return (self.degree % 2 == 0) == bool(self.params.shifted)


def _relative_scale(points):
    return max(bbox_diagonal(points), np.abs(points).max(), 1e-30)


def interpolate_open(points, params, kv):
    """Square open interpolation over a clamped knot vector.

    Uses the no-pivot banded path when the collocation matrix is banded (the
    averaging-knot case), falling back to pivoted dense elimination.
    """
    pts = as_points(points, min_count=2)
    if params.values.size != pts.shape[0]:
        raise InvalidInputError("one parameter per data point is required")
    if kv.n_basis != pts.shape[0]:
        raise InvalidInputError(
            f"square interpolation needs {kv.n_basis} points for this knot vector"
        )
    matrix = assemble_open_collocation(params, kv)
    bw = semi_bandwidth(matrix)
    try:
        if bw < kv.degree:
            ctrl = solve_banded_no_pivot(matrix, bw, pts)
        else:
            ctrl = solve_dense(matrix, pts)
    except ZeroPivotError:
        ctrl = solve_dense(matrix, pts)
    residual = float(np.linalg.norm(matrix @ ctrl - pts, axis=1).max())
    report = rank_report(matrix)
    if residual > OPEN_RESIDUAL_TOL * _relative_scale(pts):
        raise SingularSystemError(
            f"open interpolation residual {residual:.3e} exceeds tolerance",
            rank_report=report,
        )
    curve = BSplineCurve(kv.degree, kv, ctrl, kind="open")
    return InterpolationResult(curve, residual, report)


def _closed_condition(problem, warn):
    if not problem.parity_ok:
        if warn:
            warnings.warn(
                f"degree-{problem.degree} closed interpolation with "
                f"{'shifted' if problem.params.shifted else 'unshifted'} parameters: "
                "the invertibility condition cannot be checked and the system "
                "may be ill-conditioned",
                RuntimeWarning,
                stacklevel=3,
            )
        return None
    return check_conjecture1(problem.params, problem.domain_knots, problem.degree)


def interpolate_closed_square(problem, check_condition=True):
    """Square closed interpolation (as many distinct controls as points)."""
    if problem.nhat != problem.n:
        raise InvalidInputError("square closed interpolation requires nhat == n")
    p = problem.degree
    verdict = _closed_condition(problem, warn=check_condition)
    if check_condition and verdict is False:
        warnings.warn(
            "domain knots violate the closed interpolation condition; "
            "the system matrix may be singular",
            RuntimeWarning,
            stacklevel=2,
        )
    kv = cyclic_knot_vector(problem.domain_knots, p)
    matrix, _ = assemble_closed_system(problem.params, kv, problem.nhat)
    rhs = stack_closed_rhs(problem.points, p)
    try:
        expanded = solve_dense(matrix, rhs)
    except SingularSystemError as exc:
        raise SingularSystemError(
            "closed system matrix is numerically singular",
            rank_report=exc.rank_report or rank_report(matrix),
            condition_ok=verdict,
        ) from exc
    return _finish_closed(problem, kv, matrix, expanded, verdict)


def interpolate_closed_energy(problem, alpha=1.0, beta=0.2):
    """Under-determined closed interpolation by constrained energy minimization.

    Refuses to run when no subsequence of the domain knots satisfies the
    square condition, since full rank of the constraint block is then not
    guaranteed.
    """
    p = problem.degree
    if not problem.parity_ok:
        raise ContractError(
            "energy interpolation requires parity-correct parameters "
            "(shifted iff the degree is even)"
        )
    ok, _witness = check_conjecture2(problem.params, problem.domain_knots, p)
    if not ok:
        raise PreconditionError(
            "no subsequence of the domain knots satisfies the closed "
            "interpolation condition; full rank is not guaranteed"
        )
    kv = cyclic_knot_vector(problem.domain_knots, p)
    matrix, _ = assemble_closed_system(problem.params, kv, problem.nhat)
    stiff = stiffness_matrix(kv, alpha, beta)
    rhs = stack_closed_rhs(problem.points, p)
    expanded, _mults = solve_kkt(stiff, matrix, rhs)
    return _finish_closed(problem, kv, matrix, expanded, True)


def _finish_closed(problem, kv, matrix, expanded, verdict):
    p = problem.degree
    wrap_dev = float(np.linalg.norm(expanded[-p:] - expanded[:p], axis=1).max())
    curve = closed_curve_from_expanded(kv, expanded)
    residual = float(
        np.linalg.norm(
            eval_curve(curve, problem.params.values) - problem.points, axis=1
        ).max()
    )
    report = rank_report(matrix)
    if residual > CLOSED_RESIDUAL_TOL * _relative_scale(problem.points):
        raise SingularSystemError(
            f"closed interpolation residual {residual:.3e} exceeds tolerance",
            rank_report=report,
            condition_ok=verdict,
        )
    return InterpolationResult(curve, residual, report, verdict, wrap_dev)


def select_domain_knots(params, input_kv, degree, per):
    """Knot selection against an existing knot vector (the square pipeline).

    For each bracket the input knot nearest to the anchor is taken when it
    falls inside the per-scaled selection interval, otherwise the anchor
    itself; selections are forced strictly increasing.
    """
    if not 0.0 <= per <= 1.0:
        raise InvalidInputError("per must lie in [0, 1]")
    av = anchor_vectors(params, degree)
    candidates = np.asarray(knot_multiplicities(input_kv.knots)[0])
    domain = np.empty(av.n + 2)
    domain[0], domain[-1] = 0.0, 1.0
    prev = 0.0
    for i in range(1, av.n + 1):
        a = (1.0 - per) * av.anchors[i] + per * av.bounds[i - 1]
        b = (1.0 - per) * av.anchors[i] + per * av.bounds[i]
        k = int(np.argmin(np.abs(candidates - av.anchors[i])))  # ties: smaller knot
        c = candidates[k]
        if a + SELECT_MARGIN < c < b - SELECT_MARGIN and c > prev + SELECT_MARGIN:
            domain[i] = c
        else:
            domain[i] = av.anchors[i]
        prev = domain[i]
    return validate_domain_knots(domain)


@dataclass(frozen=True)
class InputKnotInterpolation:
    """Output bundle of the interpolate-against-input-knots pipeline."""

    curve: BSplineCurve          # clamped
    clamped_knots: KnotVector
    updated_input: KnotVector
    result: InterpolationResult  # the underlying closed square solve
    solve_params: object = None  # parameters the curve interpolates at


def interpolate_points_by_input_knots(points, params, input_kv, degree, per):
    """Closed interpolation reusing knots of an input vector where possible.

    Selects parity-correct domain knots inside the per-intervals, solves the
    square closed system on the resulting cyclic knot vector, clamps the
    curve, and merges its clamped knot vector into the input vector.
    """
    p = int(degree)
    if input_kv.degree != p:
        raise InvalidInputError("input knot vector degree must match the requested degree")
    if params.shifted:
        raise ContractError("pass unshifted parameters; shifting is applied internally")
    pts = as_points(points, min_count=3)
    domain = select_domain_knots(params, input_kv, p, per)
    solve_params = params if p % 2 == 1 else shift_parameters(params)
    problem = ClosedInterpolationProblem(pts, solve_params, domain, p)
    result = interpolate_closed_square(problem)
    clamped = clamp_closed_curve(result.curve)
    updated = merge_knot_vectors(input_kv, clamped.knots)
    return InputKnotInterpolation(clamped, clamped.knots, updated, result, solve_params)


def build_domain_knots_by_input_knots(params, input_domain, degree, per):
    """Span-scan selection of domain knots from an input domain-knot set.

    Walks the input knots once; a bracket whose scan window holds no usable
    knot falls back to its anchor and re-offers the knot to the next bracket.
    Brackets left over when the input is exhausted receive their anchors.
    The output always satisfies the square condition for these parameters.
    """
    if not 0.0 <= per <= 1.0:
        raise InvalidInputError("per must lie in [0, 1]")
    d = validate_domain_knots(input_domain)
    av = anchor_vectors(params, degree)
    n = av.n
    nhat1 = d.size - 1
    out = np.empty(n + 2)
    out[0], out[n + 1] = 0.0, 1.0
    span = 0
    i = 1
    while i <= n:
        a = (1.0 - per) * av.anchors[i] + per * av.bounds[i - 1]
        b = (1.0 - per) * av.anchors[i] + per * av.bounds[i]
        exhausted = False
        while d[i + span] < a + SELECT_MARGIN:
            span += 1
            if i + span > nhat1:
                exhausted = True
                break
        if exhausted:
            break
        if d[i + span] < b - SELECT_MARGIN and d[i + span] > out[i - 1] + SELECT_MARGIN:
            out[i] = d[i + span]
        else:
            out[i] = av.anchors[i]
            span -= 1
        i += 1
    for k in range(i, n + 1):
        out[k] = av.anchors[k]
    return validate_domain_knots(out)
