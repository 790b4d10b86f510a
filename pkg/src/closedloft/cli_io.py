"""Contour ingestion, surface/report serialization, OBJ export and the
command-line front end.

File formats
------------
Contours (JSON): ``{"version": 1, "rows": [[[x, y, z], ...], ...],
"hints": {"starts": [...], "reversed": [...]}}`` with hints optional.
Contours (CSV): one ``x y z`` line per point, blank line between rows,
``#`` comments ignored.

Surfaces: a JSON document carrying degrees, style-tagged knot vectors, the
control net and a provenance block.  Numbers are written with shortest
round-trip ``repr`` (at most 17 significant digits), so parsing a serialized
surface reproduces it bit-exactly.

Exit codes: 0 success, 1 input validation failure, 2 numerical failure,
3 conjecture counterexample found, 64 bad flags.
"""

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .conjecture_lab import (
    TrialConfig,
    boundary_stress,
    run_conjecture1_trials,
    run_conjecture2_trials,
)
from .curve_interp import (
    ClosedInterpolationProblem,
    interpolate_closed_square,
    interpolate_open,
    interpolate_points_by_input_knots,
)
from .errors import (
    ClosedLoftError,
    ContractError,
    DomainError,
    InvalidInputError,
    PreconditionError,
    SingularSystemError,
)
from .loft import ContourRows, loft_closed_park, loft_closed_piegl, loft_open
from .param_knots import (
    AVERAGING,
    NATURAL,
    SHIFTING,
    averaging_knots_open,
    closed_knots,
    closed_parameters,
    open_parameters,
)
from .spline_core import BSplineSurface, KnotVector, eval_surface

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_COUNTEREXAMPLE = 3
EXIT_USAGE = 64


class ContourParseError(InvalidInputError):
    pass


def _reject_duplicates(rows):
    for i, row in enumerate(rows):
        for j in range(1, len(row)):
            if np.array_equal(row[j], row[j - 1]):
                raise ContourParseError(
                    f"row {i}: repeated consecutive point at index {j}"
                )


def _rows_from_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ContourParseError(f"malformed JSON at line {exc.lineno}, column {exc.colno}") from exc
    if not isinstance(doc, dict) or "rows" not in doc:
        raise ContourParseError('expected a JSON object with a "rows" field')
    if doc.get("version", 1) != 1:
        raise ContourParseError(f"unsupported contour file version {doc.get('version')!r}")
    rows = []
    for i, row in enumerate(doc["rows"]):
        arr = np.asarray(row, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ContourParseError(f"row {i}: expected a list of [x, y, z] triples")
        rows.append(arr)
    return rows, doc.get("hints") or {}


def _rows_from_csv(text):
    rows, current = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("#"):
            continue
        if not stripped:
            if current:
                rows.append(np.asarray(current, dtype=float))
                current = []
            continue
        parts = stripped.split()
        if len(parts) != 3:
            raise ContourParseError(f"line {lineno}: expected three coordinates, got {len(parts)}")
        try:
            current.append([float(x) for x in parts])
        except ValueError as exc:
            raise ContourParseError(f"line {lineno}: {exc}") from exc
    if current:
        rows.append(np.asarray(current, dtype=float))
    return rows, {}


def parse_contours(source):
    """Read contour rows from a path, file object, or text.

    JSON and CSV block formats are auto-detected; rows with repeated
    consecutive points are rejected naming the row and point index.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)
        if "\n" not in text and not text.lstrip().startswith(("{", "[")):
            with open(text, "r", encoding="utf-8") as fh:
                text = fh.read()
    stripped = text.lstrip()
    if not stripped:
        raise ContourParseError("empty contour input")
    rows, hints = (_rows_from_json if stripped[0] == "{" else _rows_from_csv)(text)
    if not rows:
        raise ContourParseError("contour input holds no rows")
    for i, row in enumerate(rows):
        if row.shape[0] < 3:
            raise ContourParseError(f"row {i}: needs at least 3 points, got {row.shape[0]}")
        if not np.all(np.isfinite(row)):
            raise ContourParseError(f"row {i}: non-finite coordinate")
    _reject_duplicates(rows)
    aligned = False
    baseline = None
    flags = None
    if hints:
        starts = hints.get("starts")
        flags = hints.get("reversed")
        if flags is not None:
            rows = [r[::-1] if f else r for r, f in zip(rows, flags)]
        if starts is not None:
            rows = [np.roll(r, -int(s), axis=0) for r, s in zip(rows, starts)]
            baseline = [int(s) for s in starts]
            aligned = True
    return ContourRows(rows, aligned=aligned, baseline=baseline, reversed_flags=flags)


@dataclass
class SurfaceFile:
    """A surface plus the provenance block written alongside it."""

    surface: BSplineSurface
    provenance: dict = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, SurfaceFile):
            return NotImplemented
        a, b = self.surface, other.surface
        return (
            a.degree_u == b.degree_u
            and a.degree_v == b.degree_v
            and a.knots_u == b.knots_u
            and a.knots_v == b.knots_v
            and a.closed_v == b.closed_v
            and np.array_equal(a.control_net, b.control_net)
            and self.provenance == other.provenance
        )


def _knots_payload(kv):
    return {"style": kv.style, "degree": kv.degree, "values": kv.knots.tolist()}


def _knots_from_payload(payload):
    return KnotVector(
        np.asarray(payload["values"], dtype=float), int(payload["degree"]), payload["style"]
    )


def serialize_surface(surface_file):
    s = surface_file.surface
    doc = {
        "version": 1,
        "degree_u": s.degree_u,
        "degree_v": s.degree_v,
        "knots_u": _knots_payload(s.knots_u),
        "knots_v": _knots_payload(s.knots_v),
        "closed_v": bool(s.closed_v),
        "control_net": s.control_net.tolist(),
        "provenance": surface_file.provenance,
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def parse_surface(text):
    doc = json.loads(text)
    surface = BSplineSurface(
        int(doc["degree_u"]),
        int(doc["degree_v"]),
        _knots_from_payload(doc["knots_u"]),
        _knots_from_payload(doc["knots_v"]),
        np.asarray(doc["control_net"], dtype=float),
        closed_v=bool(doc.get("closed_v", False)),
    )
    return SurfaceFile(surface, doc.get("provenance") or {})


def export_obj(surface, samples_u, samples_v):
    """Tessellate the surface on a uniform parameter lattice as OBJ text.

    Surfaces closed in v are stitched: the seam column is emitted once and
    the last ring of quads reuses the first vertex column.
    """
    su, sv = int(samples_u), int(samples_v)
    if su < 2 or sv < 2:
        raise InvalidInputError("need at least 2 samples in each direction")
    us = np.linspace(0.0, 1.0, su)
    closed = surface.closed_v
    vs = (np.arange(sv) / sv) if closed else np.linspace(0.0, 1.0, sv)
    uu, vv = [a.ravel() for a in np.meshgrid(us, vs, indexing="ij")]
    pts = eval_surface(surface, uu, vv).reshape(su, sv, 3)
    lines = [f"# closedloft surface mesh {su}x{sv}" + (" (v-seam stitched)" if closed else "")]
    for i in range(su):
        for j in range(sv):
            x, y, z = (float(c) for c in pts[i, j])
            lines.append(f"v {x!r} {y!r} {z!r}")
    def vid(i, j):
        return i * sv + (j % sv) + 1
    jmax = sv if closed else sv - 1
    for i in range(su - 1):
        for j in range(jmax):
            lines.append(
                f"f {vid(i, j)} {vid(i + 1, j)} {vid(i + 1, j + 1)} {vid(i, j + 1)}"
            )
    return "\n".join(lines) + "\n"


def _fmt(x):
    return repr(float(x))


def format_report(report):
    """Stable line-oriented text for a trial report."""
    cfg = report.config
    lines = [
        "closedloft conjecture report",
        f"tool_version: {__version__}",
        f"generator: {report.generator}",
        f"conjecture: {cfg.conjecture}",
        f"seed: {cfg.seed}",
        f"trials_per_degree: {cfg.trials}",
        f"degrees: {','.join(str(d) for d in cfg.degrees)}",
        f"n_range: {cfg.n_range[0]}:{cfg.n_range[1]}",
        f"nhat_extra: {cfg.nhat_extra[0]}:{cfg.nhat_extra[1]}",
        f"rank_tol: {_fmt(cfg.rank_tol)}",
        f"t_sampling: {cfg.t_sampling}",
        f"d_sampling: {cfg.d_sampling}",
        "----",
    ]
    stress = [r for r in report.records if r.epsilon is not None]
    if stress:
        for r in stress:
            lines.append(
                f"stress degree={r.degree} epsilon={_fmt(r.epsilon)} n={r.n} "
                f"condition={'true' if r.condition else 'false'} "
                f"sigma_ratio={_fmt(r.sigma_ratio)} rank={r.rank} "
                f"full_rank={'true' if r.full_rank else 'false'}"
            )
    for degree in cfg.degrees:
        s = report.degree_summary(degree)
        if s["trials"] == 0 and stress:
            continue
        lines.append(
            f"degree={degree} trials={s['trials']} condition_true={s['condition_true']} "
            f"violations={s['violations']} violations_still_full_rank={s['violations_still_full_rank']} "
            f"counterexamples={s['counterexamples']} min_sigma_ratio={_fmt(s['min_sigma_ratio'])}"
        )
    checked = report.greedy_checked()
    if checked:
        lines.append(
            f"greedy_vs_exhaustive checked={len(checked)} "
            f"agree={sum(1 for r in checked if r.greedy_agrees)}"
        )
    cexs = report.counterexamples
    lines.append(f"counterexamples: {len(cexs)}")
    for r in cexs:
        lines.append(
            f"  degree={r.degree} index={r.index} n={r.n} nhat={r.nhat} "
            f"sigma_ratio={_fmt(r.sigma_ratio)} rank={r.rank}"
        )
    lines.append(f"min_sigma_ratio_condition_true: {_fmt(report.min_sigma_ratio())}")
    return "\n".join(lines) + "\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="closedloft", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_loft = sub.add_parser("loft", help="loft serial contours into a surface")
    p_loft.add_argument("--input", required=True, help="contour file (JSON or CSV blocks)")
    p_loft.add_argument("--method", choices=("piegl", "park", "open"), default="piegl")
    p_loft.add_argument("--degree-u", type=int, default=3, help="longitudinal degree")
    p_loft.add_argument("--degree-v", type=int, default=3, help="contour degree")
    p_loft.add_argument("--per", type=float, default=1.0, help="knot-interval use in [0,1]")
    p_loft.add_argument("--align", choices=("auto", "none"), default="auto")
    p_loft.add_argument("--alpha", type=float, default=1.0, help="stretch weight")
    p_loft.add_argument("--beta", type=float, default=0.2, help="bend weight")
    p_loft.add_argument("--output", required=True, help="surface JSON output path")
    p_loft.add_argument("--obj", help="optional OBJ mesh output path")
    p_loft.add_argument("--samples-u", type=int, default=33)
    p_loft.add_argument("--samples-v", type=int, default=65)
    p_loft.add_argument("--seed", type=int, default=0, help="reserved")

    p_curve = sub.add_parser("interp-curve", help="interpolate a single contour")
    p_curve.add_argument("--input", required=True, help="single-row contour file")
    p_curve.add_argument("--closed", action="store_true")
    p_curve.add_argument("--degree", type=int, default=3)
    p_curve.add_argument(
        "--knot-method", choices=(NATURAL, AVERAGING, SHIFTING, "input"), default=NATURAL
    )
    p_curve.add_argument("--input-knots", help="JSON knot vector for --knot-method input")
    p_curve.add_argument("--per", type=float, default=1.0)
    p_curve.add_argument("--output", help="curve JSON output path (default stdout)")

    p_ver = sub.add_parser("verify-conjectures", help="run the randomized trial harness")
    p_ver.add_argument("--which", choices=("1", "2", "both"), default="both")
    p_ver.add_argument("--trials", type=int, default=1000, help="trials per degree")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--degrees", default="2,3,4,5", help="comma-separated degrees")
    p_ver.add_argument("--n-range", default="6:40", help="A:B inclusive")
    p_ver.add_argument("--nhat-extra", default="1:10", help="A:B inclusive")
    p_ver.add_argument("--rank-tol", type=float, default=1e-12)
    p_ver.add_argument("--stress", action="store_true", help="add a boundary-stress sweep")
    p_ver.add_argument("--threads", type=int, default=1)
    p_ver.add_argument("--output", help="report path (default stdout)")
    return parser


def _digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _check_per(per):
    if not 0.0 <= per <= 1.0:
        raise _UsageError("per must lie in [0,1]")


class _UsageError(Exception):
    pass


def cmd_loft(args):
    _check_per(args.per)
    if args.degree_u < 1 or args.degree_v < 1:
        raise _UsageError("degrees must be >= 1")
    if args.alpha < 0 or args.beta < 0:
        raise _UsageError("alpha and beta must be non-negative")
    rows = parse_contours(args.input)
    if args.method == "piegl":
        result = loft_closed_piegl(rows, args.degree_u, args.degree_v, args.per, align=args.align)
    elif args.method == "park":
        result = loft_closed_park(
            rows, args.degree_u, args.degree_v, args.per,
            alpha=args.alpha, beta=args.beta, align=args.align,
        )
    else:
        result = loft_open(rows, args.degree_u, args.degree_v)
    provenance = {
        "tool_version": __version__,
        "method": result.method,
        "per": args.per if result.per is not None else None,
        "alpha": args.alpha if args.method == "park" else None,
        "beta": args.beta if args.method == "park" else None,
        "degree_u": args.degree_u,
        "degree_v": args.degree_v,
        "align": args.align,
        "input_digest": _digest(args.input),
    }
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(serialize_surface(SurfaceFile(result.surface, provenance)))
    if args.obj:
        with open(args.obj, "w", encoding="utf-8") as fh:
            fh.write(export_obj(result.surface, args.samples_u, args.samples_v))
    rows_n, cols_n = result.control_dims
    print(
        f"method={result.method} control-net={rows_n}x{cols_n} "
        f"interior-knots={result.interior_knot_count} "
        f"max-residual={result.max_surface_residual:.3e}"
    )
    return EXIT_OK


def _curve_payload(curve, residual, verdict, extra=None):
    doc = {
        "version": 1,
        "kind": curve.kind,
        "degree": curve.degree,
        "knots": _knots_payload(curve.knots),
        "control_points": curve.control_points.tolist(),
        "max_residual": residual,
        "condition_ok": {True: "true", False: "false", None: "unchecked"}[verdict],
    }
    if extra:
        doc.update(extra)
    return doc


def cmd_interp_curve(args):
    _check_per(args.per)
    if args.degree < 1:
        raise _UsageError("degree must be >= 1")
    rows = parse_contours(args.input)
    if len(rows.rows) != 1:
        raise InvalidInputError(
            f"interp-curve expects a single row, the input has {len(rows.rows)}"
        )
    points = rows.rows[0]
    extra = {"knot_method": args.knot_method}
    if not args.closed:
        if args.knot_method != AVERAGING:
            raise _UsageError("open interpolation supports --knot-method averaging only")
        params = open_parameters(points)
        kv = averaging_knots_open(params, args.degree)
        res = interpolate_open(points, params, kv)
        doc = _curve_payload(res.curve, res.max_residual, None, extra)
    elif args.knot_method == "input":
        if not args.input_knots:
            raise _UsageError("--knot-method input requires --input-knots")
        with open(args.input_knots, "r", encoding="utf-8") as fh:
            kv_in = _knots_from_payload(json.load(fh))
        params = closed_parameters(points)
        out = interpolate_points_by_input_knots(points, params, kv_in, args.degree, args.per)
        extra["per"] = args.per
        extra["updated_input_knots"] = _knots_payload(out.updated_input)
        doc = _curve_payload(
            out.curve, out.result.max_residual, out.result.condition_ok, extra
        )
    else:
        params = closed_parameters(points)
        domain, solve_params = closed_knots(params, args.knot_method, args.degree)
        problem = ClosedInterpolationProblem(points, solve_params, domain, args.degree)
        if not problem.parity_ok:
            print(
                f"warning: --knot-method {args.knot_method} with even degree "
                f"{args.degree} may yield an ill-conditioned system" if args.degree % 2 == 0
                else f"warning: --knot-method {args.knot_method} with odd degree "
                f"{args.degree} breaks the parameter parity contract",
                file=sys.stderr,
            )
        res = interpolate_closed_square(problem)
        doc = _curve_payload(res.curve, res.max_residual, res.condition_ok, extra)
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(
            f"kind={doc['kind']} degree={doc['degree']} "
            f"max-residual={doc['max_residual']:.3e} condition={doc['condition_ok']}"
        )
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _parse_range(text, name):
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError:
        raise _UsageError(f"{name} must look like A:B") from None
    return a, b


def cmd_verify_conjectures(args):
    if args.trials < 1:
        raise _UsageError("trials must be >= 1")
    if args.threads < 1:
        raise _UsageError("threads must be >= 1")
    try:
        degrees = tuple(int(d) for d in args.degrees.split(",") if d)
    except ValueError:
        raise _UsageError("degrees must be a comma-separated integer list") from None
    base = dict(
        degrees=degrees,
        n_range=_parse_range(args.n_range, "n-range"),
        nhat_extra=_parse_range(args.nhat_extra, "nhat-extra"),
        trials=args.trials,
        seed=args.seed,
        rank_tol=args.rank_tol,
    )
    chunks = []
    total_cex = 0
    if args.which in ("1", "both"):
        report = run_conjecture1_trials(TrialConfig(conjecture=1, **base), threads=args.threads)
        total_cex += len(report.counterexamples)
        chunks.append(format_report(report))
        if args.stress:
            ladder = [1e-2, 1e-3, 1e-4, 1e-6, 1e-8, 0.0]
            chunks.append(format_report(boundary_stress(TrialConfig(conjecture=1, **base), ladder)))
    if args.which in ("2", "both"):
        report = run_conjecture2_trials(TrialConfig(conjecture=2, **base), threads=args.threads)
        total_cex += len(report.counterexamples)
        chunks.append(format_report(report))
    text = "".join(chunks)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_COUNTEREXAMPLE if total_cex else EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "loft":
            return cmd_loft(args)
        if args.command == "interp-curve":
            return cmd_interp_curve(args)
        return cmd_verify_conjectures(args)
    except _UsageError as exc:
        print(f"closedloft: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ContourParseError, InvalidInputError, ContractError, DomainError, OSError) as exc:
        print(f"closedloft: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SingularSystemError, PreconditionError, ClosedLoftError) as exc:
        print(f"closedloft: numerical failure: {exc}", file=sys.stderr)
        if isinstance(exc, SingularSystemError) and exc.rank_report is not None:
            rr = exc.rank_report
            print(
                f"closedloft: rank={rr.rank} condition={rr.condition:.3e} "
                f"tolerance={rr.tolerance:.1e}",
                file=sys.stderr,
            )
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
