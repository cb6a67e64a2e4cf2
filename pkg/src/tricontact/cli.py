"""Batch front end: ingest graphs, run pipeline stages, emit JSON/SVG artifacts.

Exit codes: 0 success, 2 input/schema problem, 3 graph validation failure,
4 solver failure, 5 verification failure, 6 internal pipeline failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from tricontact import assemble, perturb, planar, render, solver, verify
from tricontact.geometry import frac

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_VALIDATE = 3
EXIT_SOLVER = 4
EXIT_VERIFY = 5
EXIT_PIPELINE = 6

CONFIG_ENV = "TRICONTACT_CONFIG"


def _dump(obj: dict, path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def _write_text(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def _load_json(path: str) -> dict:
    with open(path) as f:
        return json.load(f)


def _solver_params(args) -> solver.SolverParams:
    return solver.SolverParams(
        delta=args.delta, margin=args.margin, h_min=args.h_min,
        max_iters=args.max_iters, restarts=args.restarts, seed=args.seed,
    )


def _config(args) -> assemble.PipelineConfig:
    return assemble.PipelineConfig(
        outer=assemble.default_outer(frac(args.scale)),
        epsilon=frac(args.epsilon),
        solver=_solver_params(args),
    )


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", default="1", help="boundary overlap budget (rational)")
    p.add_argument("--scale", default="1", help="scale of the default boundary triple")
    p.add_argument("--delta", type=float, default=1e-7, help="solver residual tolerance")
    p.add_argument("--margin", type=float, default=1e-3, help="minimum non-adjacent separation")
    p.add_argument("--h-min", dest="h_min", type=float, default=1e-3, help="minimum triangle height")
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)


def cmd_validate(args) -> int:
    try:
        T = planar.from_json(_load_json(args.input))
    except planar.GraphError as e:
        print(f"invalid: {e}", file=sys.stderr)
        return EXIT_VALIDATE
    out = {"valid": True, "n": T.n, "edges": len(T.edges), "faces": len(T.faces),
           "separating_triangles": [list(t) for t in planar.separating_triangles(T)]}
    _dump(out, args.output)
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.kind == "stacked":
        T = planar.gen_stacked(args.n, args.seed)
    else:
        if args.four_connected:
            T = planar.gen_four_connected(args.n, args.seed)
        else:
            T = planar.gen_triangulation(args.n, args.seed)
    _dump(T.to_json(), args.output)
    return EXIT_OK


def cmd_solve(args) -> int:
    """Piece-level solve: the input graph must have no separating triangle
    (it is processed as one piece, without decomposition)."""
    T = planar.from_json(_load_json(args.input))
    if planar.separating_triangles(T):
        print("graph has separating triangles; use `run`", file=sys.stderr)
        return EXIT_INPUT
    config = _config(args)
    piece = planar.as_piece(T)
    outer_map = {v: t for v, t in zip(T.outer, config.outer)}
    eps = config.epsilon
    try:
        rep = solver.solve_stacked(piece, outer_map, epsilon=eps)
    except solver.NotStackedError:
        try:
            res = solver.solve_contacts(piece, outer_map, config.solver)
            rep = solver.robustify(solver.exactify(res, eps), piece, config.solver, eps)
        except (solver.SolveFailure, solver.RobustifyError) as e:
            print(f"solver failure: {e}", file=sys.stderr)
            return EXIT_SOLVER
    rep = perturb.remove_all(rep)
    _dump(rep.to_json(), args.output)
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        T = planar.from_json(_load_json(args.input))
    except planar.GraphError as e:
        print(f"invalid graph: {e}", file=sys.stderr)
        return EXIT_VALIDATE
    config = _config(args)
    try:
        rep = assemble.represent(T, config)
    except (solver.SolveFailure, solver.RobustifyError) as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except (assemble.PipelineError, perturb.PerturbError, solver.CanvasError) as e:
        print(f"pipeline failure: {e}", file=sys.stderr)
        return EXIT_PIPELINE
    _dump(rep.to_json(), args.output)
    report = verify.full_report(rep, T, audit=args.audit, with_faces=True,
                                with_drawing=args.drawing)
    if args.report:
        _dump(report.to_json(), args.report)
    if args.drawing_out and report.graph_match and report.simple:
        _dump(verify.extract_drawing(rep, T).to_json(), args.drawing_out)
    if args.svg:
        d = verify.extract_drawing(rep, T) if args.drawing else None
        _write_text(render.render_svg(rep, drawing=d), args.svg)
    if not report.passed:
        print("verification failed", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_verify(args) -> int:
    rep = solver.Representation.from_json(_load_json(args.input))
    T = planar.from_json(_load_json(args.graph))
    eps = frac(args.epsilon) if args.epsilon else None
    report = verify.full_report(rep, T, epsilon=eps, audit=args.audit,
                                with_faces=not args.no_faces, with_drawing=args.drawing)
    _dump(report.to_json(), args.output)
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_render(args) -> int:
    rep = solver.Representation.from_json(_load_json(args.input))
    d = None
    if args.graph:
        T = planar.from_json(_load_json(args.graph))
        d = verify.extract_drawing(rep, T)
    _write_text(render.render_svg(rep, drawing=d, show_contacts=args.contacts,
                                  precision=args.precision), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tricontact",
                                description="Intersection representations of planar "
                                            "triangulations by homothetic right triangles")
    sub = p.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("validate", help="check a graph JSON file")
    pv.add_argument("--input", required=True)
    pv.add_argument("--output", default=None)
    pv.set_defaults(fn=cmd_validate)

    pg = sub.add_parser("gen", help="generate a triangulation")
    pg.add_argument("kind", choices=["stacked", "random"])
    pg.add_argument("--n", type=int, required=True)
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--four-connected", action="store_true",
                    help="filter/repair until no separating triangle remains")
    pg.add_argument("--output", default=None)
    pg.set_defaults(fn=cmd_gen)

    ps = sub.add_parser("solve", help="solve a single piece (no separating triangles)")
    ps.add_argument("--input", required=True)
    ps.add_argument("--output", default=None)
    _add_solver_flags(ps)
    ps.set_defaults(fn=cmd_solve)

    pr = sub.add_parser("run", help="full pipeline: decompose, solve, verify")
    pr.add_argument("--input", required=True)
    pr.add_argument("--output", default=None, help="representation JSON")
    pr.add_argument("--report", default=None, help="verification report JSON")
    pr.add_argument("--drawing-out", default=None, help="drawing JSON")
    pr.add_argument("--svg", default=None, help="render to SVG file")
    pr.add_argument("--audit", action="store_true", help="cubic triple scan")
    pr.add_argument("--drawing", action="store_true", help="extract and check a drawing")
    _add_solver_flags(pr)
    pr.set_defaults(fn=cmd_run)

    pc = sub.add_parser("verify", help="verify a representation against a graph")
    pc.add_argument("--input", required=True, help="representation JSON")
    pc.add_argument("--graph", required=True, help="graph JSON")
    pc.add_argument("--epsilon", default=None)
    pc.add_argument("--audit", action="store_true")
    pc.add_argument("--drawing", action="store_true")
    pc.add_argument("--no-faces", action="store_true")
    pc.add_argument("--output", default=None)
    pc.set_defaults(fn=cmd_verify)

    pd = sub.add_parser("render", help="render a representation to SVG")
    pd.add_argument("--input", required=True)
    pd.add_argument("--graph", default=None, help="also draw the planar drawing")
    pd.add_argument("--contacts", action="store_true")
    pd.add_argument("--precision", type=int, default=6)
    pd.add_argument("--output", default=None)
    pd.set_defaults(fn=cmd_render)

    config_path = os.environ.get(CONFIG_ENV)
    if config_path and os.path.exists(config_path):
        try:
            with open(config_path) as f:
                p.set_defaults(**json.load(f))
        except (OSError, json.JSONDecodeError):
            pass
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
