"""End-to-end construction: decompose, solve each piece inside its gap,
thread boundary triangles and overlap budgets through the separation tree.

Each piece is solved with its three boundary triangles fixed: exactly when it
is stacked, numerically (then exactified, inflated, and cleared of triple
overlaps) otherwise.  For every child separating triangle the parent piece
supplies the face gap and the safe recursion budget; the child budget is the
minimum of the parent budget and that gap budget, so budgets only shrink on
the way down.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from tricontact import perturb, planar
from tricontact.geometry import Tri, frac, inside_neg
from tricontact.solver import (
    NotStackedError,
    Representation,
    SolverParams,
    canvas_with_roles,
    exactify,
    robustify,
    solve_contacts,
    solve_stacked,
)


class PipelineError(RuntimeError):
    pass


def default_outer(scale: Fraction | int = 1) -> tuple[Tri, Tri, Tri]:
    """Boundary triple ((0,0,4), (1,3,2), (3,1,2)) scaled by `scale`:
    pairwise single-point contacts at distinct points, no common point."""
    s = frac(scale)
    if s <= 0:
        raise ValueError("scale must be positive")
    return (
        Tri(0 * s, 0 * s, 4 * s),
        Tri(1 * s, 3 * s, 2 * s),
        Tri(3 * s, 1 * s, 2 * s),
    )


REFERENCE_CANVAS_HEIGHT = 2.0  # canvas height of default_outer(1); params scale from it


@dataclass(frozen=True)
class PipelineConfig:
    outer: tuple[Tri, Tri, Tri] = dc_field(default_factory=default_outer)
    epsilon: Fraction = Fraction(1)
    solver: SolverParams = dc_field(default_factory=SolverParams)

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def _solve_piece(piece: planar.Triangulation, outer_map: dict[int, Tri],
                 canvas_roles, epsilon: Fraction, params: SolverParams,
                 trace_entry: dict) -> Representation:
    try:
        rep = solve_stacked(piece, outer_map, epsilon=epsilon, canvas_roles=canvas_roles)
        trace_entry["path"] = "stacked"
    except NotStackedError:
        canvas = canvas_roles[0]
        lam = float(canvas.h) / REFERENCE_CANVAS_HEIGHT
        piece_params = params.scaled(lam)
        result = solve_contacts(piece, outer_map, piece_params, canvas_roles=canvas_roles)
        rep = robustify(exactify(result, epsilon), piece, piece_params, epsilon)
        trace_entry["path"] = "solver"
        trace_entry["restarts"] = result.restarts_used
        trace_entry["max_edge_residual"] = result.max_edge_residual
    return perturb.remove_all(rep)


def represent(T: planar.Triangulation, config: PipelineConfig | None = None,
              trace: list | None = None) -> Representation:
    """Construct a representation of T bounded by the configured outer
    triangles, with every adjacency realized and no point in three triangles.

    Deterministic given the config (incl. solver seed).  Raises on solver
    non-convergence or hypothesis violations instead of returning a wrong
    representation.
    """
    if config is None:
        config = PipelineConfig()
    tree = planar.decompose(T)
    triangles: dict[int, Tri] = {}

    def process(piece_idx: int, outer_map: dict[int, Tri], epsilon: Fraction,
                canvas_roles) -> None:
        piece = tree.pieces[piece_idx]
        entry = {"piece": piece_idx, "n": planar.piece_size(piece),
                 "epsilon": epsilon, "canvas": canvas_roles[0]}
        rep = _solve_piece(piece, outer_map, canvas_roles, epsilon, config.solver, entry)
        if trace is not None:
            trace.append(entry)
        for v in rep.inner_ids():
            if v in triangles:
                raise PipelineError(f"vertex {v} placed twice")
            triangles[v] = rep.tri(v)
        for child_idx, label in tree.children(piece_idx):
            gap, roles_by_vertex, eps_prime = perturb.face_gap_with_roles(rep, label)
            if eps_prime <= 0:
                raise PipelineError(f"face {label} has no recursion budget")
            eps_child = min(epsilon, eps_prime)
            child_outer = {v: rep.tri(v) for v in label}
            process(child_idx, child_outer, eps_child, (gap, roles_by_vertex))
            child_piece = tree.pieces[child_idx]
            allowed = gap.expand(eps_child)
            for v in child_piece.vertices():
                if v in label:
                    continue
                if not inside_neg(triangles[v], allowed):
                    raise PipelineError(
                        f"triangle of vertex {v} escapes the face gap of {label}")

    root = tree.pieces[0]
    outer_map = {v: t for v, t in zip(root.outer, config.outer)}
    canvas, role_idx = canvas_with_roles([outer_map[v] for v in root.outer])
    roles_by_vertex = {r: root.outer[i] for r, i in role_idx.items()}
    for v, t in outer_map.items():
        triangles[v] = t
    process(0, outer_map, config.epsilon, (canvas, roles_by_vertex))

    missing = set(T.vertices()) - set(triangles)
    if missing:
        raise PipelineError(f"vertices never placed: {sorted(missing)}")  # pragma: no cover
    return Representation(triangles, T.outer, config.epsilon)


def represent_planar(n: int, edges, config: PipelineConfig | None = None,
                     ) -> tuple[dict[int, Tri], Representation, planar.Triangulation]:
    """Representation of an arbitrary simple connected planar graph.

    Augments the graph to a triangulation (added vertices never connect two
    input vertices, so the input is an induced subgraph), represents the
    triangulation, and returns the input vertices' triangles alongside the
    full representation and the triangulation used.
    """
    T = planar.augment_to_triangulation(n, edges)
    rep = represent(T, config)
    return {v: rep.tri(v) for v in range(n)}, rep, T
