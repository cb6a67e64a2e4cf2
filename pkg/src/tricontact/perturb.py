"""Removal of points (or small regions) shared by three triangles, plus the
face-gap computation that feeds the recursion over separating triangles.

All moves are exact.  Before a move, every forbidden event (a non-intersecting
pair starting to touch, an intersecting pair separating, a third triangle
joining an intersection, a boundary-overlap budget being exhausted, a boundary
corner being swallowed) is located exactly as the first sign change of a
piecewise-linear function of the step size; the step uses half the earliest
event time.  After each move the full invariant set is re-verified.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from tricontact.geometry import (
    NegTri,
    Overlap,
    Point,
    Tri,
    common_intersection,
    common_signed_height,
    gap_candidates,
    intersect,
    neg_interior_hits,
    push_horizontal,
    push_vertical,
    signed_height,
    translate,
)
from tricontact.solver import Representation


class PerturbError(RuntimeError):
    """Triple removal cannot proceed (degenerate input or exhausted retries)."""


class QuadrupleIntersection(PerturbError):
    """Four triangles share a point; outside the regime this engine handles."""


class ClaimViolation(PerturbError):
    """A step's postcondition failed for the attempted budget."""


class ZeroClearance(PerturbError):
    """An event already sits at distance zero from the move."""


class GapError(RuntimeError):
    """No valid face gap exists (upstream conditions violated)."""


# ---------------------------------------------------------------------------
# Bad triples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BadTriple:
    """Three triangles with a nonempty common intersection I.

    Roles follow the geometry of I = {a >= mx, b >= my, a+b <= ms}:
    u supplies the hypotenuse bound (and is the triangle slid down later),
    v the vertical bound, w the horizontal bound; p is the right corner of I.
    """
    u: int
    v: int
    w: int
    overlap: Overlap
    p: Point

    @property
    def ids(self) -> frozenset[int]:
        return frozenset((self.u, self.v, self.w))


@dataclass(frozen=True)
class EpsilonBudget:
    """Per-round step sizes and the clearance they were derived from.

    epsilon is the boundary-overlap bound being maintained; e2 is None when
    no triangle sits on the slid triangle's hypotenuse.  Each step size is
    strictly below the smallest forbidden-event margin of its move.
    """
    epsilon: Fraction
    e1: Fraction
    e2: Fraction | None
    e3: Fraction
    clearance: Fraction

    def __post_init__(self):
        assert self.e1 > 0 and self.e3 > 0 and (self.e2 is None or self.e2 > 0)
        assert self.clearance > 0


def rep_edges(rep: Representation) -> set[tuple[int, int]]:
    """Intersection graph of the representation: uv iff signed height >= 0."""
    vs = sorted(rep.triangles)
    out = set()
    for i, u in enumerate(vs):
        tu = rep.tri(u)
        for v in vs[i + 1:]:
            if signed_height(tu, rep.tri(v)) >= 0:
                out.add((u, v))
    return out


def _graph_triangles(rep: Representation, edges: set[tuple[int, int]]) -> list[tuple[int, int, int]]:
    adj: dict[int, set[int]] = {v: set() for v in rep.triangles}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    out = []
    for u in sorted(adj):
        nu = sorted(w for w in adj[u] if w > u)
        for i, v in enumerate(nu):
            for w in nu[i + 1:]:
                if w in adj[v]:
                    out.append((u, v, w))
    return out


def _assign_roles(ids: Sequence[int], tris: Sequence[Tri]) -> tuple[int, int, int]:
    """Role assignment for a triple with nonempty common intersection
    I = {a >= mx, b >= my, a+b <= ms}.

    In the canonical configuration each triangle sits flush against two of
    I's bounds and misses the third by its own height: u misses the x bound
    (east corner at I's east corner), v the hypotenuse bound (right corner at
    I's right corner), w the y bound (top corner at I's top corner).  The
    largest deficit per bound identifies the roles robustly even when the
    near-ties are perturbed.  For single-point intersections the exact corner
    structure is verified.
    """
    ms = min(t.s for t in tris)
    mx = max(t.x for t in tris)
    my = max(t.y for t in tris)
    by_id = dict(zip(ids, tris))

    u = max(ids, key=lambda i: (mx - by_id[i].x, -i))
    v = max(ids, key=lambda i: (by_id[i].s - ms, -i))
    w = max(ids, key=lambda i: (my - by_id[i].y, -i))
    if len({u, v, w}) != 3:
        raise PerturbError(
            f"triple {sorted(ids)} has no distinct east/right/top role assignment; "
            "configuration is degenerate")

    if ms - mx - my == 0:
        tu, tv, tw = by_id[u], by_id[v], by_id[w]
        point_ok = (tu.y == my and tu.s == ms
                    and tv.x == mx and tv.y == my
                    and tw.x == mx and tw.s == ms)
        if not point_ok:
            raise PerturbError(
                f"triple {sorted(ids)} meets in a point without the corner structure "
                "(east/right/top corners); configuration is degenerate")
    return u, v, w


def find_bad_triples(rep: Representation) -> list[BadTriple]:
    """All vertex triples whose triangles share a common point or region.

    Only triangles of the intersection graph can qualify (a pairwise-empty
    pair forces an empty common intersection).  Errors out if any four
    triangles share a point.
    """
    edges = rep_edges(rep)
    out = []
    all_ids = sorted(rep.triangles)
    for a, b, c in _graph_triangles(rep, edges):
        ts = [rep.tri(a), rep.tri(b), rep.tri(c)]
        ov = common_intersection(ts)
        if ov.is_empty:
            continue
        for z in all_ids:
            if z in (a, b, c):
                continue
            if common_signed_height(ts + [rep.tri(z)]) >= 0:
                raise QuadrupleIntersection(
                    f"triangles {a},{b},{c},{z} share a point; re-solve with smaller delta")
        u, v, w = _assign_roles((a, b, c), ts)
        out.append(BadTriple(u=u, v=v, w=w, overlap=ov, p=ov.right_corner))
    return out


def select_bad(triples: Sequence[BadTriple]) -> BadTriple:
    """Highest anchor point first; ties to the left; then sorted vertex triple."""
    if not triples:
        raise ValueError("no bad triples to select")
    return min(triples, key=lambda t: (-t.p.y, t.p.x, tuple(sorted(t.ids))))


# ---------------------------------------------------------------------------
# Exact piecewise-linear event analysis
# ---------------------------------------------------------------------------

PUSH_VERTICAL = "push_vertical"
PUSH_HORIZONTAL = "push_horizontal"
TRANSLATE_DOWN = "translate_down"

_DELTAS = {
    PUSH_VERTICAL: (Fraction(-1), Fraction(0), Fraction(0)),
    PUSH_HORIZONTAL: (Fraction(0), Fraction(-1), Fraction(0)),
    TRANSLATE_DOWN: (Fraction(0), Fraction(-1), Fraction(-1)),
}

Move = Mapping[int, str]  # vertex -> primitive kind

_ZERO = Fraction(0)


def _lines_for(rep: Representation, move: Move, ids: Sequence[int]):
    """Per-term line lists (value, slope) for the signed height of `ids`."""
    s_lines, x_lines, y_lines = [], [], []
    for i in ids:
        t = rep.tri(i)
        dx, dy, ds = _DELTAS[move[i]] if i in move else (_ZERO, _ZERO, _ZERO)
        s_lines.append((t.s, ds))
        x_lines.append((t.x, dx))
        y_lines.append((t.y, dy))
    return s_lines, x_lines, y_lines


def _breakpoints(groups) -> list[Fraction]:
    ts = set()
    for lines in groups:
        for (a1, s1), (a2, s2) in combinations(lines, 2):
            if s1 != s2:
                t = (a1 - a2) / (s2 - s1)
                if t > 0:
                    ts.add(t)
    return sorted(ts)


def _eval_signed(groups, t: Fraction) -> Fraction:
    s_lines, x_lines, y_lines = groups
    return (min(a + s * t for a, s in s_lines)
            - max(a + s * t for a, s in x_lines)
            - max(a + s * t for a, s in y_lines))


def _first_reach(groups, breaks: Sequence[Fraction], thresh: Fraction, upward: bool) -> Fraction | None:
    """Smallest t > 0 where the piecewise-linear signed height reaches thresh
    from below (upward=True) or from above (upward=False); None if never."""
    knots = [Fraction(0)] + list(breaks)
    vals = [_eval_signed(groups, t) for t in knots]
    for k in range(len(knots) - 1):
        t0, t1 = knots[k], knots[k + 1]
        f0, f1 = vals[k], vals[k + 1]
        if upward and f1 >= thresh:
            return t0 + (thresh - f0) * (t1 - t0) / (f1 - f0) if f1 != f0 else t1
        if not upward and f1 < thresh:
            if f1 == f0:  # pragma: no cover - constant segment below threshold
                return t0
            return t0 + (thresh - f0) * (t1 - t0) / (f1 - f0)
    # unbounded last segment
    t_last, f_last = knots[-1], vals[-1]
    probe = t_last + 1
    slope = _eval_signed(groups, probe) - f_last
    if upward and slope > 0:
        return t_last + (thresh - f_last) / slope
    if not upward and slope < 0:
        return t_last + (thresh - f_last) / slope
    return None


def _corner_entry(corner: Point, t: Tri, kind: str) -> Fraction | None:
    """First step size at which `corner` enters the moved triangle; None if never."""
    dx, dy, ds = _DELTAS[kind]
    # g >= 0 constraints: corner.x - x(t), corner.y - y(t), s(t) - (corner.x+corner.y)
    cons = [
        (corner.x - t.x, -dx),
        (corner.y - t.y, -dy),
        (t.s - corner.x - corner.y, ds),
    ]
    lo = Fraction(0)
    hi = None
    for g0, slope in cons:
        if slope == 0:
            if g0 < 0:
                return None
        elif slope > 0:
            if g0 < 0:
                lo = max(lo, -g0 / slope)
        else:
            if g0 < 0:
                return None
            root = -g0 / slope  # g decreasing: feasible for t <= root
            hi = root if hi is None else min(hi, root)
    if hi is not None and lo > hi:
        return None
    return lo


def safe_epsilon(rep: Representation, move: Move,
                 exclude_triple: frozenset[int] | None = None) -> Fraction:
    """Half the earliest forbidden-event time for the move.

    Events: a currently-disjoint pair reaching contact, a currently-intersecting
    pair separating, a currently-empty triple of mutually intersecting
    triangles gaining a common point, a boundary overlap reaching the epsilon
    budget, and a boundary corner entering a moved triangle.  Raises
    ZeroClearance when an event already sits at zero.
    """
    return _safe_epsilon_full(rep, move, exclude_triple)[0]


def _safe_epsilon_full(rep: Representation, move: Move,
                       exclude_triple: frozenset[int] | None = None
                       ) -> tuple[Fraction, Fraction]:
    """(step budget, clearance): the budget is half the clearance, which is
    the earliest forbidden-event time (capped by the moved heights)."""
    outer = set(rep.outer)
    for i in move:
        if i in outer:
            raise PerturbError(f"move targets boundary triangle {i}")
    moved = set(move)
    events: list[Fraction] = []

    vs = sorted(rep.triangles)
    edges = set()
    for i, a in enumerate(vs):
        for b in vs[i + 1:]:
            if signed_height(rep.tri(a), rep.tri(b)) >= 0:
                edges.add((a, b))

    eps = rep.epsilon
    for a, b in combinations(vs, 2):
        if a not in moved and b not in moved:
            continue
        groups = _lines_for(rep, move, (a, b))
        s0 = _eval_signed(groups, Fraction(0))
        if s0 < 0:
            ev = _first_reach(groups, _breakpoints(groups), Fraction(0), upward=True)
        else:
            ev = _first_reach(groups, _breakpoints(groups), Fraction(0), upward=False)
            if (a in outer) != (b in outer):       # boundary overlap budget
                ev2 = _first_reach(groups, _breakpoints(groups), eps, upward=True)
                if ev2 is not None:
                    events.append(ev2)
        if ev is not None:
            events.append(ev)

    adj: dict[int, set[int]] = {v: set() for v in vs}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    for a in vs:
        na = sorted(x for x in adj[a] if x > a)
        for i, b in enumerate(na):
            for c in na[i + 1:]:
                if c not in adj[b]:
                    continue
                if not ({a, b, c} & moved):
                    continue
                if exclude_triple is not None and frozenset((a, b, c)) == exclude_triple:
                    continue
                groups = _lines_for(rep, move, (a, b, c))
                if _eval_signed(groups, Fraction(0)) < 0:
                    ev = _first_reach(groups, _breakpoints(groups), Fraction(0), upward=True)
                    if ev is not None:
                        events.append(ev)

    for o in outer:
        for corner in rep.tri(o).corners:
            for i in moved:
                ev = _corner_entry(corner, rep.tri(i), move[i])
                if ev is not None:
                    events.append(ev)

    cap = min(rep.tri(i).h for i in moved)
    bound = min(events) if events else cap
    if bound <= 0:
        raise ZeroClearance(f"an event sits at zero clearance for move {dict(move)}")
    clearance = min(bound, cap)
    return clearance / 2, clearance


# ---------------------------------------------------------------------------
# The three steps
# ---------------------------------------------------------------------------

def _check_graph_preserved(before: Representation, after: Representation,
                           touched: Iterable[int]) -> None:
    touched = set(touched)
    for a in touched:
        ta0, ta1 = before.tri(a), after.tri(a)
        for b in before.triangles:
            if b == a or (b in touched and b < a):
                continue
            s0 = signed_height(ta0, before.tri(b))
            s1 = signed_height(ta1, after.tri(b))
            if (s0 >= 0) != (s1 >= 0):
                raise ClaimViolation(f"pair ({a},{b}) changed intersection status")


def _check_boundary_budget(rep: Representation, touched: Iterable[int]) -> None:
    outer = set(rep.outer)
    for i in touched:
        if i in outer:
            continue
        ti = rep.tri(i)
        for o in outer:
            s = signed_height(ti, rep.tri(o))
            if s >= rep.epsilon:
                raise ClaimViolation(f"boundary overlap ({i},{o}) reached epsilon")
            for corner in rep.tri(o).corners:
                if ti.contains(corner):
                    raise ClaimViolation(f"boundary corner of {o} entered triangle {i}")


def _single_point_contact(rep: Representation, u: int, z: int) -> Point | None:
    ov = intersect(rep.tri(z), rep.tri(u))
    return ov.point if ov.kind == "point" else None


def step1_widen(rep: Representation, triple: BadTriple, e1: Fraction) -> Representation:
    """Push the vertical side of t(u) left; east corner and hypotenuse stay.

    Postconditions: intersection graph unchanged; the (new) top corner of
    t(u) is not a single-point contact; boundary budget and corners intact.
    """
    u = triple.u
    if u in rep.outer:
        raise PerturbError(f"triple {sorted(triple.ids)} requires moving boundary triangle {u}")
    out = rep.with_triangle(u, push_vertical(rep.tri(u), e1))
    _check_graph_preserved(rep, out, [u])
    _check_boundary_budget(out, [u])
    q = out.tri(u).top_corner
    for z in out.triangles:
        if z != u and _single_point_contact(out, u, z) == q:
            raise ClaimViolation(f"top corner of {u} is a contact point with {z}")
    return out


def _hyp_point_contacts(rep: Representation, u: int, include_top: bool) -> dict[int, Point]:
    """Triangles touching t(u) in a single point strictly inside its hypotenuse
    (optionally including the top corner endpoint)."""
    tu = rep.tri(u)
    lo, hi = tu.x, tu.x + tu.h
    found = {}
    for z in rep.triangles:
        if z == u:
            continue
        c = _single_point_contact(rep, u, z)
        if c is None or c.x + c.y != tu.s:
            continue
        if (c.x > lo or (include_top and c.x == lo)) and c.x < hi:
            found[z] = c
    return found


def _translation_hazards(rep: Representation, triple: BadTriple,
                         cap: Fraction) -> list[int]:
    """Triangles whose intersection with t(u) shrinks at unit rate when t(u)
    slides down: they meet t(u) across its hypotenuse (their hypotenuse level
    and horizontal side at or above t(u)'s), with depth at most `cap`.

    Single-point contacts strictly inside the upper hypotenuse are the depth-0
    members; shallow region overlaps (arising after inflation) are their
    positive-depth analogues and are equally lost by a slide deeper than they
    are.
    """
    u = triple.u
    tu = rep.tri(u)
    out = []
    for z in sorted(rep.triangles):
        if z in triple.ids:
            continue
        tz = rep.tri(z)
        if tz.s < tu.s or tz.y < tu.y:
            continue
        s = signed_height(tu, tz)
        if 0 <= s <= cap:
            out.append(z)
    return out


def step2_clear(rep: Representation, triple: BadTriple, e2: Fraction) -> Representation:
    """Push down every triangle that meets t(u) in a single point of its open
    upper hypotenuse or in a region too shallow to survive the coming slide,
    deepening those meetings into slide-proof overlaps.

    Postcondition: no single-point contact remains on the hypotenuse of t(u)
    above its east corner (top corner included); graph unchanged.
    """
    u = triple.u
    sig = max(common_signed_height([rep.tri(i) for i in sorted(triple.ids)]), Fraction(0))
    zs = _translation_hazards(rep, triple, 2 * sig)
    out = rep
    outer = set(rep.outer)
    for z in zs:
        if z in outer:
            raise PerturbError(f"boundary triangle {z} sits on the hypotenuse of {u}")
        out = out.with_triangle(z, push_horizontal(out.tri(z), e2))
    if zs:
        _check_graph_preserved(rep, out, zs)
        _check_boundary_budget(out, zs)
    if _hyp_point_contacts(out, u, include_top=True):
        raise ClaimViolation(f"a contact point remains on the upper hypotenuse of {u}")
    return out


def step3_separate(rep: Representation, triple: BadTriple, e3: Fraction) -> Representation:
    """Slide t(u) down while pushing the vertical side of t(v) left.

    Postconditions: the triple's common intersection becomes empty; the
    intersection graph is unchanged; boundary budget and corners intact.
    """
    u, v = triple.u, triple.v
    for i in (u, v):
        if i in rep.outer:
            raise PerturbError(f"triple {sorted(triple.ids)} requires moving boundary triangle {i}")
    out = rep.with_triangle(u, translate(rep.tri(u), Fraction(0), -e3))
    out = out.with_triangle(v, push_vertical(out.tri(v), e3))
    _check_graph_preserved(rep, out, [u, v])
    _check_boundary_budget(out, [u, v])
    ids = sorted(triple.ids)
    if common_signed_height([out.tri(i) for i in ids]) >= 0:
        raise ClaimViolation(f"triple {ids} still has a common intersection")
    return out


def remove_all(rep: Representation, max_step_retries: int = 20,
               budgets: list[EpsilonBudget] | None = None) -> Representation:
    """Remove every bad triple: find, select highest, apply the three steps
    with exact safe budgets; retry a round with halved budgets when a
    postcondition recheck fails.  Terminates in at most the initial number of
    bad triples rounds."""
    bad = find_bad_triples(rep)
    cap = len(bad)
    for _ in range(cap):
        if not bad:
            break
        sel = select_bad(bad)
        prev_ids = {t.ids for t in bad}
        advanced = False
        shrink = Fraction(1)
        for _attempt in range(max_step_retries):
            try:
                work = rep
                e1, c1 = _safe_epsilon_full(work, {sel.u: PUSH_VERTICAL}, exclude_triple=sel.ids)
                e1 *= shrink
                work = step1_widen(work, sel, e1)
                sig1 = max(common_signed_height([work.tri(i) for i in sorted(sel.ids)]),
                           Fraction(0))
                zs = _translation_hazards(work, sel, 2 * sig1)
                e2 = c2 = None
                if zs:
                    move2 = {z: PUSH_HORIZONTAL for z in zs}
                    e2, c2 = _safe_epsilon_full(work, move2, exclude_triple=sel.ids)
                    e2 *= shrink
                    work = step2_clear(work, sel, e2)
                move3 = {sel.u: TRANSLATE_DOWN, sel.v: PUSH_VERTICAL}
                e3, c3 = _safe_epsilon_full(work, move3, exclude_triple=sel.ids)
                e3 *= shrink
                sig = common_signed_height([work.tri(i) for i in sorted(sel.ids)])
                if e3 <= sig:
                    raise PerturbError(
                        f"safe budget {float(e3):.3e} cannot clear triple overlap "
                        f"{float(sig):.3e}; re-solve with smaller delta")
                work = step3_separate(work, sel, e3)
                new_bad = find_bad_triples(work)
                new_ids = {t.ids for t in new_bad}
                if len(new_bad) >= len(bad) or not new_ids <= prev_ids - {sel.ids}:
                    raise ClaimViolation("a new triple appeared after the three steps")
                if budgets is not None:
                    budgets.append(EpsilonBudget(
                        epsilon=rep.epsilon, e1=e1, e2=e2, e3=e3,
                        clearance=min(c for c in (c1, c2, c3) if c is not None)))
                rep, bad = work, new_bad
                advanced = True
                break
            except ClaimViolation:
                shrink /= 2
        if not advanced:
            raise PerturbError(f"could not clear triple {sorted(sel.ids)} after retries")
    if find_bad_triples(rep):
        raise PerturbError("round cap exceeded with triples remaining")  # pragma: no cover
    return rep


# ---------------------------------------------------------------------------
# Face gaps and the recursion budget
# ---------------------------------------------------------------------------

def face_gap(rep: Representation, face: Iterable[int]) -> tuple[NegTri, Fraction]:
    """The negative triangle nestled between the three triangles of an inner
    face, with the safe probe budget for recursing into it."""
    gap, _, eps_prime = face_gap_with_roles(rep, face)
    return gap, eps_prime


def face_gap_with_roles(rep: Representation, face: Iterable[int]
                        ) -> tuple[NegTri, dict[str, int], Fraction]:
    """face_gap plus the role map (which face vertex supplies which gap side).

    The budget is half the smallest exact clearance from any gap side to a
    non-face triangle (capped by the gap height): a probe homothet of that
    height with a side in a gap side cannot reach any triangle outside the
    face.
    """
    ids = sorted(set(int(v) for v in face))
    if len(ids) != 3:
        raise GapError(f"face must have three vertices, got {face!r}")
    ts = [rep.tri(v) for v in ids]
    others = [v for v in sorted(rep.triangles) if v not in ids]
    # conservative float cache: (x, y, s) per other triangle
    fl = {}
    scale = 1.0
    for v in others:
        t = rep.tri(v)
        fl[v] = (float(t.x), float(t.y), float(t.s))
        scale = max(scale, abs(fl[v][0]), abs(fl[v][1]), abs(fl[v][2]))
    tau = 1e-9 * scale

    def hits_any(cand: NegTri) -> bool:
        cx, cy, ch = float(cand.x), float(cand.y), float(cand.hyp_level)
        for v in others:
            tx, ty, ts_ = fl[v]
            if tx > cx + tau or ty > cy + tau or ts_ < ch - tau:
                continue  # certainly interior-disjoint
            if neg_interior_hits(cand, rep.tri(v)):
                return True
        return False

    valid = [(cand, role_idx) for cand, role_idx in gap_candidates(ts)
             if not hits_any(cand)]
    if not valid:
        raise GapError(f"no valid gap for face {ids}")
    if len(valid) > 1:
        raise GapError(f"gap for face {ids} is not unique")
    gap, role_idx = valid[0]
    roles = {r: ids[i] for r, i in role_idx.items()}

    X, Y, H = gap.x, gap.y, gap.h
    strips = (
        (Tri(X - H, Y - H, H), lambda t: gap.hyp_level - t.s),   # through the hypotenuse side
        (Tri(X, Y - H, H), lambda t: t.x - X),                    # through the vertical side
        (Tri(X - H, Y, H), lambda t: t.y - Y),                    # through the horizontal side
    )
    clearance = H
    for probe, depth in strips:
        px, py, ps = float(probe.x), float(probe.y), float(probe.s)
        for v in others:
            tx, ty, ts_ = fl[v]
            if min(ps, ts_) - max(px, tx) - max(py, ty) < -tau:
                continue  # certainly clear of the strip
            tv = rep.tri(v)
            if signed_height(probe, tv) < 0:
                continue
            d = depth(tv)
            if d <= 0:
                raise GapError(f"triangle {v} touches a gap side of face {ids}")
            clearance = min(clearance, d)
    return gap, roles, clearance / 2
