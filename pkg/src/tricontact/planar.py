"""Combinatorial side: triangulation model, separating-triangle machinery, generators.

A triangulation here is a simple maximal planar graph with a distinguished
outer face.  For maximal planar graphs with n >= 4 the face set is unique
(they are 3-connected), so faces are stored as plain vertex sets derived from
a planarity-test embedding.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import networkx as nx


class GraphError(ValueError):
    """Input graph fails a structural requirement (with a diagnostic message)."""


Edge = tuple[int, int]


def _edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Triangulation:
    n: int
    edges: frozenset[Edge]
    outer: tuple[int, int, int]
    faces: tuple[frozenset[int], ...]

    @property
    def outer_set(self) -> frozenset[int]:
        return frozenset(self.outer)

    @property
    def inner_faces(self) -> tuple[frozenset[int], ...]:
        return tuple(f for f in self.faces if f != self.outer_set)

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {v: set() for v in range(self.n)}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def vertices(self) -> range:
        return range(self.n)

    def has_edge(self, u: int, v: int) -> bool:
        return _edge(u, v) in self.edges

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "outer": list(self.outer),
            "edges": sorted([list(e) for e in self.edges]),
        }


def _faces_from_embedding(emb: nx.PlanarEmbedding) -> list[tuple[int, ...]]:
    faces = []
    seen: set[tuple[int, int]] = set()
    for u, v in emb.edges():
        if (u, v) in seen:
            continue
        face = emb.traverse_face(u, v, mark_half_edges=seen)
        faces.append(tuple(face))
    return faces


def validate(n: int, edges: Iterable[Sequence[int]], outer: Sequence[int]) -> Triangulation:
    """Check raw vertex/edge/outer data and return a Triangulation.

    Raises GraphError for: loops/multi-edges, out-of-range vertices, too few
    vertices, non-planar graphs, non-maximal graphs, and an outer triple that
    is not a face.
    """
    if n < 4:
        raise GraphError(f"need at least 4 vertices, got {n}")
    eset: set[Edge] = set()
    for e in edges:
        if len(e) != 2:
            raise GraphError(f"malformed edge {e!r}")
        u, v = int(e[0]), int(e[1])
        if u == v:
            raise GraphError(f"loop at vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edge ({u},{v}) out of range for n={n}")
        key = _edge(u, v)
        if key in eset:
            raise GraphError(f"duplicate edge ({u},{v})")
        eset.add(key)
    if len(outer) != 3 or len(set(outer)) != 3:
        raise GraphError(f"outer must be three distinct vertices, got {outer!r}")
    outer_t = (int(outer[0]), int(outer[1]), int(outer[2]))
    for u, v in combinations(outer_t, 2):
        if _edge(u, v) not in eset:
            raise GraphError(f"outer vertices {u},{v} are not adjacent")

    if len(eset) != 3 * n - 6:
        raise GraphError(f"not maximal planar: {len(eset)} edges, expected {3 * n - 6}")

    g = nx.Graph(sorted(eset))
    g.add_nodes_from(range(n))
    if not nx.is_connected(g):
        raise GraphError("graph is not connected")
    ok, emb = nx.check_planarity(g)
    if not ok:
        raise GraphError("graph is not planar")

    faces_raw = _faces_from_embedding(emb)
    if any(len(f) != 3 for f in faces_raw):
        raise GraphError("embedding has a non-triangular face")
    faces = tuple(sorted({frozenset(f) for f in faces_raw}, key=lambda f: sorted(f)))
    if len(faces) != 2 * n - 4:
        raise GraphError(f"face count {len(faces)} != 2n-4 = {2 * n - 4}")
    if frozenset(outer_t) not in set(faces):
        raise GraphError(f"outer triple {outer_t} is not a face")
    return Triangulation(n=n, edges=frozenset(eset), outer=outer_t, faces=faces)


def from_json(data: dict) -> Triangulation:
    try:
        return validate(int(data["n"]), data["edges"], data["outer"])
    except KeyError as e:
        raise GraphError(f"graph JSON missing key {e}") from e


def load_graph(path: str) -> Triangulation:
    with open(path) as f:
        return from_json(json.load(f))


# ---------------------------------------------------------------------------
# Separating triangles and decomposition
# ---------------------------------------------------------------------------

def triangles_of(T: Triangulation) -> list[tuple[int, int, int]]:
    """All 3-cliques, enumerated deterministically."""
    adj = T.adjacency()
    out = []
    for u in sorted(adj):
        nu = sorted(w for w in adj[u] if w > u)
        for i, v in enumerate(nu):
            for w in nu[i + 1:]:
                if w in adj[v]:
                    out.append((u, v, w))
    return out


def separating_triangles(T: Triangulation) -> list[tuple[int, int, int]]:
    """3-cycles that are not faces; empty iff the piece is 4-connected
    in the sense used here (K4 qualifies)."""
    face_sets = set(T.faces)
    return [t for t in triangles_of(T) if frozenset(t) not in face_sets]


def _face_edge_map(T: Triangulation) -> dict[Edge, list[frozenset[int]]]:
    m: dict[Edge, list[frozenset[int]]] = {}
    for f in T.faces:
        a, b, c = sorted(f)
        for e in ((a, b), (a, c), (b, c)):
            m.setdefault(e, []).append(f)
    return m


@dataclass(frozen=True)
class _RelabeledPiece(Triangulation):
    """A triangulation piece keeping the parent's vertex labels.

    `n` is an upper bound on labels; `vertex_ids` lists the labels in use.
    """
    vertex_ids: tuple[int, ...] = ()

    def vertices(self):  # type: ignore[override]
        return self.vertex_ids

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {v: set() for v in self.vertex_ids}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj


def as_piece(T: Triangulation) -> _RelabeledPiece:
    if isinstance(T, _RelabeledPiece):
        return T
    return _RelabeledPiece(n=T.n, vertex_ids=tuple(range(T.n)),
                           edges=T.edges, outer=T.outer, faces=T.faces)


def piece_size(P: Triangulation) -> int:
    return len(list(P.vertices()))


def _make_piece(faces: set[frozenset[int]], outer3: tuple[int, int, int]) -> _RelabeledPiece:
    verts = sorted(set().union(*faces))
    edges = set()
    for f in faces:
        for u, v in combinations(sorted(f), 2):
            edges.add(_edge(u, v))
    return _RelabeledPiece(
        n=verts[-1] + 1,
        vertex_ids=tuple(verts),
        edges=frozenset(edges),
        outer=outer3,
        faces=tuple(sorted(faces, key=sorted)),
    )


def split(T: Triangulation, tri: Sequence[int]) -> tuple[Triangulation, Triangulation]:
    """Split at a separating triangle: (T_out, T_in).

    T_in has outer face tri; tri is an inner face of T_out; the vertex sets
    overlap exactly in tri.  Faces are partitioned by flooding from the outer
    face without crossing the three cycle edges.
    """
    tset = frozenset(int(v) for v in tri)
    if len(tset) != 3:
        raise GraphError(f"not a vertex triple: {tri!r}")
    if tset in set(T.faces) or not all(T.has_edge(u, v) for u, v in combinations(tset, 2)):
        raise GraphError(f"{tuple(sorted(tset))} is not a separating triangle")

    walls = {_edge(u, v) for u, v in combinations(sorted(tset), 2)}
    edge_faces = _face_edge_map(T)
    out_faces = {T.outer_set}
    stack = [T.outer_set]
    while stack:
        f = stack.pop()
        a, b, c = sorted(f)
        for e in ((a, b), (a, c), (b, c)):
            if e in walls:
                continue
            for g in edge_faces[e]:
                if g not in out_faces:
                    out_faces.add(g)
                    stack.append(g)
    in_faces = {f for f in T.faces if f not in out_faces}
    if not in_faces:
        raise GraphError(f"{tuple(sorted(tset))} is not a separating triangle")

    piece_out = _make_piece(out_faces | {tset}, T.outer)
    piece_in = _make_piece(in_faces | {tset}, tuple(sorted(tset)))
    return piece_out, piece_in


@dataclass(frozen=True)
class SeparationTree:
    """Decomposition into pieces without separating triangles.

    links = (parent_index, child_index, shared triangle) triples; the shared
    triangle is an inner face of the parent piece and the outer face of the
    child piece.  Piece 0 contains the input's outer face.
    """
    pieces: tuple[_RelabeledPiece, ...]
    links: tuple[tuple[int, int, tuple[int, int, int]], ...]

    def children(self, i: int) -> list[tuple[int, tuple[int, int, int]]]:
        return [(c, t) for p, c, t in self.links if p == i]


def _decompose_recursive(T: Triangulation) -> list[_RelabeledPiece]:
    """Reference decomposition: repeatedly split at a separating triangle
    minimizing |T_in| (ties broken by sorted vertex triple)."""
    final: list[_RelabeledPiece] = []
    pending = [as_piece(T)]
    while pending:
        piece = pending.pop()
        seps = separating_triangles(piece)
        if not seps:
            final.append(piece)
            continue
        best = None
        for t in seps:
            t_out, t_in = split(piece, t)
            key = (piece_size(t_in), tuple(sorted(t)))
            if best is None or key < best[0]:
                best = (key, t_out, t_in)
        _, t_out, t_in = best
        pending.append(t_out)
        pending.append(t_in)
    return final


def _decompose_laminar(T: Triangulation) -> list[_RelabeledPiece] | None:
    """One-pass decomposition via the nesting forest of separating triangles.

    Computes each separating triangle's inside-face-set once (as a bitmask
    over faces); when the family is laminar, pieces are read off directly.
    Returns None if laminarity fails (exotic input; caller falls back to the
    splitting reference, which handles any case).
    """
    piece0 = as_piece(T)
    seps = separating_triangles(piece0)
    if not seps:
        return [piece0]
    face_idx = {f: i for i, f in enumerate(T.faces)}
    edge_faces = _face_edge_map(T)
    all_mask = (1 << len(T.faces)) - 1

    inside: dict[tuple[int, int, int], int] = {}
    for t in seps:
        walls = {_edge(u, v) for u, v in combinations(sorted(t), 2)}
        seen = 1 << face_idx[T.outer_set]
        stack = [T.outer_set]
        while stack:
            f = stack.pop()
            a, b, c = sorted(f)
            for e in ((a, b), (a, c), (b, c)):
                if e in walls:
                    continue
                for g in edge_faces[e]:
                    bit = 1 << face_idx[g]
                    if not seen & bit:
                        seen |= bit
                        stack.append(g)
        inside[t] = all_mask & ~seen

    masks = list(inside.items())
    for (ta, ma), (tb, mb) in combinations(masks, 2):
        inter = ma & mb
        if inter and inter != ma and inter != mb:
            return None  # not laminar
        if ma == mb:
            return None  # pragma: no cover - distinct triangles, same interior

    by_size = sorted(seps, key=lambda t: (bin(inside[t]).count("1"), t))
    parent: dict[tuple[int, int, int], tuple[int, int, int] | None] = {}
    for i, t in enumerate(by_size):
        parent[t] = None
        for t2 in by_size[i + 1:]:
            if inside[t] & inside[t2] == inside[t]:
                parent[t] = t2
                break

    children: dict[tuple[int, int, int] | None, list] = {}
    for t in seps:
        children.setdefault(parent[t], []).append(t)

    faces_by_bit = list(T.faces)

    def faces_of(mask: int, extra: list[frozenset[int]]) -> set[frozenset[int]]:
        out = {faces_by_bit[i] for i in range(len(faces_by_bit)) if mask >> i & 1}
        out.update(extra)
        return out

    pieces: list[_RelabeledPiece] = []
    root_mask = all_mask
    for t in children.get(None, []):
        root_mask &= ~inside[t]
    pieces.append(_make_piece(
        faces_of(root_mask, [frozenset(t) for t in children.get(None, [])]), T.outer))
    for t in seps:
        mask = inside[t]
        for c in children.get(t, []):
            mask &= ~inside[c]
        pieces.append(_make_piece(
            faces_of(mask, [frozenset(t)] + [frozenset(c) for c in children.get(t, [])]),
            tuple(sorted(t))))
    return pieces


def decompose(T: Triangulation) -> SeparationTree:
    """Decompose into pieces without separating triangles.

    The piece set is canonical (independent of split order); the tree links
    each piece to the piece holding its outer triangle as an inner face,
    children ordered by sorted vertex triple.
    """
    final = _decompose_laminar(T)
    if final is None:
        final = _decompose_recursive(T)  # pragma: no cover - exotic fallback

    root = next(p for p in final if p.outer_set == frozenset(T.outer) and
                frozenset(T.outer) in set(p.faces))
    by_label: dict[frozenset[int], _RelabeledPiece] = {}
    for p in final:
        if p is not root:
            by_label[p.outer_set] = p

    pieces: list[_RelabeledPiece] = []
    links: list[tuple[int, int, tuple[int, int, int]]] = []

    def add(piece: _RelabeledPiece, parent: int | None, label) -> None:
        idx = len(pieces)
        pieces.append(piece)
        if parent is not None:
            links.append((parent, idx, label))
        child_labels = sorted(
            (f for f in piece.faces if f != piece.outer_set and f in by_label),
            key=sorted,
        )
        for lab in child_labels:
            add(by_label.pop(lab), idx, tuple(sorted(lab)))

    add(root, None, None)
    if by_label:
        raise GraphError("decomposition produced unlinked pieces")  # pragma: no cover
    return SeparationTree(pieces=tuple(pieces), links=tuple(links))


def glued_edges(tree: SeparationTree) -> frozenset[Edge]:
    """Union of all piece edge sets (labels are preserved, so this must
    reproduce the input edge set exactly)."""
    out: set[Edge] = set()
    for p in tree.pieces:
        out |= p.edges
    return frozenset(out)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def _k4() -> tuple[int, set[Edge], list[frozenset[int]]]:
    edges = {_edge(u, v) for u, v in combinations(range(4), 2)}
    faces = [frozenset(f) for f in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))]
    return 4, edges, faces


def gen_stacked(n: int, seed: int) -> Triangulation:
    """Stacked triangulation: repeatedly insert a degree-3 vertex into a
    uniformly chosen inner face, starting from K4 with outer (0, 1, 2)."""
    if n < 4:
        raise GraphError(f"gen_stacked needs n >= 4, got {n}")
    rng = random.Random(seed)
    cnt, edges, faces = _k4()
    outer = frozenset((0, 1, 2))
    while cnt < n:
        inner = [f for f in faces if f != outer]
        f = inner[rng.randrange(len(inner))]
        v = cnt
        cnt += 1
        for u in f:
            edges.add(_edge(u, v))
        faces.remove(f)
        fl = sorted(f)
        faces.extend(frozenset((a, b, v)) for a, b in combinations(fl, 2))
    return validate(cnt, sorted(edges), (0, 1, 2))


def gen_triangulation(n: int, seed: int, flips: int | None = None) -> Triangulation:
    """Random maximal planar graph: stacked start plus random diagonal flips.

    Flips never touch the outer face's edges and never create parallel edges.
    """
    T = gen_stacked(n, seed)
    rng = random.Random(seed ^ 0x9E3779B97F4A7C15)
    if flips is None:
        flips = 12 * n
    edges = set(T.edges)
    faces = set(T.faces)
    outer = T.outer_set
    outer_edges = {_edge(u, v) for u, v in combinations(sorted(outer), 2)}
    for _ in range(flips):
        e = rng.choice(sorted(edges))
        if e in outer_edges:
            continue
        u, v = e
        shared = [f for f in faces if u in f and v in f]
        if len(shared) != 2:
            continue
        (f1, f2) = shared
        p = next(iter(f1 - {u, v}))
        q = next(iter(f2 - {u, v}))
        if p == q or _edge(p, q) in edges:
            continue
        edges.remove(e)
        edges.add(_edge(p, q))
        faces.remove(f1)
        faces.remove(f2)
        faces.add(frozenset((u, p, q)))
        faces.add(frozenset((v, p, q)))
    return validate(n, sorted(edges), (0, 1, 2))


def gen_four_connected(n: int, seed: int, tries: int = 400) -> Triangulation:
    """Random triangulation filtered/repaired to have no separating triangle."""
    rng = random.Random(seed ^ 0xA5A5A5A5)
    for attempt in range(tries):
        T = gen_triangulation(n, seed + 1000 * attempt)
        edges = set(T.edges)
        outer_edges = {_edge(u, v) for u, v in combinations(sorted(T.outer_set), 2)}
        # flip-repair: flipping an edge of a separating triangle removes that cycle
        for _ in range(40 * n):
            cur = validate(n, sorted(edges), (0, 1, 2))
            seps = separating_triangles(cur)
            if not seps:
                return cur
            tri = seps[rng.randrange(len(seps))]
            cand = [
                _edge(a, b)
                for a, b in combinations(tri, 2)
                if _edge(a, b) not in outer_edges
            ]
            rng.shuffle(cand)
            flipped = False
            faces = set(cur.faces)
            for e in cand:
                u, v = e
                shared = [f for f in faces if u in f and v in f]
                if len(shared) != 2:
                    continue
                p = next(iter(shared[0] - {u, v}))
                q = next(iter(shared[1] - {u, v}))
                if p == q or _edge(p, q) in edges:
                    continue
                edges.remove(e)
                edges.add(_edge(p, q))
                flipped = True
                break
            if not flipped:
                break
    raise GraphError(f"no 4-connected triangulation found for n={n}, seed={seed}")


# ---------------------------------------------------------------------------
# Instance-building helpers for composed fixtures
# ---------------------------------------------------------------------------

def stack_vertex(T: Triangulation, face: Sequence[int]) -> Triangulation:
    """Insert a new degree-3 vertex into an inner face."""
    fset = frozenset(int(v) for v in face)
    if fset not in set(T.faces) or fset == T.outer_set:
        raise GraphError(f"{tuple(sorted(fset))} is not an inner face")
    edges = set(T.edges)
    v = T.n
    for u in fset:
        edges.add(_edge(u, v))
    return validate(T.n + 1, sorted(edges), T.outer)


def implant_octahedron(T: Triangulation, face: Sequence[int]) -> Triangulation:
    """Replace an inner face (u, v, w) by an octahedron whose outer face it is.

    Adds three vertices u', v', w' with u' adjacent to {v, w, v', w'} etc.,
    so (u, v, w) becomes a separating triangle with a 4-connected inside.
    """
    fset = frozenset(int(x) for x in face)
    if fset not in set(T.faces) or fset == T.outer_set:
        raise GraphError(f"{tuple(sorted(fset))} is not an inner face")
    u, v, w = sorted(fset)
    un, vn, wn = T.n, T.n + 1, T.n + 2
    edges = set(T.edges)
    new = [
        (un, v), (un, w), (un, vn), (un, wn),
        (vn, u), (vn, w), (vn, wn),
        (wn, u), (wn, v),
    ]
    for e in new:
        edges.add(_edge(*e))
    return validate(T.n + 3, sorted(edges), T.outer)


def augment_to_triangulation(n: int, edges: Iterable[Sequence[int]]) -> Triangulation:
    """Embed a simple connected planar graph into a triangulation by adding a
    fresh vertex inside every non-triangular face (star triangulation).

    No edge is ever added between two input vertices, so the input is the
    induced subgraph of the result on 0..n-1; added vertices are n..T.n-1.
    The heuristic is simple, not optimized.
    """
    if n < 3:
        raise GraphError("augmentation needs at least 3 vertices")
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for e in edges:
        u, v = int(e[0]), int(e[1])
        if u == v or not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"bad edge ({u},{v})")
        g.add_edge(u, v)
    if not nx.is_connected(g):
        raise GraphError("augmentation needs a connected graph")

    for _ in range(4 * n + 16):
        m = g.number_of_nodes()
        ok, emb = nx.check_planarity(g)
        if not ok:
            raise GraphError("graph is not planar")
        faces = _faces_from_embedding(emb) if g.number_of_edges() else []
        big = [f for f in faces if len(f) != 3 or len(set(f)) != 3]
        if not big and m >= 4 and g.number_of_edges() == 3 * m - 6:
            face_list = sorted({frozenset(f) for f in faces}, key=lambda f: sorted(f))
            outer = tuple(sorted(face_list[0]))
            return validate(m, sorted(tuple(sorted(e)) for e in g.edges()), outer)
        if big:
            walk = min(big, key=lambda f: tuple(f))
        else:
            walk = min(faces, key=lambda f: tuple(f))  # grow a triangle to K4
        distinct = sorted(set(walk))
        apex = m
        g.add_node(apex)
        for v in distinct:
            g.add_edge(apex, v)
    raise GraphError("augmentation did not converge")  # pragma: no cover


def octahedron() -> Triangulation:
    """K_{2,2,2} with outer face (0, 1, 2); antipodal pairs (0,3), (1,4), (2,5)."""
    edges = [
        (0, 1), (0, 2), (1, 2),
        (0, 4), (0, 5), (1, 3), (1, 5), (2, 3), (2, 4),
        (3, 4), (3, 5), (4, 5),
    ]
    return validate(6, edges, (0, 1, 2))


def double_wheel(k: int) -> Triangulation:
    """Cycle of length k plus two apexes adjacent to every cycle vertex.

    4-connected (no separating triangle) for k >= 4; k = 4 is the octahedron.
    """
    if k < 4:
        raise GraphError("double_wheel needs k >= 4")
    rim = list(range(2, k + 2))
    edges = [(0, r) for r in rim] + [(1, r) for r in rim]
    edges += [(rim[i], rim[(i + 1) % k]) for i in range(k)]
    return validate(k + 2, edges, (0, rim[0], rim[1]))
