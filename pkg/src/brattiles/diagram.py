"""The stationary Bratteli multi-diagram of a substitution rule.

One dual level diagram per dimension: vertices are occurrences (child
protoface inside the substitution of a parent protoface, with its
placement), and two occurrence vertices are joined when they compose,
i.e. the parent of one is the child of the next.  Horizontal edges
connect an occurrence to the occurrences it induces on boundary faces one
dimension down; escaping edges record faces that are created in the
interior of a substitute and therefore vanish from the lower diagram.

The diagram is stationary: one copy of each level is stored and depths
are virtual.
"""

from __future__ import annotations

from .collaring import (
    CollaringError,
    Face,
    enumerate_protofaces,
    face_through_cell,
    faces_intersect,
    is_on_boundary,
)
from .geometry import Coordinate


class DiagramError(RuntimeError):
    """Internal geometric inconsistency while building the multi-diagram."""


class OccVertex:
    """One occurrence: ``child`` appears in the substitution of ``parent``.

    ``offset`` is the placement of the child's canonical representative
    inside the substituted canonical parent (the position of the child's
    puncture).
    """

    __slots__ = ("vid", "j", "child", "parent", "offset")

    def __init__(self, vid, j, child, parent, offset):
        self.vid = vid
        self.j = j
        self.child = child
        self.parent = parent
        self.offset = offset

    def __repr__(self):
        return f"v{self.vid}(F{self.j}: {self.child} in {self.parent} @ {self.offset!r})"


class EscapingEdge:
    """An escaping edge: source vertex or pair, target pair one level up.

    ``via`` is the protoface class of the face that gets swallowed (the
    parent face of the source side); ``witnesses`` are its placements
    inside the substituted common parent of the target pair.
    """

    __slots__ = ("source", "target", "j", "k", "via", "witnesses")

    def __init__(self, source, target, j, k, via, witnesses):
        self.source = source        # vid or (vid, vid) sorted
        self.target = target        # (vid, vid) sorted
        self.j = j
        self.k = k
        self.via = via
        self.witnesses = tuple(witnesses)

    def key(self):
        src = self.source if isinstance(self.source, tuple) else (self.source,)
        return (self.k, self.target, self.j, src)

    def __repr__(self):
        return f"S({self.source} -> {self.target}, via F{self.j}#{self.via})"


class MultiDiagram:
    """Vertices, composition edges, horizontal edges and escaping edges."""

    def __init__(self, rule, table):
        self.rule = rule
        self.table = table
        self.vertices = []
        self.by_level = {}
        self._occ_index = {}
        self._succ = {}
        self._pred = {}
        self.horizontal = {}
        self.horizontal_in = {}
        self.escaping = []
        self._esc_by_source = {}
        self.warnings = []
        self.transient = ()

    # -- construction helpers -------------------------------------------

    def _add_vertices(self):
        d = self.rule.d
        for j in sorted(self.table.dims(), reverse=True):
            ids = []
            for cls in self.table.classes_of_dim(j):
                for child, off in cls.children:
                    vid = len(self.vertices)
                    v = OccVertex(vid, j, child, cls.id, off)
                    self.vertices.append(v)
                    ids.append(vid)
                    self._occ_index[(child, cls.id, off)] = vid
            self.by_level[j] = tuple(ids)
        # composition: v -> w iff parent(v) == child(w)
        by_child = {}
        for v in self.vertices:
            by_child.setdefault((v.j, v.child), []).append(v.vid)
        for v in self.vertices:
            succ = by_child.get((v.j, v.parent), ())
            self._succ[v.vid] = tuple(succ)
            for w in succ:
                self._pred.setdefault(w, []).append(v.vid)
        # Vertices without a continuation downward are possible below the
        # top level (a class that never occurs as a child); such vertices
        # lie on no infinite path and are recorded rather than rejected.
        self.transient = tuple(v.vid for v in self.vertices if not self._succ[v.vid])
        for v in self.vertices:
            self._pred.setdefault(v.vid, [])
            if not self._pred[v.vid]:
                raise DiagramError(f"vertex {v!r} has no incoming composition edge")
            if v.j == d and not self._succ[v.vid]:
                raise DiagramError(f"top-level vertex {v!r} has no outgoing edge")
        self._pred = {k: tuple(v) for k, v in self._pred.items()}
        if d not in self.by_level:
            raise DiagramError("no top-level vertices")
        for vid in self.transient:
            self.warnings.append(
                f"vertex v{vid} is transient: its parent class never occurs as a child")

    def occurrence(self, child, parent, offset):
        vid = self._occ_index.get((child, parent, offset))
        if vid is None:
            raise DiagramError(
                f"occurrence ({child}, {parent}, {offset!r}) cannot be located")
        return vid

    def _placed_children(self, parent_cls):
        """Placed child faces of a class inside its substituted collar."""
        out = []
        for child, off in parent_cls.children:
            face = self.table.canonical_face(child).translate(off)
            vid = self._occ_index[(child, parent_cls.id, off)]
            out.append((vid, face))
        return out

    def _build_horizontal(self):
        table = self.table
        for j in sorted(table.dims(), reverse=True):
            if j == 0:
                continue
            for parent_cls in table.classes_of_dim(j):
                # children of the boundary faces of the parent, placed in
                # the substituted frame
                lowers = []
                for bcid, boff in parent_cls.boundary:
                    bcls = table.classes[bcid]
                    if bcls.j != j - 1:
                        continue
                    for fcid, foff in bcls.children:
                        placed = table.canonical_face(fcid).translate(
                            boff.scaled(1) + foff)
                        vid = self._occ_index[(fcid, bcid, foff)]
                        lowers.append((vid, placed))
                for gvid, gface in self._placed_children(parent_cls):
                    for fvid, fface in lowers:
                        if is_on_boundary(fface, gface):
                            w = fface.puncture - self.vertices[gvid].offset
                            self.horizontal.setdefault(gvid, {})
                            self.horizontal[gvid].setdefault(fvid, []).append(w)
        for src, targets in self.horizontal.items():
            for dst, wits in targets.items():
                wits.sort(key=Coordinate.sort_key)
                targets[dst] = tuple(wits)
                self.horizontal_in.setdefault(dst, []).append(src)
                if len(wits) > 1:
                    self.warnings.append(
                        f"horizontal edge v{src}->v{dst} has {len(wits)} placements")
        self.horizontal_in = {k: tuple(sorted(v)) for k, v in self.horizontal_in.items()}

    def _faces_inside(self, amb, common_closure):
        """Faces of ``amb`` whose support closure lies inside a cell set."""
        found = {}
        for cell in sorted(common_closure, key=lambda c: c.sort_key()):
            g = face_through_cell(amb, cell)
            if g is None:
                continue
            if g.support_closure() <= common_closure:
                found[(g.j, g.puncture.sort_key(), g.class_key())] = g
        return [found[k] for k in sorted(found)]

    def _build_escaping(self):
        table = self.table
        by_parent = {}
        for v in self.vertices:
            by_parent.setdefault((v.j, v.parent), []).append(v.vid)
        edges = {}
        for k in sorted(table.dims(), reverse=True):
            if k == 0:
                continue
            for parent_cls in table.classes_of_dim(k):
                amb = self.rule.substitute(parent_cls.face.q)
                placed = self._placed_children(parent_cls)
                for a in range(len(placed)):
                    for b in range(a + 1, len(placed)):
                        wa, ga = placed[a]
                        wb, gb = placed[b]
                        if not faces_intersect(ga, gb):
                            continue
                        common = set(ga.support_closure()) & set(gb.support_closure())
                        if not common:
                            continue
                        target = tuple(sorted((wa, wb)))
                        inner = self._faces_inside(amb, common)
                        for phi in inner:
                            cid, punc = table.lookup(phi)
                            # vertex -> pair: any occurrence whose parent
                            # face is swallowed by the intersection
                            for src in by_parent.get((phi.j, cid), ()):
                                key = (src, target)
                                edges.setdefault(key, (phi.j, k, cid, []))[3].append(punc)
                            # pair -> pair: the intersection itself is the
                            # common parent face of the source pair
                            if phi.support_closure() == frozenset(common):
                                srcs = by_parent.get((phi.j, cid), ())
                                for s1 in range(len(srcs)):
                                    for s2 in range(s1 + 1, len(srcs)):
                                        key = ((srcs[s1], srcs[s2]), target)
                                        edges.setdefault(key, (phi.j, k, cid, []))[3].append(punc)
        for (src, target), (j, k, via, wits) in sorted(
                edges.items(), key=lambda item: _esc_sort_key(item[0])):
            wits = sorted(set(wits), key=Coordinate.sort_key)
            e = EscapingEdge(src, target, j, k, via, wits)
            self.escaping.append(e)
            self._esc_by_source.setdefault(src if isinstance(src, tuple) else (src,),
                                           []).append(e)
            if len(wits) > 1:
                self.warnings.append(
                    f"escaping edge {src}->{target} has {len(wits)} placements")

    def _warn_multi_meets(self):
        """Interior faces shared by three or more children of one substitute."""
        table = self.table
        for parent_cls in table.classes:
            amb = self.rule.substitute(parent_cls.face.q)
            placed = self._placed_children(parent_cls)
            for _, ga in placed:
                pass
            # faces with p-sets of size >= 3 among the substituted children
            omega_p = {t.key() for t in self.rule.substitute(parent_cls.face.p)}
            from .collaring import extract_faces
            for f in extract_faces(amb):
                if f.j >= parent_cls.j:
                    continue
                if len(f.p) >= 3 and all(t.key() in omega_p for t in f.p.tiles):
                    self.warnings.append(
                        f"face class F{f.j} at {f.puncture!r} inside "
                        f"{table.label(parent_cls.id)} is created by {len(f.p)} tiles; "
                        "escaping edges only encode pairs")

    # -- queries ----------------------------------------------------------

    @property
    def d(self):
        return self.rule.d

    def level(self, j):
        return self.by_level.get(j, ())

    def successors(self, vid):
        return self._succ[vid]

    def predecessors(self, vid):
        return self._pred[vid]

    def has_edge(self, v, w):
        return self.vertices[v].parent == self.vertices[w].child and \
            self.vertices[v].j == self.vertices[w].j

    def horizontal_targets(self, vid):
        return self.horizontal.get(vid, {})

    def escaping_from(self, source):
        if not isinstance(source, tuple):
            source = (source,)
        return self._esc_by_source.get(tuple(sorted(source)), [])

    def root_targets(self):
        return self.by_level[self.rule.d]

    def boundary_placements(self, tile_class, j):
        """(face class, placement) pairs of the j-faces on a collared tile.

        For j = d this is the tile itself at placement zero.
        """
        cls = self.table.classes[tile_class]
        if j == cls.j:
            return ((tile_class, Coordinate.zero(self.rule.d, self.rule.lam)),)
        return tuple((cid, off) for cid, off in cls.boundary
                     if self.table.classes[cid].j == j)

    def vertex_label(self, vid):
        v = self.vertices[vid]
        t = self.table
        return (f"v{vid} [{t.label(v.child)} in {t.label(v.parent)} "
                f"@ {v.offset!r}]")


def _esc_sort_key(key):
    src, target = key
    src = src if isinstance(src, tuple) else (src,)
    return (target, len(src), src)


def build_multidiagram(rule, table=None, warn_multi_meets=False):
    """Construct the full multi-diagram of a rule.

    Raises DiagramError on any internal inconsistency (a vertex that
    cannot be located, a level without outgoing edges).
    """
    if table is None:
        table = enumerate_protofaces(rule)
    dg = MultiDiagram(rule, table)
    dg._add_vertices()
    dg._build_horizontal()
    dg._build_escaping()
    if warn_multi_meets:
        dg._warn_multi_meets()
    return dg


# ---------------------------------------------------------------------------
# DOT export


def _fmt_coord(c):
    return "(" + ", ".join(str(f) for f in c.as_fractions()) + ")"


def export_dot(diagram, level=None, unroll=None):
    """Deterministic DOT rendering of the multi-diagram.

    One cluster per level; solid edges are composition edges, dashed are
    horizontal, dotted are escaping (through a synthetic point node for
    each vertex pair).  ``level`` restricts to one level diagram;
    ``unroll`` emits an acyclic unrolling of the given depth with a root.
    """
    t = diagram.table
    lines = ["digraph multidiagram {"]
    lines.append('  graph [rankdir=TB];')
    lines.append('  node [fontsize=10];')

    levels = sorted(diagram.by_level, reverse=True)
    if level is not None:
        if level not in diagram.by_level:
            raise DiagramError(f"no level {level} in the diagram")
        levels = [level]

    def vlabel(vid):
        v = diagram.vertices[vid]
        return (f"v{vid}\\n{t.label(v.child)} in {t.label(v.parent)}"
                f"\\n@ {_fmt_coord(v.offset)}")

    if unroll is None:
        for j in levels:
            lines.append(f"  subgraph cluster_level_{j} {{")
            lines.append(f'    label="level {j}";')
            for vid in diagram.by_level[j]:
                lines.append(f'    v{vid} [label="{vlabel(vid)}"];')
            lines.append("  }")
        if level is None or level == diagram.d:
            lines.append('  root [shape=point, label=""];')
            for vid in diagram.root_targets():
                lines.append(f"  root -> v{vid} [style=solid];")
        for j in levels:
            for vid in diagram.by_level[j]:
                for w in diagram.successors(vid):
                    lines.append(f"  v{vid} -> v{w} [style=solid];")
        if level is None:
            for vid in sorted(diagram.horizontal):
                for dst in sorted(diagram.horizontal[vid]):
                    lines.append(f"  v{vid} -> v{dst} [style=dashed];")
            pairs = sorted({e.target for e in diagram.escaping})
            for a, b in pairs:
                lines.append(
                    f'  pair_{a}_{b} [shape=point, label="", width=0.05];')
                lines.append(f"  pair_{a}_{b} -> v{a} [style=dotted, arrowhead=none];")
                lines.append(f"  pair_{a}_{b} -> v{b} [style=dotted, arrowhead=none];")
            for e in diagram.escaping:
                srcs = e.source if isinstance(e.source, tuple) else (e.source,)
                a, b = e.target
                if len(srcs) == 1:
                    lines.append(f"  v{srcs[0]} -> pair_{a}_{b} [style=dotted];")
                else:
                    s1, s2 = srcs
                    lines.append(
                        f'  srcpair_{s1}_{s2} [shape=point, label="", width=0.05];')
                    lines.append(
                        f"  srcpair_{s1}_{s2} -> v{s1} [style=dotted, arrowhead=none];")
                    lines.append(
                        f"  srcpair_{s1}_{s2} -> v{s2} [style=dotted, arrowhead=none];")
                    lines.append(
                        f"  srcpair_{s1}_{s2} -> pair_{a}_{b} [style=dotted];")
    else:
        lines.append('  root [shape=point, label=""];')
        for depth in range(1, unroll + 1):
            for j in levels:
                lines.append(f"  subgraph cluster_d{depth}_level_{j} {{")
                lines.append(f'    label="depth {depth} level {j}";')
                for vid in diagram.by_level[j]:
                    lines.append(f'    d{depth}_v{vid} [label="{vlabel(vid)}"];')
                lines.append("  }")
        if level is None or level == diagram.d:
            for vid in diagram.root_targets():
                lines.append(f"  root -> d1_v{vid} [style=solid];")
        for depth in range(1, unroll):
            for j in levels:
                for vid in diagram.by_level[j]:
                    for w in diagram.successors(vid):
                        lines.append(
                            f"  d{depth}_v{vid} -> d{depth + 1}_v{w} [style=solid];")
    lines.append("}")
    return "\n".join(lines) + "\n"
