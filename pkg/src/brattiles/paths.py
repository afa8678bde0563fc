"""Paths in the level diagrams, borders, border dimension, Robinson maps.

Infinite paths are represented as eventually periodic specs (prefix plus
repeating cycle of occurrence vertices).  These are dense in the path
space, cover every fixed point of a power of the substitution, and make
tail equivalence and border dimension exactly decidable.

Border analysis is carried out on placed states: a candidate border
vertex at depth i is tracked together with the placement of its face on
the boundary of the path's tile at that depth, so every reported border
path is geometrically coherent, not merely class-consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import networkx as nx

from .geometry import Cell, Coordinate, support_boundary_cells


class PathError(ValueError):
    """A path specification violates the diagram's adjacency constraints."""


class PathSyntaxError(PathError):
    """A path literal failed to parse (syntax, not adjacency)."""


# ---------------------------------------------------------------------------
# path specs


@dataclass(frozen=True)
class PathSpec:
    """An eventually periodic path prefix . cycle^infinity in one level.

    ``start`` is the depth of the first vertex (>= 1; a level-d path
    starting at depth 1 is rooted, the root edge being implicit since the
    root connects to every top-level vertex).
    """

    level: int
    start: int
    prefix: tuple
    cycle: tuple

    @property
    def period_start(self):
        return self.start + len(self.prefix)

    def vertex_at(self, depth):
        if depth < self.start:
            raise PathError(f"depth {depth} precedes path start {self.start}")
        k = depth - self.start
        if k < len(self.prefix):
            return self.prefix[k]
        return self.cycle[(k - len(self.prefix)) % len(self.cycle)]

    def vertices(self, upto):
        return [self.vertex_at(i) for i in range(self.start, upto + 1)]

    entry_at = vertex_at

    def shift(self, m):
        """The tail starting at depth m as a spec."""
        if m < self.start:
            raise PathError("cannot shift before the start depth")
        k = m - self.start
        if k <= len(self.prefix):
            return PathSpec(self.level, m, self.prefix[k:], self.cycle)
        r = (k - len(self.prefix)) % len(self.cycle)
        return PathSpec(self.level, m, (), self.cycle[r:] + self.cycle[:r])

    def literal(self):
        pre = ",".join(f"v{v}" for v in self.prefix)
        cyc = ",".join(f"v{v}" for v in self.cycle)
        return f"level:{self.level} start:{self.start} prefix:[{pre}] cycle:[{cyc}]"


def _primitive_cycle(cycle):
    n = len(cycle)
    for p in range(1, n + 1):
        if n % p == 0 and cycle == cycle[:p] * (n // p):
            return cycle[:p]
    return cycle


def validate_path(diagram, spec):
    """Check adjacency and normalise to the canonical representation.

    Canonical means: primitive cycle, minimal prefix (trailing vertices
    absorbed into the cycle).  Idempotent; the denoted infinite vertex
    sequence is unchanged.
    """
    if not spec.cycle:
        raise PathError("cycle must be non-empty")
    start = spec.start
    if start == 0:
        if spec.level != diagram.d:
            raise PathError("start depth 0 is only meaningful for the top level")
        start = 1
    if start < 1:
        raise PathError(f"start depth must be >= 0, got {start}")
    seq = list(spec.prefix) + list(spec.cycle)
    for v in seq:
        if not 0 <= v < len(diagram.vertices):
            raise PathError(f"unknown vertex id v{v}")
        if diagram.vertices[v].j != spec.level:
            raise PathError(
                f"vertex v{v} has level {diagram.vertices[v].j}, spec says {spec.level}")
    chain = list(spec.prefix) + list(spec.cycle) + [spec.cycle[0]]
    for idx in range(len(chain) - 1):
        v, w = chain[idx], chain[idx + 1]
        if diagram.vertices[v].parent != diagram.vertices[w].child:
            raise PathError(
                f"adjacency broken at index {idx}: v{v} does not compose with v{w}")
    cycle = _primitive_cycle(tuple(spec.cycle))
    prefix = list(spec.prefix)
    while prefix and prefix[-1] == cycle[-1]:
        prefix.pop()
        cycle = cycle[-1:] + cycle[:-1]
    return PathSpec(spec.level, start, tuple(prefix), cycle)


def make_path(diagram, level, start, prefix, cycle):
    return validate_path(diagram, PathSpec(level, start, tuple(prefix), tuple(cycle)))


def parse_path_literal(diagram, text):
    """Parse the CLI path syntax: level:j start:n prefix:[v1,v2] cycle:[v3]."""
    fields = {}
    for pos, token in enumerate(text.split()):
        if ":" not in token:
            raise PathSyntaxError(f"malformed path token {token!r} (token {pos})")
        key, _, val = token.partition(":")
        fields[key] = val
    try:
        level = int(fields["level"])
        start = int(fields["start"])
    except (KeyError, ValueError):
        raise PathSyntaxError(
            "path literal needs integer level: and start: fields") from None

    def vlist(s):
        s = s.strip()
        if not (s.startswith("[") and s.endswith("]")):
            raise PathSyntaxError(f"expected [..] vertex list, got {s!r}")
        body = s[1:-1].strip()
        if not body:
            return ()
        out = []
        for item in body.split(","):
            item = item.strip()
            if not item.startswith("v") or not item[1:].isdigit():
                raise PathSyntaxError(f"vertex ids look like v12, got {item!r}")
            out.append(int(item[1:]))
        return tuple(out)

    prefix = vlist(fields.get("prefix", "[]"))
    cycle = vlist(fields.get("cycle", "[]"))
    return make_path(diagram, level, start, prefix, cycle)


# ---------------------------------------------------------------------------
# tail equivalence


def tail_equivalent(x, y):
    """Least depth m with x_[m,inf) = y_[m,inf), or None.

    Exact: two eventually periodic sequences agree from some depth on iff
    they agree on the joint periodic window, which is checked directly.
    """
    if x.level != y.level:
        raise PathError("tail equivalence compares paths of one level")
    lo = max(x.start, y.start)
    d0 = max(x.period_start, y.period_start)
    ell = math.lcm(len(x.cycle), len(y.cycle))
    for i in range(d0, d0 + ell):
        if x.vertex_at(i) != y.vertex_at(i):
            return None
    m = d0
    while m > lo and x.vertex_at(m - 1) == y.vertex_at(m - 1):
        m -= 1
    return m


# ---------------------------------------------------------------------------
# derived sets


def derived_set(diagram, vertex_set):
    """Horizontal-edge targets of a set of vertices, one dimension lower."""
    vs = list(vertex_set)
    if not vs:
        return set()
    levels = {diagram.vertices[v].j for v in vs}
    if len(levels) != 1:
        raise PathError(f"derived set needs vertices of one level, got levels {sorted(levels)}")
    out = set()
    for v in vs:
        out.update(diagram.horizontal_targets(v))
    return out


# ---------------------------------------------------------------------------
# placed border analysis


def _placement_states(diagram, tile_class, j):
    """All (occurrence vertex, placement) states of j-faces on a tile's boundary."""
    out = []
    for fcid, w in diagram.boundary_placements(tile_class, j):
        for vid in diagram.by_level[j]:
            if diagram.vertices[vid].child == fcid:
                out.append((vid, w))
    return out


class BorderAnalysis:
    """Alive placed states of dimension-j border candidates along a path.

    A state (v, w) at depth i means: the face child(v), placed at w in the
    frame of the path's tile at depth i, lies on that tile's boundary and
    the occurrence v is consistent with the next depth through w = lam *
    w' + offset(v) - offset(x_i).  The greatest fixed point of the pruning
    operator captures exactly the states lying on infinite border paths.
    """

    def __init__(self, diagram, x, j):
        self.diagram = diagram
        self.x = x
        self.j = j
        self.period_start = x.period_start
        self.period = len(x.cycle)
        self._states = {}
        self._alive = None

    def states_at(self, depth):
        key = self.x.vertex_at(depth)
        if key not in self._states:
            tile_class = self.diagram.vertices[key].child
            self._states[key] = tuple(_placement_states(self.diagram, tile_class, self.j))
        return self._states[key]

    def _step_ok(self, depth, s, s_next):
        (v, w), (v2, w2) = s, s_next
        dg = self.diagram
        if dg.vertices[v].parent != dg.vertices[v2].child:
            return False
        ox = dg.vertices[self.x.vertex_at(depth)].offset
        ov = dg.vertices[v].offset
        return w == w2.scaled(1) + ov - ox

    def alive_cycle_states(self):
        """Greatest fixed point over the periodic window: phase -> states."""
        if self._alive is not None:
            return self._alive
        p0, L = self.period_start, self.period
        alive = [set(self.states_at(p0 + p)) for p in range(L)]
        changed = True
        while changed:
            changed = False
            for p in range(L):
                nxt = alive[(p + 1) % L]
                keep = {s for s in alive[p]
                        if any(self._step_ok(p0 + p, s, s2) for s2 in nxt)}
                if keep != alive[p]:
                    alive[p] = keep
                    changed = True
        self._alive = alive
        return alive

    def has_infinite(self):
        return any(self.alive_cycle_states())

    def alive_at_depths(self, lo, hi):
        """Alive states per depth in [lo, hi], extending into the prefix."""
        alive = self.alive_cycle_states()
        p0, L = self.period_start, self.period
        out = {}
        for depth in range(hi, lo - 1, -1):
            if depth >= p0:
                out[depth] = set(alive[(depth - p0) % L])
            else:
                nxt = out.get(depth + 1, set())
                out[depth] = {s for s in self.states_at(depth)
                              if any(self._step_ok(depth, s, s2) for s2 in nxt)}
        return out

    def alive_to_horizon(self, lo, horizon):
        """States alive for the finite window [depth, horizon] only."""
        out = {horizon: set(self.states_at(horizon))}
        for depth in range(horizon - 1, lo - 1, -1):
            nxt = out[depth + 1]
            out[depth] = {s for s in self.states_at(depth)
                          if any(self._step_ok(depth, s, s2) for s2 in nxt)}
        return out

    def periodic_survivor_specs(self, limit=64):
        """Eventually periodic border tails: cycles in the alive product graph."""
        alive = self.alive_cycle_states()
        if not any(alive):
            return []
        p0, L = self.period_start, self.period
        g = nx.DiGraph()
        for p in range(L):
            for s in alive[p]:
                for s2 in alive[(p + 1) % L]:
                    if self._step_ok(p0 + p, s, s2):
                        g.add_edge((p, s), ((p + 1) % L, s2))
        specs = []
        seen = set()
        for cyc in nx.simple_cycles(g):
            # rotate so the cycle starts at the least phase occurrence
            k = min(range(len(cyc)), key=lambda i: (cyc[i][0], cyc[i][1]))
            cyc = cyc[k:] + cyc[:k]
            phase = cyc[0][0]
            vids = tuple(s[0] for _, s in cyc)
            key = (phase, vids)
            if key in seen:
                continue
            seen.add(key)
            spec = PathSpec(self.j, p0 + phase, (), vids)
            specs.append(spec)
            if len(specs) >= limit:
                break
        specs.sort(key=lambda s: (s.start, s.cycle))
        return specs


@dataclass
class BorderLevel:
    """Dimension-j slice of a border set at a finite horizon."""

    level: int
    horizon: int
    has_infinite: bool
    tails: list            # periodic survivor PathSpecs (flagged periodic)
    alive_by_depth: dict   # depth -> sorted list of (vid, placement)

    @property
    def alive_at_horizon(self):
        return any(self.alive_by_depth.values())


class BorderSet:
    """Borders of a top-level path: one BorderLevel per dimension."""

    def __init__(self, owner, levels):
        self.owner = owner
        self.levels = levels

    def level(self, j):
        return self.levels[j]

    def dimensions_with_infinite(self):
        return [j for j in sorted(self.levels) if self.levels[j].has_infinite]


def border_paths(diagram, x, horizon):
    """Borders of ``x`` at every dimension, truncated at ``horizon``.

    Periodic survivors are identified through the greatest fixed point of
    the alive-state pruning; the finite-horizon alive sets record which
    candidates survive up to the horizon only.
    """
    x = validate_path(diagram, x)
    if x.level != diagram.d:
        raise PathError("borders are defined for top-level paths")
    if horizon < x.period_start + len(x.cycle):
        raise PathError(
            f"horizon {horizon} does not cover the prefix plus one cycle")
    levels = {}
    for j in sorted(diagram.by_level):
        ba = BorderAnalysis(diagram, x, j)
        fin = ba.alive_to_horizon(x.start, horizon)
        alive_by_depth = {depth: sorted((vid, w.sort_key()) for vid, w in states)
                          for depth, states in sorted(fin.items()) if states}
        levels[j] = BorderLevel(
            level=j,
            horizon=horizon,
            has_infinite=ba.has_infinite(),
            tails=ba.periodic_survivor_specs(),
            alive_by_depth=alive_by_depth,
        )
    return BorderSet(x, levels)


def border_dimension(diagram, x):
    """The least j whose border is non-empty; exact for periodic specs."""
    x = validate_path(diagram, x)
    if x.level != diagram.d:
        raise PathError("border dimension is defined for top-level paths")
    for j in sorted(diagram.by_level):
        if BorderAnalysis(diagram, x, j).has_infinite():
            return j
    raise PathError("no border at any dimension; the top level must always survive")


# ---------------------------------------------------------------------------
# generalized paths


@dataclass(frozen=True)
class GeneralizedPathSpec:
    """Eventually periodic generalized path; entries are vertices or pairs.

    A pair entry names two distinct occurrences of children of one common
    parent face; the cycle consists of single vertices of one level (every
    generalized path has a tail in a single level diagram).
    """

    start: int
    prefix: tuple   # entries: int or sorted 2-tuple
    cycle: tuple    # single-vertex entries only

    @property
    def period_start(self):
        return self.start + len(self.prefix)

    def entry_at(self, depth):
        if depth < self.start:
            raise PathError(f"depth {depth} precedes start {self.start}")
        k = depth - self.start
        if k < len(self.prefix):
            return self.prefix[k]
        return self.cycle[(k - len(self.prefix)) % len(self.cycle)]

    def tail_level_cycle(self):
        return self.cycle

    def as_plain(self, diagram):
        """The underlying PathSpec when every entry is a single vertex."""
        if any(isinstance(e, tuple) for e in self.prefix):
            raise PathError("generalized path has pair entries")
        level = diagram.vertices[self.cycle[0]].j
        return validate_path(
            diagram, PathSpec(level, self.start, self.prefix, self.cycle))


def _entry_parent(diagram, entry):
    if isinstance(entry, tuple):
        a, b = entry
        pa = diagram.vertices[a].parent
        pb = diagram.vertices[b].parent
        if pa != pb or a == b:
            raise PathError(
                f"pair entry {entry} must name two distinct children of one parent")
        return pa
    return diagram.vertices[entry].parent


def validate_generalized(diagram, gspec):
    """Check every transition of a generalized path spec.

    Single to single needs a composition edge; single or pair to pair
    needs an escaping edge; pair to single closes through two composition
    edges onto a vertex whose child is the common parent.
    """
    if not gspec.cycle:
        raise PathError("cycle must be non-empty")
    for e in gspec.cycle:
        if isinstance(e, tuple):
            raise PathError("the periodic tail of a generalized path cannot contain pairs")
    levels = {diagram.vertices[v].j for v in gspec.cycle}
    if len(levels) != 1:
        raise PathError("the periodic tail must stay in one level")
    entries = list(gspec.prefix) + list(gspec.cycle) + [gspec.cycle[0]]
    depth = gspec.start
    for idx in range(len(entries) - 1):
        cur, nxt = entries[idx], entries[idx + 1]
        _entry_parent(diagram, cur)
        if isinstance(cur, tuple):
            if isinstance(nxt, tuple):
                edges = [e for e in diagram.escaping_from(cur)
                         if e.target == tuple(sorted(nxt))]
                if not edges:
                    raise PathError(
                        f"no escaping edge from pair {cur} to pair {nxt} (index {idx})")
            else:
                if diagram.vertices[nxt].child != _entry_parent(diagram, cur):
                    raise PathError(
                        f"pair {cur} does not close onto v{nxt} (index {idx})")
        else:
            if isinstance(nxt, tuple):
                edges = [e for e in diagram.escaping_from(cur)
                         if e.target == tuple(sorted(nxt))]
                if not edges:
                    raise PathError(
                        f"no escaping edge from v{cur} to pair {nxt} (index {idx})")
            else:
                if diagram.vertices[cur].parent != diagram.vertices[nxt].child:
                    raise PathError(
                        f"adjacency broken at index {idx}: v{cur} -> v{nxt}")
        depth += 1
    return gspec


# ---------------------------------------------------------------------------
# Robinson maps


def _escape_witness(diagram, source, target):
    edges = [e for e in diagram.escaping_from(source) if e.target == tuple(sorted(target))]
    if not edges:
        raise PathError(f"no escaping edge {source} -> {target}")
    return edges[0].witnesses[0]


def robinson_translations(diagram, spec, n):
    """Translation of the depth-i patch for i = start .. n.

    The first patch is anchored with its scaled puncture at the origin;
    each transition pins the smaller patch inside the next one.
    """
    lam = diagram.rule.lam
    d = diagram.rule.d
    t = Coordinate.zero(d, lam)
    out = {spec.start: t}
    for i in range(spec.start, n):
        cur = spec.entry_at(i)
        nxt = spec.entry_at(i + 1)
        if isinstance(cur, tuple):
            if isinstance(nxt, tuple):
                u = _escape_witness(diagram, cur, nxt)
                t = t - u.scaled(i)
            else:
                pass  # closing a pair onto its parent keeps the frame
        else:
            ov = diagram.vertices[cur].offset
            if isinstance(nxt, tuple):
                u = _escape_witness(diagram, cur, nxt)
                t = t - ov.scaled(i - 1) - u.scaled(i)
            else:
                t = t - ov.scaled(i - 1)
        out[i + 1] = t
    return out


def robinson_patch(diagram, spec, n, collared=False):
    """The depth-n Robinson patch of a path or generalized path.

    Plain mode substitutes the face patches p, collared mode the collars
    q.  A single entry at depth i contributes omega**(i-1) of its child
    face; a pair entry contributes omega**i of the common parent face.
    Patches at successive depths are nested as placed.
    """
    if isinstance(spec, PathSpec):
        gspec = GeneralizedPathSpec(spec.start, spec.prefix, spec.cycle)
    else:
        gspec = spec
    if n < gspec.start:
        raise PathError(f"depth {n} precedes the start depth {gspec.start}")
    trans = robinson_translations(diagram, gspec, n)
    entry = gspec.entry_at(n)
    table = diagram.table
    if isinstance(entry, tuple):
        parent = _entry_parent(diagram, entry)
        patch = table.substituted_patch(parent, n, collared)
    else:
        child = diagram.vertices[entry].child
        patch = table.substituted_patch(child, n - 1, collared)
    return patch.translate(trans[n])


def boundary_distance_sequence(diagram, x, n_max):
    """d_n = dist(phi_1(x), boundary of phi_n(x)) for n = 1 .. n_max, exact.

    The boundary of the depth-n patch is the lam**(n-1)-scaled boundary of
    the depth-n tile's support, so no large patch is ever materialised.
    """
    x = validate_path(diagram, x)
    if x.level != diagram.d or x.start != 1:
        raise PathError("the distance sequence needs a rooted top-level path")
    lam = diagram.rule.lam
    trans = robinson_translations(diagram, x, n_max)
    base = diagram.table.canonical_face(
        diagram.vertices[x.vertex_at(1)].child).p
    base_boxes = [c.box() for c in
                  [Cell(a, tuple(range(diagram.d))) for a in base.cube_map()]]
    out = []
    for n in range(1, n_max + 1):
        tile = diagram.table.canonical_face(
            diagram.vertices[x.vertex_at(n)].child).p
        scale = Fraction(lam) ** (n - 1)
        shift = trans[n].as_fractions()
        best = None
        for bc in support_boundary_cells(tile):
            lo, hi = bc.box()
            lo = [l * scale + s for l, s in zip(lo, shift)]
            hi = [h * scale + s for h, s in zip(hi, shift)]
            for blo, bhi in base_boxes:
                gap = Fraction(0)
                for a0, a1, b0, b1 in zip(blo, bhi, lo, hi):
                    g = max(b0 - a1, a0 - b1, Fraction(0))
                    if g > gap:
                        gap = g
                if best is None or gap < best:
                    best = gap
        out.append(best)
    return out


def distance_sequence_verdict(diagram, x):
    """True iff the distance sequence stays bounded (border dimension < d).

    Decided within prefix + 2 cycles: over one full cycle the growth
    pattern repeats, so the sequence is eventually constant iff it is
    constant across the last full cycle of that window.
    """
    x = validate_path(diagram, x)
    n_max = x.period_start + 2 * len(x.cycle)
    seq = boundary_distance_sequence(diagram, x, n_max)
    return seq[-1] == seq[-1 - len(x.cycle)]
