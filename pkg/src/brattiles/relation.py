"""Border equivalence: decision procedure, witnesses, and the geometric oracle.

Two rooted top-level paths are border equivalent when they have the same
border dimension j and share a border tail in the level-j diagram.  The
search runs over placed joint states (border vertex plus its placement on
each path's tile), so a positive answer comes with the exact translation
vector between the two tilings, and a negative answer is exact for
eventually periodic inputs: the greatest fixed point over the joint cycle
structure is an exhaustive search.

The geometric oracle realises the translation relation directly at finite
depth by overlaying collared Robinson patches.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .geometry import Cell, Coordinate, covered_neighborhood, tiles_meeting
from .collaring import CollaringError
from .paths import (
    BorderAnalysis,
    GeneralizedPathSpec,
    PathError,
    PathSpec,
    border_dimension,
    robinson_patch,
    robinson_translations,
    validate_path,
)


# ---------------------------------------------------------------------------
# the border forcing constant


def check_forcing(diagram, k):
    """Does depth offset k force collars of tiles next to descendant faces?

    For every protoface class f, every placed k-step descendant chain
    ending in a face g0 inside omega**k of f's collar, and every tile of
    that patch meeting g0: the tile's collar must be determined inside the
    patch.
    """
    table = diagram.table
    rule = diagram.rule
    for cls in table.classes:
        amb = table.substituted_patch(cls.id, k, collared=True)
        cubes = amb.cube_map()
        placements = [(cls.id, Coordinate.zero(rule.d, rule.lam))]
        for _ in range(k):
            nxt = []
            for cid, pos in placements:
                for child, off in table.children(cid):
                    nxt.append((child, pos.scaled(1) + off))
            placements = nxt
        for cid, pos in placements:
            support = [c.translate(pos) for c in table.canonical_face(cid).support]
            for ti in tiles_meeting(support, amb):
                tile = amb.tiles[ti]
                tcubes = [Cell(a, tuple(range(rule.d))) for a in tile.cube_anchors()]
                if not covered_neighborhood(tcubes, amb):
                    return False
    return True


def forcing_constant(diagram, cap=6):
    """Least k such that check_forcing holds; exhaustive over the table."""
    for k in range(1, cap + 1):
        if check_forcing(diagram, k):
            return k
    raise CollaringError(
        f"no border forcing constant up to {cap}; the table is inconsistent")


# ---------------------------------------------------------------------------
# witnesses


@dataclass
class RelationWitness:
    """Decision record for border equivalence of an ordered pair (x, y)."""

    equivalent: bool
    j: int = None
    z: GeneralizedPathSpec = None
    m: int = None
    a: Coordinate = None
    reason: str = ""

    def serialize(self):
        doc = {"equivalent": self.equivalent}
        if self.equivalent:
            doc["border_dimension"] = self.j
            doc["start_depth"] = self.m
            doc["translation"] = [str(f) for f in self.a.as_fractions()]
            doc["shared_path"] = {
                "start": self.z.start,
                "prefix": [list(e) if isinstance(e, tuple) else e
                           for e in self.z.prefix],
                "cycle": list(self.z.cycle),
            }
        else:
            doc["reason"] = self.reason
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


class _JointBorder:
    """Alive shared placed states of dimension j along two paths."""

    def __init__(self, diagram, x, y, j):
        self.diagram = diagram
        self.x = x
        self.y = y
        self.j = j
        self.ax = BorderAnalysis(diagram, x, j)
        self.ay = BorderAnalysis(diagram, y, j)
        self.period_start = max(x.period_start, y.period_start)
        self.period = math.lcm(len(x.cycle), len(y.cycle))
        self._alive = None

    def states_at(self, depth):
        sx = {(v, w) for v, w in self.ax.states_at(depth)}
        sy = {(v, w) for v, w in self.ay.states_at(depth)}
        vx = {}
        for v, w in sx:
            vx.setdefault(v, []).append(w)
        out = []
        for v, wy in sy:
            for wx in vx.get(v, ()):
                out.append((v, wx, wy))
        return out

    def _step_ok(self, depth, s, s2):
        (v, wx, wy), (v2, wx2, wy2) = s, s2
        dg = self.diagram
        if dg.vertices[v].parent != dg.vertices[v2].child:
            return False
        ov = dg.vertices[v].offset
        ox = dg.vertices[self.x.vertex_at(depth)].offset
        oy = dg.vertices[self.y.vertex_at(depth)].offset
        return (wx == wx2.scaled(1) + ov - ox) and (wy == wy2.scaled(1) + ov - oy)

    def alive(self):
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

    def earliest_states(self):
        """(depth, states) with the least depth admitting an alive state."""
        alive = self.alive()
        if not any(alive):
            return None, set()
        p0 = self.period_start
        lo = max(self.x.start, self.y.start)
        best_depth, best = p0, set(alive[0])
        depth_states = {p0: set(alive[0])}
        for depth in range(p0 - 1, lo - 1, -1):
            nxt = depth_states[depth + 1]
            cur = {s for s in self.states_at(depth)
                   if any(self._step_ok(depth, s, s2) for s2 in nxt)}
            depth_states[depth] = cur
            if cur:
                best_depth, best = depth, cur
            else:
                break
        return best_depth, best

    def shared_tail(self):
        """A deterministic shared tail: (start depth m, prefix, cycle) of states.

        Walks greedily (least state first) inside the alive sets from the
        earliest depth until a (phase, state) pair repeats; the walk stays
        inside the greatest fixed point, so it always closes.
        """
        m, states = self.earliest_states()
        if m is None:
            return None
        p0, L = self.period_start, self.period
        alive = self.alive()
        memo = {}

        def alive_at(depth):
            if depth >= p0:
                return alive[(depth - p0) % L]
            if depth not in memo:
                nxt = alive_at(depth + 1)
                memo[depth] = {s for s in self.states_at(depth)
                               if any(self._step_ok(depth, s, s2) for s2 in nxt)}
            return memo[depth]

        def key(s):
            return (s[0], s[1].sort_key(), s[2].sort_key())

        chain = [min(states, key=key)]
        depth = m
        seen = {}
        while True:
            if depth >= p0:
                pk = ((depth - p0) % L, chain[-1])
                if pk in seen:
                    k0 = seen[pk]
                    return m, chain[:k0], chain[k0:-1]
                seen[pk] = len(chain) - 1
            cand = [s2 for s2 in alive_at(depth + 1)
                    if self._step_ok(depth, chain[-1], s2)]
            chain.append(min(cand, key=key))
            depth += 1


def border_equivalent(diagram, x, y):
    """Decide border equivalence of two rooted eventually periodic paths.

    Returns a RelationWitness; on success it carries the common border
    dimension, a shared border tail, its start depth m, and the exact
    translation a with T_x = T_y + a, read off from the depth-m placement
    of the shared face on both sides.
    """
    x = validate_path(diagram, x)
    y = validate_path(diagram, y)
    if x.level != diagram.d or y.level != diagram.d:
        raise PathError("border equivalence is defined for top-level paths")
    if x.start != 1 or y.start != 1:
        raise PathError("border equivalence needs rooted paths")
    jx = border_dimension(diagram, x)
    jy = border_dimension(diagram, y)
    if jx != jy:
        return RelationWitness(
            False, reason=f"border dimensions differ ({jx} vs {jy})")
    joint = _JointBorder(diagram, x, y, jx)
    tail = joint.shared_tail()
    if tail is None:
        return RelationWitness(
            False, reason=f"no shared border tail at dimension {jx}")
    m, prefix, cycle = tail
    z = GeneralizedPathSpec(m,
                            tuple(s[0] for s in prefix),
                            tuple(s[0] for s in cycle))
    v0, wx0, wy0 = (prefix + cycle)[0]
    tx = robinson_translations(diagram, x, m)[m]
    ty = robinson_translations(diagram, y, m)[m]
    ax = tx + wx0.scaled(m - 1)
    ay = ty + wy0.scaled(m - 1)
    a = ax - ay
    rule = diagram.rule
    bound = 2 * rule.outer_radius * Fraction(rule.lam) ** m
    if a.max_norm() > bound:
        raise CollaringError(
            f"witness translation {a!r} exceeds the 2R lambda**m bound {bound}")
    return RelationWitness(True, j=jx, z=z, m=m, a=a)


# ---------------------------------------------------------------------------
# geometric oracle


def geometric_oracle(diagram, x, y, a, depth):
    """Finite-depth translation check: does T_y + a agree with T_x?

    Overlays the collared Robinson patches at the given depth and demands
    that tiles agree exactly on the overlap (matching prototile and
    position) and that the overlap is non-empty.  Agreement at the largest
    depth implies agreement at all smaller depths since the patches are
    nested as placed.
    """
    if depth < 2:
        raise PathError("the oracle needs depth >= 2")
    px = robinson_patch(diagram, x, depth, collared=True)
    py = robinson_patch(diagram, y, depth, collared=True).translate(a)
    xmap = {}
    for t in px.tiles:
        for anchor in t.cube_anchors():
            xmap[anchor] = (t.proto.name, t.pos)
    overlap = 0
    for t in py.tiles:
        key = (t.proto.name, t.pos)
        for anchor in t.cube_anchors():
            hit = xmap.get(anchor)
            if hit is None:
                continue
            overlap += 1
            if hit != key:
                return False
    return overlap > 0


def candidate_translations(diagram, x, y, depth, bound):
    """All a mapping a puncture of phi^c(y) onto one of phi^c(x), |a| <= bound.

    Complete for the finite-depth relation: the origin is a puncture of
    T_x, so any a with T_x = T_y + a maps some puncture of T_y onto it.
    """
    px = robinson_patch(diagram, x, depth, collared=True)
    py = robinson_patch(diagram, y, depth, collared=True)
    out = set()
    for tx in px.tiles:
        for ty in py.tiles:
            a = tx.pos - ty.pos
            if a.max_norm() <= bound:
                out.add(a)
    return sorted(out, key=Coordinate.sort_key)


# ---------------------------------------------------------------------------
# R-sets


@dataclass
class RSet:
    """A basic set of the etale topology, determined by two rooted path
    prefixes of depth m and a shared generalized path segment over the
    window [m - k, m].

    The fingerprint is the pair of placements of the two depth-m patches
    inside the collared patch of the segment; it determines the forced
    translation between the two sides.
    """

    gamma: PathSpec
    gamma_prime: PathSpec
    m: int
    level: int
    eta_start: int
    etas: tuple          # merged segment vertex tuples
    u_gamma: Coordinate
    u_gamma_prime: Coordinate

    @property
    def translation(self):
        return self.u_gamma_prime - self.u_gamma

    def fingerprint(self):
        return (self.u_gamma.sort_key(), self.u_gamma_prime.sort_key())


def rset_enumerate(diagram, gamma, gamma_prime, m, k=None):
    """All R-sets for two depth-m prefixes: shared window segments, merged
    when they induce identical placements of the two patches.
    """
    gamma = validate_path(diagram, gamma)
    gamma_prime = validate_path(diagram, gamma_prime)
    if k is None:
        k = forcing_constant(diagram)
    if m <= k:
        raise PathError(f"m must exceed the forcing constant {k}, got {m}")
    lo = m - k
    tx = robinson_translations(diagram, gamma, m)
    ty = robinson_translations(diagram, gamma_prime, m)
    found = {}
    for j in sorted(diagram.by_level):
        joint = _JointBorder(diagram, gamma, gamma_prime, j)
        layers = [joint.states_at(i) for i in range(lo, m + 1)]
        chains = [[s] for s in layers[0]]
        for idx in range(1, len(layers)):
            depth = lo + idx - 1
            nxt = []
            for chain in chains:
                for s2 in layers[idx]:
                    if joint._step_ok(depth, chain[-1], s2):
                        nxt.append(chain + [s2])
            chains = nxt
        for chain in chains:
            v0, wx0, wy0 = chain[0]
            ug = -(tx[lo] + wx0.scaled(lo - 1))
            ugp = -(ty[lo] + wy0.scaled(lo - 1))
            key = (ug.sort_key(), ugp.sort_key())
            eta = tuple(s[0] for s in chain)
            if key not in found:
                found[key] = RSet(gamma, gamma_prime, m, j, lo, (eta,), ug, ugp)
            else:
                r = found[key]
                if eta not in r.etas:
                    found[key] = RSet(gamma, gamma_prime, m, j, lo,
                                      tuple(sorted(set(r.etas) | {eta})), ug, ugp)
    return [found[key] for key in sorted(found)]
