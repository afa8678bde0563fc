"""Path discovery helpers: fixed points, short cycles, random pools.

Everything here walks the occurrence diagrams deterministically (sorted
ids, seeded generators), so test pools and figure-level searches are
reproducible run to run.
"""

from __future__ import annotations

import networkx as nx

from .paths import PathSpec, border_dimension, distance_sequence_verdict, \
    boundary_distance_sequence, make_path


def self_occurrence_paths(diagram, level=None):
    """Constant paths: one per occurrence of a class inside itself."""
    level = diagram.d if level is None else level
    out = []
    for vid in diagram.by_level[level]:
        v = diagram.vertices[vid]
        if v.child == v.parent:
            out.append(make_path(diagram, level, 1, [], [vid]))
    return out


def level_graph(diagram, level):
    g = nx.DiGraph()
    for vid in diagram.by_level[level]:
        g.add_node(vid)
        for w in diagram.successors(vid):
            g.add_edge(vid, w)
    return g


def cycle_paths(diagram, level, max_len, rotations=False):
    """Paths from simple cycles of bounded length in one level diagram."""
    g = level_graph(diagram, level)
    out = []
    for cyc in nx.simple_cycles(g, length_bound=max_len):
        k = min(range(len(cyc)), key=lambda i: cyc[i])
        cyc = cyc[k:] + cyc[:k]
        rots = range(len(cyc)) if rotations else (0,)
        for r in rots:
            rot = tuple(cyc[r:] + cyc[:r])
            out.append(make_path(diagram, level, 1, [], rot))
    seen = set()
    uniq = []
    for p in out:
        key = (p.prefix, p.cycle)
        if key not in seen:
            seen.add(key)
            uniq.append(p)
    uniq.sort(key=lambda p: (len(p.cycle), p.cycle))
    return uniq


def classify_fixed_points(diagram, max_cycle=2, rotations=True):
    """Map border dimension -> eventually periodic cycle paths realising it."""
    by_bd = {}
    for p in cycle_paths(diagram, diagram.d, max_cycle, rotations=rotations):
        bd = border_dimension(diagram, p)
        by_bd.setdefault(bd, []).append(p)
    return by_bd


def find_inward_cycle(diagram, max_cycle=4, depth=12):
    """A cycle whose boundary distance grows strictly every cycle.

    Such a path has full border dimension; the distance sequence is the
    independent geometric certificate.
    """
    for p in cycle_paths(diagram, diagram.d, max_cycle):
        seq = boundary_distance_sequence(diagram, p, depth)
        L = len(p.cycle)
        if all(seq[i + L] > seq[i] for i in range(depth - L)):
            return p, seq
    return None, None


def random_rooted_paths(diagram, count, rng, max_prefix=3, max_cycle=4):
    """Deterministic pool of rooted eventually periodic top-level paths."""
    level = diagram.d
    vids = list(diagram.by_level[level])
    out = []
    guard = 0
    while len(out) < count and guard < 50 * count:
        guard += 1
        prefix = []
        v = rng.choice(vids)
        for _ in range(rng.randrange(0, max_prefix + 1)):
            prefix.append(v)
            v = rng.choice(diagram.successors(v))
        # walk until a vertex repeats to close a cycle
        walk = [v]
        seen = {v: 0}
        while True:
            v = rng.choice(diagram.successors(v))
            if v in seen:
                start = seen[v]
                cycle = walk[start:]
                prefix2 = prefix + walk[:start]
                break
            seen[v] = len(walk)
            walk.append(v)
        if len(cycle) > max_cycle:
            continue
        try:
            out.append(make_path(diagram, level, 1, prefix2, cycle))
        except Exception:
            continue
    return out


def splice_with_border(diagram, gamma, target, connector_cap=12):
    """A path through the rooted prefix ``gamma`` with the border tail of
    ``target``.

    Realises the density construction: keep the prefix, walk a shortest
    connector to the cycle of ``target``, then follow that cycle forever.
    Returns None when no connector exists within the cap (cannot happen
    for a primitive rule).
    """
    g = level_graph(diagram, diagram.d)
    gamma = list(gamma)
    goal = target.cycle[0]
    try:
        connector = nx.shortest_path(g, gamma[-1], goal)
    except nx.NetworkXNoPath:
        return None
    if len(connector) > connector_cap:
        return None
    full_prefix = gamma + connector[1:-1]
    return make_path(diagram, diagram.d, 1, full_prefix, target.cycle)
