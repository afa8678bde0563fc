"""The invariant suite behind the ``verify`` command.

Each check returns (name, passed, detail); the suite re-derives structural
facts through independent code paths wherever possible (horizontal edges
through the adjacency predicates, path counts through the Abelianization
of the collared substitution, nesting through placed patch containment).
"""

from __future__ import annotations

import random
from fractions import Fraction

from .collaring import (
    compute_rho,
    extract_faces,
    face_adjacency,
    inflate_support,
    rho_condition_i,
    rho_condition_ii,
)
from .diagram import build_multidiagram
from .geometry import cell_distance
from .paths import robinson_patch
from .relation import check_forcing, forcing_constant
from .search import cycle_paths, self_occurrence_paths


def _check_rule(rule, table, diagram):
    yield ("volume-identity", rule.volume_identity_holds(),
           "sum_i A_ij vol(i) == lambda**d vol(j) for every column")
    mat, primitive, witness = rule.abelianization_and_primitivity()
    yield ("abelianization-primitive", primitive,
           f"witness exponent n={witness}" if primitive else "no positive power")


def _check_table(rule, table, diagram):
    missing = 0
    for cls in table.classes:
        for cid, _ in cls.children:
            if not 0 <= cid < len(table.classes):
                missing += 1
    yield ("induced-substitution-closure", missing == 0,
           f"{missing} children outside the table")
    stray = []
    for name in rule.order:
        patch = rule.iterate(rule.prototile_tile(name), 3)
        for face in extract_faces(patch):
            if not table.contains(face):
                stray.append(face)
    yield ("decoration-determinacy", not stray,
           f"{len(stray)} faces of omega**3 patches missing from the table")
    bad_union = 0
    for cls in table.classes:
        target = inflate_support(cls.face.support, rule.lam)
        got = set()
        for cid, off in cls.children:
            got |= {c.translate(off) for c in table.canonical_face(cid).support}
        if got != target:
            bad_union += 1
    yield ("children-tile-inflated-support", bad_union == 0,
           f"{bad_union} classes whose children do not tile lambda*spt")


def _check_rho(rule, table, diagram):
    rho = compute_rho(rule, table)
    yield ("rho-positive", rho > 0, f"rho = {rho}")
    yield ("rho-condition-i", rho_condition_i(table, rho),
           "spt(f) + B(0, rho) inside every collar")
    yield ("rho-condition-ii", rho_condition_ii(rule, rho, depth=3),
           "faces closer than rho intersect (omega**3 samples)")


def _check_horizontal(rule, table, diagram, sample=120):
    edges = [(src, dst) for src in sorted(diagram.horizontal)
             for dst in sorted(diagram.horizontal[src])]
    rng = random.Random(7)
    if len(edges) > sample:
        edges = rng.sample(edges, sample)
        edges.sort()
    bad = 0
    for src, dst in edges:
        v, w = diagram.vertices[src], diagram.vertices[dst]
        parent_cls = table.classes[v.parent]
        amb = rule.substitute(parent_cls.face.q)
        gface = table.canonical_face(v.child).translate(v.offset)
        boff = None
        for bcid, off in parent_cls.boundary:
            if bcid == w.parent:
                for fcid, foff in table.classes[bcid].children:
                    if fcid == w.child and foff == w.offset:
                        placed = table.canonical_face(fcid).translate(
                            off.scaled(1) + foff)
                        onb, _ = face_adjacency(amb, gface, placed)
                        if onb:
                            boff = off
                            break
            if boff is not None:
                break
        if boff is None:
            bad += 1
    yield ("horizontal-soundness", bad == 0,
           f"{bad} of {len(edges)} sampled horizontal edges fail geometric re-derivation")


def _check_escaping(rule, table, diagram):
    """Every face created in the interior of a substitute has an escaping witness."""
    missing = 0
    checked = 0
    d = rule.d
    for cls in table.classes_of_dim(d):
        amb = rule.substitute(cls.face.q)
        omega_p = {t.key() for t in rule.substitute(cls.face.p)}
        inflated = inflate_support(cls.face.support, rule.lam)
        boundary_child_cells = set()
        for bcid, boff in cls.boundary:
            for c in table.classes[bcid].face.support:
                for cc in inflate_support({c.translate(boff)}, rule.lam):
                    boundary_child_cells.add(cc)
        for face in extract_faces(amb):
            if face.j >= d:
                continue
            if not all(t.key() in omega_p for t in face.p.tiles):
                continue
            closure = face.support_closure()
            if any(c in boundary_child_cells for c in face.support):
                continue  # substituted from a face of the tile, not created
            checked += 1
            if not any(e.via == table.lookup(face)[0] for e in diagram.escaping):
                missing += 1
    yield ("escaping-completeness", missing == 0,
           f"{missing} of {checked} created interior faces lack an escaping edge")


def _check_dual_bijection(rule, table, diagram, n_max=4):
    """Paths of length n in the dual level-d diagram match edge paths of
    length n+1 in the primal diagram of the collared substitution."""
    d = rule.d
    tiles = table.by_dim[d]
    index = {cid: i for i, cid in enumerate(tiles)}
    s = len(tiles)
    mat = [[0] * s for _ in range(s)]
    for cid in tiles:
        for child, _ in table.children(cid):
            mat[index[child]][index[cid]] += 1

    def primal_edge_paths(m):
        # composable sequences e_1 .. e_m: sum of entries of A**m
        v = [1] * s  # v[i] = continuations upward from child class i
        for _ in range(m - 1):
            v = [sum(mat[i][j] * v[i] for i in range(s)) for j in range(s)]
        return sum(mat[i][j] * v[i] for i in range(s) for j in range(s))

    ok = True
    detail = []
    for n in range(1, n_max + 1):
        dp = {vid: 1 for vid in diagram.by_level[d]}
        for _ in range(n):
            dp = {vid: sum(dp[w] for w in diagram.successors(vid))
                  for vid in diagram.by_level[d]}
        dual = sum(dp.values())
        primal = primal_edge_paths(n + 1)
        if primal != dual:
            ok = False
            detail.append(f"n={n}: primal {primal} != dual {dual}")
    yield ("dual-diagram-bijection", ok,
           "; ".join(detail) if detail else f"path counts agree for n <= {n_max}")


def collar_margin(diagram, path, n):
    """Exact distance from phi_n to the complement of phi_n^c."""
    from .geometry import Cell, support_boundary_cells
    plain = robinson_patch(diagram, path, n)
    collared = robinson_patch(diagram, path, n, collared=True)
    bcells = support_boundary_cells(collared)
    d = diagram.rule.d
    return min(cell_distance(Cell(a, tuple(range(d))), b)
               for a in plain.cube_map() for b in bcells)


def _check_nesting(rule, table, diagram, rho, n_max=3):
    paths = self_occurrence_paths(diagram)
    if not paths:
        paths = cycle_paths(diagram, diagram.d, 2)[:2]
    bad_nest = 0
    bad_margin = 0
    for p in paths[:3]:
        prev = None
        prev_c = None
        for n in range(1, n_max + 1):
            cur = robinson_patch(diagram, p, n)
            cur_c = robinson_patch(diagram, p, n, collared=True)
            if prev is not None and not prev.is_subpatch_of(cur):
                bad_nest += 1
            if prev_c is not None and not prev_c.is_subpatch_of(cur_c):
                bad_nest += 1
            if collar_margin(diagram, p, n) < rho * Fraction(rule.lam) ** (n - 1):
                bad_margin += 1
            prev, prev_c = cur, cur_c
    yield ("robinson-nesting", bad_nest == 0,
           f"{bad_nest} nesting failures over {len(paths[:3])} sample paths")
    yield ("collared-neighborhood", bad_margin == 0,
           f"phi_n^c contains a rho*lam**(n-1) neighborhood of phi_n (n <= {n_max}); "
           f"{bad_margin} failures")


def _check_forcing(rule, table, diagram):
    k = forcing_constant(diagram)
    minimal = k == 1 or not check_forcing(diagram, k - 1)
    yield ("forcing-constant", True, f"k = {k}")
    yield ("forcing-minimality", minimal, f"k-1 = {k - 1} must fail")


def run_verification(rule, table=None, diagram=None):
    """Run the whole invariant suite; returns a list of (name, ok, detail)."""
    if diagram is None:
        diagram = build_multidiagram(rule, table)
    table = diagram.table
    rho = compute_rho(rule, table)
    results = []
    for gen in (_check_rule, _check_table, _check_rho, _check_horizontal,
                _check_escaping, _check_dual_bijection, _check_forcing):
        results.extend(gen(rule, table, diagram))
    results.extend(_check_nesting(rule, table, diagram, rho))
    return results
