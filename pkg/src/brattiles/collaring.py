"""Decorated faces in all dimensions and the substitutions they induce.

A decorated j-face is a pair of patches (p, q): p is the set of all tiles
containing the face's support (the intersection of the tiles of p, a pure
connected j-dimensional subcomplex) and q is the set of all tiles meeting
that support.  Extraction from a finite patch only returns faces whose
collar q is fully determined inside the patch; anything touching the
patch border is omitted, never guessed.

The protoface table collects the translation classes of those faces in
every dimension, closed under the induced substitutions.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from itertools import combinations

from .geometry import (
    Cell,
    Coordinate,
    Patch,
    boundary_cells_of_cubes,
    cell_distance,
    cellset_distance,
    covered_neighborhood,
    tiles_meeting,
)

log = logging.getLogger(__name__)


class CollaringError(ValueError):
    """Internal inconsistency while building or using decorated faces."""


class ClosureCapExceeded(CollaringError):
    """The protoface closure did not stabilise within the depth cap."""


# ---------------------------------------------------------------------------
# faces


class Face:
    """A decorated face (p, q) with derived support and puncture."""

    __slots__ = ("j", "p", "q", "support", "puncture", "_hash", "_closure")

    def __init__(self, j, p, q, support, puncture):
        self.j = j
        self.p = p
        self.q = q
        self.support = frozenset(support)
        self.puncture = puncture
        self._hash = hash((j, p, q))
        self._closure = None

    def support_closure(self):
        """The support together with all of its subcells."""
        if self._closure is None:
            out = set()
            for c in self.support:
                out.update(c.subcells())
            self._closure = frozenset(out)
        return self._closure

    def translate(self, v):
        return Face(self.j,
                    self.p.translate(v),
                    self.q.translate(v),
                    frozenset(c.translate(v) for c in self.support),
                    self.puncture + v)

    def canonical(self):
        """The representative of this face's translation class (puncture at 0)."""
        return self.translate(-self.puncture)

    def class_key(self):
        c = self.canonical()
        return (c.j,
                tuple(t.key() for t in c.q.tiles),
                tuple(t.key() for t in c.p.tiles),
                tuple(sorted(cl.sort_key() for cl in c.support)))

    def __eq__(self, other):
        return (isinstance(other, Face) and self.j == other.j
                and self.p == other.p and self.q == other.q)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Face(j={self.j}, |p|={len(self.p)}, |q|={len(self.q)}, punc={self.puncture!r})"


def face_puncture(maximal_cells_set, lam):
    """Puncture of a lower-dimensional face: barycenter of its least maximal cell.

    The barycenter is lambda-adic only for even lambda; for odd lambda the
    anchor of the same cell is used instead.  Both choices are equivariant
    under translation, which is all the puncturing axiom demands.  Full
    dimensional faces (collared tiles) use the tile puncture instead, so
    that face punctures and transversal punctures agree.
    """
    c0 = min(maximal_cells_set, key=Cell.sort_key)
    if lam % 2 == 0:
        return Coordinate.from_fractions(c0.barycenter_fractions(), lam)
    return c0.anchor


def maximal_cells(cells):
    """Cells of the set not properly contained in another cell of the set."""
    cellset = set(cells)
    out = []
    for c in cellset:
        free = set(c.free)
        d = c.anchor.dim
        is_max = True
        for axis in range(d):
            if axis in free:
                continue
            bigger = Cell(c.anchor, tuple(sorted(free | {axis})))
            ints = [0] * d
            ints[axis] = -1
            lower = Cell(c.anchor.plus_ints(ints), bigger.free)
            if bigger in cellset or lower in cellset:
                is_max = False
                break
        if is_max:
            out.append(c)
    return out


def _connected(cells):
    cells = list(cells)
    if not cells:
        return False
    seen = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for k, other in enumerate(cells):
            if k not in seen and cell_distance(cells[i], other) == 0:
                seen.add(k)
                frontier.append(k)
    return len(seen) == len(cells)


def _face_from_owners(patch, owners, tile_cells, lam, j=None):
    """Build the face whose p-set is ``owners``; None if it is no face here.

    Returns None when the common intersection is empty, mixed-dimension,
    disconnected, of the wrong dimension, or when its collar cannot be
    determined inside the patch.
    """
    owners = sorted(owners)
    common = set(tile_cells[owners[0]])
    for i in owners[1:]:
        common &= tile_cells[i]
    if not common:
        return None
    maxc = maximal_cells(common)
    dims = {c.dim for c in maxc}
    if len(dims) != 1:
        log.debug("rejecting mixed-dimension face candidate p=%s dims=%s", owners, dims)
        return None
    jj = dims.pop()
    if j is not None and jj != j:
        return None
    if not _connected(maxc):
        log.debug("rejecting disconnected face candidate p=%s", owners)
        return None
    if not covered_neighborhood(maxc, patch):
        return None  # collar extends past the patch border: omit
    q_ids = tiles_meeting(maxc, patch)
    support = frozenset(maxc)
    if len(owners) == 1 and jj == patch.d:
        punc = patch.tiles[owners[0]].pos
    else:
        punc = face_puncture(support, lam)
    return Face(jj,
                patch.restrict(owners),
                patch.restrict(q_ids),
                support,
                punc)


def extract_faces(patch, j=None):
    """Every decorated face of ``patch`` whose collar is determined inside it.

    With ``j`` given, only faces of that dimension are returned (j = d
    yields the collared tiles).  Candidates whose support is disconnected
    or of mixed dimension are rejected and logged.
    """
    if not len(patch):
        return []
    lam = patch.tiles[0].proto.lam
    tile_cells = [t.all_cells() for t in patch.tiles]
    owner_sets = {}
    for i, cells in enumerate(tile_cells):
        for c in cells:
            owner_sets.setdefault(c, []).append(i)
    out = []
    seen = set()
    for owners in owner_sets.values():
        key = tuple(owners)
        if key in seen:
            continue
        seen.add(key)
        face = _face_from_owners(patch, owners, tile_cells, lam, j=j)
        if face is not None:
            out.append(face)
    out.sort(key=lambda f: (f.j, f.puncture.sort_key()))
    return out


def face_through_cell(patch, cell):
    """The face of ``patch`` generated by one of its cells, if determined."""
    lam = patch.tiles[0].proto.lam
    tile_cells = [t.all_cells() for t in patch.tiles]
    owners = [i for i, cells in enumerate(tile_cells) if cell in cells]
    if not owners:
        return None
    return _face_from_owners(patch, owners, tile_cells, lam)


# -- adjacency ---------------------------------------------------------------


def is_on_boundary(f_prime, f):
    """f' lies on the boundary of f: p strictly grows, collar strictly shrinks."""
    return (set(f.p.tiles) < set(f_prime.p.tiles)
            and set(f_prime.q.tiles) < set(f.q.tiles))


def faces_intersect(f1, f2):
    """Intersection predicate for two faces placed in a common tiling."""
    return (set(f1.p.tiles) <= set(f2.q.tiles)
            and set(f2.p.tiles) <= set(f1.q.tiles))


def face_adjacency(ambient, f1, f2):
    """(f2 on boundary of f1?, maximal common faces of f1 and f2).

    Both faces must be placed inside ``ambient``; the intersection list
    contains the maximal faces of strictly smaller dimension shared by
    their supports, each a face of the ambient patch.
    """
    amb_tiles = set(ambient.tiles)
    for f in (f1, f2):
        if not set(f.q.tiles) <= amb_tiles:
            raise CollaringError("face is not placed inside the ambient patch")
    boundary = is_on_boundary(f2, f1)
    inter = []
    if f1 != f2 and faces_intersect(f1, f2):
        common = set(f1.support_closure()) & set(f2.support_closure())
        if common:
            cand = {}
            for c in maximal_cells(common):
                g = face_through_cell(ambient, c)
                if g is None:
                    continue
                if not g.support_closure() <= common:
                    continue
                if is_on_boundary(g, f1) and is_on_boundary(g, f2):
                    cand[g.class_key() + (g.puncture.sort_key(),)] = g
            faces = list(cand.values())
            for g in faces:
                if any(g is not h and g.support_closure() < h.support_closure()
                       for h in faces):
                    continue
                inter.append(g)
            inter.sort(key=lambda g: (g.j, g.puncture.sort_key()))
    return boundary, inter


# ---------------------------------------------------------------------------
# induced substitution


def inflate_support(support, lam):
    """The unit j-cells tiling lambda * support."""
    out = set()
    for c in support:
        base = c.anchor.scaled(1)
        free = c.free
        d = base.dim
        idx = [0] * d
        from itertools import product as _product
        for steps in _product(range(lam), repeat=len(free)):
            ints = list(idx)
            for axis, s in zip(free, steps):
                ints[axis] = s
            out.add(Cell(base.plus_ints(ints), free))
    return out


def induced_substitution_faces(rule, face):
    """The placed decorated j-faces of omega(face), with supports in lambda*spt.

    Children are the faces (p_i, q_i) of the substituted collar patch with
    p_i inside omega(p) and support inside the inflated support; their
    supports must tile the inflated support exactly.
    """
    amb = rule.substitute(face.q)
    omega_p = set(rule.substitute(face.p).tiles)
    target = inflate_support(face.support, rule.lam)
    kids = []
    for g in extract_faces(amb, j=face.j):
        if g.support <= target and set(g.p.tiles) <= omega_p:
            kids.append(g)
    union = set()
    for g in kids:
        union |= g.support
    if union != target:
        raise CollaringError(
            f"children of {face!r} do not tile the inflated support "
            f"({len(union)} of {len(target)} cells covered)")
    kids.sort(key=lambda g: g.puncture.sort_key())
    return kids


# ---------------------------------------------------------------------------
# the protoface table


class FaceClass:
    """A translation class of decorated faces, with its canonical representative."""

    __slots__ = ("id", "j", "face", "children", "boundary")

    def __init__(self, cid, face):
        self.id = cid
        self.j = face.j
        self.face = face          # canonical: puncture at the origin
        self.children = None      # tuple[(class_id, offset Coordinate)]
        self.boundary = None      # tuple[(class_id, offset Coordinate)], dims < j

    def __repr__(self):
        return f"FaceClass(F{self.j}#{self.id}, |q|={len(self.face.q)})"


class ProtofaceTable:
    """All protoface classes of a rule, closed under induced substitution."""

    def __init__(self, rule, classes):
        self.rule = rule
        self.classes = classes
        self.by_dim = {}
        self._index = {}
        for c in classes:
            self.by_dim.setdefault(c.j, []).append(c.id)
            self._index[c.face.class_key()] = c.id
        self._subst_cache = {}

    def dims(self):
        return sorted(self.by_dim)

    def classes_of_dim(self, j):
        return [self.classes[i] for i in self.by_dim.get(j, [])]

    def lookup(self, face):
        """(class id, offset): ``face`` == canonical(class) + offset."""
        cid = self._index.get(face.class_key())
        if cid is None:
            raise CollaringError(f"face {face!r} is not in the protoface table")
        return cid, face.puncture

    def contains(self, face):
        return face.class_key() in self._index

    def children(self, cid):
        return self.classes[cid].children

    def boundary_faces(self, cid):
        return self.classes[cid].boundary

    def canonical_face(self, cid):
        return self.classes[cid].face

    def substituted_patch(self, cid, n, collared):
        """omega**n of the canonical p- or q-patch of a class, cached."""
        key = (cid, n, collared)
        hit = self._subst_cache.get(key)
        if hit is not None:
            return hit
        if n == 0:
            face = self.classes[cid].face
            patch = face.q if collared else face.p
        else:
            patch = self.rule.substitute(self.substituted_patch(cid, n - 1, collared))
        self._subst_cache[key] = patch
        return patch

    def label(self, cid):
        return f"F{self.classes[cid].j}#{self.id_in_dim(cid)}"

    def id_in_dim(self, cid):
        return self.by_dim[self.classes[cid].j].index(cid)


def harvest_collared_tiles(patch):
    """Collared tiles (d-faces) determined inside ``patch``, cheaply.

    Equivalent to extract_faces(patch, j=d) but without building the full
    cell complex: a tile is collar-determined iff every grid cube meeting
    it is covered by the patch.
    """
    d = patch.d
    cubes = patch.cube_map()
    out = []
    for idx, tile in enumerate(patch.tiles):
        tcubes = [Cell(a, tuple(range(d))) for a in tile.cube_anchors()]
        if not covered_neighborhood(tcubes, patch):
            continue
        q_ids = tiles_meeting(tcubes, patch)
        out.append(Face(d,
                        patch.restrict([idx]),
                        patch.restrict(q_ids),
                        frozenset(tcubes),
                        tile.pos))
    return out


def enumerate_protofaces(rule, depth_cap=8):
    """Fixed-point closure of the protoface classes of ``rule``.

    Grows omega**n of every prototile and harvests the determined collared
    tiles until two consecutive depths add nothing; the lower-dimensional
    classes are then the faces of the collared tiles' collar patches (every
    face of a tiling has its collar inside the collar patch of any tile it
    touches, and is determined there).  Finally the table is closed under
    the induced substitutions; exceeding ``depth_cap`` raises
    ClosureCapExceeded.
    """
    tiles_found = {}
    patches = {name: Patch([rule.prototile_tile(name)], validate=False)
               for name in rule.order}
    stable_rounds = 0
    n = 0
    while True:
        n += 1
        if n > depth_cap:
            raise ClosureCapExceeded(
                f"protoface closure exceeded depth cap {depth_cap} "
                f"({len(tiles_found)} collared tiles so far)")
        new = 0
        for name in rule.order:
            patches[name] = rule.substitute(patches[name])
            for face in harvest_collared_tiles(patches[name]):
                key = face.class_key()
                if key not in tiles_found:
                    tiles_found[key] = face.canonical()
                    new += 1
        stable_rounds = stable_rounds + 1 if new == 0 else 0
        if stable_rounds < 2:
            continue
        # close the collared tiles under the tile substitution
        missing = 0
        for face in list(tiles_found.values()):
            for g in induced_substitution_faces(rule, face):
                key = g.class_key()
                if key not in tiles_found:
                    tiles_found[key] = g.canonical()
                    missing += 1
        if missing == 0:
            break
        stable_rounds = 0

    found = dict(tiles_found)
    for face in tiles_found.values():
        for g in extract_faces(face.q):
            if g.j < rule.d:
                found.setdefault(g.class_key(), g.canonical())

    # closure of the lower dimensions under their induced substitutions
    frontier = list(found.values())
    rounds = 0
    while frontier:
        rounds += 1
        if rounds > depth_cap:
            raise ClosureCapExceeded(
                "induced-substitution closure exceeded the depth cap")
        fresh = []
        for face in frontier:
            for g in induced_substitution_faces(rule, face):
                key = g.class_key()
                if key not in found:
                    found[key] = g.canonical()
                    fresh.append(found[key])
        frontier = fresh

    canon = sorted(found.values(), key=lambda f: (-f.j, f.class_key()))
    classes = [FaceClass(i, f) for i, f in enumerate(canon)]
    table = ProtofaceTable(rule, classes)
    _fill_children(rule, table)
    _fill_boundaries(rule, table)
    return table


def _fill_children(rule, table):
    for cls in table.classes:
        kids = []
        for g in induced_substitution_faces(rule, cls.face):
            cid, off = table.lookup(g)
            kids.append((cid, off))
        cls.children = tuple(kids)


def _fill_boundaries(rule, table):
    for cls in table.classes:
        amb = cls.face.q
        entries = []
        for g in extract_faces(amb):
            if g.j >= cls.j:
                continue
            if is_on_boundary(g, cls.face):
                cid, off = table.lookup(g)
                entries.append((cid, off))
        entries.sort(key=lambda e: (table.classes[e[0]].j, e[0], e[1].sort_key()))
        cls.boundary = tuple(entries)


def induced_substitution(rule, table, cid):
    """ omega_j of a table class: list of (child class id, placement offset)."""
    return table.children(cid)


# ---------------------------------------------------------------------------
# the collar constant rho


def _condition_i_radius(face):
    """Largest r with spt(f) + B(0, r) inside the collar support."""
    cubes = [Cell(a, tuple(range(a.dim))) for a in face.q.cube_map()]
    bcells = boundary_cells_of_cubes(cubes)
    return min(cell_distance(c, b) for c in face.support for b in bcells)


def _support_bbox(face):
    los, his = None, None
    for c in face.support:
        lo, hi = c.box()
        if los is None:
            los, his = list(lo), list(hi)
        else:
            los = [min(a, b) for a, b in zip(los, lo)]
            his = [max(a, b) for a, b in zip(his, hi)]
    return los, his


def _bbox_gap(b1, b2):
    (lo1, hi1), (lo2, hi2) = b1, b2
    gap = Fraction(0)
    for a0, a1, b0, b1_ in zip(lo1, hi1, lo2, hi2):
        g = max(b0 - a1, a0 - b1_, Fraction(0))
        if g > gap:
            gap = g
    return gap


def compute_rho(rule, table, sample_depth=3):
    """The collar constant: faces keep a rho-neighborhood inside their
    collar, and any two faces with supports closer than rho intersect.

    Exact value: the minimum of the condition (i) radii over the table and
    of the support distances of non-intersecting face pairs harvested from
    omega**sample_depth of every prototile.  Positive for every valid rule.
    """
    rho = None
    for cls in table.classes:
        r = _condition_i_radius(cls.face)
        rho = r if rho is None else min(rho, r)
    for name in rule.order:
        patch = rule.iterate(rule.prototile_tile(name), sample_depth)
        faces = extract_faces(patch)
        boxes = [_support_bbox(f) for f in faces]
        for (i1, f1), (i2, f2) in combinations(enumerate(faces), 2):
            if _bbox_gap(boxes[i1], boxes[i2]) >= rho:
                continue
            if not faces_intersect(f1, f2):
                dist = cellset_distance(f1.support, f2.support)
                if dist < rho:
                    rho = dist
    if rho is None or rho <= 0:
        raise CollaringError(f"collar constant must be positive, got {rho}")
    return rho


def rho_condition_i(table, rho):
    """Exhaustive check of the neighborhood condition over the table."""
    return all(_condition_i_radius(cls.face) >= rho for cls in table.classes)


def rho_condition_ii(rule, rho, depth=3):
    """Faces closer than rho in omega**depth of any prototile intersect."""
    for name in rule.order:
        patch = rule.iterate(rule.prototile_tile(name), depth)
        faces = extract_faces(patch)
        boxes = [_support_bbox(f) for f in faces]
        for (i1, f1), (i2, f2) in combinations(enumerate(faces), 2):
            if _bbox_gap(boxes[i1], boxes[i2]) >= rho:
                continue
            if cellset_distance(f1.support, f2.support) < rho and not faces_intersect(f1, f2):
                return False
    return True
