"""Exact lattice geometry: cells, tiles, patches, translations, punctures.

Everything lives in the ring of lambda-adic rationals (denominators are
powers of the inflation factor), so all arithmetic is integer arithmetic
and no rounding can ever occur.  Tiles are finite unions of unit cubes of
the lattice (polyominoes / polycubes); patches are finite sets of tiles
whose interiors are pairwise disjoint and whose lattices agree up to an
integer translation.  Under that alignment the cell-complex conditions
are automatic and every geometric predicate below is exact and finite.

Distances are taken in the max metric throughout.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations, product


class GeometryError(ValueError):
    """A patch or tile violates the lattice/cellularity invariants."""


# ---------------------------------------------------------------------------
# lambda-adic coordinates


class Coordinate:
    """A point of (1/lam**scale) * Z**d, kept in canonical form.

    Canonical means scale == 0 or at least one numerator component is not
    divisible by lam.  Two coordinates compare equal iff they denote the
    same point of R**d (for the same lam).
    """

    __slots__ = ("num", "scale", "lam", "_hash")

    def __init__(self, num, scale, lam):
        num = tuple(int(c) for c in num)
        scale = int(scale)
        if scale < 0:
            num = tuple(c * lam ** (-scale) for c in num)
            scale = 0
        while scale > 0 and all(c % lam == 0 for c in num):
            num = tuple(c // lam for c in num)
            scale -= 1
        self.num = num
        self.scale = scale
        self.lam = lam
        self._hash = hash((num, scale))

    @classmethod
    def integer(cls, ints, lam):
        return cls(tuple(ints), 0, lam)

    @classmethod
    def zero(cls, d, lam):
        return cls((0,) * d, 0, lam)

    @classmethod
    def from_fractions(cls, fracs, lam):
        """Exact conversion; rejects denominators that are not powers of lam."""
        fracs = [Fraction(f) for f in fracs]
        scale = 0
        num = [f for f in fracs]
        while any(f.denominator != 1 for f in num):
            num = [f * lam for f in num]
            scale += 1
            if scale > 64:
                raise GeometryError(
                    f"coordinate {fracs} is not lambda-adic for lambda={lam}")
        return cls(tuple(f.numerator for f in num), scale, lam)

    @property
    def dim(self):
        return len(self.num)

    def _aligned(self, other):
        if self.lam != other.lam:
            raise GeometryError("mixing coordinates of different rules")
        e = max(self.scale, other.scale)
        a = self.num if self.scale == e else tuple(
            c * self.lam ** (e - self.scale) for c in self.num)
        b = other.num if other.scale == e else tuple(
            c * self.lam ** (e - other.scale) for c in other.num)
        return a, b, e

    def __add__(self, other):
        a, b, e = self._aligned(other)
        return Coordinate(tuple(x + y for x, y in zip(a, b)), e, self.lam)

    def __sub__(self, other):
        a, b, e = self._aligned(other)
        return Coordinate(tuple(x - y for x, y in zip(a, b)), e, self.lam)

    def __neg__(self):
        return Coordinate(tuple(-c for c in self.num), self.scale, self.lam)

    def scaled(self, k):
        """Multiply by lam**k (k may be negative)."""
        return Coordinate(self.num, self.scale - k, self.lam)

    def times(self, n):
        return Coordinate(tuple(n * c for c in self.num), self.scale, self.lam)

    def plus_ints(self, ints):
        f = self.lam ** self.scale
        return Coordinate(tuple(c + i * f for c, i in zip(self.num, ints)),
                          self.scale, self.lam)

    def is_integral(self):
        return self.scale == 0

    def as_fractions(self):
        den = self.lam ** self.scale
        return tuple(Fraction(c, den) for c in self.num)

    def max_norm(self):
        return Fraction(max(abs(c) for c in self.num), self.lam ** self.scale)

    def sort_key(self):
        den = self.lam ** self.scale
        return tuple((c, den) if den == 1 else (Fraction(c, den).numerator,
                                                Fraction(c, den).denominator)
                     for c in self.num)

    def __eq__(self, other):
        return (isinstance(other, Coordinate) and self.num == other.num
                and self.scale == other.scale and self.lam == other.lam)

    def __lt__(self, other):
        a, b, _ = self._aligned(other)
        return a < b

    def __le__(self, other):
        a, b, _ = self._aligned(other)
        return a <= b

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "(" + ", ".join(str(f) for f in self.as_fractions()) + ")"


# ---------------------------------------------------------------------------
# cells


class Cell:
    """A closed unit-cube face: anchor + sum_{i in free} [0,1] e_i."""

    __slots__ = ("anchor", "free", "_hash")

    def __init__(self, anchor, free):
        self.anchor = anchor
        self.free = tuple(sorted(free))
        self._hash = hash((anchor, self.free))

    @property
    def dim(self):
        return len(self.free)

    def translate(self, v):
        return Cell(self.anchor + v, self.free)

    def subcells(self, j=None):
        """All faces of this cell (of dimension j if given), itself included."""
        out = []
        free = self.free
        dims = range(0, len(free) + 1) if j is None else [j]
        for i in dims:
            if i > len(free):
                continue
            for keep in combinations(free, i):
                fixed = [a for a in free if a not in keep]
                for delta in product((0, 1), repeat=len(fixed)):
                    ints = [0] * self.anchor.dim
                    for axis, dv in zip(fixed, delta):
                        ints[axis] = dv
                    out.append(Cell(self.anchor.plus_ints(ints), keep))
        return out

    def box(self):
        """(lo, hi) corner fractions of the closed cell."""
        lo = self.anchor.as_fractions()
        hi = tuple(c + (1 if i in self.free else 0) for i, c in enumerate(lo))
        return lo, hi

    def barycenter_fractions(self):
        lo = self.anchor.as_fractions()
        return tuple(c + (Fraction(1, 2) if i in self.free else 0)
                     for i, c in enumerate(lo))

    def meeting_cube_anchors(self):
        """Anchors of every closed grid cube that intersects this closed cell."""
        d = self.anchor.dim
        ranges = []
        for axis in range(d):
            ranges.append((-1, 0, 1) if axis in self.free else (-1, 0))
        out = []
        for delta in product(*ranges):
            out.append(self.anchor.plus_ints(delta))
        return out

    def sort_key(self):
        return (len(self.free), self.anchor.sort_key(), self.free)

    def __eq__(self, other):
        return (isinstance(other, Cell) and self.free == other.free
                and self.anchor == other.anchor)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Cell({self.anchor!r}, free={self.free})"


def cell_distance(c1, c2):
    """Exact max-metric distance between two closed cells."""
    lo1, hi1 = c1.box()
    lo2, hi2 = c2.box()
    gap = Fraction(0)
    for a0, a1, b0, b1 in zip(lo1, hi1, lo2, hi2):
        g = max(b0 - a1, a0 - b1, Fraction(0))
        if g > gap:
            gap = g
    return gap


def cellset_distance(cells1, cells2):
    return min(cell_distance(a, b) for a in cells1 for b in cells2)


# ---------------------------------------------------------------------------
# prototiles and tiles


class Prototile:
    """A translation class of lattice polycube tiles, with a fixed puncture.

    ``cells`` are the integer anchors of its unit d-cubes in the reference
    position; ``puncture`` is a lambda-adic interior point in the same
    position.  Tiles keep a reference back to their prototile, so geometry
    never needs a rule object.
    """

    __slots__ = ("name", "label", "cells", "puncture", "d", "lam", "index")

    def __init__(self, name, cells, puncture, lam, label=None, index=0):
        self.name = name
        self.label = label or name
        self.cells = tuple(sorted(tuple(int(x) for x in c) for c in set(map(tuple, cells))))
        if not self.cells:
            raise GeometryError(f"prototile {name!r}: empty cell set")
        self.d = len(self.cells[0])
        if any(len(c) != self.d for c in self.cells):
            raise GeometryError(f"prototile {name!r}: mixed cell dimensions")
        self.lam = lam
        self.puncture = (puncture if isinstance(puncture, Coordinate)
                         else Coordinate.from_fractions(puncture, lam))
        if self.puncture.dim != self.d:
            raise GeometryError(f"prototile {name!r}: puncture dimension mismatch")
        self.index = index
        if not self._puncture_interior():
            raise GeometryError(
                f"prototile {name!r}: puncture {self.puncture!r} is not interior")

    def _puncture_interior(self):
        # p interior to the closed union iff every grid cube whose closure
        # contains p belongs to the tile.
        fr = self.puncture.as_fractions()
        cubes = set(self.cells)
        axes_choices = []
        for c in fr:
            if c.denominator == 1:
                axes_choices.append((int(c) - 1, int(c)))
            else:
                axes_choices.append((c.numerator // c.denominator,))
        for combo in product(*axes_choices):
            if tuple(combo) not in cubes:
                return False
        return True

    def volume(self):
        return len(self.cells)

    def bounding_box(self):
        los = [min(c[i] for c in self.cells) for i in range(self.d)]
        his = [max(c[i] for c in self.cells) + 1 for i in range(self.d)]
        return tuple(los), tuple(his)

    def outer_radius(self):
        """Max-metric circumradius of the support about the puncture."""
        p = self.puncture.as_fractions()
        r = Fraction(0)
        for c in self.cells:
            for corner in product((0, 1), repeat=self.d):
                val = max(abs(Fraction(c[i] + corner[i]) - p[i]) for i in range(self.d))
                if val > r:
                    r = val
        return r

    def inner_radius(self):
        """Max-metric inradius about the puncture (distance to the boundary)."""
        cubes = [Cell(Coordinate.integer(c, self.lam), tuple(range(self.d)))
                 for c in self.cells]
        bcells = boundary_cells_of_cubes(cubes)
        pcell = Cell(self.puncture, ())
        return min(cell_distance(pcell, b) for b in bcells)

    def __repr__(self):
        return f"Prototile({self.name!r})"


class Tile:
    """A placed prototile; ``pos`` is the location of its puncture."""

    __slots__ = ("proto", "pos", "_hash")

    def __init__(self, proto, pos):
        self.proto = proto
        self.pos = pos
        self._hash = hash((proto.name, pos))

    @property
    def translation(self):
        return self.pos - self.proto.puncture

    def translate(self, v):
        return Tile(self.proto, self.pos + v)

    def cube_anchors(self):
        t = self.translation
        return [Coordinate.integer(c, self.proto.lam) + t for c in self.proto.cells]

    def cubes(self):
        d = self.proto.d
        full = tuple(range(d))
        return [Cell(a, full) for a in self.cube_anchors()]

    def all_cells(self):
        out = set()
        for cube in self.cubes():
            out.update(cube.subcells())
        return out

    def cells(self, j):
        return {c for c in self.all_cells() if c.dim == j}

    def key(self):
        return (self.proto.name, self.pos.sort_key())

    def __eq__(self, other):
        return (isinstance(other, Tile) and self.proto.name == other.proto.name
                and self.pos == other.pos)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Tile({self.proto.name}, {self.pos!r})"


# ---------------------------------------------------------------------------
# patches


class Patch:
    """A finite set of aligned, interior-disjoint tiles."""

    __slots__ = ("tiles", "_cube_map", "_hash")

    def __init__(self, tiles, validate=True):
        self.tiles = tuple(sorted(tiles, key=Tile.key))
        self._cube_map = None
        self._hash = hash(tuple(t._hash for t in self.tiles))
        if validate and self.tiles:
            self._validate()

    def _validate(self):
        lam = self.tiles[0].proto.lam
        d = self.tiles[0].proto.d
        base = self.tiles[0].translation
        for t in self.tiles:
            if t.proto.lam != lam or t.proto.d != d:
                raise GeometryError("patch mixes incompatible prototiles")
            if not (t.translation - base).is_integral():
                raise GeometryError(
                    f"patch tiles misaligned: {t!r} is offset by a non-integer "
                    f"translation from {self.tiles[0]!r}")
        seen = {}
        for i, t in enumerate(self.tiles):
            for a in t.cube_anchors():
                if a in seen:
                    raise GeometryError(
                        f"tiles {self.tiles[seen[a]]!r} and {t!r} share the cube at {a!r}")
                seen[a] = i
        self._cube_map = seen

    @property
    def d(self):
        return self.tiles[0].proto.d if self.tiles else 0

    def __len__(self):
        return len(self.tiles)

    def __iter__(self):
        return iter(self.tiles)

    def __contains__(self, tile):
        return tile in set(self.tiles)

    def cube_map(self):
        """cube anchor -> index of the owning tile."""
        if self._cube_map is None:
            m = {}
            for i, t in enumerate(self.tiles):
                for a in t.cube_anchors():
                    m[a] = i
            self._cube_map = m
        return self._cube_map

    def translate(self, v):
        return Patch([t.translate(v) for t in self.tiles], validate=False)

    def volume(self):
        return len(self.cube_map())

    def support_cubes(self):
        return set(self.cube_map())

    def cells(self, j):
        out = set()
        for t in self.tiles:
            out.update(t.cells(j))
        return out

    def all_cells(self):
        out = set()
        for t in self.tiles:
            out.update(t.all_cells())
        return out

    def restrict(self, indices):
        return Patch([self.tiles[i] for i in sorted(indices)], validate=False)

    def is_subpatch_of(self, other):
        mine = set(self.tiles)
        return mine.issubset(set(other.tiles))

    def union(self, other):
        return Patch(set(self.tiles) | set(other.tiles))

    def key(self):
        return tuple(t.key() for t in self.tiles)

    def __eq__(self, other):
        return isinstance(other, Patch) and self.tiles == other.tiles

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Patch[{len(self.tiles)} tiles]"


def translate_patch(patch, v):
    """Shift every tile, cell and puncture of ``patch`` by ``v``, exactly."""
    return patch.translate(v)


def patch_cells(patch, j):
    """All j-cells of the closed cell complex of ``patch``, deduplicated."""
    if not 0 <= j <= patch.d:
        raise GeometryError(f"cell dimension {j} out of range 0..{patch.d}")
    return patch.cells(j)


def boundary_cells_of_cubes(cubes):
    """(d-1)-cells lying on the boundary of a union of unit cubes.

    A (d-1)-cell is on the boundary iff exactly one of its two adjacent
    cubes belongs to the union.
    """
    anchors = {c.anchor for c in cubes}
    if not cubes:
        return []
    d = cubes[0].anchor.dim
    out = []
    seen = set()
    for cube in cubes:
        for axis in range(d):
            free = tuple(a for a in range(d) if a != axis)
            for side in (0, 1):
                ints = [0] * d
                ints[axis] = side
                face = Cell(cube.anchor.plus_ints(ints), free)
                if face in seen:
                    continue
                seen.add(face)
                nb = [0] * d
                nb[axis] = 1 if side == 1 else -1
                other = cube.anchor.plus_ints(nb)
                if other not in anchors:
                    out.append(face)
    return out


def support_boundary_cells(patch):
    return boundary_cells_of_cubes([Cell(a, tuple(range(patch.d)))
                                    for a in patch.cube_map()])


def distance_to_complement(cells, patch):
    """Max-metric distance from a set of cells to the complement of the patch support."""
    bcells = support_boundary_cells(patch)
    return min(cell_distance(c, b) for c in cells for b in bcells)


def covered_neighborhood(cells, patch):
    """True iff every grid cube meeting one of ``cells`` is a cube of ``patch``.

    This is exactly the condition under which the set of patch tiles
    meeting the cells is the full collar in any tiling extending the patch.
    """
    cubes = patch.cube_map()
    for c in cells:
        for a in c.meeting_cube_anchors():
            if a not in cubes:
                return False
    return True


def tiles_meeting(cells, patch):
    """Indices of patch tiles whose closed support meets the closed cells."""
    cubes = patch.cube_map()
    out = set()
    for c in cells:
        for a in c.meeting_cube_anchors():
            i = cubes.get(a)
            if i is not None:
                out.add(i)
    return out
