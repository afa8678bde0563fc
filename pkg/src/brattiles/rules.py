"""Substitution rules: application, iteration, Abelianization, primitivity.

A rule stores prototiles and, per prototile, the list of children
(child id, integer offset at the inflated scale).  Equivariance
``omega(t + x) = omega(t) + lambda x`` then holds by construction, and
support equality ``spt(omega(t)) = lambda spt(t)`` is validated exactly
when the rule is built or loaded.
"""

from __future__ import annotations

import json
from fractions import Fraction
from itertools import product

from .geometry import Coordinate, GeometryError, Patch, Prototile, Tile


class RuleError(ValueError):
    """A substitution rule violates its structural invariants."""


class RuleFileError(RuleError):
    """A rule file failed to parse or validate; carries an anchor string."""

    def __init__(self, message, anchor=None):
        self.anchor = anchor
        super().__init__(message if anchor is None else f"{anchor}: {message}")


def inflate_cube(anchor, lam):
    """Integer anchors of the lam**d unit cubes tiling lam * cube(anchor)."""
    d = len(anchor)
    base = tuple(lam * a for a in anchor)
    return [tuple(b + dlt for b, dlt in zip(base, delta))
            for delta in product(range(lam), repeat=d)]


class SubstitutionRule:
    """An integer-inflation substitution on lattice polycube prototiles."""

    def __init__(self, name, d, lam, prototiles, children, aperiodic_asserted=False):
        if lam < 2:
            raise RuleError(f"inflation factor must be >= 2, got {lam}")
        self.name = name
        self.d = d
        self.lam = lam
        self.prototiles = {}
        for i, p in enumerate(prototiles):
            if p.name in self.prototiles:
                raise RuleError(f"duplicate prototile id {p.name!r}")
            p.index = i
            self.prototiles[p.name] = p
        self.order = tuple(self.prototiles)
        self.children = {}
        for name, kids in children.items():
            if name not in self.prototiles:
                raise RuleError(f"children given for unknown prototile {name!r}")
            self.children[name] = tuple(
                (cid, tuple(int(x) for x in off)) for cid, off in kids)
        self.aperiodic_asserted = aperiodic_asserted
        self._validate()
        self.outer_radius = max(p.outer_radius() for p in self.prototiles.values())
        self.inner_radius = min(p.inner_radius() for p in self.prototiles.values())

    def _validate(self):
        for name, proto in self.prototiles.items():
            if proto.d != self.d:
                raise RuleError(f"prototile {name!r} has dimension {proto.d}, rule has {self.d}")
            kids = self.children.get(name)
            if not kids:
                raise RuleError(f"prototile {name!r} has no children")
            expected = set()
            for c in proto.cells:
                expected.update(inflate_cube(c, self.lam))
            got = {}
            for cid, off in kids:
                child = self.prototiles.get(cid)
                if child is None:
                    raise RuleError(f"child {cid!r} of {name!r} is not a prototile")
                for c in child.cells:
                    cc = tuple(x + o for x, o in zip(c, off))
                    if cc in got:
                        raise RuleError(
                            f"children of {name!r} overlap on cube {cc}")
                    got[cc] = cid
            if set(got) != expected:
                missing = sorted(expected - set(got))[:4]
                extra = sorted(set(got) - expected)[:4]
                raise RuleError(
                    f"support equality fails for {name!r}: "
                    f"missing cubes {missing}, extra cubes {extra}")

    # -- application ---------------------------------------------------

    def prototile_tile(self, name):
        """The reference tile of a prototile, puncture at its stored point."""
        p = self.prototiles[name]
        return Tile(p, p.puncture)

    def substitute_tile(self, tile):
        if tile.proto.name not in self.prototiles:
            raise RuleError(f"unknown prototile id {tile.proto.name!r}")
        t = tile.translation.scaled(1)  # lambda * translation
        out = []
        for cid, off in self.children[tile.proto.name]:
            child = self.prototiles[cid]
            pos = child.puncture + t + Coordinate.integer(off, self.lam)
            out.append(Tile(child, pos))
        return out

    def substitute(self, patch):
        tiles = []
        for t in patch:
            tiles.extend(self.substitute_tile(t))
        return Patch(tiles, validate=False)

    def iterate(self, tile, n):
        if n < 0:
            raise RuleError("iteration count must be >= 0")
        p = Patch([tile], validate=False)
        for _ in range(n):
            p = self.substitute(p)
        return p

    # -- Abelianization -------------------------------------------------

    def abelianization(self):
        """Matrix A with A[i][j] = multiplicity of prototile i in omega(prototile j)."""
        idx = {name: i for i, name in enumerate(self.order)}
        n = len(self.order)
        mat = [[0] * n for _ in range(n)]
        for parent, kids in self.children.items():
            j = idx[parent]
            for cid, _ in kids:
                mat[idx[cid]][j] += 1
        return mat

    def abelianization_and_primitivity(self):
        """(matrix, primitive?, least n with A**n > 0 or None).

        The search is capped at the classical bound (s-1)**2 + 1; beyond
        it no primitive matrix needs a larger exponent.
        """
        mat = self.abelianization()
        s = len(mat)
        bound = (s - 1) ** 2 + 1
        # boolean powers via row bitsets
        rows = [sum(1 << j for j in range(s) if mat[i][j]) for i in range(s)]
        power = rows[:]
        full = (1 << s) - 1
        for n in range(1, bound + 1):
            if n > 1:
                power = _bool_matmul(power, rows, s)
            if all(r == full for r in power):
                return mat, True, n
        return mat, False, None

    def volume_identity_holds(self):
        mat = self.abelianization()
        vols = [self.prototiles[name].volume() for name in self.order]
        lamd = self.lam ** self.d
        for j in range(len(self.order)):
            if sum(mat[i][j] * vols[i] for i in range(len(vols))) != lamd * vols[j]:
                return False
        return True

    def __repr__(self):
        return f"SubstitutionRule({self.name!r}, d={self.d}, lam={self.lam})"


def _bool_matmul(a, b, s):
    out = []
    for i in range(s):
        row = 0
        ai = a[i]
        for k in range(s):
            if ai >> k & 1:
                row |= b[k]
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# built-in rules


def period_doubling():
    """d=1, lambda=2: a -> ab, b -> aa on unit intervals."""
    half = [Fraction(1, 2)]
    protos = [
        Prototile("a", [(0,)], half, 2),
        Prototile("b", [(0,)], half, 2),
    ]
    children = {
        "a": [("a", (0,)), ("b", (1,))],
        "b": [("a", (0,)), ("a", (1,))],
    }
    return SubstitutionRule("pd", 1, 2, protos, children, aperiodic_asserted=True)


_CHAIR_MISSING = {"ne": (1, 1), "nw": (0, 1), "sw": (0, 0), "se": (1, 0)}


def _chair_cells(missing):
    return [c for c in product((0, 1), repeat=2) if c != missing]


def _chair_name(missing):
    for name, m in _CHAIR_MISSING.items():
        if m == missing:
            return name
    raise KeyError(missing)


def chair():
    """d=2, lambda=2: the four L-tromino orientations of the chair rule.

    Orientations are named by the corner cube missing from their 2x2
    bounding block.  Each inflation yields four children: one of the same
    orientation in the corner block diagonal to the missing block, one of
    the same orientation in the centre, and two reflected ones in the two
    side blocks.
    """
    protos = []
    for name, m in _CHAIR_MISSING.items():
        corner = (1 - m[0], 1 - m[1])
        punc = (Fraction(2 * corner[0] + 1, 2), Fraction(2 * corner[1] + 1, 2))
        protos.append(Prototile(name, _chair_cells(m), punc, 2))
    children = {}
    for name, (mx, my) in _CHAIR_MISSING.items():
        children[name] = [
            (name, (2 * (1 - mx), 2 * (1 - my))),
            (name, (1, 1)),
            (_chair_name((1 - mx, my)), (2 * mx, 2 * (1 - my))),
            (_chair_name((mx, 1 - my)), (2 * (1 - mx), 2 * my)),
        ]
    return SubstitutionRule("chair", 2, 2, protos, children, aperiodic_asserted=True)


BUILTIN_RULES = {
    "pd": period_doubling,
    "period-doubling": period_doubling,
    "chair": chair,
}


# ---------------------------------------------------------------------------
# rule files


def _line_of(text, needle):
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None


def rule_from_json(text, name="rule"):
    """Parse and validate a rule document.

    The document is a JSON object with keys ``dimension``, ``lambda``,
    ``prototiles`` (list of {id, label?, cells, puncture}) and
    ``children`` (parent id -> list of {child, offset}).  Punctures may be
    integers or strings like "1/2"; their denominators must be powers of
    lambda.  Errors carry the closest line anchor available.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise RuleFileError(str(e), anchor=f"line {e.lineno}") from None

    def fail(msg, needle=None):
        ln = _line_of(text, needle) if needle else None
        raise RuleFileError(msg, anchor=f"line {ln}" if ln else name)

    if not isinstance(doc, dict):
        fail("top level must be an object")
    for key in ("dimension", "lambda", "prototiles", "children"):
        if key not in doc:
            fail(f"missing key {key!r}")
    d = doc["dimension"]
    lam = doc["lambda"]
    if not isinstance(d, int) or d < 1:
        fail("dimension must be a positive integer", '"dimension"')
    if not isinstance(lam, int) or lam < 2:
        fail("lambda must be an integer >= 2", '"lambda"')

    protos = []
    for entry in doc["prototiles"]:
        pid = entry.get("id")
        if not isinstance(pid, str):
            fail("prototile entry without string id", '"prototiles"')
        try:
            punc = [Fraction(str(v)) for v in entry["puncture"]]
            proto = Prototile(pid, entry["cells"], punc, lam,
                              label=entry.get("label"))
        except (KeyError, TypeError, ValueError, GeometryError) as e:
            fail(f"prototile {pid!r}: {e}", f'"{pid}"')
        protos.append(proto)

    children = {}
    for parent, kids in doc["children"].items():
        lst = []
        for kid in kids:
            try:
                lst.append((kid["child"], tuple(int(x) for x in kid["offset"])))
            except (KeyError, TypeError, ValueError):
                fail(f"malformed child entry under {parent!r}", f'"{parent}"')
        children[parent] = lst

    try:
        rule = SubstitutionRule(name, d, lam, protos, children,
                                aperiodic_asserted=bool(doc.get("aperiodic_asserted")))
    except RuleError as e:
        first = str(e).split(":")[0].strip()
        ln = None
        for token in first.split("'"):
            ln = _line_of(text, f'"{token}"')
            if ln:
                break
        raise RuleFileError(str(e), anchor=f"line {ln}" if ln else name) from None
    return rule


def rule_to_json(rule):
    doc = {
        "dimension": rule.d,
        "lambda": rule.lam,
        "aperiodic_asserted": rule.aperiodic_asserted,
        "prototiles": [
            {
                "id": name,
                "label": p.label,
                "cells": [list(c) for c in p.cells],
                "puncture": [str(f) for f in p.puncture.as_fractions()],
            }
            for name, p in rule.prototiles.items()
        ],
        "children": {
            parent: [{"child": cid, "offset": list(off)} for cid, off in kids]
            for parent, kids in rule.children.items()
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_rule(source):
    """Resolve a built-in rule name or a rule file path."""
    if source in BUILTIN_RULES:
        return BUILTIN_RULES[source]()
    with open(source, "r", encoding="utf-8") as fh:
        text = fh.read()
    return rule_from_json(text, name=source)
