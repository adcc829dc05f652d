"""Nested families of dyadic cubes stored level by level.

A set tree holds, for each level n up to a materialization depth, the sorted
Morton keys of the selected cubes. Nesting is the structural invariant:
every selected cube's parent is selected, and every selected cube above the
deepest level has at least one selected child, so the levels are exactly the
cube families of a compact set's dyadic skeleton.

Counts beyond the materialized depth can be carried symbolically when the
construction has a closed form (digit IFS, staged constructions); the tree
then answers box_count for levels far past anything stored.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .dyadic import DyadicCode, deinterleave, interleave, squared_distance
from .exact import UnavailableError, ValidationError, pow2


class SymbolicCounts:
    """Closed-form cube counts past the materialized depth."""

    kind = "abstract"

    def count(self, n: int) -> int:
        raise NotImplementedError

    def covers(self, n: int) -> bool:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(data: dict) -> "SymbolicCounts":
        kind = data.get("kind")
        if kind == GeometricCounts.kind:
            return GeometricCounts(data["group"], data["branch"],
                                   list(data["prefix_counts"]))
        if kind == SegmentCounts.kind:
            segs = [Segment(int(s["lo"]), int(s["hi"]), int(s["base"]),
                            int(s["coef"])) for s in data["segments"]]
            return SegmentCounts(segs)
        raise ValidationError(f"unknown symbolic counts kind {kind!r}")


class GeometricCounts(SymbolicCounts):
    """Counts for a digit IFS with group length g: count(a*g + p) =
    branch**a * prefix_counts[p]. Valid at every level."""

    kind = "geometric"

    def __init__(self, group: int, branch: int, prefix_counts: list[int]):
        if group < 1 or branch < 1 or len(prefix_counts) != group:
            raise ValidationError("malformed geometric counts")
        if prefix_counts[0] != 1:
            raise ValidationError("prefix_counts[0] must be 1 (the cube itself)")
        self.group = group
        self.branch = branch
        self.prefix_counts = list(prefix_counts)

    def count(self, n: int) -> int:
        if n < 0:
            raise ValidationError("negative level")
        a, p = divmod(n, self.group)
        return self.branch ** a * self.prefix_counts[p]

    def covers(self, n: int) -> bool:
        return n >= 0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "group": self.group,
                "branch": self.branch, "prefix_counts": self.prefix_counts}


@dataclass(frozen=True)
class Segment:
    """Count rule on levels lo..hi inclusive: base + coef * 2**(n - lo)."""

    lo: int
    hi: int
    base: int
    coef: int

    def count(self, n: int) -> int:
        return self.base + (self.coef << (n - self.lo))


class SegmentCounts(SymbolicCounts):
    """Piecewise exponential count schedule for staged constructions."""

    kind = "segments"

    def __init__(self, segments: Sequence[Segment]):
        segs = sorted(segments, key=lambda s: s.lo)
        prev_hi = None
        for s in segs:
            if s.lo > s.hi:
                raise ValidationError("segment with lo > hi")
            if prev_hi is not None and s.lo != prev_hi + 1:
                raise ValidationError("segments must tile a level range")
            prev_hi = s.hi
        if not segs:
            raise ValidationError("no segments")
        self.segments = segs

    def count(self, n: int) -> int:
        if not self.covers(n):
            raise UnavailableError(f"level {n} outside symbolic range")
        lo = 0
        hi = len(self.segments) - 1
        while lo <= hi:
            mid = (lo + hi) // 2
            s = self.segments[mid]
            if n < s.lo:
                hi = mid - 1
            elif n > s.hi:
                lo = mid + 1
            else:
                return s.count(n)
        raise UnavailableError(f"level {n} outside symbolic range")

    def covers(self, n: int) -> bool:
        return self.segments[0].lo <= n <= self.segments[-1].hi

    @property
    def max_level(self) -> int:
        return self.segments[-1].hi

    def to_dict(self) -> dict:
        return {"kind": self.kind,
                "segments": [{"lo": s.lo, "hi": s.hi, "base": s.base,
                              "coef": s.coef} for s in self.segments]}


@dataclass
class DyadicSetTree:
    """Levelwise sorted Morton keys of a nested cube family."""

    d: int
    max_depth: int
    levels: list[list[int]]
    symbolic: SymbolicCounts | None = None
    meta: dict = field(default_factory=dict)

    # -- construction -----------------------------------------------------

    @classmethod
    def full(cls, d: int, depth: int) -> "DyadicSetTree":
        _check_dims(d, depth)
        levels = [list(range(1 << (d * n))) for n in range(depth + 1)]
        sym = GeometricCounts(1, 1 << d, [1])
        return cls(d, depth, levels, sym, {"kind": "full"})

    @classmethod
    def from_codes(cls, d: int, depth: int, deepest: Iterable[DyadicCode],
                   meta: dict | None = None) -> "DyadicSetTree":
        """Tree generated by a family of deepest-level cubes (their
        ancestors fill in the upper levels)."""
        _check_dims(d, depth)
        keys = sorted({c.key for c in deepest})
        for c in deepest:
            if c.level != depth or c.d != d:
                raise ValidationError("codes must all sit at the tree depth")
        if not keys:
            raise ValidationError("empty cube family")
        levels = _levels_from_deepest(d, depth, keys)
        return cls(d, depth, levels, None, meta or {})

    @classmethod
    def from_points(cls, points: Sequence, d: int, depth: int) -> "DyadicSetTree":
        """Occupied-cube tree of a finite point set (coordinates in (0, 1])."""
        from .dyadic import cube_of_point

        codes = [cube_of_point(p, depth) for p in points]
        if any(c.d != d for c in codes):
            raise ValidationError("point dimension mismatch")
        return cls.from_codes(d, depth, codes, {"kind": "points",
                                                "count": len(codes)})

    @classmethod
    def from_digit_ifs(cls, d: int, group: int, keep: Sequence[int],
                       depth: int) -> "DyadicSetTree":
        """Self-similar set from a digit rule: levels are grouped in blocks
        of `group`; within each block only the Morton digit strings listed in
        `keep` survive. keep entries are integers below 2**(d*group) read as
        `group` Morton digits of d bits each, most significant first.
        """
        _check_dims(d, depth)
        if group < 1:
            raise ValidationError("group must be >= 1")
        top = 1 << (d * group)
        keep_sorted = sorted(set(int(k) for k in keep))
        if not keep_sorted:
            raise ValidationError("keep set is empty")
        if keep_sorted[0] < 0 or keep_sorted[-1] >= top:
            raise ValidationError("keep pattern out of range")

        # allowed[p] maps a p-digit prefix to its sorted continuation digits
        allowed: list[dict[int, list[int]]] = [dict() for _ in range(group)]
        prefixes: list[set[int]] = [set() for _ in range(group + 1)]
        prefixes[0].add(0)
        for pat in keep_sorted:
            for p in range(group):
                pre = pat >> (d * (group - p))
                digit = (pat >> (d * (group - p - 1))) & ((1 << d) - 1)
                allowed[p].setdefault(pre, set()).add(digit)
                prefixes[p + 1].add(pat >> (d * (group - p - 1)))
        for p in range(group):
            allowed[p] = {pre: sorted(ds) for pre, ds in allowed[p].items()}

        levels = [[0]]
        for n in range(depth):
            p = n % group
            shift = d * p
            nxt: list[int] = []
            for key in levels[n]:
                pre = key & ((1 << shift) - 1) if p else 0
                for t in allowed[p][pre]:
                    nxt.append((key << d) | t)
            levels.append(nxt)

        prefix_counts = [len(prefixes[p]) for p in range(group)]
        sym = GeometricCounts(group, len(keep_sorted), prefix_counts)
        meta = {"kind": "ifs", "group": group, "keep": keep_sorted,
                "dimension": math.log2(len(keep_sorted)) / (group * d)}
        return cls(d, depth, levels, sym, meta)

    # -- structure queries ------------------------------------------------

    def validate(self) -> None:
        if self.d < 1:
            raise ValidationError("d must be >= 1")
        if len(self.levels) != self.max_depth + 1:
            raise ValidationError("level list length != max_depth + 1")
        if self.levels[0] != [0]:
            raise ValidationError("root level must be exactly the unit cube")
        for n, keys in enumerate(self.levels):
            top = 1 << (self.d * n)
            prev = -1
            for k in keys:
                if not (0 <= k < top):
                    raise ValidationError(f"key {k} out of range at level {n}")
                if k <= prev:
                    raise ValidationError(f"level {n} keys not strictly sorted")
                prev = k
            if n > 0:
                parents = self.levels[n - 1]
                for k in keys:
                    if not _contains(parents, k >> self.d):
                        raise ValidationError(
                            f"cube {k} at level {n} has unselected parent")
            if n < self.max_depth:
                children = self.levels[n + 1]
                for k in keys:
                    lo = bisect.bisect_left(children, k << self.d)
                    if lo >= len(children) or children[lo] >= (k + 1) << self.d:
                        raise ValidationError(
                            f"cube {k} at level {n} has no selected child")

    def box_count(self, n: int) -> int:
        if n < 0:
            raise ValidationError("negative level")
        if n <= self.max_depth:
            return len(self.levels[n])
        if self.symbolic is not None and self.symbolic.covers(n):
            return self.symbolic.count(n)
        raise UnavailableError(
            f"level {n} beyond materialized depth {self.max_depth} "
            "and no symbolic counts cover it")

    def selected(self, level: int, key: int) -> bool:
        if not (0 <= level <= self.max_depth):
            return False
        return _contains(self.levels[level], key)

    def selected_code(self, code: DyadicCode) -> bool:
        return code.d == self.d and self.selected(code.level, code.key)

    def children_keys(self, level: int, key: int) -> list[int]:
        if level >= self.max_depth:
            return []
        nxt = self.levels[level + 1]
        lo = bisect.bisect_left(nxt, key << self.d)
        hi = bisect.bisect_left(nxt, (key + 1) << self.d)
        return nxt[lo:hi]

    def descendant_count(self, level: int, key: int, n: int) -> int:
        """Number of selected level-n cubes inside the level-`level` cube."""
        if n < level:
            raise ValidationError("target level above the cube")
        if n > self.max_depth:
            raise UnavailableError("target level beyond materialized depth")
        shift = self.d * (n - level)
        arr = self.levels[n]
        lo = bisect.bisect_left(arr, key << shift)
        hi = bisect.bisect_left(arr, (key + 1) << shift)
        return hi - lo

    def descendant_keys(self, level: int, key: int, n: int) -> list[int]:
        if n < level or n > self.max_depth:
            raise ValidationError("target level out of range")
        shift = self.d * (n - level)
        arr = self.levels[n]
        lo = bisect.bisect_left(arr, key << shift)
        hi = bisect.bisect_left(arr, (key + 1) << shift)
        return arr[lo:hi]

    def codes(self, n: int) -> list[DyadicCode]:
        return [DyadicCode(n, deinterleave(k, n, self.d))
                for k in self.levels[n]]

    def representatives(self, n: int) -> list[tuple[Fraction, ...]]:
        side = pow2(-n)
        out = []
        for k in self.levels[n]:
            idx = deinterleave(k, n, self.d)
            out.append(tuple((j + 1) * side for j in idx))
        return out

    # -- derived trees ----------------------------------------------------

    def restrict(self, code: DyadicCode) -> "DyadicSetTree":
        """Skeleton of the intersection with one selected cube: the cube's
        ancestors plus all its selected descendants."""
        if code.d != self.d or code.level > self.max_depth:
            raise ValidationError("cube incompatible with tree")
        if not self.selected(code.level, code.key):
            raise ValidationError("cube is not selected in this tree")
        levels: list[list[int]] = []
        for n in range(self.max_depth + 1):
            if n <= code.level:
                levels.append([code.key >> (self.d * (code.level - n))])
            else:
                levels.append(self.descendant_keys(code.level, code.key, n))
        meta = dict(self.meta)
        meta["restricted_to"] = {"level": code.level, "index": list(code.index)}
        return DyadicSetTree(self.d, self.max_depth, levels, None, meta)

    def union(self, other: "DyadicSetTree") -> "DyadicSetTree":
        if other.d != self.d:
            raise ValidationError("dimension mismatch")
        depth = min(self.max_depth, other.max_depth)
        levels = [_merge_sorted(self.levels[n], other.levels[n])
                  for n in range(depth + 1)]
        return DyadicSetTree(self.d, depth, levels, None,
                             {"kind": "union"})

    def separated_net(self, n: int) -> list[tuple[Fraction, ...]]:
        """Greedy maximal 2^-n-separated subset of the level-n cube
        representatives, scanned in Morton order. Points at distance exactly
        2^-n count as separated, so distinct same-level representatives
        always qualify and the net is maximal among them."""
        if not (0 <= n <= self.max_depth):
            raise ValidationError("level out of range")
        sep_sq = pow2(-2 * n)
        kept: list[tuple[Fraction, ...]] = []
        for rep in self.representatives(n):
            ok = True
            for q in kept:
                if squared_distance(rep, q) < sep_sq:
                    ok = False
                    break
            if ok:
                kept.append(rep)
        return kept

    def leaf_codes(self) -> list[DyadicCode]:
        return self.codes(self.max_depth)


def _check_dims(d: int, depth: int) -> None:
    if d < 1:
        raise ValidationError("d must be >= 1")
    if depth < 0:
        raise ValidationError("depth must be >= 0")
    if d * depth > 62:
        raise ValidationError(
            f"materialized keys need d*depth <= 62, got {d * depth}")


def _contains(sorted_keys: list[int], key: int) -> bool:
    i = bisect.bisect_left(sorted_keys, key)
    return i < len(sorted_keys) and sorted_keys[i] == key


def _merge_sorted(a: list[int], b: list[int]) -> list[int]:
    out: list[int] = []
    i = j = 0
    while i < len(a) and j < len(b):
        x, y = a[i], b[j]
        if x < y:
            out.append(x)
            i += 1
        elif y < x:
            out.append(y)
            j += 1
        else:
            out.append(x)
            i += 1
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return out


def _levels_from_deepest(d: int, depth: int, deepest_keys: list[int]) -> list[list[int]]:
    levels = [deepest_keys]
    cur = deepest_keys
    for _ in range(depth):
        nxt = sorted({k >> d for k in cur})
        levels.append(nxt)
        cur = nxt
    levels.reverse()
    if levels[0] != [0]:
        raise ValidationError("cube family does not hang from the unit cube")
    return levels
