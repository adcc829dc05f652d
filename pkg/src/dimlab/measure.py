"""Measures carried on dyadic set trees, with exact mass bookkeeping.

A measure assigns a rational mass to every selected cube, consistently
(parent mass = sum of selected-child masses, root mass 1, positive mass
exactly on selected cubes). Below the deepest materialized level the measure
is interpreted through a leaf model: "uniform" spreads each leaf's mass as
normalized Lebesgue measure on the leaf cube, "atoms" concentrates it on an
explicit finite point list.

Ball quantities that a finite tree cannot pin down exactly are returned as
two-sided brackets; dyadic quantities (cube masses, correlation sums over
cube pairs) are exact rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .dyadic import DyadicCode, deinterleave, interleave, squared_distance
from .exact import (
    UnsupportedModelError,
    ValidationError,
    to_fraction,
)
from .settree import DyadicSetTree

UNIFORM = "uniform"
ATOMS = "atoms"


@dataclass(frozen=True)
class CorrelationBracket:
    """Exact rational enclosure of a ball-correlation value."""

    lower: Fraction
    upper: Fraction
    radius: Fraction
    cap_level: int

    def __post_init__(self):
        if not (0 <= self.lower <= self.upper <= 1):
            raise ValidationError("correlation bracket out of [0, 1] order")

    @property
    def midpoint(self) -> float:
        return float(self.lower + self.upper) / 2

    @property
    def width(self) -> float:
        return float(self.upper - self.lower)


@dataclass(frozen=True)
class EnergyBracket:
    """Float enclosure of an s-energy; diverged means the true value is
    infinite (or the refinement could not separate it from infinity)."""

    lower: float
    upper: float
    s: Fraction
    diverged: bool = False
    detail: dict = field(default_factory=dict)

    @property
    def midpoint(self) -> float:
        return (self.lower + self.upper) / 2

    @property
    def width(self) -> float:
        return self.upper - self.lower


class DyadicMeasureTree:
    """Mass assignment on a DyadicSetTree."""

    def __init__(self, support: DyadicSetTree, leaf_model: str,
                 mass_rule: str, masses: list[dict[int, Fraction]] | None,
                 atoms: list[tuple[tuple[Fraction, ...], Fraction]] | None = None,
                 meta: dict | None = None):
        if leaf_model not in (UNIFORM, ATOMS):
            raise ValidationError(f"unknown leaf model {leaf_model!r}")
        if mass_rule not in ("explicit", "equal_split"):
            raise ValidationError(f"unknown mass rule {mass_rule!r}")
        if mass_rule == "explicit" and masses is None:
            raise ValidationError("explicit mass rule needs mass tables")
        if leaf_model == ATOMS and atoms is None:
            raise ValidationError("atomic leaf model needs an atom list")
        self.support = support
        self.leaf_model = leaf_model
        self.mass_rule = mass_rule
        self.masses = masses
        self.atoms = atoms
        self.meta = meta or {}

    # -- constructors -------------------------------------------------------

    @classmethod
    def uniform_on_set(cls, tree: DyadicSetTree) -> "DyadicMeasureTree":
        """Equal split among selected children at every cube."""
        return cls(tree, UNIFORM, "equal_split", None, None,
                   {"kind": "uniform_on_set"})

    @classmethod
    def from_masses(cls, tree: DyadicSetTree,
                    masses: list[dict[int, Fraction]],
                    leaf_model: str = UNIFORM,
                    atoms=None, meta=None) -> "DyadicMeasureTree":
        mu = cls(tree, leaf_model, "explicit", masses, atoms, meta)
        mu.validate()
        return mu

    @classmethod
    def atomic(cls, points: Sequence, weights: Sequence, d: int,
               depth: int, meta: dict | None = None) -> "DyadicMeasureTree":
        pts = [tuple(to_fraction(x) for x in p) for p in points]
        ws = [to_fraction(w) for w in weights]
        if len(pts) != len(ws) or not pts:
            raise ValidationError("points/weights length mismatch or empty")
        if any(w <= 0 for w in ws):
            raise ValidationError("atom weights must be positive")
        if sum(ws) != 1:
            raise ValidationError("atom weights must sum to 1")
        for p in pts:
            if len(p) != d or any(not (0 < x <= 1) for x in p):
                raise ValidationError("atom outside the half-open unit cube")
        # merge coincident points
        agg: dict[tuple[Fraction, ...], Fraction] = {}
        for p, w in zip(pts, ws):
            agg[p] = agg.get(p, Fraction(0)) + w
        atom_list = sorted(agg.items())
        tree = DyadicSetTree.from_points([p for p, _ in atom_list], d, depth)
        masses = _aggregate_atoms(atom_list, d, depth)
        return cls(tree, ATOMS, "explicit", masses, atom_list,
                   meta or {"kind": "atomic"})

    @classmethod
    def random_split(cls, tree: DyadicSetTree, rng,
                     max_part: int = 9) -> "DyadicMeasureTree":
        """Random exact-rational splits among selected children; useful for
        seeded property sweeps."""
        masses: list[dict[int, Fraction]] = [dict() for _ in
                                             range(tree.max_depth + 1)]
        masses[0][0] = Fraction(1)
        for level in range(tree.max_depth):
            for key, m in masses[level].items():
                kids = tree.children_keys(level, key)
                parts = [rng.randint(1, max_part) for _ in kids]
                tot = sum(parts)
                for k, p in zip(kids, parts):
                    masses[level + 1][k] = m * Fraction(p, tot)
        return cls(tree, UNIFORM, "explicit", masses, None,
                   {"kind": "random_split"})

    # -- mass queries --------------------------------------------------------

    @property
    def d(self) -> int:
        return self.support.d

    @property
    def max_depth(self) -> int:
        return self.support.max_depth

    def mass(self, level: int, key: int) -> Fraction:
        if not (0 <= level <= self.max_depth):
            raise ValidationError("level out of range")
        if self.mass_rule == "explicit":
            return self.masses[level].get(key, Fraction(0))
        if not self.support.selected(level, key):
            return Fraction(0)
        m = Fraction(1)
        for l in range(level):
            anc = key >> (self.d * (level - l))
            kids = self.support.children_keys(l, anc)
            m /= len(kids)
        return m

    def mass_of_code(self, code: DyadicCode) -> Fraction:
        if code.d != self.d:
            raise ValidationError("dimension mismatch")
        return self.mass(code.level, code.key)

    def level_masses(self, n: int) -> list[tuple[int, Fraction]]:
        """Sorted (key, mass) pairs over the selected level-n cubes."""
        if not (0 <= n <= self.max_depth):
            raise ValidationError("level out of range")
        if self.mass_rule == "explicit":
            return sorted(self.masses[n].items())
        out: list[tuple[int, Fraction]] = []
        stack = [(0, 0, Fraction(1))]
        while stack:
            level, key, m = stack.pop()
            if level == n:
                out.append((key, m))
                continue
            kids = self.support.children_keys(level, key)
            share = m / len(kids)
            for k in reversed(kids):
                stack.append((level + 1, k, share))
        out.sort()
        return out

    def max_cube_mass(self, n: int) -> Fraction:
        return max(m for _, m in self.level_masses(n))

    def frostman_profile(self, levels: Iterable[int]) -> list[dict]:
        """Per-level max cube mass with its decay exponent
        -log2(max mass) / n."""
        from .exact import log2_fraction

        out = []
        for n in sorted(set(levels)):
            m = self.max_cube_mass(n)
            expo = -log2_fraction(m) / n if n > 0 else 0.0
            out.append({"level": n, "max_mass": m, "exponent": expo})
        return out

    # -- correlation ----------------------------------------------------------

    def dyadic_correlation_sum(self, n: int) -> Fraction:
        """Sum of squared level-n cube masses, exactly."""
        return sum((m * m for _, m in self.level_masses(n)), Fraction(0))

    def ball_correlation_bracket(self, r, extra_depth: int = 4) -> CorrelationBracket:
        """Two-sided enclosure of (mu x mu){(x, y): |x - y| <= r}.

        Exact pair sum for atomic measures. For the uniform leaf model the
        bracket classifies cube pairs by exact closure distances, recursing
        on straddling pairs down to a cap level below which cubes are small
        relative to r; leaf cubes refine as uniform splits, which is exactly
        what the leaf model asserts.
        """
        rf = to_fraction(r)
        if rf <= 0:
            raise ValidationError("radius must be positive")
        if self.leaf_model == ATOMS:
            total = Fraction(0)
            r2 = rf * rf
            pts = self.atoms
            for i, (p, w) in enumerate(pts):
                total += w * w
                for j in range(i + 1, len(pts)):
                    q, v = pts[j]
                    if squared_distance(p, q) <= r2:
                        total += 2 * w * v
            return CorrelationBracket(total, total, rf, self.max_depth)

        r2 = rf * rf
        r2n, r2d = r2.numerator, r2.denominator
        dd = self.d
        # smallest level with d * 4^-L <= r^2, so same-cube pairs resolve
        cap = 0
        while dd * r2d > r2n << (2 * cap):
            cap += 1
        cap += max(0, extra_depth)

        lower = Fraction(0)
        upper = Fraction(0)
        # stack holds canonical pairs keyA <= keyB at a common level
        stack = [(0, 0, 0, Fraction(1), Fraction(1))]
        while stack:
            level, ka, kb, ma, mb = stack.pop()
            w = ma * mb if ka == kb else 2 * ma * mb
            if ka == kb:
                gaps, reach = 0, dd
            elif dd == 1:
                delta = kb - ka if kb > ka else ka - kb
                gaps = (delta - 1) * (delta - 1)
                reach = (delta + 1) * (delta + 1)
            else:
                ja = deinterleave(ka, level, dd)
                jb = deinterleave(kb, level, dd)
                gaps = 0
                reach = 0
                for i in range(dd):
                    delta = ja[i] - jb[i]
                    if delta < 0:
                        delta = -delta
                    g = delta - 1 if delta > 0 else 0
                    gaps += g * g
                    reach += (delta + 1) * (delta + 1)
            shift = 2 * level
            # reach * 4^-level <= r^2 ?
            if reach * r2d <= r2n << shift:
                lower += w
                upper += w
                continue
            # gaps * 4^-level > r^2 ?
            if gaps * r2d > r2n << shift:
                continue
            if level >= cap:
                upper += w
                continue
            ca = self._node_children(level, ka, ma)
            cb = ca if ka == kb else self._node_children(level, kb, mb)
            for ia, (cka, cma) in enumerate(ca):
                start = ia if ka == kb else 0
                for ckb, cmb in cb[start:]:
                    stack.append((level + 1, cka, ckb, cma, cmb))
        return CorrelationBracket(lower, upper, rf, cap)

    def _node_children(self, level: int, key: int,
                       mass: Fraction) -> list[tuple[int, Fraction]]:
        if level < self.max_depth:
            kids = self.support.children_keys(level, key)
            if self.mass_rule == "explicit":
                tbl = self.masses[level + 1]
                return [(k, tbl[k]) for k in kids]
            share = mass / len(kids)
            return [(k, share) for k in kids]
        # virtual uniform refinement below the leaves
        share = mass / (1 << self.d)
        base = key << self.d
        return [(base + t, share) for t in range(1 << self.d)]

    # -- ball masses -----------------------------------------------------------

    def cover_mass(self, point, r, level: int) -> Fraction:
        """Total mass of the level-n cubes whose closure meets the closed
        ball B(point, r). An exact upper bound for the ball mass."""
        pt = tuple(to_fraction(x) for x in point)
        if len(pt) != self.d:
            raise ValidationError("point dimension mismatch")
        rf = to_fraction(r)
        if rf < 0:
            raise ValidationError("radius must be >= 0")
        scale = 1 << level
        ranges = []
        for x in pt:
            lo = math.ceil((x - rf) * scale) - 1
            hi = math.floor((x + rf) * scale)
            lo = max(lo, 0)
            hi = min(hi, scale - 1)
            if lo > hi:
                return Fraction(0)
            ranges.append(range(lo, hi + 1))
        total = Fraction(0)
        idx = [rg.start for rg in ranges]
        # odometer over the small product of index ranges
        while True:
            key = interleave(tuple(idx), level)
            total += self.mass(level, key)
            axis = self.d - 1
            while axis >= 0:
                idx[axis] += 1
                if idx[axis] < ranges[axis].stop:
                    break
                idx[axis] = ranges[axis].start
                axis -= 1
            if axis < 0:
                break
        return total

    def ball_mass_atoms(self, point, r) -> Fraction:
        """Exact closed-ball mass for atomic measures."""
        if self.leaf_model != ATOMS:
            raise UnsupportedModelError("exact ball mass needs atoms")
        pt = tuple(to_fraction(x) for x in point)
        r2 = to_fraction(r) ** 2
        return sum((w for p, w in self.atoms
                    if squared_distance(pt, p) <= r2), Fraction(0))

    # -- energy ------------------------------------------------------------------

    def energy_bracket(self, s, refine_depth: int = 8) -> EnergyBracket:
        """Enclosure of the s-energy (double integral of |x-y|^-s).

        Atomic measures come back with diverged=True: any point mass puts
        infinite weight on the diagonal for every s > 0, so the true value
        is known, not estimated. In dimension 1 the uniform leaf model
        admits closed-form cube-pair integrals, so the bracket collapses to
        float rounding width.
        """
        sf = to_fraction(s)
        if sf <= 0:
            raise ValidationError("s must be positive")
        if self.leaf_model == ATOMS:
            return EnergyBracket(math.inf, math.inf, sf, True,
                                 {"reason": "point mass on the diagonal"})
        if sf >= self.d:
            return EnergyBracket(math.inf, math.inf, sf, True,
                                 {"reason": "s >= d with cube mass"})
        if self.d == 1:
            return self._energy_exact_1d(sf)
        return self._energy_dualtree(sf, refine_depth)

    def _energy_exact_1d(self, s: Fraction) -> EnergyBracket:
        L = self.max_depth
        pairs = self.level_masses(L)
        keys = np.array([k for k, _ in pairs], dtype=np.int64)
        ms = np.array([float(m) for _, m in pairs])
        sv = float(s)
        denom = (1.0 - sv) * (2.0 - sv)
        ell = 2.0 ** (-L)
        scale = ell ** (-sv)

        def f_tilde(w):
            return np.power(w, 2.0 - sv)

        total = 0.0
        err = 0.0
        eps = np.finfo(float).eps
        k = len(keys)
        block = max(1, int(4e6) // max(k, 1))
        for lo in range(0, k, block):
            hi = min(k, lo + block)
            a = np.abs(keys[lo:hi, None] - keys[None, :]).astype(float)
            w = ms[lo:hi, None] * ms[None, :]
            j = (f_tilde(a + 1.0) - 2.0 * f_tilde(a)
                 + f_tilde(np.abs(a - 1.0))) / denom
            total += float(np.sum(w * j))
            err += float(np.sum(w * (4.0 * eps * f_tilde(a + 1.0) / denom)))
        value = scale * total
        width = scale * err + 8 * eps * abs(value)
        return EnergyBracket(value - width, value + width, s, False,
                             {"method": "closed_form_1d", "level": L})

    def _energy_dualtree(self, s: Fraction, refine_depth: int) -> EnergyBracket:
        sv = float(s)
        d = self.d
        cap = self.max_depth + max(0, refine_depth)
        vd = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
        sigma = d * vd
        lower = 0.0
        upper = 0.0
        stack = [(0, 0, 0, Fraction(1), Fraction(1))]
        while stack:
            level, ka, kb, ma, mb = stack.pop()
            w = float(ma * mb) if ka == kb else 2.0 * float(ma * mb)
            side = 2.0 ** (-level)
            if ka == kb:
                gaps, reach = 0, d
            else:
                ja = deinterleave(ka, level, d)
                jb = deinterleave(kb, level, d)
                gaps = sum((abs(x - y) - 1) ** 2 for x, y in zip(ja, jb)
                           if abs(x - y) > 0)
                reach = sum((abs(x - y) + 1) ** 2 for x, y in zip(ja, jb))
            min_dist = math.sqrt(gaps) * side
            max_dist = math.sqrt(reach) * side
            if gaps > 0 and level >= cap:
                lower += w * max_dist ** (-sv)
                upper += w * min_dist ** (-sv)
                continue
            if gaps > 0:
                lo_term = w * max_dist ** (-sv)
                hi_term = w * min_dist ** (-sv)
                if hi_term - lo_term <= 1e-12 * max(1.0, lo_term):
                    lower += lo_term
                    upper += hi_term
                    continue
            if level >= cap:
                lower += w * max_dist ** (-sv)
                upper += w * sigma * max_dist ** (d - sv) / ((d - sv)
                                                             * side ** d)
                continue
            ca = self._node_children(level, ka, ma)
            cb = ca if ka == kb else self._node_children(level, kb, mb)
            for ia, (cka, cma) in enumerate(ca):
                start = ia if ka == kb else 0
                for ckb, cmb in cb[start:]:
                    stack.append((level + 1, cka, ckb, cma, cmb))
        return EnergyBracket(lower, upper, s, False,
                             {"method": "dualtree", "cap_level": cap})

    # -- derived measures -----------------------------------------------------------

    def restrict_normalize(self, code: DyadicCode) -> "DyadicMeasureTree":
        total = self.mass_of_code(code)
        if total == 0:
            raise ValidationError("cube carries no mass")
        sub = self.support.restrict(code)
        masses: list[dict[int, Fraction]] = []
        for n in range(self.max_depth + 1):
            tbl: dict[int, Fraction] = {}
            for key in sub.levels[n]:
                if n <= code.level:
                    tbl[key] = Fraction(1)
                else:
                    tbl[key] = self.mass(n, key) / total
            masses.append(tbl)
        atoms = None
        if self.leaf_model == ATOMS:
            atoms = [(p, w / total) for p, w in self.atoms
                     if code.contains_point(p)]
        return DyadicMeasureTree(sub, self.leaf_model, "explicit", masses,
                                 atoms, {"kind": "restricted"})

    # -- validation ----------------------------------------------------------------

    def validate(self) -> None:
        self.support.validate()
        if self.mass_rule == "equal_split":
            return
        if len(self.masses) != self.max_depth + 1:
            raise ValidationError("mass table depth mismatch")
        if self.masses[0].get(0, Fraction(0)) != 1:
            raise ValidationError("root mass must be 1")
        for n in range(self.max_depth + 1):
            tbl = self.masses[n]
            keys = self.support.levels[n]
            if sorted(tbl) != keys:
                raise ValidationError(
                    f"level {n}: mass support differs from selected cubes")
            for k, m in tbl.items():
                if m <= 0:
                    raise ValidationError("non-positive cube mass")
            if n > 0:
                for pk, pm in self.masses[n - 1].items():
                    kid_sum = sum((tbl[k] for k in
                                   self.support.children_keys(n - 1, pk)),
                                  Fraction(0))
                    if kid_sum != pm:
                        raise ValidationError(
                            f"mass not conserved under cube {pk} at level {n-1}")
        if self.leaf_model == ATOMS:
            if sum(w for _, w in self.atoms) != 1:
                raise ValidationError("atom weights must sum to 1")
            agg = _aggregate_atoms(self.atoms, self.d, self.max_depth)
            if agg[self.max_depth] != self.masses[self.max_depth]:
                raise ValidationError("atoms inconsistent with leaf masses")


def _aggregate_atoms(atom_list, d: int, depth: int) -> list[dict[int, Fraction]]:
    from .dyadic import cube_of_point

    masses: list[dict[int, Fraction]] = [dict() for _ in range(depth + 1)]
    for p, w in atom_list:
        code = cube_of_point(p, depth)
        key = code.key
        for n in range(depth, -1, -1):
            masses[n][key >> (d * (depth - n))] = (
                masses[n].get(key >> (d * (depth - n)), Fraction(0)) + w)
    return masses


def anti_frostman_measure(tree: DyadicSetTree,
                          levels: Sequence[int]) -> tuple["DyadicMeasureTree", dict]:
    """Measure that is heavy at every scale in `levels`: atoms on the
    level-k separated nets with per-level budgets proportional to k^-2.

    Every point of the underlying set then has ball mass
    mu(B(x, 2 * 2^-k)) >= c / (k^2 N_k) for each k in levels, where N_k is
    the net size: the net point of x's level-k cube is within 2^-k of x on
    the axis diagonal and carries at least the per-atom budget.
    """
    lv = sorted(set(int(k) for k in levels))
    if not lv or lv[0] < 1:
        raise ValidationError("levels must be positive integers")
    if lv[-1] > tree.max_depth:
        raise ValidationError("level beyond materialized depth")
    c = 1 / sum(Fraction(1, k * k) for k in lv)
    agg: dict[tuple[Fraction, ...], Fraction] = {}
    net_sizes: dict[int, int] = {}
    for k in lv:
        net = tree.separated_net(k)
        net_sizes[k] = len(net)
        share = c / (k * k * len(net))
        for p in net:
            agg[p] = agg.get(p, Fraction(0)) + share
    pts = sorted(agg)
    ws = [agg[p] for p in pts]
    mu = DyadicMeasureTree.atomic(pts, ws, tree.d, tree.max_depth,
                                  {"kind": "anti_frostman", "levels": lv})
    info = {"normalizer": c, "net_sizes": net_sizes,
            "per_level_bound": {k: c / (k * k * net_sizes[k]) for k in lv}}
    return mu, info


def anti_frostman_check(tree: DyadicSetTree,
                        levels: Sequence[int]) -> dict:
    """Exact verification that the anti-frostman measure is heavy at every
    requested scale: mu(B(x, 2 * 2^-k)) >= c / (k^2 N_k) for every
    materialized center x (deepest-level representatives) and every k in
    `levels`. All arithmetic is rational; `ok` is an exact verdict.
    """
    if tree.d > 4:
        # the level-k net point of x's cube sits within sqrt(d) 2^-k <= 2*2^-k
        raise ValidationError("heaviness argument needs d <= 4")
    mu, info = anti_frostman_measure(tree, levels)
    centers = tree.representatives(tree.max_depth)
    rows = []
    ok = True
    for k in sorted(set(int(k) for k in levels)):
        r = Fraction(2, 1 << k)
        bound = info["per_level_bound"][k]
        worst = None
        for x in centers:
            m = mu.ball_mass_atoms(x, r)
            if worst is None or m < worst:
                worst = m
            if m < bound:
                ok = False
        rows.append({"level": k, "radius": r, "bound": bound,
                     "net_size": info["net_sizes"][k],
                     "min_ball_mass": worst, "centers": len(centers),
                     "ok": worst is not None and worst >= bound})
    return {"ok": ok, "rows": rows, "normalizer": info["normalizer"],
            "measure": mu}
