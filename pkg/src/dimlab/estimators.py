"""Log-log slope fitting and exact dimension predicates.

Two kinds of output live here and must not be conflated. Slope estimators
(box, correlation, Frostman-decay) are floating-point least-squares fits and
always carry their fitting window, because at finite depth a slope is only
evidence about the window it was fit on. Predicates (mass bounds of the form
mu(C) <= 2^-ns or mu(B(x,r)) <= r^s) are decided with exact integer
arithmetic and carry per-scale pass/fail records instead of tolerances.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .dyadic import deinterleave, interleave
from .exact import (ValidationError, cmp_pow2, cmp_rpow, le_rpow,
                    level_for_radius, log2_fraction, to_fraction)
from .measure import DyadicMeasureTree
from .settree import DyadicSetTree


# ---------------------------------------------------------------------------
# least-squares slope fitting


@dataclass(frozen=True)
class SlopeEstimate:
    """A least-squares slope with the window it was fit on.

    variant is one of "liminf-proxy", "limsup-proxy", "full-fit". The proxies
    are the min/max windowed slopes; no convergence claim is attached.
    """

    value: float
    window: tuple[float, float]
    residual: float
    variant: str
    npoints: int


@dataclass(frozen=True)
class SlopeTriple:
    lower: SlopeEstimate
    upper: SlopeEstimate
    full: SlopeEstimate
    window_len: int
    points: tuple[tuple[float, float], ...]


def _ls(xs: list[float], ys: list[float]) -> tuple[float, float]:
    """Least-squares slope and RMS residual."""
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    if sxx == 0.0:
        raise ValidationError("degenerate abscissae in slope fit")
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    icept = my - slope * mx
    rss = math.fsum((y - (slope * x + icept)) ** 2 for x, y in zip(xs, ys))
    return slope, math.sqrt(rss / n)


def default_window_len(npoints: int) -> int:
    """Windows shorter than ~70% of the data read local staircase texture
    as slope; this default keeps single-step artifacts inside +-0.02 on
    period-2 staircases while still reporting a lower/upper spread."""
    return max(4, math.ceil(0.7 * npoints))


def slope_fit(points, window_len: int | None = None) -> SlopeTriple:
    """Full least-squares fit plus min/max slopes over all contiguous
    windows of at least window_len points.

    The full window is itself a candidate, so lower <= full <= upper holds
    structurally. Scales must be strictly monotone; at least 4 points.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 4:
        raise ValidationError("slope fit needs at least 4 points")
    xs = [p[0] for p in pts]
    inc = all(a < b for a, b in zip(xs, xs[1:]))
    dec = all(a > b for a, b in zip(xs, xs[1:]))
    if not (inc or dec):
        raise ValidationError("scales must be strictly monotone")
    if dec:
        pts.reverse()
        xs.reverse()
    ys = [p[1] for p in pts]
    n = len(pts)
    wl = default_window_len(n) if window_len is None else int(window_len)
    if wl < 2:
        raise ValidationError("window_len must be >= 2")
    wl = min(wl, n)

    best_lo = None
    best_hi = None
    full = None
    for length in range(wl, n + 1):
        for start in range(0, n - length + 1):
            wx = xs[start:start + length]
            wy = ys[start:start + length]
            slope, rms = _ls(wx, wy)
            est = (slope, (wx[0], wx[-1]), rms, length)
            if best_lo is None or slope < best_lo[0]:
                best_lo = est
            if best_hi is None or slope > best_hi[0]:
                best_hi = est
            if length == n:
                full = est

    def mk(e, tag):
        return SlopeEstimate(e[0], e[1], e[2], tag, e[3])

    return SlopeTriple(mk(best_lo, "liminf-proxy"), mk(best_hi, "limsup-proxy"),
                       mk(full, "full-fit"), wl, tuple(pts))


# ---------------------------------------------------------------------------
# box and correlation dimension proxies


def box_dims(tree: DyadicSetTree, levels=None,
             window_len: int | None = None) -> SlopeTriple:
    """Slope estimates of log2 box_count(n) against n.

    Levels beyond the materialized depth are fine when the tree carries
    symbolic counts.
    """
    if levels is None:
        levels = range(1, tree.max_depth + 1)
    lv = sorted(set(int(n) for n in levels))
    pts = [(n, math.log2(tree.box_count(n))) for n in lv]
    return slope_fit(pts, window_len)


def correlation_dims(mu: DyadicMeasureTree, levels=None,
                     window_len: int | None = None) -> SlopeTriple:
    """Slope estimates of -log2 sum(mass^2) against n: the dyadic
    correlation-sum reading of correlation dimension."""
    if levels is None:
        levels = range(1, mu.max_depth + 1)
    lv = sorted(set(int(n) for n in levels))
    pts = [(n, -log2_fraction(mu.dyadic_correlation_sum(n))) for n in lv]
    return slope_fit(pts, window_len)


def frostman_slope(mu: DyadicMeasureTree, levels=None,
                   window_len: int | None = None) -> SlopeTriple:
    """Slope estimates of -log2 max cube mass against n: the decay exponent
    of the measure's worst cube, a Frostman-exponent proxy."""
    if levels is None:
        levels = range(1, mu.max_depth + 1)
    lv = sorted(set(int(n) for n in levels))
    pts = [(n, -log2_fraction(mu.max_cube_mass(n))) for n in lv]
    return slope_fit(pts, window_len)


# ---------------------------------------------------------------------------
# exact predicates


@dataclass
class PredicateReport:
    """Per-scale records of an exactly decided mass-bound predicate.

    verdict: "holds-on-window" when every scale passed, "fails" when some
    scale failed with certainty, "inconclusive" otherwise (a bracket or a
    cover bound was too loose to decide).
    """

    predicate: str
    s: Fraction
    records: list[dict] = field(default_factory=list)
    verdict: str = "inconclusive"

    def settle(self) -> "PredicateReport":
        statuses = [r["status"] for r in self.records]
        if any(st == "fail" for st in statuses):
            self.verdict = "fails"
        elif statuses and all(st == "pass" for st in statuses):
            self.verdict = "holds-on-window"
        else:
            self.verdict = "inconclusive"
        return self


def _sup_ball_cover(mu: DyadicMeasureTree, r: Fraction, n: int) -> Fraction:
    """Upper bound on sup_x mu(B(x, r)) via 2^d-cube covers at level n,
    where n = level_for_radius(r) so the ball spans at most two cubes per
    axis. For x in a cube C the ball sits inside one of the 2^d blocks made
    of C and one neighbor per axis; the max block mass over all cubes and
    corner directions dominates the sup."""
    d = mu.d
    masses = dict(mu.level_masses(n))
    top = 1 << n
    best = Fraction(0)
    for key in masses:
        idx = deinterleave(key, n, d)
        for dirs in product((-1, 1), repeat=d):
            total = Fraction(0)
            for offs in product((0, 1), repeat=d):
                j = tuple(idx[i] + dirs[i] * offs[i] for i in range(d))
                if any(not (0 <= ji < top) for ji in j):
                    continue
                k2 = interleave(j, n)
                total += masses.get(k2, Fraction(0))
            if total > best:
                best = total
    return best


def _diam_le_r_level(d: int, r: Fraction) -> int:
    """Least level m with cube diameter sqrt(d) 2^-m <= r."""
    m = 0
    r2 = r * r
    while d > r2 * (1 << (2 * m)):
        m += 1
    return m


def correlation_predicates(mu: DyadicMeasureTree, s, radii,
                           extra_depth: int = 4) -> dict[str, PredicateReport]:
    """The three per-scale membership tests behind the upper correlation
    dimension, decided exactly where possible:

    - "pair-integral": two-point bracket upper bound <= r^s; certified fail
      when the bracket lower bound already exceeds r^s.
    - "ball-sup": sup ball mass <= r^s via the 2^d-cube cover bound;
      certified fail when some materialized cube of diameter <= r carries
      mass > r^s.
    - "cube-max": max level-n cube mass <= 2^-ns at n = level_for_radius(r).
    """
    sf = to_fraction(s)
    rads = [to_fraction(r) for r in radii]
    if any(not (0 < r) for r in rads):
        raise ValidationError("radii must be positive")

    pair = PredicateReport("pair-integral", sf)
    for r in rads:
        br = mu.ball_correlation_bracket(r, extra_depth)
        if le_rpow(br.upper, r, sf):
            st = "pass"
        elif cmp_rpow(br.lower, r, sf) > 0:
            st = "fail"
        else:
            st = "inconclusive"
        pair.records.append({"radius": r, "lower": br.lower,
                             "upper": br.upper, "status": st})
    pair.settle()

    sup = PredicateReport("ball-sup", sf)
    for r in rads:
        n = level_for_radius(r)
        if n > mu.max_depth:
            sup.records.append({"radius": r, "level": n,
                                "status": "inconclusive",
                                "why": "cover level beyond depth"})
            continue
        bound = _sup_ball_cover(mu, r, n)
        if le_rpow(bound, r, sf):
            sup.records.append({"radius": r, "level": n, "cover_bound": bound,
                                "status": "pass"})
            continue
        # cover bound exceeded r^s: try to certify failure
        st = "inconclusive"
        if mu.leaf_model == "atoms":
            worst = max((mu.ball_mass_atoms(pt, r) for pt, _ in mu.atoms),
                        default=Fraction(0))
            if cmp_rpow(worst, r, sf) > 0:
                st = "fail"
        else:
            m = _diam_le_r_level(mu.d, r)
            if m <= mu.max_depth and cmp_rpow(mu.max_cube_mass(m), r, sf) > 0:
                st = "fail"
        sup.records.append({"radius": r, "level": n, "cover_bound": bound,
                            "status": st})
    sup.settle()

    cmax = PredicateReport("cube-max", sf)
    for r in rads:
        n = level_for_radius(r)
        if n > mu.max_depth:
            cmax.records.append({"radius": r, "level": n,
                                 "status": "inconclusive",
                                 "why": "level beyond depth"})
            continue
        mmax = mu.max_cube_mass(n)
        ok = cmp_pow2(mmax, -(n * sf)) <= 0
        cmax.records.append({"radius": r, "level": n, "max_mass": mmax,
                             "status": "pass" if ok else "fail"})
    cmax.settle()

    return {"pair-integral": pair, "ball-sup": sup, "cube-max": cmax}


def packing_predicate(mu: DyadicMeasureTree, s, levels) -> PredicateReport:
    """Finite proxy for "mu(C_n(x)) <= 2^-ns for infinitely many n".

    For every leaf cube (each stands for the support points it contains) the
    levels where its ancestor mass obeys the bound are recorded; the verdict
    is holds-on-window iff every leaf scores at least one such level in each
    half of the window. Exact comparisons throughout.
    """
    sf = to_fraction(s)
    lv = sorted(set(int(n) for n in levels))
    if not lv:
        raise ValidationError("empty level window")
    if lv[0] < 0 or lv[-1] > mu.max_depth:
        raise ValidationError("levels must lie within the measure depth")
    half = len(lv) - len(lv) // 2  # first-half length (ceil)
    first, second = set(lv[:half]), set(lv[half:])

    masses = {n: dict(mu.level_masses(n)) for n in lv}
    d = mu.d
    report = PredicateReport("dyadic-packing", sf)
    failing: list[int] = []
    per_level_pass = {n: 0 for n in lv}
    leaves = mu.support.leaf_codes()
    ok_all = True
    for leaf in leaves:
        hits = []
        for n in lv:
            anc = leaf.key >> (d * (leaf.level - n))
            if cmp_pow2(masses[n].get(anc, Fraction(0)), -(n * sf)) <= 0:
                hits.append(n)
                per_level_pass[n] += 1
        if not (any(h in first for h in hits)
                and any(h in second for h in hits)):
            ok_all = False
            if len(failing) < 16:
                failing.append(leaf.key)
    for n in lv:
        report.records.append({"level": n, "cubes_pass": per_level_pass[n],
                               "cubes_total": len(leaves),
                               "half": "first" if n in first else "second",
                               "status": "pass"})
    report.verdict = "holds-on-window" if ok_all else "fails"
    if failing:
        report.records.append({"failing_leaf_keys": failing,
                               "leaf_level": leaves[0].level,
                               "status": "fail"})
    return report


def packing_threshold(mu: DyadicMeasureTree, levels, grid=None
                      ) -> tuple[Fraction, list[tuple[Fraction, str]]]:
    """Largest grid exponent whose packing predicate holds on the window.
    Returns (threshold, per-exponent verdicts); threshold 0 when none hold."""
    if grid is None:
        grid = [Fraction(k, 20) for k in range(1, 21)]
    tested: list[tuple[Fraction, str]] = []
    best = Fraction(0)
    for sv in sorted((to_fraction(g) for g in grid)):
        verdict = packing_predicate(mu, sv, levels).verdict
        tested.append((sv, verdict))
        if verdict == "holds-on-window":
            best = sv
    return best, tested


# ---------------------------------------------------------------------------
# the inequality chain


@dataclass
class InequalityReport:
    """Ordered summary of the dimension proxies for one set and its
    candidate measures, with the standard orderings checked up to a stated
    tolerance. Slope entries are floats with windows; threshold entries are
    exact grid values."""

    estimates: dict
    per_measure: list[dict]
    checks: list[dict]
    gaps: list[str]
    window: tuple[int, int]
    tol: float
    ok: bool


def inequality_report(tree: DyadicSetTree, measures, levels=None,
                      window_len: int | None = None, tol: float = 0.05,
                      grid=None) -> InequalityReport:
    """Tabulate box, correlation, Frostman-decay and packing proxies on one
    shared level window and assert the dimension orderings:

        hausdorff_proxy <= lower_box + tol
        lower_box <= upper_box
        corr_lower <= corr_upper
        corr_upper <= packing_threshold + tol

    The Hausdorff proxy is the best (largest) Frostman decay slope over the
    supplied measures; correlation and packing proxies likewise take the
    best witness. Missing inputs produce explicit gaps, not failures.
    """
    if levels is None:
        levels = range(1, tree.max_depth + 1)
    lv = sorted(set(int(n) for n in levels))
    if len(lv) < 4:
        raise ValidationError("need at least 4 levels")

    box = box_dims(tree, lv, window_len)
    estimates = {"lower_box": box.lower.value, "upper_box": box.upper.value,
                 "box_full": box.full.value}

    gaps: list[str] = []
    per_measure: list[dict] = []
    corr_lo: list[float] = []
    corr_hi: list[float] = []
    hdd: list[float] = []
    pack: list[Fraction] = []
    for i, mu in enumerate(measures):
        mlv = [n for n in lv if n <= mu.max_depth]
        row: dict = {"measure": i, "levels": (mlv[0], mlv[-1]) if mlv else None}
        if len(mlv) < 4:
            row["gap"] = "fewer than 4 usable levels"
            gaps.append(f"measure {i}: fewer than 4 usable levels")
            per_measure.append(row)
            continue
        corr = correlation_dims(mu, mlv, window_len)
        fro = frostman_slope(mu, mlv, window_len)
        thr, _ = packing_threshold(mu, mlv, grid)
        row.update(corr_lower=corr.lower.value, corr_upper=corr.upper.value,
                   frostman=fro.lower.value, packing_threshold=thr)
        per_measure.append(row)
        corr_lo.append(corr.lower.value)
        corr_hi.append(corr.upper.value)
        hdd.append(fro.lower.value)
        pack.append(thr)

    if not measures:
        gaps.append("no measures supplied: correlation, Frostman and "
                    "packing rows missing")

    checks: list[dict] = []

    def add_check(name, lhs, rhs):
        checks.append({"name": name, "lhs": float(lhs), "rhs": float(rhs),
                       "ok": float(lhs) <= float(rhs)})

    add_check("lower_box <= upper_box", box.lower.value, box.upper.value)
    if hdd:
        estimates["hausdorff_proxy"] = max(hdd)
        add_check("hausdorff_proxy <= lower_box + tol", max(hdd),
                  box.lower.value + tol)
        # the minkowski-type lower dimension sits between these two
        estimates["lower_box_bracket"] = (max(hdd), box.lower.value)
    if corr_lo:
        estimates["corr_lower"] = max(corr_lo)
        estimates["corr_upper"] = max(corr_hi)
        add_check("corr_lower <= corr_upper", max(corr_lo), max(corr_hi))
    if pack:
        estimates["packing_threshold"] = max(pack)
        if corr_hi:
            add_check("corr_upper <= packing_threshold + tol", max(corr_hi),
                      float(max(pack)) + tol)

    ok = all(c["ok"] for c in checks)
    return InequalityReport(estimates, per_measure, checks, gaps,
                            (lv[0], lv[-1]), tol, ok)


# ---------------------------------------------------------------------------
# box-count vs correlation-sum sandwich


def correlation_sandwich(tree: DyadicSetTree, levels, n_random: int = 0,
                         seed: int = 0) -> dict:
    """Exact check that box counts floor the dyadic correlation sums.

    For any probability measure carried by the tree, Cauchy-Schwarz over
    the level-n cubes gives sum(m^2) >= 1/#C_n, with equality exactly at
    equal masses. Verified with rational arithmetic for the uniform-split
    measure, `n_random` seeded random-split measures, and the level-n net
    atomic measure, which must achieve equality.
    """
    lv = sorted(set(int(n) for n in levels))
    if not lv or lv[0] < 0 or lv[-1] > tree.max_depth:
        raise ValidationError("levels outside the materialized range")
    named = [("uniform", DyadicMeasureTree.uniform_on_set(tree))]
    rng = random.Random(seed)
    for i in range(n_random):
        named.append((f"random-{i}", DyadicMeasureTree.random_split(tree, rng)))
    rows = []
    ok = True
    for n in lv:
        floor = Fraction(1, tree.box_count(n))
        for name, mu in named:
            c = mu.dyadic_correlation_sum(n)
            good = c >= floor
            ok = ok and good
            rows.append({"level": n, "measure": name, "corr_sum": c,
                         "floor": floor, "ok": good})
        net = tree.separated_net(n)
        w = Fraction(1, len(net))
        nu = DyadicMeasureTree.atomic(net, [w] * len(net), tree.d, n)
        c = nu.dyadic_correlation_sum(n)
        good = c == floor
        ok = ok and good
        rows.append({"level": n, "measure": "net", "corr_sum": c,
                     "floor": floor, "ok": good, "equality": True})
    return {"ok": ok, "rows": rows, "levels": lv,
            "random_measures": n_random, "seed": seed}
