"""Exact JSON/CSV serialization for sets, measures and plans.

Masses, weights and plan parameters round-trip as "p/q" strings; floats
never enter a serialized measure, so load(dump(x)) reproduces x bit for
bit. Report exports (slope fits, curves) are plain CSV/JSON for plotting
and are not meant to round-trip.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, is_dataclass
from fractions import Fraction
from pathlib import Path

from .constructions import AlternatingPlan, SweepPlan
from .exact import (ValidationError, format_rational, parse_rational,
                    snap_to_dyadic, to_fraction)
from .measure import DyadicMeasureTree
from .settree import DyadicSetTree, SymbolicCounts

FORMAT_VERSION = 1

# ints wider than this are stored as tagged hex strings: symbolic count
# schedules reach 2^(hundreds of thousands), past the interpreter's
# decimal-conversion guard
_BIGINT_BITS = 2048


def _encode_bigints(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, int) and value.bit_length() > _BIGINT_BITS:
        return {"$bighex": hex(value)}
    if isinstance(value, dict):
        return {k: _encode_bigints(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode_bigints(v) for v in value]
    return value


def _decode_bigints(value):
    if isinstance(value, dict):
        if set(value) == {"$bighex"}:
            return int(value["$bighex"], 16)
        return {k: _decode_bigints(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_decode_bigints(v) for v in value]
    return value


# ---------------------------------------------------------------------------
# meta payloads: JSON plus tagged rationals


def _encode_meta(value):
    if isinstance(value, Fraction):
        return {"$rational": format_rational(value)}
    if isinstance(value, dict):
        return {str(k): _encode_meta(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode_meta(v) for v in value]
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


def _decode_meta(value):
    if isinstance(value, dict):
        if set(value) == {"$rational"}:
            return parse_rational(value["$rational"])
        return {k: _decode_meta(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_decode_meta(v) for v in value]
    return value


# ---------------------------------------------------------------------------
# sets


def set_to_dict(tree: DyadicSetTree) -> dict:
    return {
        "type": "set",
        "version": FORMAT_VERSION,
        "d": tree.d,
        "max_depth": tree.max_depth,
        "levels": [list(level) for level in tree.levels],
        "symbolic": tree.symbolic.to_dict() if tree.symbolic else None,
        "meta": _encode_meta(tree.meta),
    }


def set_from_dict(data: dict) -> DyadicSetTree:
    if data.get("type") != "set":
        raise ValidationError("not a serialized set")
    symbolic = (SymbolicCounts.from_dict(data["symbolic"])
                if data.get("symbolic") else None)
    tree = DyadicSetTree(int(data["d"]), int(data["max_depth"]),
                         [[int(k) for k in lvl] for lvl in data["levels"]],
                         symbolic, _decode_meta(data.get("meta", {})))
    tree.validate()
    return tree


# ---------------------------------------------------------------------------
# measures


def measure_to_dict(mu: DyadicMeasureTree) -> dict:
    masses = None
    if mu.masses is not None:
        masses = [[[k, format_rational(m)] for k, m in sorted(level.items())]
                  for level in mu.masses]
    atoms = None
    if mu.atoms is not None:
        atoms = [[[format_rational(c) for c in p], format_rational(w)]
                 for p, w in mu.atoms]
    return {
        "type": "measure",
        "version": FORMAT_VERSION,
        "support": set_to_dict(mu.support),
        "leaf_model": mu.leaf_model,
        "mass_rule": mu.mass_rule,
        "masses": masses,
        "atoms": atoms,
        "meta": _encode_meta(mu.meta),
    }


def measure_from_dict(data: dict) -> DyadicMeasureTree:
    if data.get("type") != "measure":
        raise ValidationError("not a serialized measure")
    support = set_from_dict(data["support"])
    masses = None
    if data.get("masses") is not None:
        masses = [{int(k): parse_rational(m) for k, m in level}
                  for level in data["masses"]]
    atoms = None
    if data.get("atoms") is not None:
        atoms = [(tuple(parse_rational(c) for c in p), parse_rational(w))
                 for p, w in data["atoms"]]
    mu = DyadicMeasureTree(support, data["leaf_model"], data["mass_rule"],
                           masses, atoms, _decode_meta(data.get("meta", {})))
    mu.validate()
    return mu


# ---------------------------------------------------------------------------
# construction plans


def plan_to_dict(plan) -> dict:
    if isinstance(plan, AlternatingPlan):
        return {
            "type": "alternating_plan",
            "version": FORMAT_VERSION,
            "dim_low": format_rational(plan.dim_low),
            "dim_high": format_rational(plan.dim_high),
            "slack": [format_rational(e) for e in plan.slack],
            "breakpoints": list(plan.breakpoints),
            "doubled": list(plan.doubled),
            "level_budget": plan.level_budget,
        }
    if isinstance(plan, SweepPlan):
        return {
            "type": "sweep_plan",
            "version": FORMAT_VERSION,
            "dim_low": format_rational(plan.dim_low),
            "dim_high": format_rational(plan.dim_high),
            "n_seq": list(plan.n_seq),
            "big_n_seq": list(plan.big_n_seq),
            "counts_at_stage": list(plan.counts_at_stage),
            "level_budget": plan.level_budget,
        }
    raise ValidationError(f"not a serializable plan: {type(plan).__name__}")


def plan_from_dict(data: dict):
    kind = data.get("type")
    if kind == "alternating_plan":
        return AlternatingPlan(
            parse_rational(data["dim_low"]), parse_rational(data["dim_high"]),
            tuple(parse_rational(e) for e in data["slack"]),
            tuple(int(n) for n in data["breakpoints"]),
            tuple(int(e) for e in data["doubled"]), int(data["level_budget"]))
    if kind == "sweep_plan":
        return SweepPlan(
            parse_rational(data["dim_low"]), parse_rational(data["dim_high"]),
            tuple(int(n) for n in data["n_seq"]),
            tuple(int(n) for n in data["big_n_seq"]),
            tuple(int(c) for c in data["counts_at_stage"]),
            int(data["level_budget"]))
    raise ValidationError("not a serialized plan")


# ---------------------------------------------------------------------------
# files


_LOADERS = {
    "set": set_from_dict,
    "measure": measure_from_dict,
    "alternating_plan": plan_from_dict,
    "sweep_plan": plan_from_dict,
}


def save_json(obj, path) -> None:
    if isinstance(obj, DyadicSetTree):
        data = set_to_dict(obj)
    elif isinstance(obj, DyadicMeasureTree):
        data = measure_to_dict(obj)
    elif isinstance(obj, (AlternatingPlan, SweepPlan)):
        data = plan_to_dict(obj)
    elif isinstance(obj, dict):
        data = obj
    else:
        raise ValidationError(f"cannot serialize {type(obj).__name__}")
    Path(path).write_text(json.dumps(_encode_bigints(data), indent=1) + "\n")


def load_json(path):
    try:
        data = _decode_bigints(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    loader = _LOADERS.get(data.get("type"))
    if loader is None:
        raise ValidationError(f"unknown payload type {data.get('type')!r}")
    return loader(data)


# ---------------------------------------------------------------------------
# CSV


def points_from_csv(path, d: int, depth: int) -> DyadicSetTree:
    """Build a set from a CSV of points, one row per point with d numeric
    columns (floats or p/q). Coordinates snap to the depth-level dyadic
    grid. Blank lines, '#' comments and a non-numeric header row are
    skipped."""
    rows: list[tuple[Fraction, ...]] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row if c.strip()]
            if not cells or cells[0].startswith("#"):
                continue
            try:
                vals = [_parse_coord(c) for c in cells]
            except ValidationError:
                if lineno == 1:
                    continue  # header
                raise
            if len(vals) != d:
                raise ValidationError(
                    f"line {lineno}: expected {d} columns, got {len(vals)}")
            rows.append(tuple(snap_to_dyadic(v, depth) for v in vals))
    if not rows:
        raise ValidationError("no points in CSV")
    return DyadicSetTree.from_points(rows, d, depth)


def _parse_coord(cell: str) -> Fraction:
    if "/" in cell:
        return parse_rational(cell)
    try:
        return to_fraction(float(cell))
    except (ValueError, ValidationError) as exc:
        raise ValidationError(f"bad coordinate {cell!r}") from exc


def curve_to_csv(samples, path, header=("scale", "value", "err")) -> None:
    """Write (scale, value[, err]) rows; accepts mean-square curve samples
    (dicts) or plain tuples."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for s in samples:
            if isinstance(s, dict):
                w.writerow([s.get("R", s.get("scale")), s["value"],
                            s.get("err", "")])
            else:
                w.writerow(list(s))


def report_to_json(report, path=None):
    """Dump any report dataclass as JSON (rationals become p/q strings).
    Returns the JSON string; writes it when a path is given."""
    if is_dataclass(report) and not isinstance(report, type):
        payload = asdict(report)
    elif isinstance(report, dict):
        payload = report
    else:
        raise ValidationError(f"cannot export {type(report).__name__}")

    def default(o):
        if isinstance(o, Fraction):
            if max(o.numerator.bit_length(),
                   o.denominator.bit_length()) > _BIGINT_BITS:
                return {"$bighex": [hex(o.numerator), hex(o.denominator)]}
            return format_rational(o)
        if isinstance(o, complex):
            return {"re": o.real, "im": o.imag}
        return str(o)

    text = json.dumps(_encode_bigints(payload), indent=1, default=default)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
