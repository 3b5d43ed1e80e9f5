"""JSON reading and writing of trees, models and processes.

Model files look like::

    {"tree": {"nodes": [{"id": "0", "parent": null, "prob": 1.0}, ...]},
     "assets": ["cash", "stock"],
     "default": {"cost": {...}, "constraint": {...}},
     "nodes": {"0": {"cost": {...}}, ...},
     "unit_prices": {"values": {...}}}

A cost is one of ``{"pieces": [{"a": [...], "b": 0}], "domain": [...]}``,
``{"terms": [{"pieces": [...]}, ...], "domain": [...]}``,
``{"ladder": {"asks": [[[price, depth], ...], ...], "bids": [...]}}`` (depth
``null`` meaning unlimited) or ``{"linear": [...]}``. A constraint is
``{"rows": [{"g": [...], "h": 1.0}]}`` or ``{"lower": [...], "upper": [...]}``.
Processes are ``{"values": {node_id: number or list}}``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ValidationError
from .market import MarketModel, MaxAffine, PolyhedralConstraint, PolyhedralCost, cost_from_ladder
from .tree import ScenarioTree, build_tree


def _rows(rows, dim) -> PolyhedralConstraint:
    if not rows:
        return PolyhedralConstraint.unconstrained(dim)
    return PolyhedralConstraint(np.array([r["g"] for r in rows], dtype=float),
                                np.array([r["h"] for r in rows], dtype=float), dim)


def cost_from_dict(d: dict, dim: int) -> PolyhedralCost:
    if "ladder" in d:
        lad = d["ladder"]
        to_levels = lambda side: [[(p, q) for p, q in levels] for levels in side]
        return cost_from_ladder(to_levels(lad["asks"]), to_levels(lad["bids"]))
    if "linear" in d:
        return PolyhedralCost.linear(np.asarray(d["linear"], dtype=float))
    domain = _rows(d.get("domain"), dim)
    if "terms" in d:
        terms = [MaxAffine(np.array([pc["a"] for pc in t["pieces"]], dtype=float),
                           np.array([pc.get("b", 0.0) for pc in t["pieces"]], dtype=float))
                 for t in d["terms"]]
    elif "pieces" in d:
        terms = [MaxAffine(np.array([pc["a"] for pc in d["pieces"]], dtype=float),
                           np.array([pc.get("b", 0.0) for pc in d["pieces"]], dtype=float))]
    else:
        raise ValidationError(f"unrecognized cost specification with keys {sorted(d)}")
    return PolyhedralCost(terms, domain, dim)


def constraint_from_dict(d: dict | None, dim: int) -> PolyhedralConstraint:
    if not d:
        return PolyhedralConstraint.unconstrained(dim)
    if "rows" in d:
        return _rows(d["rows"], dim)
    lower = [-np.inf if v is None else v for v in d.get("lower", [None] * dim)]
    upper = [np.inf if v is None else v for v in d.get("upper", [None] * dim)]
    return PolyhedralConstraint.box(lower, upper)


def process_from_dict(tree: ScenarioTree, d: dict | list, dim: int | None = None) -> np.ndarray:
    values = d["values"] if isinstance(d, dict) and "values" in d else d
    return tree.process(values if isinstance(values, dict) else np.asarray(values, dtype=float), dim)


def process_to_dict(tree: ScenarioTree, values) -> dict:
    return {"values": tree.as_mapping(np.asarray(values))}


def model_from_dict(d: dict) -> MarketModel:
    tree = build_tree(d["tree"])
    assets = d.get("assets")
    nodes = d.get("nodes", {})
    default = d.get("default", {})
    unknown = set(nodes) - set(tree.index)
    if unknown:
        raise ValidationError(f"model refers to unknown nodes {sorted(unknown)[:5]}")
    dim = len(assets) if assets else None
    costs, cons = [], []
    for nid in tree.ids:
        spec = {**default, **nodes.get(nid, {})}
        if "cost" not in spec:
            raise ValidationError(f"node {nid!r} has no cost")
        cost = cost_from_dict(spec["cost"], dim if dim is not None else _infer_dim(spec["cost"]))
        dim = cost.dim
        costs.append(cost)
        cons.append(constraint_from_dict(spec.get("constraint"), dim))
    unit = d.get("unit_prices")
    unit = None if unit is None else process_from_dict(tree, unit, dim)
    return MarketModel(tree, costs, cons, assets, unit)


def _infer_dim(cost: dict) -> int:
    if "ladder" in cost:
        return len(cost["ladder"]["asks"])
    if "linear" in cost:
        return len(cost["linear"])
    pieces = cost["terms"][0]["pieces"] if "terms" in cost else cost["pieces"]
    return len(pieces[0]["a"])


def model_to_dict(model: MarketModel) -> dict:
    tree = model.tree
    out: dict[str, Any] = {"tree": tree.to_dict(), "assets": list(model.assets), "nodes": {}}
    for nid, S, D in zip(tree.ids, model.costs, model.constraints):
        entry: dict[str, Any] = {"cost": S.to_dict()}
        if D.h.size:
            entry["constraint"] = D.to_dict()
        out["nodes"][nid] = entry
    if model.unit_prices is not None:
        out["unit_prices"] = process_to_dict(tree, model.unit_prices)
    return out


def read_json(path: str | Path) -> Any:
    with open(path) as fh:
        return json.load(fh)


def write_json(path: str | Path, obj: Any) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_default)
        fh.write("\n")


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def load_model(path: str | Path) -> MarketModel:
    return model_from_dict(read_json(path))


def save_model(path: str | Path, model: MarketModel) -> None:
    write_json(path, model_to_dict(model))
