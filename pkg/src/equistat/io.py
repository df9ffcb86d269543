"""JSON instance files: one `kind` tag, a payload, and a schema version. Rationals travel as strings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .conv import DiscreteProducer, LogitModel, ObjectiveTable
from .corr import FiniteCorrespondence
from .errors import InputError
from .flow import FlowOutcome, FlowProblem, Network, connection_from_dict
from .markets import HedonicMarket, ItuMarket, MonotoneMap, NtuMarket
from .rat import fmt, fmt_point, point, rat

SCHEMA_VERSION = 1
KINDS = ("correspondence", "producer", "network", "itu", "ntu", "hedonic", "objective_table", "logit")


@dataclass
class InstanceFile:
    """A decoded instance plus loose metadata (grids, names, notes) that travels with it."""

    kind: str
    obj: Any
    meta: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown instance kind {self.kind!r}; expected one of {', '.join(KINDS)}")

    @property
    def grid(self) -> list | None:
        g = self.meta.get("grid")
        return None if g is None else [point(p) for p in g]

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "schema_version": self.schema_version}
        d.update(_ENCODERS[self.kind](self.obj))
        for k, v in self.meta.items():
            d.setdefault(k, _plain(v))
        return d


def _plain(v):
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if hasattr(v, "numerator") and not isinstance(v, (int, bool)):
        return fmt(v)
    return v


# encoders


def _enc_corr(Q: FiniteCorrespondence) -> dict:
    return {"dim": Q.dim, "map": [{"p": fmt_point(p), "qs": [fmt_point(q) for q in Q.image(p)]} for p in Q.domain]}


def _enc_producer(P: DiscreteProducer) -> dict:
    return {"dim": P.dim, "points": [fmt_point(q) for q in P.quantities],
            "cost": [fmt(P.cost[q]) for q in P.quantities]}


def _enc_network(prob: FlowProblem) -> dict:
    net = prob.network
    d = {
        "nodes": list(net.nodes),
        "arcs": [{"from": x, "to": y, "g": net.G((x, y)).to_dict()} for x, y in net.arcs],
        "q": {z: fmt(v) for z, v in prob.q.items()},
    }
    if prob.fixed:
        d["fixed"] = {z: fmt(v) for z, v in prob.fixed.items()}
    return d


def _enc_itu(m: ItuMarket) -> dict:
    pairs = []
    tu = m.is_tu()
    for (x, y) in sorted(m.U):
        if tu:
            pairs.append({"worker": x, "firm": y, "alpha": fmt(m.U[(x, y)].intercept),
                          "gamma": fmt(m.V[(x, y)].intercept)})
        else:
            pairs.append({"worker": x, "firm": y, "U": m.U[(x, y)].to_dict(), "V": m.V[(x, y)].to_dict()})
    return {"workers": {x: fmt(n) for x, n in m.workers.items()}, "firms": {y: fmt(n) for y, n in m.firms.items()},
            "with_singles": m.with_singles, "pairs": pairs}


def _enc_ntu(m: NtuMarket) -> dict:
    return {
        "men": list(m.men),
        "women": list(m.women),
        "alpha": [{"man": x, "woman": y, "value": fmt(m.alpha[(x, y)])} for x in m.men for y in m.women],
        "gamma": [{"man": x, "woman": y, "value": fmt(m.gamma[(x, y)])} for x in m.men for y in m.women],
        "alpha0": {x: fmt(m.alpha0[x]) for x in m.men},
        "gamma0": {y: fmt(m.gamma0[y]) for y in m.women},
    }


def _enc_hedonic(m: HedonicMarket) -> dict:
    return {
        "producers": {x: fmt(n) for x, n in m.producers.items()},
        "consumers": {y: fmt(n) for y, n in m.consumers.items()},
        "qualities": list(m.qualities),
        "pi": [{"producer": x, "quality": w, "map": f.to_dict()} for (x, w), f in sorted(m.pi.items())],
        "s": [{"consumer": y, "quality": w, "map": f.to_dict()} for (y, w), f in sorted(m.s.items())],
    }


def _enc_table(t: ObjectiveTable) -> dict:
    return {"p_grid": [fmt_point(p) for p in t.p_grid], "q_grid": [fmt_point(q) for q in t.q_grid],
            "values": [{"p": fmt_point(p), "q": fmt_point(q), "value": fmt(t.values[p, q])}
                       for p in t.p_grid for q in t.q_grid]}


def _enc_logit(m: LogitModel) -> dict:
    return {"counts": list(m.counts), "slopes": [list(r) for r in m.slopes],
            "intercepts": [list(r) for r in m.intercepts], "normalized": m.normalized, "fixed_price": m.fixed_price}


_ENCODERS = {
    "correspondence": _enc_corr,
    "producer": _enc_producer,
    "network": _enc_network,
    "itu": _enc_itu,
    "ntu": _enc_ntu,
    "hedonic": _enc_hedonic,
    "objective_table": _enc_table,
    "logit": _enc_logit,
}


# decoders


def _dec_corr(d):
    images = {}
    for e in d["map"]:
        p = point(e["p"])
        if p in images:
            raise InputError(f"price {fmt_point(p)} listed twice")
        images[p] = frozenset(point(q) for q in e["qs"])
    dim = int(d.get("dim", len(next(iter(images))) if images else 0))
    return FiniteCorrespondence(dim, images)


def _dec_producer(d):
    return DiscreteProducer.from_lists(d["points"], d["cost"])


def _dec_network(d):
    nodes = tuple(str(z) for z in d["nodes"])
    conn = {}
    for a in d["arcs"]:
        key = (str(a["from"]), str(a["to"]))
        if key in conn:
            raise InputError(f"duplicate arc {key[0]}->{key[1]}")
        conn[key] = connection_from_dict(a["g"])
    net = Network(nodes, tuple(conn), conn)
    q = {str(z): rat(v) for z, v in d.get("q", {}).items()}
    fixed = {str(z): rat(v) for z, v in d.get("fixed", {}).items()}
    return FlowProblem(net, q, fixed)


def _map(d):
    return MonotoneMap.from_dict(d)


def _dec_itu(d):
    workers = {str(k): rat(v) for k, v in d["workers"].items()}
    firms = {str(k): rat(v) for k, v in d["firms"].items()}
    U, V = {}, {}
    for e in d["pairs"]:
        k = (str(e["worker"]), str(e["firm"]))
        if "alpha" in e:
            U[k] = MonotoneMap.affine(1, rat(e["alpha"]))
            V[k] = MonotoneMap.affine(-1, rat(e["gamma"]))
        else:
            U[k], V[k] = _map(e["U"]), _map(e["V"])
    return ItuMarket(workers, firms, U, V, bool(d.get("with_singles", False)))


def _pairs(rows, a, b):
    out = {}
    for e in rows:
        k = (str(e[a]), str(e[b]))
        if k in out:
            raise InputError(f"duplicate entry for {k}")
        out[k] = rat(e["value"])
    return out


def _dec_ntu(d):
    return NtuMarket(tuple(d["men"]), tuple(d["women"]), _pairs(d["alpha"], "man", "woman"),
                     d["alpha0"], _pairs(d["gamma"], "man", "woman"), d["gamma0"])


def _dec_hedonic(d):
    pi = {(str(e["producer"]), str(e["quality"])): _map(e["map"]) for e in d["pi"]}
    s = {(str(e["consumer"]), str(e["quality"])): _map(e["map"]) for e in d["s"]}
    return HedonicMarket(d["producers"], d["consumers"], tuple(d["qualities"]), pi, s)


def _dec_table(d):
    vals = {(point(e["p"]), point(e["q"])): rat(e["value"]) for e in d["values"]}
    return ObjectiveTable(tuple(point(p) for p in d["p_grid"]), tuple(point(q) for q in d["q_grid"]), vals)


def _dec_logit(d):
    return LogitModel(tuple(float(x) for x in d["counts"]),
                      tuple(tuple(float(x) for x in r) for r in d["slopes"]),
                      tuple(tuple(float(x) for x in r) for r in d["intercepts"]),
                      bool(d.get("normalized", False)), float(d.get("fixed_price", 0.0)))


_DECODERS = {
    "correspondence": (_dec_corr, ("dim", "map")),
    "producer": (_dec_producer, ("dim", "points", "cost")),
    "network": (_dec_network, ("nodes", "arcs", "q", "fixed")),
    "itu": (_dec_itu, ("workers", "firms", "with_singles", "pairs")),
    "ntu": (_dec_ntu, ("men", "women", "alpha", "gamma", "alpha0", "gamma0")),
    "hedonic": (_dec_hedonic, ("producers", "consumers", "qualities", "pi", "s")),
    "objective_table": (_dec_table, ("p_grid", "q_grid", "values")),
    "logit": (_dec_logit, ("counts", "slopes", "intercepts", "normalized", "fixed_price")),
}


def from_dict(d: Mapping) -> InstanceFile:
    if not isinstance(d, Mapping):
        raise InputError("an instance file must hold a JSON object")
    kind = d.get("kind")
    if kind not in _DECODERS:
        raise InputError(f"unknown or missing instance kind {kind!r}")
    version = d.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InputError(f"unsupported schema_version {version!r}")
    dec, keys = _DECODERS[kind]
    try:
        obj = dec(d)
    except InputError:
        raise
    except KeyError as exc:
        raise InputError(f"{kind} instance is missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"{kind} instance: {exc}") from exc
    meta = {k: v for k, v in d.items() if k not in keys and k not in ("kind", "schema_version")}
    return InstanceFile(kind, obj, meta, version)


def loads(text: str) -> InstanceFile:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"parse error: {exc}") from exc
    return from_dict(d)


def dumps(inst: InstanceFile) -> str:
    return json.dumps(inst.to_dict(), indent=2)


def load(path) -> InstanceFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    return loads(text)


def save(inst: InstanceFile, path) -> None:
    Path(path).write_text(dumps(inst) + "\n")


def load_outcome(path) -> FlowOutcome:
    try:
        d = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"parse error: {exc}") from exc
    try:
        return FlowOutcome.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed flow outcome: {exc}") from exc
