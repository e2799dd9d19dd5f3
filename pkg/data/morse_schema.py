"""
MorseData <-> JSON.

    {"dimension": int, "psi_degree": int, "psi_closed": bool,
     "critical_points": [{"id": str, "index": int}],
     "flow_counts": [{"from": str, "to": str, "n": int}],
     "psi_integrals": [{"from": str, "to": str, "value": float}],
     "de_rham": {"betti": [int], "psi_ranks": [int]},     (optional)
     "psi_tolerance": float}                               (optional)

"from" is the higher-index critical point r, matching d q = sum n(r, q) r.
"""
import logging
import math

from core.errors import SchemaError
from core.morse_core import CriticalPoint, DeRhamData, MorseData

logger = logging.getLogger(__name__)

REQUIRED = ("dimension", "psi_degree", "psi_closed", "critical_points", "flow_counts", "psi_integrals")
OPTIONAL = ("de_rham", "psi_tolerance")


def _int(value, where):
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{where} must be an integer, got {value!r}")
    return value


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SchemaError(f"{where} must be a finite number, got {value!r}")
    return float(value)


def _list(value, where):
    if not isinstance(value, list):
        raise SchemaError(f"{where} must be a list")
    return value


def _record(item, keys, where):
    if not isinstance(item, dict):
        raise SchemaError(f"{where} must be an object")
    missing = [k for k in keys if k not in item]
    extra = [k for k in item if k not in keys]
    if missing or extra:
        raise SchemaError(f"{where}: missing {missing}, unexpected {extra}")
    return item


def parse_morse_data(raw, name=""):
    """
    Validate a decoded JSON document and build MorseData.

    Only the structure is checked here; d o d = 0 and the Leibniz rule are
    checked by ``MorseData.validate``.

    Raises:
        SchemaError: the document does not follow the schema
    """
    if not isinstance(raw, dict):
        raise SchemaError("top level must be an object")
    missing = [k for k in REQUIRED if k not in raw]
    extra = [k for k in raw if k not in REQUIRED + OPTIONAL]
    if missing or extra:
        raise SchemaError(f"missing keys {missing}, unexpected keys {extra}")

    dimension = _int(raw["dimension"], "dimension")
    psi_degree = _int(raw["psi_degree"], "psi_degree")
    if not isinstance(raw["psi_closed"], bool):
        raise SchemaError("psi_closed must be a boolean")

    points = []
    for i, item in enumerate(_list(raw["critical_points"], "critical_points")):
        item = _record(item, ("id", "index"), f"critical_points[{i}]")
        if not isinstance(item["id"], str) or not item["id"]:
            raise SchemaError(f"critical_points[{i}].id must be a non-empty string")
        points.append(CriticalPoint(item["id"], _int(item["index"], f"critical_points[{i}].index")))

    counts = {}
    for i, item in enumerate(_list(raw["flow_counts"], "flow_counts")):
        item = _record(item, ("from", "to", "n"), f"flow_counts[{i}]")
        key = (item["from"], item["to"])
        if key in counts:
            raise SchemaError(f"flow_counts has a duplicate entry for {key}")
        counts[key] = _int(item["n"], f"flow_counts[{i}].n")

    integrals = {}
    for i, item in enumerate(_list(raw["psi_integrals"], "psi_integrals")):
        item = _record(item, ("from", "to", "value"), f"psi_integrals[{i}]")
        key = (item["from"], item["to"])
        if key in integrals:
            raise SchemaError(f"psi_integrals has a duplicate entry for {key}")
        integrals[key] = _number(item["value"], f"psi_integrals[{i}].value")

    de_rham = None
    if raw.get("de_rham") is not None:
        block = _record(raw["de_rham"], ("betti", "psi_ranks"), "de_rham")
        betti = [_int(b, "de_rham.betti") for b in _list(block["betti"], "de_rham.betti")]
        ranks = [_int(r, "de_rham.psi_ranks") for r in _list(block["psi_ranks"], "de_rham.psi_ranks")]
        de_rham = DeRhamData(tuple(betti), tuple(ranks))

    tolerance = None
    if raw.get("psi_tolerance") is not None:
        tolerance = _number(raw["psi_tolerance"], "psi_tolerance")
        if tolerance <= 0:
            raise SchemaError("psi_tolerance must be positive")

    return MorseData(
        dimension=dimension,
        points=tuple(points),
        flow_counts=counts,
        psi_degree=psi_degree,
        psi_integrals=integrals,
        psi_closed=raw["psi_closed"],
        de_rham=de_rham,
        psi_tolerance=tolerance,
        name=name,
    )


def serialize_morse_data(data):
    """JSON-ready dict for ``data``; entries are sorted for stable output."""
    out = {
        "dimension": data.dimension,
        "psi_degree": data.psi_degree,
        "psi_closed": data.psi_closed,
        "critical_points": [{"id": p.id, "index": p.index} for p in data.points],
        "flow_counts": [{"from": r, "to": q, "n": n}
                        for (r, q), n in sorted(data.flow_counts.items())],
        "psi_integrals": [{"from": r, "to": q, "value": v}
                          for (r, q), v in sorted(data.psi_integrals.items())],
    }
    if data.de_rham is not None:
        out["de_rham"] = {"betti": list(data.de_rham.betti), "psi_ranks": list(data.de_rham.psi_ranks)}
    if data.psi_tolerance is not None:
        out["psi_tolerance"] = data.psi_tolerance
    return out
