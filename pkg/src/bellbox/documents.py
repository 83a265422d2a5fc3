"""Reading and writing the package's JSON documents.

Four document kinds share one layout rule: a ``kind`` field first, then
the payload fields in a fixed order.  Floats are emitted in Python's
shortest round-trip representation, so parsing an emitted document
reproduces the value exactly and re-emitting a parsed document
reproduces the bytes exactly.  Complex matrices are written as nested
lists of [re, im] pairs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .polytope import BellFunctional
from .quantum import BellSetup, MeasurementSet, QuantumState
from .scenario import Behavior, Scenario, validate_behavior


def _scenario_fields(sc: Scenario) -> dict:
    return {
        "parties": sc.parties,
        "inputs": list(sc.inputs_per_party),
        "outputs": [list(row) for row in sc.outputs],
    }


def _matrix_pairs(mat: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(mat)]


def document_payload(obj) -> dict:
    """Ordered payload dictionary for a scenario, behavior, functional,
    or setup; ``emit_document`` is its JSON rendering."""
    if isinstance(obj, Scenario):
        return {"kind": "scenario", **_scenario_fields(obj)}
    if isinstance(obj, Behavior):
        return {
            "kind": "behavior",
            **_scenario_fields(obj.scenario),
            "probs": [float(v) for v in obj.probs],
            "tol": float(obj.tol),
        }
    if isinstance(obj, BellFunctional):
        payload = {
            "kind": "functional",
            **_scenario_fields(obj.scenario),
            "coeffs": [float(v) for v in obj.coeffs],
            "local_bound": None if obj.local_bound is None else float(obj.local_bound),
        }
        if obj.note is not None:
            payload["note"] = obj.note
        return payload
    if isinstance(obj, BellSetup):
        return {
            "kind": "setup",
            "dims": [obj.state.dim_a, obj.state.dim_b],
            "state": _matrix_pairs(obj.state.rho),
            "alice": [[_matrix_pairs(m) for m in row] for row in obj.alice.effects],
            "bob": [[_matrix_pairs(m) for m in row] for row in obj.bob.effects],
        }
    raise ValidationError(f"cannot serialize a {type(obj).__name__} as a document")


def emit_document(obj) -> str:
    """Serialize a scenario, behavior, functional, or setup."""
    return json.dumps(document_payload(obj), indent=2) + "\n"


def write_document(obj, path) -> None:
    Path(path).write_text(emit_document(obj))


def _require(payload: dict, field: str, kind: str):
    if field not in payload:
        raise ValidationError(f"{kind} document is missing field {field!r}")
    return payload[field]


def _parse_scenario_fields(payload: dict, kind: str) -> Scenario:
    parties = _require(payload, "parties", kind)
    inputs = _require(payload, "inputs", kind)
    outputs = _require(payload, "outputs", kind)
    try:
        inputs = tuple(int(v) for v in inputs)
        outputs = tuple(tuple(int(v) for v in row) for row in outputs)
    except (TypeError, ValueError):
        raise ValidationError(
            f"{kind} document: inputs and outputs must be integer tables"
        ) from None
    if parties != len(inputs):
        raise ValidationError(
            f"{kind} document: parties field says {parties}, "
            f"inputs lists {len(inputs)} parties"
        )
    return Scenario(inputs_per_party=inputs, outputs=outputs)


def _float_list(raw, what: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in raw], dtype=np.float64)
    except (TypeError, ValueError):
        raise ValidationError(f"{what} must be a flat list of numbers") from None


def _complex_matrix(raw, what: str) -> np.ndarray:
    try:
        return np.array(
            [[complex(float(e[0]), float(e[1])) for e in row] for row in raw]
        )
    except (TypeError, ValueError, IndexError):
        raise ValidationError(f"{what} must be a matrix of [re, im] pairs") from None


def _parse_behavior(payload: dict, tol: float | None) -> Behavior:
    sc = _parse_scenario_fields(payload, "behavior")
    probs = _float_list(_require(payload, "probs", "behavior"), "probs")
    if tol is None:
        tol = float(payload.get("tol", 1e-9))
    return validate_behavior(sc, probs, tol=tol)


def _parse_functional(payload: dict) -> BellFunctional:
    sc = _parse_scenario_fields(payload, "functional")
    coeffs = _float_list(_require(payload, "coeffs", "functional"), "coeffs")
    bound = payload.get("local_bound")
    note = payload.get("note")
    if note is not None and not isinstance(note, str):
        raise ValidationError("functional document: note must be a string")
    return BellFunctional(
        scenario=sc,
        coeffs=coeffs,
        local_bound=None if bound is None else float(bound),
        note=note,
    )


def _parse_setup(payload: dict) -> BellSetup:
    dims = _require(payload, "dims", "setup")
    try:
        dim_a, dim_b = (int(v) for v in dims)
    except (TypeError, ValueError):
        raise ValidationError("setup document: dims must be two integers") from None
    state = QuantumState(
        dim_a=dim_a,
        dim_b=dim_b,
        rho=_complex_matrix(_require(payload, "state", "setup"), "state"),
    )
    sides = []
    for field, dim in (("alice", dim_a), ("bob", dim_b)):
        rows = _require(payload, field, "setup")
        effects = tuple(
            tuple(_complex_matrix(m, f"{field} effect ({x}, {a})") for a, m in enumerate(row))
            for x, row in enumerate(rows)
        )
        sides.append(MeasurementSet(dim=dim, effects=effects))
    return BellSetup(state=state, alice=sides[0], bob=sides[1])


def parse_document_text(text: str, tol: float | None = None):
    """Parse one document; the kind is read from the ``kind`` field.

    ``tol`` overrides a behavior document's own tolerance field, which is
    how the command line loosens validation for noisy measured tables.
    """
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValidationError(
            f"document grammar error at line {err.lineno}, column {err.colno}: {err.msg}"
        ) from None
    if not isinstance(payload, dict):
        raise ValidationError("document must be a JSON object with a 'kind' field")
    kind = payload.get("kind")
    if kind == "scenario":
        return _parse_scenario_fields(payload, "scenario")
    if kind == "behavior":
        return _parse_behavior(payload, tol)
    if kind == "functional":
        return _parse_functional(payload)
    if kind == "setup":
        return _parse_setup(payload)
    raise ValidationError(f"unknown document kind {kind!r}")


def parse_document(path, tol: float | None = None):
    """Parse the document stored at a filesystem path."""
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ValidationError(f"cannot read document {path}: {err.strerror}") from None
    return parse_document_text(text, tol=tol)
