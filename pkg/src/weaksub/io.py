"""JSON (de)serialization for instances, matroids and reports."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import InstanceValidationError
from .matroids import Matroid, matroid_from_dict
from .set_functions import (
    AOptimalObjective,
    CoverageFunction,
    DesignInstance,
    ModularFunction,
    R2Objective,
    RegressionInstance,
    SetFunction,
    WorstCaseInstance,
    WorstCaseObjective,
)

REPORT_DIGITS = 15


def instance_to_dict(obj) -> dict:
    if isinstance(obj, RegressionInstance):
        return {"type": "regression", "n": obj.n, "C": obj.C.tolist(), "b": obj.b.tolist()}
    if isinstance(obj, DesignInstance):
        return {
            "type": "aopt",
            "p": obj.p,
            "n": obj.n,
            "X": obj.X.tolist(),
            "Lambda": obj.Lambda.tolist(),
            "sigma2": obj.sigma2,
        }
    if isinstance(obj, WorstCaseInstance):
        return {"type": "worstcase", "k": obj.k, "gamma": obj.gamma}
    if isinstance(obj, ModularFunction):
        return {"type": "modular", "n": obj.n, "weights": obj.weights.tolist()}
    if isinstance(obj, CoverageFunction):
        return {"type": "coverage", "n": obj.n, "sets": obj.sets, "weights": obj.weights.tolist()}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def instance_from_dict(d: dict):
    """Rebuild an instance (or, for modular/coverage, the function itself)."""
    kind = d.get("type")
    try:
        if kind == "regression":
            inst = RegressionInstance(np.array(d["C"], dtype=float), np.array(d["b"], dtype=float))
            if "n" in d and int(d["n"]) != inst.n:
                raise InstanceValidationError("regression n does not match C")
            return inst
        if kind == "aopt":
            inst = DesignInstance(np.array(d["X"], dtype=float), np.array(d["Lambda"], dtype=float), d["sigma2"])
            if ("p" in d and int(d["p"]) != inst.p) or ("n" in d and int(d["n"]) != inst.n):
                raise InstanceValidationError("aopt p/n do not match X")
            return inst
        if kind == "worstcase":
            return WorstCaseInstance(int(d["k"]), float(d["gamma"]))
        if kind == "modular":
            return ModularFunction(d["weights"])
        if kind == "coverage":
            return CoverageFunction(d["sets"], d["weights"])
    except KeyError as exc:
        raise InstanceValidationError(f"{kind} instance is missing field {exc}") from None
    raise InstanceValidationError(f"unknown instance type {kind!r}")


def make_oracle(inst) -> SetFunction:
    """Fresh oracle (own memo and counter) for an instance or instance dict."""
    if isinstance(inst, dict):
        inst = instance_from_dict(inst)
    if isinstance(inst, RegressionInstance):
        return R2Objective(inst)
    if isinstance(inst, DesignInstance):
        return AOptimalObjective(inst)
    if isinstance(inst, WorstCaseInstance):
        return WorstCaseObjective(inst)
    if isinstance(inst, ModularFunction):
        return ModularFunction(inst.weights)
    if isinstance(inst, CoverageFunction):
        return CoverageFunction(inst.sets, inst.weights)
    raise TypeError(f"no oracle for {type(inst).__name__}")


def load_instance(path) -> dict:
    with open(path) as fh:
        d = json.load(fh)
    instance_from_dict(d)  # validate eagerly
    return d


def save_instance(inst, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst)) + "\n")


def load_matroid(spec: str) -> Matroid:
    """Matroid from a JSON file path or an inline JSON object."""
    text = spec if spec.lstrip().startswith("{") else Path(spec).read_text()
    return matroid_from_dict(json.loads(text))


def round_floats(obj, digits: int = REPORT_DIGITS):
    """Round every float to ``digits`` significant digits; infinities become the string ``"inf"``."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.{digits}g}")
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist(), digits)
    return obj


def dump_report(records: list[dict], path) -> None:
    Path(path).write_text(json.dumps(round_floats(records), indent=2) + "\n")
