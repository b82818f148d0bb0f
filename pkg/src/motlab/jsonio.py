"""Canonical JSON input/output: schemas, exact numbers, instance hashing.

Every writer goes through :func:`canonical_dumps` (sorted keys, two-space
indent, trailing newline), so identical objects produce byte-identical
files and the sha256 instance hash is stable across runs.  Fractions are
encoded as ``"p/q"`` strings and decoded back exactly; ints and floats pass
through JSON untouched.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .measures import CallQuoteCurve, DiscreteMeasure, Peacock, measure
from .pathspace import (Payoff, StepPath, asian_payoff, basket_call_payoff,
                    lookback_max_payoff, marginal_grid_payoff, step_path)


class JsonIoError(ValueError):
    pass


# ---------- numbers ----------


def enc_num(x: Any) -> Any:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, float)):
        return x
    raise JsonIoError(f"cannot encode number {x!r}")


def dec_num(x: Any) -> Any:
    if isinstance(x, str):
        num, _, den = x.partition("/")
        return Fraction(int(num), int(den) if den else 1)
    if isinstance(x, (int, float)):
        return x
    raise JsonIoError(f"cannot decode number {x!r}")


def _enc_vec(v) -> list:
    return [enc_num(c) for c in v]


def _dec_vec(v) -> tuple:
    return tuple(dec_num(c) for c in v)


# ---------- canonical serialization ----------


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(canonical_dumps(obj), encoding="ascii")


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text(encoding="ascii"))


def instance_hash(obj: Any) -> str:
    return hashlib.sha256(canonical_dumps(obj).encode("ascii")).hexdigest()


# ---------- marginal families ----------


def measure_to_obj(m: DiscreteMeasure) -> dict:
    return {"points": [_enc_vec(p) for p in m.points],
            "weights": [enc_num(w) for w in m.weights]}


def measure_from_obj(obj: dict, dim: int) -> DiscreteMeasure:
    return measure([_dec_vec(p) for p in obj["points"]],
                   [dec_num(w) for w in obj["weights"]], dim=dim)


def peacock_to_obj(p: Peacock) -> dict:
    return {"dim": p.dim, "times": [enc_num(t) for t in p.times],
            "marginals": [measure_to_obj(law) for law in p.laws]}


def peacock_from_obj(obj: dict) -> Peacock:
    dim = int(obj["dim"])
    times = tuple(dec_num(t) for t in obj["times"])
    laws = tuple(measure_from_obj(mo, dim) for mo in obj["marginals"])
    return Peacock(times, laws)


# ---------- paths ----------


def path_to_obj(w: StepPath) -> dict:
    return {"dim": w.dim, "t0_value": _enc_vec(w.x0),
            "jumps": [{"t": enc_num(t), "value": _enc_vec(v)}
                      for t, v in zip(w.jump_times, w.jump_values)],
            "horizon": enc_num(w.horizon)}


def path_from_obj(obj: dict) -> StepPath:
    return step_path(_dec_vec(obj["t0_value"]),
                     [(dec_num(j["t"]), _dec_vec(j["value"]))
                      for j in obj["jumps"]],
                     horizon=dec_num(obj.get("horizon", 1)),
                     dim=int(obj["dim"]))


# ---------- call quotes ----------


def quotes_to_obj(q: CallQuoteCurve) -> dict:
    return {"maturity": enc_num(q.maturity),
            "strikes": [enc_num(k) for k in q.strikes],
            "prices": [enc_num(c) for c in q.prices],
            "spot": enc_num(q.spot)}


def quotes_from_obj(obj: dict) -> CallQuoteCurve:
    return CallQuoteCurve(dec_num(obj["maturity"]),
                          tuple(dec_num(k) for k in obj["strikes"]),
                          tuple(dec_num(c) for c in obj["prices"]),
                          dec_num(obj["spot"]))


# ---------- payoffs ----------


def payoff_to_obj(p: Payoff) -> dict:
    out: dict[str, Any] = {"kind": p.kind,
                           "times": [enc_num(t) for t in p.times]}
    if p.kind == "asian":
        out["coordinate"] = p.params["coordinate"]
    elif p.kind == "lookback_max":
        out["coordinate"] = p.params["coordinate"]
    elif p.kind == "basket_call_at_1":
        out["weights"] = _enc_vec(p.params["weights"])
        out["strike"] = enc_num(p.params["strike"])
    elif p.kind == "marginal_grid":
        out["table"] = [{"values": [_enc_vec(v) for v in key],
                         "payoff": enc_num(val)}
                        for key, val in sorted(p.params["table"].items(),
                                               key=lambda kv: str(kv[0]))]
    else:
        raise JsonIoError(f"payoff kind {p.kind!r} has no schema")
    return out


def payoff_from_obj(obj: dict) -> Payoff:
    kind = obj["kind"]
    times = tuple(dec_num(t) for t in obj["times"])
    if kind == "asian":
        return asian_payoff(times, obj.get("coordinate"))
    if kind == "lookback_max":
        return lookback_max_payoff(times, int(obj.get("coordinate", 0)))
    if kind == "basket_call_at_1":
        return basket_call_payoff(times, _dec_vec(obj["weights"]),
                                  dec_num(obj["strike"]))
    if kind == "marginal_grid":
        table = {tuple(_dec_vec(v) for v in row["values"]): dec_num(row["payoff"])
                 for row in obj["table"]}
        return marginal_grid_payoff(times, table)
    raise JsonIoError(f"unknown payoff kind {kind!r}")


# ---------- results ----------


def result_obj(value: Any, sense: str, status: str, instance: Any,
               plan=None, dual=None, residuals: dict | None = None) -> dict:
    out: dict[str, Any] = {
        "value": enc_num(value) if value is not None else None,
        "sense": sense,
        "status": status,
        "instance_hash": instance_hash(instance),
        "residuals": residuals or {},
    }
    if plan is not None:
        out["plan"] = [{"weight": enc_num(w), "path": path_to_obj(p)}
                       for p, w in zip(plan.paths, plan.weights)]
    if dual is not None:
        out["dual"] = dual
    return out


def certificate_obj(cert) -> dict:
    """Serialize a marginal dual certificate (tables only, no closures)."""
    return {
        "side": cert.side,
        "constant": enc_num(cert.constant),
        "times": [enc_num(t) for t in cert.times],
        "lambdas": [[{"atom": _enc_vec(a), "mult": enc_num(v)}
                     for a, v in sorted(lam.items(), key=lambda kv: str(kv[0]))]
                    for lam in cert.lambdas],
        "strategy": [{"prefix": [_enc_vec(v) for v in key],
                      "holding": _enc_vec(h)}
                     for key, h in sorted(cert.prefix_strategy.items(),
                                          key=lambda kv: str(kv[0]))],
    }
