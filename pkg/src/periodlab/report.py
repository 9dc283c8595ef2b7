"""Structured result records shared by every checker."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

from flint import acb, arb, ctx

from .hp_kernel import workdps

# differences of balls are taken at no less than this many digits, so that
# a report built after a workdps block has closed does not lose accuracy
_REPORT_DPS = 300


def _mag(z) -> float:
    z = acb(z)
    return float(abs(z).mid())


def sup(vals: Sequence) -> float:
    return max((_mag(v) for v in vals), default=0.0)


def residual_norm(lhs: Sequence, rhs: Sequence, scale: float | None = None) -> float:
    """sup|lhs - rhs| relative to the largest quantity involved.

    ``scale`` lets a caller supply the size of the individual terms that were
    combined into lhs, which is the natural yardstick when lhs is itself a
    cancelling combination.
    """
    if len(lhs) != len(rhs):
        raise ValueError("lhs and rhs have different lengths")
    with workdps(max(ctx.dps, _REPORT_DPS)):
        diff = sup([acb(a) - acb(b) for a, b in zip(lhs, rhs)])
    s = max(sup(lhs), sup(rhs), scale or 0.0)
    if s == 0.0:
        return diff
    return diff / s


def apply_perturbation(lhs: Sequence, delta: float, scale: float) -> list:
    """Negative-control offset: every component moves by delta * scale."""
    if not delta:
        return list(lhs)
    with workdps(max(ctx.dps, _REPORT_DPS)):
        shift = arb(delta) * arb(scale if scale > 0 else 1.0)
        return [acb(v) + shift for v in lhs]


def fmt(z, digits: int) -> dict:
    z = acb(z)
    return {"re": z.real.mid().str(digits, radius=False),
            "im": z.imag.mid().str(digits, radius=False)}


def fmt_float(x: float) -> str:
    return f"{x:.6e}"


@dataclass
class IdentityReport:
    identity: str
    inputs: dict
    lhs: list
    rhs: list
    residual: float
    tolerance: float
    passed: bool = field(init=False)
    scale: float = 0.0
    seconds: float = 0.0
    config: dict = field(default_factory=dict)
    note: str = ""

    def __post_init__(self):
        self.passed = bool(self.residual <= self.tolerance)

    @classmethod
    def build(cls, identity: str, inputs: dict, lhs, rhs, tolerance: float, *, scale: float = 0.0,
              perturb: float = 0.0, config: dict | None = None, note: str = "") -> "IdentityReport":
        lhs = list(lhs)
        rhs = list(rhs)
        s = max(sup(lhs), sup(rhs), scale)
        if perturb:
            lhs = apply_perturbation(lhs, perturb, s)
        res = residual_norm(lhs, rhs, scale)
        return cls(identity, inputs, lhs, rhs, res, tolerance, scale=s, config=dict(config or {}), note=note)

    def to_dict(self, digits: int = 20, timings: bool = False) -> dict:
        out: dict[str, Any] = {
            "identity": self.identity,
            "inputs": self.inputs,
            "lhs": [fmt(v, digits) for v in self.lhs],
            "rhs": [fmt(v, digits) for v in self.rhs],
            "residual": fmt_float(self.residual),
            "tolerance": fmt_float(self.tolerance),
            "pass": self.passed,
            "config": self.config,
        }
        if self.note:
            out["note"] = self.note
        if timings:
            out["seconds"] = round(self.seconds, 3)
        return out

    def to_json(self, digits: int = 20, timings: bool = False) -> str:
        return json.dumps(self.to_dict(digits, timings), sort_keys=True)
