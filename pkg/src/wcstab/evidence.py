"""Evidence records, growth/decay detection and verdict assembly."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

__all__ = [
    "STABLE",
    "UNSTABLE",
    "INCONCLUSIVE",
    "DecayEvidence",
    "GrowthEvidence",
    "CriterionResult",
    "Verdict",
    "assemble_verdict",
    "detect_growth",
]

STABLE, UNSTABLE, INCONCLUSIVE = "Stable", "Unstable", "Inconclusive"
PASS, FAIL, UNKNOWN = "pass", "fail", "unknown"

DECAYS, BOUNDED, GROWS, UNDETERMINED = "decays_to_zero", "bounded_nonvanishing", "grows", "undetermined"


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if hasattr(v, "to_dict"):
        return _jsonable(v.to_dict())
    return v


def _slope(x, y) -> float:
    ok = np.isfinite(x) & np.isfinite(y)
    if ok.sum() < 2 or np.ptp(x[ok]) == 0:
        return 0.0
    return float(np.polyfit(x[ok], y[ok], 1)[0])


@dataclass(frozen=True)
class DecayEvidence:
    """Samples ``(t, value)`` kept in log form, with the late-time log-slope."""

    times: np.ndarray
    log_values: np.ndarray
    slope: float
    classification: str

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    @classmethod
    def from_log_curve(cls, times, log_values, slope_tol: float = 1e-3,
                       value_tol: float = 1e-6) -> "DecayEvidence":
        """Classify ``t -> exp(log_values)``.

        ``decays_to_zero`` needs a late log-slope below ``-slope_tol`` and a final
        value below ``value_tol`` times the initial one, or an exact zero (an
        indicator switching off).  ``grows`` needs a slope above ``slope_tol``.
        """
        t = np.asarray(times, dtype=float)
        L = np.asarray(log_values, dtype=float)
        if t.size == 0:
            return cls(t, L, 0.0, UNDETERMINED)
        if L[-1] == -np.inf:
            return cls(t, L, -np.inf, DECAYS)
        late = t >= 0.5 * t[-1]
        slope = _slope(t[late], L[late])
        drop = L[-1] - L[0]
        if slope < -slope_tol and drop < math.log(value_tol):
            cls_ = DECAYS
        elif slope > slope_tol:
            cls_ = GROWS
        elif abs(slope) <= slope_tol and drop >= math.log(value_tol):
            cls_ = BOUNDED
        else:
            cls_ = UNDETERMINED
        return cls(t, L, slope, cls_)

    def to_dict(self, max_samples: int = 0) -> dict:
        out = {"slope": self.slope, "classification": self.classification,
               "initial_log": self.log_values[0] if self.log_values.size else None,
               "final_log": self.log_values[-1] if self.log_values.size else None}
        if max_samples:
            idx = np.unique(np.linspace(0, len(self.times) - 1, min(max_samples, len(self.times))).astype(int))
            out["samples"] = [[self.times[i], self.log_values[i]] for i in idx]
        return _jsonable(out)


@dataclass(frozen=True)
class GrowthEvidence:
    """Outcome of :func:`detect_growth` on a ``log sup`` curve."""

    bounded: Optional[bool]
    growth_exponent: float
    late_log_slope: float
    early_log_slope: float
    sup_log: float
    low_confidence: bool = False

    def to_dict(self) -> dict:
        return _jsonable(self.__dict__)


def detect_growth(times, log_curve, slope_tol: float = 1e-3) -> GrowthEvidence:
    """Decide whether ``t -> log_curve(t)`` is bounded above.

    The slope against ``log t`` is fitted on ``[T/10, T]`` (late) and
    ``[T/100, T/10]`` (early).  Exponential growth makes it increase, polynomial
    growth keeps it constant and a bounded curve that still converges makes it
    shrink.  The curve is declared unbounded when the late slope exceeds
    ``slope_tol`` and is at least half the early one.  The reported growth
    exponent is the ordinary slope on ``[T/2, T]``.
    """
    t = np.asarray(times, dtype=float)
    L = np.asarray(log_curve, dtype=float)
    ok = np.isfinite(L)
    t, L = t[ok], L[ok]
    if t.size == 0 or t.max() <= 0:
        return GrowthEvidence(True, 0.0, 0.0, 0.0, float(L.max()) if L.size else -np.inf, True)
    T = t.max()
    pos = t > 0
    lt = np.log(np.where(pos, t, 1.0))
    late = pos & (t >= T / 10)
    early = pos & (t >= T / 100) & (t <= T / 10)
    s_late = _slope(lt[late], L[late])
    s_early = _slope(lt[early], L[early]) if early.sum() >= 2 else s_late
    exponent = _slope(t[t >= T / 2], L[t >= T / 2])
    unbounded = s_late > slope_tol and s_late >= 0.5 * s_early
    return GrowthEvidence(not unbounded, exponent, s_late, s_early, float(L.max()), t.size < 3)


@dataclass(frozen=True)
class CriterionResult:
    """One criterion: ``status`` is ``pass``, ``fail`` or ``unknown``."""

    id: str
    status: str
    evidence: dict = field(default_factory=dict)
    witness: Any = None
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @property
    def failed(self) -> bool:
        return self.status == FAIL

    def to_dict(self) -> dict:
        return _jsonable({"id": self.id, "status": self.status, "evidence": self.evidence,
                          "witness": self.witness, "note": self.note})


@dataclass(frozen=True)
class Verdict:
    status: str
    criteria: tuple
    witness: Any = None
    metadata: dict = field(default_factory=dict)

    def criterion(self, cid: str) -> Optional[CriterionResult]:
        for c in self.criteria:
            if c.id == cid:
                return c
        return None

    def to_dict(self) -> dict:
        return _jsonable({"status": self.status, "witness": self.witness,
                          "criteria": [c.to_dict() for c in self.criteria], "metadata": self.metadata})


def assemble_verdict(criteria: Sequence[CriterionResult], metadata: Optional[dict] = None) -> Verdict:
    """Stable iff every criterion passed, Unstable iff one failed with a witness."""
    criteria = tuple(criteria)
    failed = [c for c in criteria if c.failed]
    if failed:
        return Verdict(UNSTABLE, criteria, {"criterion": failed[0].id, "witness": failed[0].witness},
                       dict(metadata or {}))
    if criteria and all(c.passed for c in criteria):
        return Verdict(STABLE, criteria, None, dict(metadata or {}))
    return Verdict(INCONCLUSIVE, criteria, None, dict(metadata or {}))
