"""Scalar performance indices over run records.

All integrals are trapezoidal on the logged sample grid, so every index is
reproducible from the published CSV alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .odesim import RunRecord


@dataclass(frozen=True)
class OpiWeights:
    """Weights, normalizers and horizon of the composite objective index."""

    w1: float = 0.6
    w2: float = 0.2
    w3: float = 0.6
    N1: float = 10.0
    N2: float = 2.0
    N3: float = 2.7
    tf: float = 6.0

    def __post_init__(self):
        if min(self.N1, self.N2, self.N3) <= 0:
            raise InvalidInputError("normalizers must be positive")
        if not self.tf > 0:
            raise InvalidInputError("horizon must be positive")


@dataclass(frozen=True)
class MetricsReport:
    itae: float
    isu: float
    iau: float
    opi: float


def _clip(record: RunRecord, horizon: float):
    t = record.t
    if t.size < 2:
        raise InvalidInputError("record too short to integrate")
    if horizon > t[-1] + 1e-9:
        raise InvalidInputError(
            f"horizon {horizon:g} s exceeds record end {t[-1]:g} s")
    n = int(np.searchsorted(t, horizon + 1e-12))
    return slice(0, max(n, 2))


def itae(record: RunRecord, horizon: float) -> float:
    """Integral of t*|y - r| up to the horizon."""
    s = _clip(record, horizon)
    t = record.t[s]
    return float(np.trapezoid(t * np.abs(record.y[s] - record.r[s]), t))


def isu(record: RunRecord, horizon: float) -> float:
    """Integral of u^2 up to the horizon."""
    s = _clip(record, horizon)
    return float(np.trapezoid(record.u[s] ** 2, record.t[s]))


def iau(record: RunRecord, horizon: float) -> float:
    """Integral of |u| up to the horizon."""
    s = _clip(record, horizon)
    return float(np.trapezoid(np.abs(record.u[s]), record.t[s]))


def opi(itae_value: float, isu_value: float, iau_value: float, w: OpiWeights) -> float:
    """Weighted normalized sum of the three indices."""
    return w.w1 * itae_value / w.N1 + w.w2 * isu_value / w.N2 + w.w3 * iau_value / w.N3


def compute_metrics(record: RunRecord, w: OpiWeights | None = None,
                    horizon: float | None = None) -> MetricsReport:
    """Evaluate all indices over one record.

    The OPI horizon defaults to w.tf; pass `horizon` to evaluate the three
    raw indices over a different span (e.g. the full run).
    """
    w = w if w is not None else OpiWeights()
    span = horizon if horizon is not None else w.tf
    i1 = itae(record, span)
    i2 = isu(record, span)
    i3 = iau(record, span)
    return MetricsReport(itae=i1, isu=i2, iau=i3, opi=opi(i1, i2, i3, w))
