"""Integral performance indices and the weighted J aggregate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import WindowOutOfRange, ZeroBaselineIndex

RAW_NAMES = ("IAE1", "IAE2", "ITAE1@w1", "ITAE2@w2", "ITAE2@w3", "ITAE2@w4", "IAVU1", "IAVU2")
RATIO_NAMES = ("RIAE1", "RIAE2", "RITAE1@w1", "RITAE2@w2", "RITAE2@w3", "RITAE2@w4",
               "RIAVU1", "RIAVU2")
N_WINDOWS = 4


def iae(e, ts: float) -> float:
    a = np.abs(np.asarray(e, dtype=float))
    if a.size < 2:
        return 0.0
    return float(np.trapezoid(a, dx=ts))


def itae(e, ts: float, window, t0: float = 0.0) -> float:
    """Time-weighted absolute error over ``[t_c, t_c + t_s]``, weight ``t - t_c``."""
    a = np.abs(np.asarray(e, dtype=float))
    t = t0 + np.arange(a.size) * ts
    t_c, t_s = map(float, window)
    t_end = t_c + t_s
    slack = 1e-9 * max(1.0, abs(t[-1]))
    if t_s <= 0 or t_c < t[0] - slack or t_end > t[-1] + slack:
        raise WindowOutOfRange(
            f"window [{t_c}, {t_end}] outside signal span [{t[0]}, {t[-1]}]")
    t_end = min(t_end, t[-1])
    inner = (t > t_c + slack) & (t < t_end - slack)
    tw = np.concatenate(([t_c], t[inner], [t_end]))
    aw = np.concatenate(([np.interp(t_c, t, a)], a[inner], [np.interp(t_end, t, a)]))
    return float(np.trapezoid((tw - t_c) * aw, tw))


def iavu(u) -> float:
    """Total variation of the control signal; sampling period cancels."""
    u = np.asarray(u, dtype=float)
    if u.size < 2:
        raise ValueError("need at least two control samples")
    return float(np.sum(np.abs(np.diff(u))))


@dataclass(frozen=True)
class JWeights:
    w: tuple = (1.0,) * 8

    def __post_init__(self):
        w = tuple(float(x) for x in self.w)
        if len(w) != 8:
            raise ValueError("J needs exactly eight weights")
        if any(x < 0 or not math.isfinite(x) for x in w):
            raise ValueError("weights must be finite and non-negative")
        if math.fsum(w) <= 0:
            raise ValueError("weights must not all be zero")
        object.__setattr__(self, "w", w)

    @classmethod
    def from_obj(cls, obj) -> "JWeights":
        if isinstance(obj, dict):
            obj = obj.get("weights", obj.get("w"))
        return cls(tuple(obj))


@dataclass(frozen=True)
class RawIndices:
    iae: tuple
    itae: tuple
    iavu: tuple

    def vector(self) -> np.ndarray:
        """Eight raw values in J ordering (requires four windows)."""
        if len(self.itae) != N_WINDOWS:
            raise ValueError(f"J ordering needs {N_WINDOWS} transient windows, "
                             f"got {len(self.itae)}")
        return np.array([*self.iae, *self.itae, *self.iavu], dtype=float)

    def as_dict(self) -> dict:
        d = {f"IAE{i + 1}": v for i, v in enumerate(self.iae)}
        for w, v in enumerate(self.itae):
            d[f"ITAE{1 if w == 0 else 2}@w{w + 1}"] = v
        d.update({f"IAVU{i + 1}": v for i, v in enumerate(self.iavu)})
        return d


@dataclass(frozen=True)
class MetricsReport:
    raw: RawIndices
    baseline: RawIndices | None = None
    ratios: tuple | None = None
    J: float | None = None
    weights: JWeights = field(default_factory=JWeights)

    def ratio_dict(self) -> dict:
        return dict(zip(RATIO_NAMES, self.ratios)) if self.ratios is not None else {}

    def to_dict(self) -> dict:
        d = {"raw": self.raw.as_dict()}
        if self.baseline is not None:
            d["baseline"] = self.baseline.as_dict()
        if self.ratios is not None:
            d["ratios"] = self.ratio_dict()
            d["J"] = self.J
            d["weights"] = list(self.weights.w)
        return d


def raw_indices(sim, windows) -> RawIndices:
    """Score a SimResult: window 1 on loop 1's error, later windows on loop 2's."""
    ts = sim.ts
    e = sim.e
    t0 = float(sim.time[0])
    iaes = tuple(iae(e[i], ts) for i in range(2))
    itaes = tuple(itae(e[0 if w == 0 else 1], ts, win, t0) for w, win in enumerate(windows))
    iavus = tuple(iavu(sim.u[i]) for i in range(2))
    return RawIndices(iaes, itaes, iavus)


def aggregate_j(candidate: RawIndices, baseline: RawIndices,
                weights: JWeights | None = None) -> MetricsReport:
    weights = weights or JWeights()
    c = candidate.vector()
    b = baseline.vector()
    for name, v in zip(RAW_NAMES, b):
        if not v > 0:
            raise ZeroBaselineIndex(name)
    ratios = tuple(float(x) for x in c / b)
    if all(math.isfinite(r) for r in ratios):
        # fsum on both sides keeps J(c, c) == 1 exact
        J = math.fsum(w * r for w, r in zip(weights.w, ratios)) / math.fsum(weights.w)
    else:
        J = math.inf
    return MetricsReport(candidate, baseline, ratios, J, weights)


def j_from_ratios(ratios, weights: JWeights | None = None) -> float:
    weights = weights or JWeights()
    ratios = [float(r) for r in ratios]
    if len(ratios) != 8:
        raise ValueError("need eight ratios")
    return math.fsum(w * r for w, r in zip(weights.w, ratios)) / math.fsum(weights.w)


def score(candidate_sim, baseline_sim, windows, weights=None) -> MetricsReport:
    return aggregate_j(raw_indices(candidate_sim, windows),
                       raw_indices(baseline_sim, windows), weights)
