"""Second-order real-pole model fitting from step responses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import DegenerateFit, NotSettled
from .lti import ContinuousTF, Polynomial

TAU_FLOOR = 1e-9
SETTLE_TAIL = 0.10
SETTLE_BAND = 0.05
RANGE_FLOOR = 1e-12


@dataclass(frozen=True)
class SecondOrderModel:
    """kp / ((tau1 s + 1)(tau2 s + 1)); stored with tau1 >= tau2 > 0."""

    kp: float
    tau1: float
    tau2: float

    def __post_init__(self):
        if not (self.tau1 > 0 and self.tau2 > 0):
            raise ValueError("time constants must be positive")
        if self.tau2 > self.tau1:
            t1, t2 = self.tau2, self.tau1
            object.__setattr__(self, "tau1", float(t1))
            object.__setattr__(self, "tau2", float(t2))


@dataclass(frozen=True)
class FitReport:
    model: SecondOrderModel
    fit_percent: float
    residual_norm: float
    tau2_identifiable: bool = True


def sopm_step(model: SecondOrderModel, t):
    """Closed-form unit-step response scaled by kp; accepts scalars or arrays."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    t1, t2 = model.tau1, model.tau2
    # t/tau overflows for vanishing time constants; exp(-inf) = 0 is the right limit
    with np.errstate(over="ignore", divide="ignore"):
        if abs(t1 - t2) < 1e-9 * t1:
            y = 1.0 - (1.0 + t / t1) * np.exp(-t / t1)
        else:
            y = 1.0 - (t1 * np.exp(-t / t1) - t2 * np.exp(-t / t2)) / (t1 - t2)
    y = model.kp * y
    return float(y) if y.ndim == 0 else y


def sopm_to_tf(model: SecondOrderModel) -> ContinuousTF:
    den = Polynomial((1.0, model.tau1 + model.tau2, model.tau1 * model.tau2))
    return ContinuousTF(Polynomial((model.kp,)), den)


def _check_response(y: np.ndarray):
    if y.size < 10:
        raise ValueError("need at least 10 samples to fit")
    span = float(np.max(y) - np.min(y))
    if span < RANGE_FLOOR:
        raise DegenerateFit(f"response range {span:.3g} is below the noise floor")
    tail = y[-max(1, int(np.ceil(SETTLE_TAIL * y.size))):]
    if np.max(tail) - np.min(tail) >= SETTLE_BAND * span:
        raise NotSettled(
            f"last {SETTLE_TAIL:.0%} of samples vary by "
            f"{np.ptp(tail):.3g} (>= {SETTLE_BAND:.0%} of range {span:.3g})"
        )


def _rise_time_seed(y, t, final, ts):
    # time to reach 63% of the final value, floored at one sample
    if final == 0:
        return ts
    frac = y / final
    hit = np.nonzero(frac >= 0.632)[0]
    return max(float(t[hit[0]]) if hit.size else float(t[-1]), ts)


def residual_sumsq(model: SecondOrderModel, response, ts, step_amplitude=1.0) -> float:
    y = np.asarray(response, dtype=float)
    t = np.arange(y.size) * ts
    r = y - step_amplitude * sopm_step(model, t)
    return float(r @ r)


def fit_sopm(response, ts: float, step_amplitude: float = 1.0) -> FitReport:
    """Least-squares SOPM fit: Nelder-Mead over log time constants, kp solved exactly."""
    y = np.asarray(response, dtype=float)
    if step_amplitude == 0:
        raise ValueError("step_amplitude must be nonzero")
    _check_response(y)
    t = np.arange(y.size) * ts
    final = float(np.mean(y[-max(1, y.size // 10):]))

    # kp enters linearly, so for fixed time constants it has a closed-form
    # least-squares value; the search runs over (log tau1, log tau2) only.
    lo, hi = np.log(TAU_FLOOR), np.log(100.0 * max(t[-1], ts))

    def project(x):
        lt = np.clip(x, lo, hi)
        shape = step_amplitude * sopm_step(SecondOrderModel(1.0, *np.exp(lt)), t)
        ss = float(shape @ shape)
        kp = float(shape @ y) / ss if ss > 0 else 0.0
        r = y - kp * shape
        return float(r @ r), kp

    def cost(x):
        return project(x)[0]

    tau_seed = _rise_time_seed(y, t, final, ts)
    seeds = [(np.log(tau_seed), np.log(ts / 10))]
    # extra starts across the plausible tau1 range; the cost surface is multimodal in log-tau
    for tau in np.geomspace(ts / 100, 10 * t[-1], 9):
        seeds.append((np.log(tau), np.log(min(tau, ts) / 10)))

    scale = float(y @ y)
    opts = dict(xatol=1e-9, fatol=1e-15 * scale, maxiter=4000, maxfev=8000)
    best = None
    for sd in seeds:
        res = minimize(cost, np.array(sd, dtype=float), method="Nelder-Mead", options=opts)
        if best is None or res.fun < best.fun:
            best = res
    # polish from the best point with a fresh simplex
    res = minimize(cost, best.x, method="Nelder-Mead", options=opts)
    if res.fun <= best.fun:
        best = res

    lt1, lt2 = np.clip(best.x, lo, hi)
    kp = project(best.x)[1]
    t1, t2 = sorted((float(np.exp(lt1)), float(np.exp(lt2))), reverse=True)
    t2 = min(max(t2, TAU_FLOOR), t1)
    model = SecondOrderModel(float(kp), t1, t2)
    r = y - step_amplitude * sopm_step(model, t)
    rnorm = float(np.linalg.norm(r))
    fit = 100.0 * (1.0 - rnorm / float(np.linalg.norm(y - y.mean())))
    return FitReport(model, fit, rnorm, tau2_identifiable=model.tau2 >= ts)
