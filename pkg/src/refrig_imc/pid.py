"""Discrete PID with filtered derivative, saturation and back-calculation anti-windup."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .imc import PidParams


@dataclass(frozen=True)
class PidState:
    integrator: float = 0.0
    d_filter: float = 0.0
    prev_error: float = 0.0
    ts: float = 1.0

    def __post_init__(self):
        if not self.ts > 0:
            raise ValueError("sample time must be positive")


def _terms(params: PidParams, state: PidState, error: float):
    ts = state.ts
    p = params.k * error
    if math.isinf(params.tau_i):
        i = state.integrator
    else:
        i = state.integrator + params.k * ts / params.tau_i * error
    if params.tau_d > 0:
        tf = params.tau_d / params.n_filter
        d = (tf * state.d_filter + params.k * params.tau_d * (error - state.prev_error)) / (tf + ts)
    else:
        d = 0.0
    return p, i, d


def pid_raw(params: PidParams, state: PidState, error: float) -> float:
    """Unsaturated output for ``error`` without committing the state."""
    p, i, d = _terms(params, state, error)
    return p + i + d


def pid_step(params: PidParams, state: PidState, error: float):
    """One controller sample; returns ``(u_saturated, new_state)``."""
    if not math.isfinite(error):
        raise ValueError(f"non-finite error {error}")
    p, i, d = _terms(params, state, error)
    u_raw = p + i + d
    u = min(max(u_raw, params.u_min), params.u_max)
    if u != u_raw and math.isfinite(params.t_track):
        # back-calculation, integrated implicitly so ts > t_track cannot overshoot
        g = state.ts / params.t_track
        i = (i + g * (u - p - d)) / (1.0 + g)
    return u, PidState(i, d, error, state.ts)


def pid_reset(state: PidState) -> PidState:
    return PidState(ts=state.ts)
