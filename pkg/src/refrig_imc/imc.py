"""Internal-model-control synthesis and the PID gains it implies."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ImproperResult, NonMinimumPhase, ZeroGainPlant
from .lti import ContinuousTF, Polynomial
from .reduction import SecondOrderModel

DEFAULT_N_FILTER = 10.0
# Actuator ranges: expansion valve opening (%), compressor speed (Hz)
AV_LIMITS = (10.0, 90.0)
N_COMP_LIMITS = (30.0, 50.0)

# "table3" reproduces the published controller gains; "prose" is the alternative 0.2
LAMBDA_PRESETS = {"table3": (0.1, 0.1), "prose": (0.2, 0.2)}


@dataclass(frozen=True)
class ImcDesign:
    lam: float
    n: int = 1

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("filter order must be a positive integer")


@dataclass(frozen=True)
class PidParams:
    """Gains of k(1 + 1/(tau_i s) + tau_d s/(tau_d s/N + 1)) plus actuator handling.

    ``tau_i = inf`` disables integral action and ``t_track = inf`` disables
    anti-windup. When ``t_track`` is left as None it becomes sqrt(tau_i*tau_d),
    or tau_i/2 for a controller without derivative action.
    """

    k: float
    tau_i: float
    tau_d: float = 0.0
    n_filter: float = DEFAULT_N_FILTER
    u_min: float = -math.inf
    u_max: float = math.inf
    t_track: float | None = None

    def __post_init__(self):
        if not self.tau_i > 0:
            raise ValueError("tau_i must be positive")
        if self.tau_d < 0:
            raise ValueError("tau_d must be non-negative")
        if not self.n_filter > 0:
            raise ValueError("n_filter must be positive")
        if not self.u_min < self.u_max:
            raise ValueError("u_min must be below u_max")
        if self.t_track is None:
            tt = math.sqrt(self.tau_i * self.tau_d) if self.tau_d > 0 else self.tau_i / 2
            object.__setattr__(self, "t_track", tt)
        if not self.t_track > 0:
            raise ValueError("t_track must be positive")

    def with_limits(self, u_min, u_max) -> "PidParams":
        return replace(self, u_min=u_min, u_max=u_max)

    def to_dict(self) -> dict:
        return {
            "k": self.k, "tau_i": self.tau_i, "tau_d": self.tau_d,
            "n_filter": self.n_filter, "u_min": self.u_min, "u_max": self.u_max,
            "t_track": self.t_track,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PidParams":
        kw = {k: float(v) for k, v in d.items() if v is not None}
        return cls(**kw)


def imc_filter(design: ImcDesign) -> ContinuousTF:
    """1 / (lam s + 1)^n."""
    base = Polynomial((1.0, design.lam))
    return ContinuousTF(Polynomial((1.0,)), base ** design.n)


def imc_controller_tf(plant: ContinuousTF, design: ImcDesign) -> ContinuousTF:
    """Classical-feedback equivalent of the IMC loop under perfect model match.

    With f = 1/D_f the controller f Gp^-1 / (1 - f) collapses to
    den_p / (num_p (D_f - 1)).
    """
    zeros = plant.zeros()
    if np.any(zeros.real >= 0):
        raise NonMinimumPhase(f"plant has zeros in the closed right half-plane: {zeros}")
    poles = plant.poles()
    if np.any(poles.real >= 0):
        raise ValueError(f"plant must be stable for IMC inversion; poles {poles}")
    # The result has (rel_deg - n) more zeros than poles. One extra zero is an
    # ideal derivative, which the runtime derivative filter makes realizable
    # (this is exactly the PID case); anything beyond that is rejected.
    rel_deg = plant.den.degree - plant.num.degree
    if rel_deg > design.n + 1:
        raise ImproperResult(
            f"plant relative degree {rel_deg} exceeds filter order {design.n} by more than one"
        )
    d_f = Polynomial((1.0, design.lam)) ** design.n
    return ContinuousTF(plant.den, plant.num * (d_f - 1.0))


def imc_pid(model: SecondOrderModel, lam: float, n_filter: float = DEFAULT_N_FILTER,
            limits=(-math.inf, math.inf)) -> PidParams:
    if model.kp == 0:
        raise ZeroGainPlant("plant gain is zero; IMC inversion undefined")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    t1, t2 = model.tau1, model.tau2
    tau_i = t1 + t2
    tau_d = t1 * t2 / tau_i
    k = tau_i / (lam * model.kp)
    return PidParams(k, tau_i, tau_d, n_filter, limits[0], limits[1],
                     math.sqrt(tau_i * tau_d))


def ideal_pid_tf(p: PidParams) -> ContinuousTF:
    """k (tau_i tau_d s^2 + tau_i s + 1) / (tau_i s), without derivative filter."""
    num = Polynomial((1.0, p.tau_i, p.tau_i * p.tau_d)) * p.k
    return ContinuousTF(num, Polynomial((0.0, p.tau_i)))


def filtered_pid_tf(p: PidParams) -> ContinuousTF:
    """Controller with the first-order derivative filter, as run on the plant."""
    tf_ = p.tau_d / p.n_filter
    # k [ (tau_i s)(tf s + 1) + (tf s + 1) + tau_i tau_d s^2 ] / [ tau_i s (tf s + 1) ]
    lag = Polynomial((1.0, tf_))
    num = (Polynomial((0.0, p.tau_i)) * lag + lag
           + Polynomial((0.0, 0.0, p.tau_i * p.tau_d))) * p.k
    den = Polynomial((0.0, p.tau_i)) * lag
    return ContinuousTF(num, den)


def tf_close(a: ContinuousTF, b: ContinuousTF, rtol=1e-9) -> bool:
    """Coefficient-wise comparison after scaling both to a monic denominator."""
    a, b = a.normalized(), b.normalized()
    if a.den.degree != b.den.degree or a.num.degree != b.num.degree:
        return False
    for pa, pb in ((a.num, b.num), (a.den, b.den)):
        x, y = pa.as_array(), pb.as_array()
        scale = max(np.max(np.abs(x)), np.max(np.abs(y)))
        if np.max(np.abs(x - y)) > rtol * scale:
            return False
    return True
