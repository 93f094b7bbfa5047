"""Published data for the PID18 refrigeration benchmark.

Identified discrete models, reduced second-order models, actuator ranges,
operating point and the index values printed for the decentralized PID.
"""

from __future__ import annotations

import numpy as np

from .imc import AV_LIMITS, N_COMP_LIMITS, PidParams, imc_pid
from .lti import ContinuousTF, DiscreteTF, Polynomial, discretize, tf
from .pairing import MimoPlant2x2, RgaMatrix
from .reduction import SecondOrderModel, sopm_to_tf

# Box-Jenkins plant channels (deterministic part), z^-1 ascending.
G11_COEFFS = ([0.0, -0.03408, 0.03357], [1.0, -0.9699, 0.001037])
G12_COEFFS = ([0.0, -0.00006045, 0.00075, 0.0002, -0.0003],
              [1.0, -1.298, -0.344, 0.64, -0.0024])
G21_COEFFS = ([0.0, -0.3765, 0.3706], [1.0, -0.9775, 0.000528])
G22_COEFFS = ([0.0, 0.1746, -0.1639, -0.1744, 0.1637],
              [1.0, -0.9375, -0.9976, 0.9367, -0.001551])

# Continuous-time versions printed alongside the reduction step. Their G11
# gain (-0.0276) disagrees with the reduced model (-0.016); kept for reference.
G11_CONT_COEFFS = ([-0.0035, -0.2367], [0.1269, 6.872, 1.0])
G22_CONT_COEFFS = ([3.712e-6, 0.704, 11.08, 0.07231, 1.122],
                   [-6.288e-8, 4.22, 63.84, 10.3, 6.469, 1.0])

G11_RED = SecondOrderModel(-0.016, 31.0, 0.00003)
G22_RED = SecondOrderModel(0.16, 3.0, 0.0000001)

# Steady-state relative gains as published (not reconstructible from the
# printed coefficients).
PUBLISHED_RGA = RgaMatrix(1.0004, -0.0004, -0.0004, 1.0004)

# Published controller gains (lambda = 0.1 on both loops)
PUBLISHED_PID = {
    "g11": {"k": -1.93e4, "tau_i": 31.0, "tau_d": 3e-5},
    "g22": {"k": 187.5, "tau_i": 3.0, "tau_d": 1e-7},
}

INPUT_NAMES = ("Av", "N_comp")
OUTPUT_NAMES = ("Te_sec_out", "Tsh")
INPUT_UNITS = ("%", "Hz")
OUTPUT_UNITS = ("degC", "degC")
U_LIMITS = (AV_LIMITS, N_COMP_LIMITS)
U0 = (50.0, 40.0)
Y0 = (-22.1, 14.65)

DISTURBANCE_CHANNELS = ("Tc_sec_in", "m_dot_c_sec", "P_c_sec_in",
                        "Te_sec_in", "m_dot_e_sec", "T_surr")
DISTURBANCE_NOMINAL = {
    "Tc_sec_in": 30.0, "m_dot_c_sec": 150.0, "P_c_sec_in": 1.0,
    "Te_sec_in": 20.0, "m_dot_e_sec": 1.0, "T_surr": 25.0,
}

# Decentralized-PID column of the index table, in J ordering.
DECENTRALIZED_RATIOS = (0.3511, 0.4458, 1.6104, 0.1830, 0.3196, 0.1280, 1.1283, 1.3739)
DECENTRALIZED_J = 0.68209
IMC_RATIOS = (0.076, 0.2052, 0.0411, 0.0163, 0.1195, 0.0051, 3.02085, 1.1098)
IMC_J = 0.2163

SWEEP_RANGE = (0.01, 0.51, 0.05)
PUBLISHED_OPTIMUM = (0.01, 0.11)


def identified_plant(ts: float = 1.0) -> MimoPlant2x2:
    """The four identified discrete channels at sample time ``ts``."""
    chans = [tf(n, d, ts) for n, d in (G11_COEFFS, G12_COEFFS, G21_COEFFS, G22_COEFFS)]
    return MimoPlant2x2(*chans, input_names=INPUT_NAMES, output_names=OUTPUT_NAMES)


def cross_time_constant(ts: float = 1.0) -> float:
    """Slow time constant of the identified G21 channel (its dominant pole), seconds."""
    poles = identified_plant(ts).g21.poles()
    dom = float(np.max(np.abs(poles)))
    return -ts / np.log(dom)


def surrogate_cross_gains() -> tuple:
    """Cross gains (a12, a21) giving the published diagonal relative gain.

    The coupling product a12*a21/(a11*a22) follows from lambda11 = 1.0004;
    it is split evenly in magnitude, and a21 keeps the sign of the
    identified G21.
    """
    a11, a22 = G11_RED.kp, G22_RED.kp
    rho = 1.0 - 1.0 / PUBLISHED_RGA.l11
    mag = np.sqrt(abs(rho * a11 * a22))
    a21 = -mag
    a12 = rho * a11 * a22 / a21
    return float(a12), float(a21)


def surrogate_plant(ts: float = 1.0) -> MimoPlant2x2:
    """Linear plant used for closed-loop runs.

    Diagonal: the reduced second-order models. Cross channels: first-order
    lags with G21's slow time constant and the gains of
    ``surrogate_cross_gains``. The identified G12 has a pole outside the
    unit circle and the identified G21 gain would pin the compressor loop at
    its limits, so neither is used as is.
    """
    tau_x = cross_time_constant()
    a12, a21 = surrogate_cross_gains()
    chans = [
        sopm_to_tf(G11_RED),
        ContinuousTF(Polynomial((a12,)), Polynomial((1.0, tau_x))),
        ContinuousTF(Polynomial((a21,)), Polynomial((1.0, tau_x))),
        sopm_to_tf(G22_RED),
    ]
    return MimoPlant2x2(*(discretize(g, ts) for g in chans),
                        input_names=INPUT_NAMES, output_names=OUTPUT_NAMES)


def baseline_pid():
    """Stand-in for the benchmark's decentralized controller.

    Its gains are not published; this is a PI per loop from the same
    reduced models with the filter constant set to the dominant time
    constant (closed loop as fast as open loop).
    """
    out = []
    for model, lim in ((G11_RED, AV_LIMITS), (G22_RED, N_COMP_LIMITS)):
        out.append(PidParams(k=1.0 / model.kp, tau_i=model.tau1, tau_d=0.0,
                             u_min=lim[0], u_max=lim[1]))
    return tuple(out)


def reconstructed_gain_overrides() -> dict:
    """Diagonal gains from the reduced models; G22's z->1 value is ill-conditioned."""
    return {"g11": G11_RED.kp, "g22": G22_RED.kp}


def default_pid(lam11: float, lam22: float):
    return (
        imc_pid(G11_RED, lam11, limits=AV_LIMITS),
        imc_pid(G22_RED, lam22, limits=N_COMP_LIMITS),
    )


def identified_channel(name: str, ts: float = 1.0) -> DiscreteTF:
    return getattr(identified_plant(ts), name)
