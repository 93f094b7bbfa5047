"""Steady-state gain matrix, relative gain array and loop pairing for 2x2 plants."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AmbiguousPairing, SingularGainMatrix
from .lti import DiscreteTF, TransferFunction, dc_gain, tf_from_dict, tf_to_dict

CHANNELS = ("g11", "g12", "g21", "g22")
POOR_PAIRING_RANGE = (0.0, 2.0)


@dataclass(frozen=True)
class MimoPlant2x2:
    """Four SISO channels; ``gij`` maps input j to output i."""

    g11: TransferFunction
    g12: TransferFunction
    g21: TransferFunction
    g22: TransferFunction
    input_names: tuple = ("Av", "N_comp")
    output_names: tuple = ("Te_sec_out", "Tsh")

    def __post_init__(self):
        chans = [self.g11, self.g12, self.g21, self.g22]
        kinds = {type(g) for g in chans}
        if len(kinds) != 1:
            raise ValueError("all four channels must share one domain")
        if isinstance(self.g11, DiscreteTF):
            if len({g.ts for g in chans}) != 1:
                raise ValueError("discrete channels must share one sample time")

    @property
    def domain(self):
        return self.g11.domain

    @property
    def ts(self):
        return self.g11.ts if isinstance(self.g11, DiscreteTF) else None

    def channel(self, i: int, j: int) -> TransferFunction:
        return getattr(self, f"g{i + 1}{j + 1}")

    def to_dict(self) -> dict:
        d = {name: tf_to_dict(getattr(self, name)) for name in CHANNELS}
        d["input_names"] = list(self.input_names)
        d["output_names"] = list(self.output_names)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MimoPlant2x2":
        kw = {name: tf_from_dict(d[name]) for name in CHANNELS}
        if "input_names" in d:
            kw["input_names"] = tuple(d["input_names"])
        if "output_names" in d:
            kw["output_names"] = tuple(d["output_names"])
        return cls(**kw)


def load_plant(path) -> MimoPlant2x2:
    return MimoPlant2x2.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class GainMatrix:
    a11: float
    a12: float
    a21: float
    a22: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError("gain matrix entries must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]], dtype=float)

    @classmethod
    def from_array(cls, a) -> "GainMatrix":
        a = np.asarray(a, dtype=float)
        return cls(a[0, 0], a[0, 1], a[1, 0], a[1, 1])


@dataclass(frozen=True)
class RgaMatrix:
    l11: float
    l12: float
    l21: float
    l22: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.l11, self.l12], [self.l21, self.l22]], dtype=float)


@dataclass(frozen=True)
class Pairing:
    """Output index -> input index, plus any relative gains outside the healthy band."""

    assignment: tuple                 # assignment[i] = input paired with output i
    relative_gains: tuple             # relative gain of each chosen pair
    poor: tuple = field(default=())   # output indices whose chosen pair is poor

    @property
    def is_diagonal(self) -> bool:
        return self.assignment == (0, 1)

    def describe(self, output_names, input_names):
        return [
            f"{output_names[i]} <-> {input_names[j]}"
            for i, j in enumerate(self.assignment)
        ]


def steady_state_matrix(plant: MimoPlant2x2, overrides: dict | None = None) -> GainMatrix:
    """DC gain of every channel; ``overrides`` maps channel name -> gain to use instead."""
    overrides = overrides or {}
    vals = {}
    for name in CHANNELS:
        if name in overrides:
            vals[name] = float(overrides[name])
            continue
        vals[name] = dc_gain(getattr(plant, name), channel=name.upper())
    return GainMatrix(vals["g11"], vals["g12"], vals["g21"], vals["g22"])


def rga(a: GainMatrix) -> RgaMatrix:
    A = a.as_array()
    det = np.linalg.det(A)
    norm2 = np.sum(A * A)
    if not abs(det) > 1e-12 * norm2:
        raise SingularGainMatrix(f"det(A) = {det:.3g} is numerically zero")
    # closed form for 2x2: lambda11 = 1 / (1 - a12 a21 / (a11 a22))
    #                              = a11 a22 / det
    l11 = a.a11 * a.a22 / det
    l12 = -a.a12 * a.a21 / det
    return RgaMatrix(l11, l12, l12, l11)


def rga_hadamard(a: GainMatrix) -> RgaMatrix:
    """Definition route, A * inv(A).T element-wise, kept as an independent check."""
    A = a.as_array()
    L = A * np.linalg.inv(A).T
    return RgaMatrix(L[0, 0], L[0, 1], L[1, 0], L[1, 1])


def recommend_pairing(lam: RgaMatrix) -> Pairing:
    L = lam.as_array()
    # in a 2x2 RGA the only two pairings are diagonal and anti-diagonal
    d_diag = abs(L[0, 0] - 1.0)
    d_off = abs(L[0, 1] - 1.0)
    if np.isclose(d_diag, d_off, rtol=0, atol=1e-12):
        raise AmbiguousPairing(
            f"diagonal ({L[0, 0]:.4g}) and off-diagonal ({L[0, 1]:.4g}) "
            "relative gains are equally close to 1"
        )
    assignment = (0, 1) if d_diag < d_off else (1, 0)
    gains = tuple(float(L[i, j]) for i, j in enumerate(assignment))
    lo, hi = POOR_PAIRING_RANGE
    poor = tuple(i for i, g in enumerate(gains) if not lo < g < hi)
    return Pairing(assignment, gains, poor)
