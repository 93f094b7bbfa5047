"""Polynomials and rational transfer functions in s and z^-1.

Coefficients are stored in ascending powers everywhere. For discrete
transfer functions the variable is the delay operator z^-1, so the
coefficient at index i multiplies z^-i and maps straight onto the
difference equation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.signal import lfilter

from .errors import DegenerateDenominator, IllConditionedGain, ImproperResult

STRIP_TOL = 1e-15
GAIN_EPS_REL = 1e-4
STABILITY_TOL = 1e-10


def _clean(coeffs) -> tuple:
    c = [float(x) for x in np.atleast_1d(np.asarray(coeffs, dtype=float))]
    if not all(math.isfinite(x) for x in c):
        raise ValueError("polynomial coefficients must be finite")
    while len(c) > 1 and abs(c[-1]) < STRIP_TOL:
        c.pop()
    if not c:
        c = [0.0]
    if len(c) == 1 and abs(c[0]) < STRIP_TOL:
        c = [0.0]
    return tuple(c)


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial, ``coeffs[i]`` multiplies ``x**i``."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _clean(self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs == (0.0,)

    def __call__(self, x):
        return poly_eval(self, x)

    def __len__(self):
        return len(self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(P.polymul(self.coeffs, other.coeffs))
        return Polynomial(np.asarray(self.coeffs) * float(other))

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial((float(other),))
        return Polynomial(P.polyadd(self.coeffs, other.coeffs))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial([-c for c in self.coeffs])

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial((float(other),))
        return self + (-other)

    def __pow__(self, n: int):
        out = Polynomial((1.0,))
        for _ in range(int(n)):
            out = out * self
        return out

    def roots(self) -> np.ndarray:
        if self.degree < 1:
            return np.array([], dtype=complex)
        # np.roots wants descending powers; it uses companion-matrix eigenvalues
        return np.roots(self.coeffs[::-1]).astype(complex)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)


def poly_eval(p: Polynomial, x):
    """Horner evaluation of ``sum(coeffs[i] * x**i)``."""
    acc = 0.0
    for c in reversed(p.coeffs):
        acc = acc * x + c
    return acc


def _as_poly(x) -> Polynomial:
    return x if isinstance(x, Polynomial) else Polynomial(x)


@dataclass(frozen=True)
class ContinuousTF:
    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        object.__setattr__(self, "num", _as_poly(self.num))
        object.__setattr__(self, "den", _as_poly(self.den))
        if self.den.is_zero:
            raise DegenerateDenominator("denominator is identically zero")

    domain = "s"

    @property
    def is_proper(self) -> bool:
        return self.num.degree <= self.den.degree

    def zeros(self):
        return self.num.roots()

    def poles(self):
        return self.den.roots()

    def normalized(self) -> "ContinuousTF":
        """Scale so the denominator's highest-power coefficient is 1."""
        lead = self.den.coeffs[-1]
        return ContinuousTF(self.num * (1.0 / lead), self.den * (1.0 / lead))


@dataclass(frozen=True)
class DiscreteTF:
    num: Polynomial
    den: Polynomial
    ts: float

    domain = "z"

    def __post_init__(self):
        num = _as_poly(self.num)
        den = _as_poly(self.den)
        if not self.ts > 0:
            raise ValueError(f"sample time must be positive, got {self.ts}")
        if den.is_zero or abs(den.coeffs[0]) < STRIP_TOL:
            raise DegenerateDenominator("z^-1 denominator has zero constant term")
        d0 = den.coeffs[0]
        object.__setattr__(self, "num", num * (1.0 / d0))
        object.__setattr__(self, "den", den * (1.0 / d0))
        object.__setattr__(self, "ts", float(self.ts))

    @property
    def order(self) -> int:
        return max(self.num.degree, self.den.degree)

    def poles(self):
        """Poles in the z plane."""
        a = self.den.coeffs
        if len(a) < 2:
            return np.array([], dtype=complex)
        # 1 + a1 z^-1 + ... + an z^-n  ->  z^n + a1 z^(n-1) + ... + an
        return np.roots(a).astype(complex)


TransferFunction = Union[ContinuousTF, DiscreteTF]


def _check_gain(num_val, den_val, den: Polynomial, channel=None):
    eps = GAIN_EPS_REL * max(abs(c) for c in den.coeffs)
    if abs(den_val) < eps:
        raise IllConditionedGain(
            f"|den| = {abs(den_val):.3g} below threshold {eps:.3g} "
            f"(numerator {num_val:.3g}); steady-state gain unreliable",
            channel=channel,
        )
    return num_val / den_val


def dc_gain_discrete(g: DiscreteTF, channel=None) -> float:
    return _check_gain(g.num(1.0), g.den(1.0), g.den, channel)


def dc_gain_continuous(g: ContinuousTF, channel=None) -> float:
    return _check_gain(g.num.coeffs[0], g.den.coeffs[0], g.den, channel)


def dc_gain(g: TransferFunction, channel=None) -> float:
    if isinstance(g, DiscreteTF):
        return dc_gain_discrete(g, channel)
    return dc_gain_continuous(g, channel)


def simulate_discrete(g: DiscreteTF, u) -> np.ndarray:
    """Run ``u`` through the difference equation from rest."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size < 1:
        raise ValueError("input must be a non-empty 1-D signal")
    return lfilter(g.num.as_array(), g.den.as_array(), u)


def discretize(g: ContinuousTF, ts: float) -> DiscreteTF:
    """Bilinear (Tustin) transform, s <- (2/ts)(1 - z^-1)/(1 + z^-1)."""
    if not ts > 0:
        raise ValueError("ts must be positive")
    if not g.is_proper:
        raise ImproperResult("cannot discretize an improper transfer function")
    n = g.den.degree
    c = 2.0 / ts
    back = Polynomial((1.0, -1.0))   # 1 - w
    fwd = Polynomial((1.0, 1.0))     # 1 + w

    def substitute(p: Polynomial) -> Polynomial:
        out = Polynomial((0.0,))
        for k, ck in enumerate(p.coeffs):
            out = out + (back ** k) * (fwd ** (n - k)) * (ck * c ** k)
        return out

    num = substitute(g.num)
    den = substitute(g.den)
    if den.is_zero or abs(den.coeffs[0]) < STRIP_TOL * max(abs(x) for x in den.coeffs):
        raise DegenerateDenominator(
            f"bilinear substitution at ts={ts} gives a zero leading denominator term"
        )
    return DiscreteTF(num, den, ts)


def n_samples(horizon: float, ts: float) -> int:
    # guard against 300/1 -> 299.99999 style truncation
    return int(math.floor(horizon / ts + 1e-9)) + 1


def step_response(g: TransferFunction, horizon: float, ts: float) -> np.ndarray:
    """Unit-step response sampled at ``ts`` on ``[0, horizon]``."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if isinstance(g, ContinuousTF):
        g = discretize(g, ts)
    return simulate_discrete(g, np.ones(n_samples(horizon, ts)))


def is_stable(g: DiscreteTF) -> bool:
    poles = g.poles()
    if poles.size == 0:
        return True
    return bool(np.all(np.abs(poles) < 1.0 - STABILITY_TOL))


class DiscreteStepper:
    """Sample-by-sample transposed direct-form II realization of a DiscreteTF.

    ``free_output()`` is the output this sample would have with zero input,
    ``feedthrough`` the direct input coefficient; together they let a caller
    resolve algebraic loops before committing the input with ``advance``.
    """

    def __init__(self, g: DiscreteTF):
        n = g.order + 1
        self.b = np.zeros(n)
        self.a = np.zeros(n)
        self.b[: len(g.num)] = g.num.coeffs
        self.a[: len(g.den)] = g.den.coeffs
        self.z = np.zeros(max(n - 1, 1))
        self.feedthrough = float(self.b[0])

    def free_output(self) -> float:
        return float(self.z[0]) if self.b.size > 1 else 0.0

    def advance(self, u: float) -> float:
        y = self.feedthrough * u + self.free_output()
        m = self.b.size - 1
        if m:
            z = self.z
            for i in range(m - 1):
                z[i] = self.b[i + 1] * u + z[i + 1] - self.a[i + 1] * y
            z[m - 1] = self.b[m] * u - self.a[m] * y
        return y


# -- serialization ---------------------------------------------------------

def tf_to_dict(g: TransferFunction) -> dict:
    d = {"domain": g.domain, "num": list(g.num.coeffs), "den": list(g.den.coeffs)}
    if isinstance(g, DiscreteTF):
        d["ts"] = g.ts
    return d


def tf_from_dict(d: dict) -> TransferFunction:
    domain = d.get("domain")
    if domain == "s":
        return ContinuousTF(Polynomial(d["num"]), Polynomial(d["den"]))
    if domain == "z":
        if "ts" not in d:
            raise ValueError("discrete transfer function needs 'ts'")
        return DiscreteTF(Polynomial(d["num"]), Polynomial(d["den"]), float(d["ts"]))
    raise ValueError(f"unknown domain {domain!r}; expected 's' or 'z'")


def load_tf(path) -> TransferFunction:
    return tf_from_dict(json.loads(Path(path).read_text()))


def save_tf(g: TransferFunction, path) -> None:
    Path(path).write_text(json.dumps(tf_to_dict(g), indent=2) + "\n")


def tf(num: Sequence[float], den: Sequence[float], ts: float | None = None) -> TransferFunction:
    """Shorthand constructor: continuous when ``ts`` is None."""
    if ts is None:
        return ContinuousTF(Polynomial(num), Polynomial(den))
    return DiscreteTF(Polynomial(num), Polynomial(den), ts)
