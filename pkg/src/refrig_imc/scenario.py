"""Closed-loop simulation of the 2x2 plant under two decentralized PID loops."""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import benchmark as bm
from .errors import ScenarioError
from .lti import ContinuousTF, DiscreteStepper, DiscreteTF, discretize, n_samples
from .pairing import MimoPlant2x2
from .pid import PidState, pid_raw, pid_step

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class Disturbance:
    """Piecewise-constant additive offset on one output."""

    name: str
    output: int
    profile: tuple

    def __post_init__(self):
        if self.output not in (0, 1):
            raise ScenarioError(f"disturbance {self.name!r}: output must be 0 or 1")
        object.__setattr__(self, "profile", _as_profile(self.profile))


def _as_profile(profile) -> tuple:
    return tuple((float(t), float(v)) for t, v in profile)


@dataclass(frozen=True)
class Scenario:
    """Setpoint and disturbance profiles in absolute engineering units.

    ``setpoints[i]`` is a list of ``(time, value)`` steps for output i; before
    its first time the output's operating point applies. ``transient_windows``
    holds ``(t_c, t_s)`` pairs, window 1 scored on loop 1 and the rest on loop 2.
    """

    duration: float
    ts: float
    setpoints: tuple
    disturbances: tuple = ()
    transient_windows: tuple = ()
    y0: tuple = bm.Y0
    u0: tuple = bm.U0
    label: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "setpoints", tuple(_as_profile(p) for p in self.setpoints))
        object.__setattr__(self, "transient_windows",
                           tuple((float(a), float(b)) for a, b in self.transient_windows))
        object.__setattr__(self, "disturbances", tuple(
            d if isinstance(d, Disturbance) else Disturbance(**d) for d in self.disturbances))
        object.__setattr__(self, "y0", tuple(float(v) for v in self.y0))
        object.__setattr__(self, "u0", tuple(float(v) for v in self.u0))
        self.validate()

    def validate(self):
        if not self.duration > 0:
            raise ScenarioError("duration must be positive")
        if not self.ts > 0:
            raise ScenarioError("ts must be positive")
        if len(self.setpoints) != 2:
            raise ScenarioError("need one setpoint profile per output")
        profiles = list(self.setpoints) + [d.profile for d in self.disturbances]
        for prof in profiles:
            times = [t for t, _ in prof]
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ScenarioError(f"profile times must be strictly increasing: {times}")
            if times and (times[0] < 0 or times[-1] > self.duration):
                raise ScenarioError(f"profile times outside [0, {self.duration}]: {times}")
        for t_c, t_s in self.transient_windows:
            if t_c < 0 or t_s <= 0 or t_c + t_s > self.duration + 1e-9:
                raise ScenarioError(f"window ({t_c}, {t_s}) not inside [0, {self.duration}]")

    @property
    def n(self) -> int:
        return n_samples(self.duration, self.ts)

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.n) * self.ts

    def setpoint_signal(self, i: int) -> np.ndarray:
        return sample_profile(self.setpoints[i], self.time, self.y0[i])

    def disturbance_signal(self, i: int) -> np.ndarray:
        out = np.zeros(self.n)
        for d in self.disturbances:
            if d.output == i:
                out += sample_profile(d.profile, self.time, 0.0)
        return out

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "duration": self.duration,
            "ts": self.ts,
            "setpoints": [[list(p) for p in prof] for prof in self.setpoints],
            "disturbances": [
                {"name": d.name, "output": d.output, "profile": [list(p) for p in d.profile]}
                for d in self.disturbances
            ],
            "transient_windows": [list(w) for w in self.transient_windows],
            "y0": list(self.y0),
            "u0": list(self.u0),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        known = {"label", "duration", "ts", "setpoints", "disturbances",
                 "transient_windows", "y0", "u0"}
        unknown = set(d) - known
        if unknown:
            raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(**d)


def load_scenario(path) -> Scenario:
    return Scenario.from_dict(json.loads(Path(path).read_text()))


def save_scenario(scn: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scn.to_dict(), indent=2) + "\n")


def sample_profile(profile, t: np.ndarray, before: float) -> np.ndarray:
    out = np.full(t.shape, float(before))
    for t_k, v in profile:
        # small slack so a step scheduled at k*ts lands on sample k
        out[t >= t_k - 1e-9] = v
    return out


def default_scenario() -> Scenario:
    """20-minute surrogate run: one Te_sec_out step, three Tsh steps, one disturbance."""
    return Scenario(
        duration=1200.0,
        ts=1.0,
        setpoints=(
            [(0.0, -22.1), (100.0, -22.4)],
            [(0.0, 14.65), (400.0, 13.65), (600.0, 15.15), (800.0, 14.65)],
        ),
        disturbances=(
            Disturbance("Te_sec_in", 0, [(960.0, 0.1)]),
        ),
        transient_windows=((100.0, 250.0), (400.0, 150.0), (600.0, 150.0), (800.0, 150.0)),
        label="surrogate-default",
    )


@dataclass
class SimResult:
    """Sampled closed-loop signals in absolute units; arrays have shape (2, n)."""

    time: np.ndarray
    r: np.ndarray
    y: np.ndarray
    u: np.ndarray
    saturated: np.ndarray
    unstable: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def e(self) -> np.ndarray:
        return self.r - self.y

    @property
    def ts(self) -> float:
        return float(self.time[1] - self.time[0]) if self.time.size > 1 else 1.0

    def columns(self) -> dict:
        cols = {"time": self.time}
        for i in range(2):
            k = i + 1
            cols[f"r{k}"] = self.r[i]
            cols[f"y{k}"] = self.y[i]
            cols[f"u{k}"] = self.u[i]
            cols[f"e{k}"] = self.e[i]
        return cols

    def to_csv(self, path=None) -> str:
        cols = self.columns()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(cols))
        for row in zip(*cols.values()):
            w.writerow([repr(float(x)) for x in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "SimResult":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path}: no samples")
        col = {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}
        missing = {"time", "r1", "y1", "u1", "r2", "y2", "u2"} - set(col)
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        r = np.vstack([col["r1"], col["r2"]])
        y = np.vstack([col["y1"], col["y2"]])
        u = np.vstack([col["u1"], col["u2"]])
        unstable = not (np.all(np.isfinite(y)) and np.all(np.isfinite(u)))
        return cls(col["time"], r, y, u, np.zeros_like(u, dtype=bool), unstable)


def _discrete_channels(plant: MimoPlant2x2, ts: float):
    chans = []
    for i in range(2):
        row = []
        for j in range(2):
            g = plant.channel(i, j)
            if isinstance(g, ContinuousTF):
                g = discretize(g, ts)
            elif isinstance(g, DiscreteTF) and abs(g.ts - ts) > 1e-12 * ts:
                raise ScenarioError(
                    f"channel G{i + 1}{j + 1} sampled at {g.ts}, scenario ts is {ts}")
            row.append(g)
        chans.append(row)
    return chans


def _solve_inputs(c, M, lo, hi):
    """Find u with u = clip(c - M u, lo, hi) by enumerating saturation modes."""
    modes = sorted(itertools.product((0, -1, 1), repeat=2),
                   key=lambda m: (sum(x != 0 for x in m), m))
    for mode in modes:
        u = np.zeros(2)
        free = [i for i in range(2) if mode[i] == 0]
        for i in range(2):
            if mode[i] == -1:
                u[i] = lo[i]
            elif mode[i] == 1:
                u[i] = hi[i]
        if free:
            A = np.eye(2)[np.ix_(free, free)] + M[np.ix_(free, free)]
            fixed = [i for i in range(2) if mode[i] != 0]
            rhs = c[free] - (M[np.ix_(free, fixed)] @ u[fixed] if fixed else 0.0)
            try:
                u[free] = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                continue
        raw = c - M @ u
        ok = True
        for i in range(2):
            if mode[i] == 0:
                ok &= lo[i] - 1e-12 * max(1, abs(lo[i])) <= u[i] <= hi[i] + 1e-12 * max(1, abs(hi[i]))
            elif mode[i] == -1:
                ok &= raw[i] <= lo[i]
            else:
                ok &= raw[i] >= hi[i]
        if ok:
            return u
    return None


def run_closed_loop(plant: MimoPlant2x2, controllers, scenario: Scenario) -> SimResult:
    """Simulate loop 1 (output 0 <- input 0) and loop 2 (output 1 <- input 1).

    Works in deviation variables around the scenario's operating point. The
    controller output is solved together with any plant feedthrough in the
    same sample, so biproper channels do not pick up an extra delay.
    """
    ts = scenario.ts
    n = scenario.n
    chans = _discrete_channels(plant, ts)
    steppers = [[DiscreteStepper(g) for g in row] for row in chans]
    D = np.array([[s.feedthrough for s in row] for row in steppers])
    has_ft = bool(np.any(D != 0))

    y0 = np.array(scenario.y0)
    u0 = np.array(scenario.u0)
    r_abs = np.vstack([scenario.setpoint_signal(0), scenario.setpoint_signal(1)])
    r_dev = r_abs - y0[:, None]
    dist = np.vstack([scenario.disturbance_signal(0), scenario.disturbance_signal(1)])
    # controllers act on deviations, so shift their actuator limits too
    controllers = [c.with_limits(c.u_min - u0[i], c.u_max - u0[i])
                   for i, c in enumerate(controllers)]
    lo = np.array([c.u_min for c in controllers])
    hi = np.array([c.u_max for c in controllers])

    sp_range = max(float(np.ptp(r_dev[0])), float(np.ptp(r_dev[1])))
    bound = DIVERGENCE_FACTOR * (sp_range if sp_range > 0 else 1.0)

    y = np.full((2, n), np.nan)
    u = np.full((2, n), np.nan)
    sat = np.zeros((2, n), dtype=bool)
    states = [PidState(ts=ts), PidState(ts=ts)]
    unstable = False
    diverged_at = None
    u_prev = np.zeros(2)

    for k in range(n):
        free = np.array([
            steppers[i][0].free_output() + steppers[i][1].free_output() + dist[i, k]
            for i in range(2)
        ])
        if has_ft:
            alpha = np.array([pid_raw(controllers[i], states[i], 0.0) for i in range(2)])
            beta = np.array([pid_raw(controllers[i], states[i], 1.0) for i in range(2)]) - alpha
            c = alpha + beta * (r_dev[:, k] - free)
            M = beta[:, None] * D
            uk = _solve_inputs(c, M, lo, hi)
            if uk is None:
                # no consistent saturation mode: fall back to last sample's inputs
                uk = np.clip(c - M @ u_prev, lo, hi)
            e = r_dev[:, k] - free - D @ uk
        else:
            e = r_dev[:, k] - free
        uk = np.empty(2)
        for i in range(2):
            raw = pid_raw(controllers[i], states[i], e[i])
            uk[i], states[i] = pid_step(controllers[i], states[i], e[i])
            sat[i, k] = uk[i] != raw
        yk = np.array([
            steppers[i][0].advance(uk[0]) + steppers[i][1].advance(uk[1]) + dist[i, k]
            for i in range(2)
        ])
        u[:, k] = uk
        y[:, k] = yk
        u_prev = uk
        if not np.all(np.isfinite(yk)) or np.any(np.abs(yk) > bound):
            unstable = True
            diverged_at = float(scenario.time[k])
            break

    return SimResult(
        time=scenario.time,
        r=r_abs,
        y=y + y0[:, None],
        u=u + u0[:, None],
        saturated=sat,
        unstable=unstable,
        meta={"label": scenario.label, "diverged_at": diverged_at},
    )
