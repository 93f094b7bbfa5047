"""Project configuration: which plant, scenario, controllers and outputs to use."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import benchmark as bm
from .errors import ConfigError
from .imc import LAMBDA_PRESETS, PidParams
from .metrics import JWeights
from .pairing import MimoPlant2x2, load_plant
from .scenario import Scenario, default_scenario, load_scenario
from .sweep import SweepGrid, grid_range, reference_grid

_FIELDS = {"plant", "sim_plant", "scenario", "baseline", "candidate", "lambda",
           "models", "weights", "ts", "out", "sweep", "svg"}


@dataclass
class ProjectConfig:
    plant: Path | None = None          # identified plant document; None -> shipped
    sim_plant: Path | None = None      # closed-loop plant document; None -> surrogate
    scenario: Path | None = None
    baseline: dict | None = None       # {"g11": {...}, "g22": {...}} PidParams fields
    candidate: dict | None = None      # explicit controllers, bypasses tuning
    lam: object = "table3"             # preset name or [lambda11, lambda22]
    models: str = "published"          # "published" or "fitted"
    weights: Path | None = None
    ts: float | None = None
    out: Path = Path("out")
    sweep: dict = field(default_factory=dict)
    svg: bool = False

    @classmethod
    def load(cls, path) -> "ProjectConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            d = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(d, base=path.parent)

    @classmethod
    def from_dict(cls, d: dict, base=Path(".")) -> "ProjectConfig":
        unknown = set(d) - _FIELDS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        def p(key):
            v = d.get(key)
            return None if v is None else (Path(base) / v)

        cfg = cls(
            plant=p("plant"), sim_plant=p("sim_plant"), scenario=p("scenario"),
            baseline=d.get("baseline"), candidate=d.get("candidate"),
            lam=d.get("lambda", "table3"), models=d.get("models", "published"),
            weights=p("weights"), ts=d.get("ts"),
            out=Path(base) / d.get("out", "out"), sweep=d.get("sweep", {}) or {},
            svg=bool(d.get("svg", False)),
        )
        cfg.validate()
        return cfg

    def validate(self):
        for key in ("plant", "sim_plant", "scenario", "weights"):
            v = getattr(self, key)
            if v is not None and not Path(v).is_file():
                raise ConfigError(f"{key} file not found: {v}")
        if self.ts is not None and not float(self.ts) > 0:
            raise ConfigError("ts must be positive")
        if self.models not in ("published", "fitted"):
            raise ConfigError("models must be 'published' or 'fitted'")
        self.lambdas()

    def lambdas(self) -> tuple:
        if isinstance(self.lam, str):
            if self.lam not in LAMBDA_PRESETS:
                raise ConfigError(f"unknown lambda preset {self.lam!r}; "
                                  f"choose from {sorted(LAMBDA_PRESETS)}")
            return LAMBDA_PRESETS[self.lam]
        try:
            a, b = (float(x) for x in self.lam)
        except (TypeError, ValueError) as exc:
            raise ConfigError("lambda must be a preset name or [lambda11, lambda22]") from exc
        if not (a > 0 and b > 0):
            raise ConfigError("lambda values must be positive")
        return a, b

    # -- resolved objects --------------------------------------------------

    def load_scenario(self) -> Scenario:
        scn = load_scenario(self.scenario) if self.scenario else default_scenario()
        if self.ts is not None and float(self.ts) != scn.ts:
            scn = replace(scn, ts=float(self.ts))
        return scn

    def identified_plant(self) -> MimoPlant2x2:
        if self.plant:
            return load_plant(self.plant)
        return bm.identified_plant(1.0)

    def closed_loop_plant(self, ts: float) -> MimoPlant2x2:
        if self.sim_plant:
            return load_plant(self.sim_plant)
        return bm.surrogate_plant(ts)

    def baseline_controllers(self):
        if self.baseline is None:
            return bm.baseline_pid()
        return _controllers(self.baseline, "baseline")

    def candidate_controllers(self):
        return None if self.candidate is None else _controllers(self.candidate, "candidate")

    def load_weights(self) -> JWeights:
        if self.weights is None:
            return JWeights()
        return JWeights.from_obj(json.loads(Path(self.weights).read_text()))

    def sweep_enabled(self) -> bool:
        return bool(self.sweep.get("enabled", False))

    def sweep_grid(self) -> SweepGrid:
        def axis(key):
            v = self.sweep.get(key)
            if v is None:
                return None
            if isinstance(v, dict):
                return grid_range(float(v["start"]), float(v["stop"]), float(v["step"]))
            return tuple(float(x) for x in v)

        a, b = axis("lambda11"), axis("lambda22")
        if a is None and b is None:
            return reference_grid()
        pg = reference_grid()
        return SweepGrid(a or pg.lambda11, b or pg.lambda22)


def _controllers(d: dict, what: str):
    try:
        out = []
        for name, lim in (("g11", bm.AV_LIMITS), ("g22", bm.N_COMP_LIMITS)):
            kw = {"u_min": lim[0], "u_max": lim[1], **d[name]}
            out.append(PidParams.from_dict(kw))
        return tuple(out)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad {what} controller definition: {exc}") from exc
