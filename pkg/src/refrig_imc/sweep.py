"""Grid search over the two IMC filter constants."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AllUnstable, ZeroBaselineIndex
from .imc import DEFAULT_N_FILTER, imc_pid
from .metrics import RATIO_NAMES, RAW_NAMES, JWeights, MetricsReport, aggregate_j, raw_indices
from .scenario import run_closed_loop

THREADS_ENV = "REFRIG_IMC_THREADS"
SURFACES = ("J",) + RATIO_NAMES


@dataclass(frozen=True)
class SweepGrid:
    lambda11: tuple
    lambda22: tuple

    def __post_init__(self):
        for name in ("lambda11", "lambda22"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ValueError(f"{name} is empty")
            if any(v <= 0 for v in vals):
                raise ValueError(f"{name} values must be positive")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"{name} must be strictly ascending")
            object.__setattr__(self, name, vals)

    @property
    def shape(self):
        return len(self.lambda11), len(self.lambda22)

    def points(self):
        return [(a, b) for a in self.lambda11 for b in self.lambda22]


def grid_range(start, stop, step) -> tuple:
    """Inclusive arithmetic range, rounded to kill float drift (0.01:0.05:0.51 -> 11 values)."""
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + k * step, 12) for k in range(n))


def reference_grid() -> SweepGrid:
    vals = grid_range(0.01, 0.51, 0.05)
    return SweepGrid(vals, vals)


@dataclass(frozen=True)
class SweepPoint:
    lambda11: float
    lambda22: float
    report: MetricsReport | None
    stable: bool

    @property
    def J(self) -> float:
        if not self.stable or self.report is None or self.report.J is None:
            return math.inf
        return self.report.J

    def value(self, name: str) -> float:
        if name == "J":
            return self.J
        if self.report is None or self.report.ratios is None:
            return math.inf
        return self.report.ratios[RATIO_NAMES.index(name)]


@dataclass(frozen=True)
class SweepSurface:
    grid: SweepGrid
    points: tuple

    def grid_values(self, name: str = "J") -> np.ndarray:
        n1, n2 = self.grid.shape
        return np.array([p.value(name) for p in self.points]).reshape(n1, n2)

    @property
    def argmin_J(self):
        return argmin_j(self)

    def rows(self, name: str):
        return [(p.lambda11, p.lambda22, p.value(name)) for p in self.points]


def _evaluate(task):
    lam11, lam22, models, plant, scenario, baseline, weights, n_filter, limits = task
    ctrl = (
        imc_pid(models[0], lam11, n_filter, limits[0]),
        imc_pid(models[1], lam22, n_filter, limits[1]),
    )
    sim = run_closed_loop(plant, ctrl, scenario)
    if sim.unstable:
        return SweepPoint(lam11, lam22, None, False)
    raw = raw_indices(sim, scenario.transient_windows)
    rep = aggregate_j(raw, baseline, weights)
    return SweepPoint(lam11, lam22, rep, math.isfinite(rep.J))


def resolve_workers(workers=None) -> int:
    if workers is None:
        env = os.environ.get(THREADS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def run_sweep(models, plant, scenario, baseline, grid: SweepGrid,
              weights: JWeights | None = None, workers=None,
              n_filter: float = DEFAULT_N_FILTER, limits=None) -> SweepSurface:
    """Re-tune both loops at every grid point and score against ``baseline``.

    ``baseline`` is either a SimResult or precomputed RawIndices. Points are
    evaluated independently (in worker processes when ``workers > 1``) and
    gathered back in grid order.
    """
    from .benchmark import U_LIMITS

    weights = weights or JWeights()
    limits = limits or U_LIMITS
    if not hasattr(baseline, "vector"):
        baseline = raw_indices(baseline, scenario.transient_windows)
    for name, v in zip(RAW_NAMES, baseline.vector()):
        if not v > 0:
            raise ZeroBaselineIndex(name)
    tasks = [(a, b, tuple(models), plant, scenario, baseline, weights, n_filter, tuple(limits))
             for a, b in grid.points()]
    workers = min(resolve_workers(workers), len(tasks))
    if workers == 1:
        points = [_evaluate(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_evaluate, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return SweepSurface(grid, tuple(points))


def argmin_j(surface: SweepSurface):
    """Grid point with the smallest finite J; ties go to the smaller (lambda11, lambda22)."""
    best = None
    for p in surface.points:
        j = p.J
        if not math.isfinite(j):
            continue
        key = (j, p.lambda11, p.lambda22)
        if best is None or key < best:
            best = key
    if best is None:
        raise AllUnstable("no stable grid point")
    j, a, b = best
    return a, b, j


def write_surfaces(surface: SweepSurface, out_dir) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in SURFACES:
        fname = out / f"sweep_{name.replace('@', '_')}.csv"
        lines = ["lambda11,lambda22,value"]
        lines += [f"{a!r},{b!r},{v!r}" for a, b, v in surface.rows(name)]
        fname.write_text("\n".join(lines) + "\n")
        paths.append(fname)
    summary = {"grid": {"lambda11": list(surface.grid.lambda11),
                        "lambda22": list(surface.grid.lambda22)},
               "points": len(surface.points),
               "unstable": sum(not p.stable for p in surface.points)}
    try:
        a, b, j = argmin_j(surface)
        summary["argmin"] = {"lambda11": a, "lambda22": b, "J": j}
    except AllUnstable:
        summary["argmin"] = None
    sp = out / "sweep_summary.json"
    sp.write_text(json.dumps(summary, indent=2) + "\n")
    paths.append(sp)
    return paths
