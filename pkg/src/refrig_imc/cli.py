"""Command-line entry point: ``refrig-imc <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import benchmark as bm
from .config import ProjectConfig
from .errors import ConfigError, RefrigImcError
from .imc import imc_pid
from .lti import DiscreteTF, is_stable, load_tf, step_response
from .metrics import RATIO_NAMES, aggregate_j, raw_indices
from .pairing import CHANNELS, recommend_pairing, rga, steady_state_matrix
from .reduction import SecondOrderModel, fit_sopm
from .scenario import SimResult, run_closed_loop
from .sweep import SURFACES, SweepGrid, argmin_j, grid_range, run_sweep, write_surfaces

DEFAULT_HORIZON = {"g11": 300.0, "g22": 60.0}


# -- small formatting helpers ------------------------------------------------

def _g(x, width=12):
    return f"{x:>{width}.6g}"


def _matrix_lines(title, m, row_names, col_names):
    lines = [title, " " * 14 + "".join(f"{c:>12}" for c in col_names)]
    for i, rn in enumerate(row_names):
        lines.append(f"{rn:<14}" + "".join(_g(m[i, j]) for j in range(2)))
    return lines


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# -- configuration -------------------------------------------------------------

def _load_config(args) -> ProjectConfig:
    cfg = ProjectConfig.load(args.config) if args.config else ProjectConfig()
    if getattr(args, "out", None):
        cfg.out = Path(args.out)
    if getattr(args, "ts", None) is not None:
        cfg.ts = args.ts
    if getattr(args, "weights", None):
        cfg.weights = Path(args.weights)
    l11 = getattr(args, "lambda11", None)
    l22 = getattr(args, "lambda22", None)
    if l11 is not None or l22 is not None:
        base = cfg.lambdas()
        cfg.lam = [l11 if l11 is not None else base[0], l22 if l22 is not None else base[1]]
    if getattr(args, "svg", False):
        cfg.svg = True
    cfg.validate()
    return cfg


def _sample_time(cfg) -> float:
    return float(cfg.ts) if cfg.ts is not None else cfg.load_scenario().ts


# -- stages --------------------------------------------------------------------

def stage_rga(cfg):
    """Gain matrix, RGA and pairing. Returns (lines, csv_text, adopted Pairing)."""
    plant = cfg.identified_plant()
    builtin = cfg.plant is None
    overrides = bm.reconstructed_gain_overrides() if builtin else None
    unstable = [n for n in CHANNELS
                if isinstance(getattr(plant, n), DiscreteTF) and not is_stable(getattr(plant, n))]
    gains = steady_state_matrix(plant, overrides)
    lam = rga(gains)
    pairing = recommend_pairing(lam)
    outs, ins = plant.output_names, plant.input_names

    lines = []
    if overrides:
        lines.append("diagonal gains taken from the reduced models: "
                     + ", ".join(f"{k.upper()}={v:g}" for k, v in overrides.items()))
    lines += _matrix_lines("steady-state gain matrix", gains.as_array(), outs, ins)
    lines += _matrix_lines("relative gain array", lam.as_array(), outs, ins)
    lines.append("recommended pairing: " + "; ".join(pairing.describe(outs, ins)))
    for i in pairing.poor:
        lines.append(f"  warning: relative gain {pairing.relative_gains[i]:.4g} "
                     f"for {outs[i]} is outside (0, 2)")

    adopted, source = pairing, "computed"
    rows = [("computed", *gains.as_array().ravel(), *lam.as_array().ravel())]
    if unstable:
        lines.append("warning: channel(s) " + ", ".join(n.upper() for n in unstable)
                     + " have poles outside the unit circle; their z=1 value is not a steady-state gain")
        if builtin:
            pub = bm.PUBLISHED_RGA
            adopted, source = recommend_pairing(pub), "published"
            lines += _matrix_lines("published relative gain array", pub.as_array(), outs, ins)
            rows.append(("published", *([float("nan")] * 4), *pub.as_array().ravel()))
    lines.append(f"adopted pairing ({source}): " + "; ".join(adopted.describe(outs, ins)))
    header = ["source", "a11", "a12", "a21", "a22", "l11", "l12", "l21", "l22"]
    return lines, _csv_text(header, rows), adopted


def _step_data(source, cfg, horizon, amplitude):
    """Step response samples and ts from a builtin channel, TF document or CSV."""
    ts = _sample_time(cfg)
    if source in CHANNELS:
        g = getattr(cfg.identified_plant(), source)
        h = horizon if horizon is not None else DEFAULT_HORIZON.get(source, 300.0)
        return step_response(g, h, g.ts if isinstance(g, DiscreteTF) else ts) * amplitude, \
            (g.ts if isinstance(g, DiscreteTF) else ts)
    path = Path(source)
    if not path.is_file():
        raise FileNotFoundError(f"step-response source not found: {path}")
    if path.suffix.lower() == ".csv":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or "y" not in rows[0]:
            raise ValueError(f"{path}: expected a CSV with a 'y' column (and optionally 'time')")
        y = np.array([float(r["y"]) for r in rows])
        if "time" in rows[0] and len(rows) > 1:
            ts = float(rows[1]["time"]) - float(rows[0]["time"])
        return y, ts
    g = load_tf(path)
    if isinstance(g, DiscreteTF):
        ts = g.ts
    h = horizon if horizon is not None else 300.0
    return step_response(g, h, ts) * amplitude, ts


def stage_reduce(cfg, sources=("g11", "g22"), horizon=None, amplitude=1.0):
    reports = {}
    for src in sources:
        y, ts = _step_data(src, cfg, horizon, amplitude)
        reports[src] = fit_sopm(y, ts, amplitude)
    return reports


def _fit_lines(reports):
    lines = [f"{'source':<18}{'kp':>12}{'tau1':>12}{'tau2':>12}{'fit%':>10}{'|resid|':>12}"]
    for name, r in reports.items():
        m = r.model
        flag = "" if r.tau2_identifiable else "  (tau2 below ts)"
        lines.append(f"{Path(name).name:<18}{_g(m.kp)}{_g(m.tau1)}{_g(m.tau2)}"
                     f"{r.fit_percent:>10.2f}{_g(r.residual_norm)}{flag}")
    pub = {"g11": bm.G11_RED, "g22": bm.G22_RED}
    for name in reports:
        if name in pub:
            m = pub[name]
            lines.append(f"{'published ' + name:<18}{_g(m.kp)}{_g(m.tau1)}{_g(m.tau2)}")
    return lines


def _fit_csv(reports: dict) -> str:
    rows = [(n, r.model.kp, r.model.tau1, r.model.tau2, r.fit_percent, r.residual_norm,
             int(r.tau2_identifiable)) for n, r in reports.items()]
    return _csv_text(["source", "kp", "tau1", "tau2", "fit_percent", "residual_norm",
                      "tau2_identifiable"], rows)


def _models(cfg, fitted: dict | None = None):
    if cfg.models == "fitted":
        fitted = fitted or stage_reduce(cfg)
        return fitted["g11"].model, fitted["g22"].model
    return bm.G11_RED, bm.G22_RED


def stage_tune(cfg, models):
    l11, l22 = cfg.lambdas()
    return (imc_pid(models[0], l11, limits=bm.AV_LIMITS),
            imc_pid(models[1], l22, limits=bm.N_COMP_LIMITS))


def _pid_lines(ctrls, title="controller"):
    lines = [f"{title:<12}{'k':>13}{'tau_i':>12}{'tau_d':>12}{'N':>6}{'t_track':>12}"
             f"{'u_min':>8}{'u_max':>8}"]
    for name, p in zip(("loop 1", "loop 2"), ctrls):
        lines.append(f"{name:<12}{p.k:>13.6g}{_g(p.tau_i)}{_g(p.tau_d)}{p.n_filter:>6g}"
                     f"{_g(p.t_track)}{p.u_min:>8g}{p.u_max:>8g}")
    return lines


def _pid_csv(ctrls) -> str:
    keys = list(ctrls[0].to_dict())
    return _csv_text(["loop", *keys], [(i + 1, *(float(v) for v in p.to_dict().values()))
                                       for i, p in enumerate(ctrls)])


def _pid_json(ctrls) -> str:
    return _json_text({"g11": ctrls[0].to_dict(), "g22": ctrls[1].to_dict()})


def stage_simulate(cfg, ctrls, scenario) -> SimResult:
    plant = cfg.closed_loop_plant(scenario.ts)
    return run_closed_loop(plant, ctrls, scenario)


def _report_table(rep, cand_label="candidate", base_label="baseline"):
    """Index table laid out like the benchmark's comparison table."""
    lines = [f"{'index':<14}{cand_label:>14}{base_label:>14}{'ratio':>14}"]
    cand = rep.raw.vector()
    base = rep.baseline.vector()
    for rname, c, b, r in zip(RATIO_NAMES, cand, base, rep.ratios):
        lines.append(f"{rname:<14}{c:>14.6g}{b:>14.6g}{r:>14.5f}")
    lines.append(f"{'J':<14}{'':>14}{'':>14}{rep.J:>14.5f}")
    return lines


def _report_csv(rep) -> str:
    rows = [(rn, c, b, r) for rn, c, b, r in
            zip(RATIO_NAMES, rep.raw.vector(), rep.baseline.vector(), rep.ratios)]
    rows.append(("J", float("nan"), float("nan"), float(rep.J)))
    return _csv_text(["index", "candidate", "baseline", "ratio"], rows)


def _check_sim(sim: SimResult, label: str):
    if sim.unstable:
        raise RefrigImcError(f"{label} closed loop diverged at t = "
                             f"{sim.meta.get('diverged_at', 'unknown')} s")


def _save_sim_figures(out: Path, sims, labels, svg: bool, suffix=""):
    from .plots import plot_inputs, plot_outputs

    paths = []
    exts = ["png"] + (["svg"] if svg else [])
    for ext in exts:
        paths.append(Path(plot_outputs(sims, labels, out / f"outputs{suffix}.{ext}")))
        paths.append(Path(plot_inputs(sims, labels, out / f"inputs{suffix}.{ext}")))
    return paths


def _save_sweep_figures(out: Path, surface, svg: bool):
    from .plots import plot_surface

    paths = [Path(plot_surface(surface, "J", out / "sweep_J.png", log=True))]
    if svg:
        for name in SURFACES:
            fname = out / f"sweep_{name.replace('@', '_')}.svg"
            paths.append(Path(plot_surface(surface, name, fname, log=True)))
    return paths


def _parse_axis(text):
    """'start:stop:step' or comma list."""
    if ":" in text:
        a, b, c = (float(x) for x in text.split(":"))
        return grid_range(a, b, c)
    return tuple(float(x) for x in text.split(","))


def stage_sweep(cfg, models, scenario, baseline_sim, grid: SweepGrid, workers=None):
    return run_sweep(models, cfg.closed_loop_plant(scenario.ts), scenario, baseline_sim,
                     grid, cfg.load_weights(), workers=workers)


# -- subcommands ---------------------------------------------------------------

def cmd_rga(args) -> int:
    cfg = _load_config(args)
    lines, csv_text, _ = stage_rga(cfg)
    print("\n".join(lines))
    if args.out:
        p = _write(cfg.out / "rga.csv", csv_text)
        print(f"wrote {p}")
    return 0


def cmd_reduce(args) -> int:
    cfg = _load_config(args)
    reports = stage_reduce(cfg, args.source or ("g11", "g22"), args.horizon, args.amplitude)
    text = _fit_csv(reports) if args.format == "csv" else "\n".join(_fit_lines(reports)) + "\n"
    sys.stdout.write(text)
    if args.out:
        print(f"wrote {_write(cfg.out / 'reduce.csv', _fit_csv(reports))}")
    return 0


def cmd_tune(args) -> int:
    cfg = _load_config(args)
    if args.kp is not None:
        if args.tau1 is None or args.tau2 is None:
            raise ConfigError("--kp needs --tau1 and --tau2")
        model = SecondOrderModel(args.kp, args.tau1, args.tau2)
        lam = cfg.lambdas()[0]
        ctrls = (imc_pid(model, lam),)
    else:
        ctrls = stage_tune(cfg, _models(cfg))
    if args.format == "json":
        text = (_json_text(ctrls[0].to_dict()) if len(ctrls) == 1 else _pid_json(ctrls))
    elif args.format == "csv":
        text = _pid_csv(ctrls)
    else:
        text = "\n".join(_pid_lines(ctrls)) + "\n"
    sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    scenario = cfg.load_scenario()
    if args.controller == "baseline":
        ctrls = cfg.baseline_controllers()
    else:
        ctrls = cfg.candidate_controllers() or stage_tune(cfg, _models(cfg))
    sim = stage_simulate(cfg, ctrls, scenario)
    text = sim.to_csv()
    if args.out:
        p = _write(cfg.out / f"sim_{args.controller}.csv", text)
        print(f"wrote {p}")
        for fp in _save_sim_figures(cfg.out, [sim], [args.controller], cfg.svg,
                                    suffix=f"_{args.controller}"):
            print(f"wrote {fp}")
    else:
        sys.stdout.write(text)
    _check_sim(sim, args.controller)
    return 0


def cmd_report(args) -> int:
    cfg = _load_config(args)
    scenario = cfg.load_scenario()
    for p in (args.candidate, args.baseline):
        if not Path(p).is_file():
            raise FileNotFoundError(f"simulation CSV not found: {p}")
    cand = SimResult.from_csv(args.candidate)
    base = SimResult.from_csv(args.baseline)
    rep = aggregate_j(raw_indices(cand, scenario.transient_windows),
                      raw_indices(base, scenario.transient_windows), cfg.load_weights())
    if args.format == "json":
        sys.stdout.write(_json_text(rep.to_dict()))
    elif args.format == "csv":
        sys.stdout.write(_report_csv(rep))
    else:
        print("\n".join(_report_table(rep)))
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    scenario = cfg.load_scenario()
    grid = cfg.sweep_grid()
    if args.grid11 or args.grid22:
        grid = SweepGrid(_parse_axis(args.grid11) if args.grid11 else grid.lambda11,
                         _parse_axis(args.grid22) if args.grid22 else grid.lambda22)
    base = stage_simulate(cfg, cfg.baseline_controllers(), scenario)
    _check_sim(base, "baseline")
    surface = stage_sweep(cfg, _models(cfg), scenario, base, grid, args.workers)
    for p in write_surfaces(surface, cfg.out):
        print(f"wrote {p}")
    for p in _save_sweep_figures(cfg.out, surface, cfg.svg):
        print(f"wrote {p}")
    a, b, j = argmin_j(surface)
    print(f"argmin J = {j:.6g} at lambda11 = {a:g}, lambda22 = {b:g} "
          f"({len(surface.points)} points)")
    return 0


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cmd_pipeline(args) -> int:
    cfg = _load_config(args)
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name, text):
        written.append(_write(out / name, text))

    print("== pairing")
    lines, rga_csv, _ = stage_rga(cfg)
    print("\n".join(lines))
    emit("rga.csv", rga_csv)

    print("\n== reduction")
    fitted = stage_reduce(cfg)
    print("\n".join(_fit_lines(fitted)))
    emit("reduce.csv", _fit_csv(fitted))
    models = _models(cfg, fitted)

    print("\n== tuning")
    scenario = cfg.load_scenario()
    cand_ctrls = cfg.candidate_controllers() or stage_tune(cfg, models)
    base_ctrls = cfg.baseline_controllers()
    print("\n".join(_pid_lines(cand_ctrls, "candidate")))
    print("\n".join(_pid_lines(base_ctrls, "baseline")))
    emit("controllers.json", _json_text({
        "candidate": {"g11": cand_ctrls[0].to_dict(), "g22": cand_ctrls[1].to_dict()},
        "baseline": {"g11": base_ctrls[0].to_dict(), "g22": base_ctrls[1].to_dict()},
    }))

    print(f"\n== simulation ({scenario.label}, {scenario.duration:g} s at ts = {scenario.ts:g} s)")
    cand = stage_simulate(cfg, cand_ctrls, scenario)
    _check_sim(cand, "candidate")
    base = stage_simulate(cfg, base_ctrls, scenario)
    _check_sim(base, "baseline")
    emit("sim_candidate.csv", cand.to_csv())
    emit("sim_baseline.csv", base.to_csv())
    written += _save_sim_figures(out, [cand, base], ["candidate", "baseline"], cfg.svg)

    print("\n== report")
    rep = aggregate_j(raw_indices(cand, scenario.transient_windows),
                      raw_indices(base, scenario.transient_windows), cfg.load_weights())
    print("\n".join(_report_table(rep)))
    emit("metrics.csv", _report_csv(rep))
    emit("metrics.json", _json_text(rep.to_dict()))

    if cfg.sweep_enabled():
        grid = cfg.sweep_grid()
        print(f"\n== sweep ({grid.shape[0]} x {grid.shape[1]})")
        surface = stage_sweep(cfg, models, scenario, base, grid, args.workers)
        written += write_surfaces(surface, out)
        written += _save_sweep_figures(out, surface, cfg.svg)
        a, b, j = argmin_j(surface)
        print(f"argmin J = {j:.6g} at lambda11 = {a:g}, lambda22 = {b:g}")

    manifest = {
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": str(args.config) if args.config else None,
        "lambda": list(cfg.lambdas()),
        "ts": scenario.ts,
        "artifacts": {p.name: _sha256(p) for p in sorted(set(written))},
    }
    (out / "run_manifest.json").write_text(_json_text(manifest))
    print(f"\nwrote {len(set(written))} artifacts and run_manifest.json to {out}")
    return 0


# -- parser --------------------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="project configuration JSON")
    p.add_argument("--out", help="output directory")
    p.add_argument("--ts", type=float, help="sample time in seconds")
    p.add_argument("--lambda11", type=float, help="IMC filter constant, loop 1")
    p.add_argument("--lambda22", type=float, help="IMC filter constant, loop 2")
    p.add_argument("--weights", help="JSON list of the eight J weights")
    p.add_argument("--svg", action="store_true", help="also write SVG figures")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="refrig-imc",
                                 description="IMC-PID design and evaluation for a 2x2 "
                                             "refrigeration plant.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rga", help="steady-state gains, RGA and pairing")
    _common(p)
    p.set_defaults(func=cmd_rga)

    p = sub.add_parser("reduce", help="fit second-order models to step responses")
    _common(p)
    p.add_argument("source", nargs="*",
                   help="g11/g12/g21/g22, a transfer-function JSON, or a CSV with a y column")
    p.add_argument("--horizon", type=float, help="step-response length in seconds")
    p.add_argument("--amplitude", type=float, default=1.0, help="input step size")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("tune", help="IMC-PID gains")
    _common(p)
    p.add_argument("--kp", type=float, help="tune a single model instead of both loops")
    p.add_argument("--tau1", type=float)
    p.add_argument("--tau2", type=float)
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("simulate", help="closed-loop run, written as CSV")
    _common(p)
    p.add_argument("--controller", choices=("candidate", "baseline"), default="candidate")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="indices and J from two simulation CSVs")
    _common(p)
    p.add_argument("candidate")
    p.add_argument("baseline")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.set_defaults(func=cmd_report)

    for name, fn, hlp in (("sweep", cmd_sweep, "grid search over the filter constants"),
                          ("pipeline", cmd_pipeline, "rga, reduce, tune, simulate, report, sweep")):
        p = sub.add_parser(name, help=hlp)
        _common(p)
        p.add_argument("--workers", type=int,
                       help="sweep worker processes (default: REFRIG_IMC_THREADS or CPU count)")
        if name == "sweep":
            p.add_argument("--grid11", help="lambda11 values, start:stop:step or a,b,c")
            p.add_argument("--grid22", help="lambda22 values, start:stop:step or a,b,c")
        p.set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RefrigImcError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
