"""Command-line front end: ``mtjstdp {thermal-trace,trial,stdp-sweep,crossbar}``."""

import argparse
import csv
import io
import json
import os
import sys
from typing import List, Optional

from . import config as cfgmod
from .crossbar import effective_pairings, simulate
from .errors import ConfigurationError
from .montecarlo import run_trial, stdp_sweep, thermal_trace
from .svg import line_chart
from .waveforms import Direction, Waveform


def fmt(x) -> str:
    return f"{float(x) + 0.0:.9g}"


def _write(path: str, text: str):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None


def _csv(path: str, header: List[str], rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    _write(path, buf.getvalue())


def _heating_waveform(exp) -> Waveform:
    h = exp.protocol.pre.heating
    return Waveform(((0.0, h.duration, h.voltage),) if h.amplitude > 0 else ())


def cmd_thermal_trace(exp, out_dir, plot):
    wf = _heating_waveform(exp)
    sim = exp.sim
    if sim.horizon is None:
        sim = exp.with_sim(horizon=max(wf.end, sim.dt) + 5 * exp.thermal.thermal_time_constant, relax_window=0.0).sim
    tr = thermal_trace(wf, exp.thermal, exp.resistance, sim)
    rows = ((fmt(t * 1e9), fmt(v), fmt(p), fmt(T)) for t, v, p, T in zip(tr.t, tr.voltage, tr.power, tr.temperature))
    _csv(os.path.join(out_dir, "thermal_trace.csv"), ["t_ns", "voltage_V", "power_W", "temperature_K"], rows)
    if plot:
        svg = line_chart([("T_AF", tr.t * 1e9, tr.temperature)], "Free-layer temperature", "t (ns)", "T (K)")
        _write(os.path.join(out_dir, "thermal_trace.svg"), svg)


def cmd_trial(exp, out_dir, plot):
    dt = exp.trial_delta_t
    direction = Direction.AP_TO_P if dt > 0 else Direction.P_TO_AP
    wf = exp.protocol.waveform(dt)
    model = exp.resistance.with_state(direction.initial_state)
    out = run_trial(exp.material, exp.thermal, model, wf, exp.with_sim(record_traces=True).sim, trial_index=0)
    tr = out.traces
    rows = (
        (fmt(t * 1e9), fmt(x), fmt(y), fmt(z), fmt(T), fmt(v))
        for t, x, y, z, T, v in zip(tr["t"], tr["mx"], tr["my"], tr["mz"], tr["temperature"], tr["voltage"])
    )
    _csv(os.path.join(out_dir, "trial_trace.csv"), ["t_ns", "mx", "my", "mz", "temperature_K", "voltage_V"], rows)
    if plot:
        svg = line_chart([("m_z", tr["t"] * 1e9, tr["mz"])], "Single trial", "t (ns)", "m_z")
        _write(os.path.join(out_dir, "trial_trace.svg"), svg)
    return f"switched={out.switched} final_state={out.final_state.name} peak_T={out.peak_temperature:.1f} K"


def cmd_stdp_sweep(exp, out_dir, plot):
    curve = stdp_sweep(exp.delta_t_grid, exp.protocol, exp.material, exp.thermal, exp.resistance, exp.sim,
                       sign_convention=exp.sign_convention)
    rows = (
        (fmt(p.delta_t * 1e9), p.direction.value, p.n_trials, p.n_switched, fmt(p.p_signed), fmt(p.ci_low),
         fmt(p.ci_high))
        for p in curve.points
    )
    _csv(os.path.join(out_dir, "stdp_curve.csv"),
         ["delta_t_ns", "direction", "n_trials", "n_switched", "p_signed", "ci_low", "ci_high"], rows)
    if plot:
        svg = line_chart([("p_signed", curve.delta_t * 1e9, curve.p_signed)], "STDP curve", "delta t (ns)",
                         "signed switching probability", markers=True)
        _write(os.path.join(out_dir, "stdp_curve.svg"), svg)


def cmd_crossbar(exp, out_dir, plot):
    res = simulate(exp.crossbar, exp.pre_spikes, exp.post_spikes, exp.sim, repetition=exp.repetition)
    rows, cols = exp.crossbar.rows, exp.crossbar.cols

    def names(m):
        return [["P" if s > 0 else "AP" for s in row] for row in m]

    doc = {
        "rows": rows,
        "cols": cols,
        "initial_states": names(res.initial_states),
        "final_states": names(res.final_states),
        "events": [
            {"row": r, "col": c, "time_ns": fmt(t * 1e9), "state": s.name}
            for (r, c), evs in res.events.items() for t, s in evs
        ],
        "peak_temperature_K": [[fmt(x) for x in row] for row in res.peak_temperature],
        "pairings": [
            {"row": r, "col": c, "delta_t_ns": fmt(d * 1e9)}
            for (r, c), d in effective_pairings(exp.pre_spikes, exp.post_spikes, exp.crossbar.pre_spec,
                                                exp.crossbar.post_spec)
        ],
    }
    _write(os.path.join(out_dir, "crossbar_result.json"), json.dumps(doc, indent=2) + "\n")
    _csv(
        os.path.join(out_dir, "crossbar_summary.csv"),
        ["row", "col", "initial_state", "final_state", "n_events", "peak_temperature_K"],
        (
            (r, c, doc["initial_states"][r][c], doc["final_states"][r][c], len(res.events[(r, c)]),
             fmt(res.peak_temperature[r, c]))
            for r in range(rows) for c in range(cols)
        ),
    )


COMMANDS = {
    "thermal-trace": cmd_thermal_trace,
    "trial": cmd_trial,
    "stdp-sweep": cmd_stdp_sweep,
    "crossbar": cmd_crossbar,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config (default: shipped default profile)")
    common.add_argument("--out-dir", default=".", help="output directory (created if missing)")
    common.add_argument("--seed", type=int, help="override simulation.master_seed")
    common.add_argument("--trials", type=int, help="override simulation.n_trials")
    common.add_argument("--threads", type=int, help="worker threads for Monte Carlo trials")
    common.add_argument("--no-plot", action="store_true", help="skip SVG output")
    parser = argparse.ArgumentParser(prog="mtjstdp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = cfgmod.load(args.config)
        sim = doc["simulation"]
        if args.seed is not None:
            sim["master_seed"] = args.seed
        if args.trials is not None:
            sim["n_trials"] = args.trials
        if args.threads is not None:
            sim["workers"] = args.threads
        doc = cfgmod.resolve(doc)
        exp = cfgmod.build(doc)
        os.makedirs(args.out_dir, exist_ok=True)
        # workers never change results, so keep them out of the recorded config
        recorded = json.loads(json.dumps(doc))
        recorded["simulation"]["workers"] = 1
        _write(os.path.join(args.out_dir, "config.json"), cfgmod.dumps(recorded))
        msg = COMMANDS[args.command](exp, args.out_dir, not args.no_plot)
    except (ConfigurationError, OSError, ValueError) as exc:
        print(f"mtjstdp {args.command}: error: {exc}", file=sys.stderr)
        return 2
    if msg:
        print(msg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
