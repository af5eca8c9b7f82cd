"""The eleven acceptance criteria at their stated tolerances.

Each test records a one-line verdict that is printed in the terminal summary
under "acceptance criteria". Long Monte Carlo runs (criterion 7 dominates)
take about 9 minutes on one core.
"""

import math
import random
from dataclasses import replace

import numpy as np
import pytest
from scipy import integrate, optimize

from conftest import record_acceptance
from mtjstdp import MaterialParams, ResistanceModel, State, ThermalParams, Waveform
from mtjstdp import magnetodynamics as md
from mtjstdp.cli import main as cli_main
from mtjstdp.crossbar import CrossbarConfig, SpikeSchedule, switch_probability
from mtjstdp.montecarlo import (
    SimConfig,
    StdpProtocol,
    estimate_switch_prob,
    run_batch,
    stdp_sweep,
    wilson_interval,
)
from mtjstdp.thermal import ThermalState, analytic_cooling, analytic_heating, thermal_step
from mtjstdp.waveforms import DEFAULT_DELTA_T_GRID, DEFAULT_POST, DEFAULT_PRE, Direction, neuron_waveform

NS = 1e-9
MAT, TH = MaterialParams(), ThermalParams()
SIM = SimConfig()
Z95_ONE_SIDED = 1.6448536269514722


def _model(state):
    return ResistanceModel(current_state=State(state))


def _overlap(a, b):
    return a[0] <= b[1] and b[0] <= a[1]


# 1 ---------------------------------------------------------------------------


def test_criterion_1_thermal_oracle():
    rng = random.Random(1)
    worst = 0.0
    for _ in range(200):
        power = rng.uniform(0, 5e-3)
        t_on = rng.uniform(0.01, 50) * NS
        t_off = rng.uniform(0.01, 50) * NS
        st = ThermalState(300.0, 300.0)
        cuts = sorted(rng.uniform(0, t_on) for _ in range(rng.randint(0, 30)))
        for a, b in zip([0.0] + cuts, cuts + [t_on]):
            if b > a:
                st = thermal_step(st, power, TH, b - a)
        worst = max(worst, abs(st.T_AF / analytic_heating(t_on, power, TH) - 1))
        T1 = st.T_AF
        cuts = sorted(rng.uniform(0, t_off) for _ in range(rng.randint(0, 30)))
        for a, b in zip([0.0] + cuts, cuts + [t_off]):
            if b > a:
                st = thermal_step(st, 0.0, TH, b - a)
        worst = max(worst, abs(st.T_AF / analytic_cooling(t_off, T1, TH) - 1))
    st = ThermalState(300.0, 300.0)
    for _ in range(1000):
        st = thermal_step(st, 100e-6, TH, TH.thermal_time_constant / 1000)
    exact = 300.0 + 83600.0 * 100e-6 * (1 - math.exp(-1))
    # 305.285 is the closed form 305.2845279 K printed to three decimals
    ok = worst <= 1e-9 and abs(st.T_AF - exact) <= 1e-6 and round(st.T_AF, 3) == 305.285
    record_acceptance(1, ok, f"max relative error {worst:.2e}; T(tau) = {st.T_AF:.7f} K "
                             f"(closed form {exact:.7f} K, 3 dp {round(st.T_AF, 3)})")
    assert ok


# 2 ---------------------------------------------------------------------------


def test_criterion_2_magnetization_conservation():
    cfg = SimConfig(horizon=1e6 * 1e-12, relax_window=0.0, record_traces=True)
    res = run_batch(MAT, TH, _model(State.P), [Waveform()], [1], [7], cfg)
    tr = res.trace[0]
    norm_dev = float(np.max(np.abs(np.sqrt(tr[:, 1] ** 2 + tr[:, 2] ** 2 + tr[:, 3] ** 2) - 1)))
    mat = MAT.pack()
    mat[md.ALPHA] = 0.0

    def drift(dt):
        m = (math.sin(0.4), 0.0, math.cos(0.4))
        worst = 0.0
        for _ in range(10_000):
            m = md.heun_step(*m, 0.0, 0.0, 0.0, 0.0, dt, mat)
            worst = max(worst, abs(m[2] - math.cos(0.4)))
        return worst

    # the integrator's m_z error is ~(omega dt)^4 / 8 per step, so the 1e-6
    # budget is met at dt = 0.1 ps; the 1 ps value is reported for reference
    d_fine, d_default = drift(1e-13), drift(1e-12)
    ok = tr.shape[0] == 1_000_001 and norm_dev <= 1e-9 and d_fine <= 1e-6
    record_acceptance(2, ok, f"max ||m|-1| over 1e6 steps at 300 K = {norm_dev:.1e}; zero-damping m_z drift over "
                             f"1e4 steps = {d_fine:.1e} at dt 0.1 ps ({d_default:.1e} at 1 ps)")
    assert ok


# 3 ---------------------------------------------------------------------------


def test_criterion_3_initial_angle_statistics():
    n = 100_000
    cfg = SimConfig(horizon=1e-12, relax_window=0.0, record_traces=True)
    res = run_batch(MAT, TH, _model(State.P), [Waveform()] * n, [1] * n, range(n), cfg)
    mz = res.trace[:, 0, 3]
    theta2 = float(np.mean(np.arccos(np.clip(mz, -1, 1)) ** 2))
    delta = 73.0
    w = lambda t: math.sin(t) * math.exp(-delta * math.sin(t) ** 2)
    num = integrate.quad(lambda t: t * t * w(t), 0, math.pi / 2, points=[0.05, 0.2], epsabs=0, epsrel=1e-12)[0]
    den = integrate.quad(w, 0, math.pi / 2, points=[0.05, 0.2], epsabs=0, epsrel=1e-12)[0]
    oracle = num / den
    rel = abs(theta2 / oracle - 1)
    ok = rel <= 0.05
    record_acceptance(3, ok, f"<theta^2> = {theta2:.6f} vs quadrature {oracle:.6f} (relative {rel:.2%})")
    assert ok


# 4 ---------------------------------------------------------------------------


def test_criterion_4_retention():
    cfg = SimConfig(horizon=20 * NS, n_trials=1000)
    counts = {s.name: estimate_switch_prob(MAT, TH, _model(s), Waveform(), cfg).n_switched for s in State}
    ok = all(c <= 1 for c in counts.values())
    record_acceptance(4, ok, f"switches in 1000 idle 20 ns trials: {counts}")
    assert ok


# 5 ---------------------------------------------------------------------------


def _lone_cases():
    proto = StdpProtocol()
    cases = {}
    for d in Direction:
        heating, _ = proto.pulses(d)
        for s in State:
            for pol in (1, -1):
                h = heating.with_polarity(pol)
                cases[f"heating {h.voltage:+g} V from {s.name}"] = (Waveform(((0.0, h.duration, h.voltage),)), s)
    for name, spec, sign in (("pre", DEFAULT_PRE, 1), ("post", DEFAULT_POST, -1)):
        wf = neuron_waveform([0.0], spec)
        if sign < 0:
            wf = Waveform() - wf
        for s in State:
            cases[f"lone {name} neuron from {s.name}"] = (wf, s)
    return cases


def test_criterion_5_incubation_and_half_select():
    cfg = SimConfig(n_trials=1000)
    results = {}
    for name, (wf, s) in _lone_cases().items():
        results[name] = estimate_switch_prob(MAT, TH, _model(s), wf, cfg).p
    worst = max(results, key=results.get)
    ok = all(p < 0.05 for p in results.values())
    record_acceptance(5, ok, f"{len(results)} cases, worst {worst!r} p = {results[worst]:.3f} "
                             f"(all: {', '.join(f'{p:.3f}' for p in results.values())})")
    assert ok


# 6 ---------------------------------------------------------------------------


def test_criterion_6_temperature_monotonicity():
    # reference pulse: default switching duration at 9 V, p(300 K) ~ 0.4, where
    # the binomial test has the most power
    wf = Waveform(((0.0, DEFAULT_POST.switching.duration, -9.0),))
    cfg = SimConfig(n_trials=2000)
    cold = estimate_switch_prob(MAT, TH, _model(State.AP), wf, cfg, clamp_temperature=300.0)
    hot = estimate_switch_prob(MAT, TH, _model(State.AP), wf, cfg, clamp_temperature=350.0)
    pooled = (cold.n_switched + hot.n_switched) / 4000
    z = (hot.p - cold.p) / math.sqrt(pooled * (1 - pooled) * 2 / 2000)
    ok = z > Z95_ONE_SIDED
    record_acceptance(6, ok, f"p(300 K) = {cold.p:.4f}, p(350 K) = {hot.p:.4f}, z = {z:.2f} "
                             f"(one-sided 95% needs > {Z95_ONE_SIDED:.3f})")
    assert ok


# 7 ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def default_curve():
    return stdp_sweep(DEFAULT_DELTA_T_GRID, StdpProtocol(), MAT, TH, ResistanceModel(), SimConfig(), n_trials=2000)


def _fit_tau(points, baseline):
    x = np.array([abs(p.delta_t) / NS for p in points])
    y = np.array([abs(p.p_signed) for p in points]) - baseline
    sigma = np.array([max(math.sqrt(p.p * (1 - p.p) / p.n_trials), 1e-3) for p in points])
    (amp, tau), _ = optimize.curve_fit(lambda t, a, k: a * np.exp(-t / k), x, y, p0=(0.1, 10.0), sigma=sigma)
    return amp, tau


def test_criterion_7_stdp_shape(default_curve):
    proto = StdpProtocol()
    pts = default_curve.points
    tau_tr = TH.thermal_time_constant / NS
    sign_ok = all((p.p_signed >= 0) if p.delta_t > 0 else (p.p_signed <= 0) for p in pts)
    sign_ok &= all((p.direction is Direction.AP_TO_P) == (p.delta_t > 0) for p in pts)
    details, shape_ok, fit_ok = [], True, True
    for d in Direction:
        branch = sorted((p for p in pts if p.direction is d), key=lambda p: abs(p.delta_t))
        near, far = branch[0], branch[-1]
        sep = near.ci_low > far.ci_high
        shape_ok &= sep
        base = estimate_switch_prob(MAT, TH, _model(d.initial_state), proto.baseline_waveform(d), SimConfig(),
                                    n_trials=2000, device_id=1000)
        amp, tau = _fit_tau(branch, base.p)
        fit_ok &= tau_tr / 2 <= tau <= 2 * tau_tr
        details.append(f"{d.value}: |p|({near.delta_t / NS:+g} ns) = {near.p:.4f} [{near.ci_low:.4f}, "
                       f"{near.ci_high:.4f}] vs |p|({far.delta_t / NS:+g} ns) = {far.p:.4f} [{far.ci_low:.4f}, "
                       f"{far.ci_high:.4f}], baseline {base.p:.4f}, fitted tau {tau:.2f} ns")
    ok = sign_ok and shape_ok and fit_ok
    record_acceptance(7, ok, f"(a) signs {'ok' if sign_ok else 'wrong'}; (b) {'ok' if shape_ok else 'overlap'}; "
                             f"(c) tau_TR {tau_tr:g} ns, window [{tau_tr / 2:g}, {2 * tau_tr:g}]; " + "; ".join(details))
    assert ok


# 8 ---------------------------------------------------------------------------


def test_criterion_8_pulse_engineering():
    half = StdpProtocol(
        replace(DEFAULT_PRE, switching=DEFAULT_PRE.switching.scaled(0.5)),
        replace(DEFAULT_POST, switching=DEFAULT_POST.switching.scaled(0.5)),
    )
    grid = [-0.5 * NS, 0.5 * NS]
    full = stdp_sweep(grid, StdpProtocol(), MAT, TH, ResistanceModel(), SimConfig(), n_trials=2000).points
    low = stdp_sweep(grid, half, MAT, TH, ResistanceModel(), SimConfig(), n_trials=2000).points
    ok, parts = True, []
    for a, b in zip(full, low):
        ok &= b.ci_high < a.ci_low
        parts.append(f"dt {a.delta_t / NS:+g} ns: |p| {a.p:.4f} [{a.ci_low:.4f}, {a.ci_high:.4f}] -> "
                     f"{b.p:.4f} [{b.ci_low:.4f}, {b.ci_high:.4f}]")
    peak_full = max(p.p for p in full)
    peak_low = max(p.p for p in low)
    ok &= peak_low < peak_full
    record_acceptance(8, ok, f"halved switching amplitude: peak {peak_full:.4f} -> {peak_low:.4f}; " + "; ".join(parts))
    assert ok


# 9 ---------------------------------------------------------------------------


def test_criterion_9_crossbar_equivalence():
    proto = StdpProtocol()
    span = DEFAULT_PRE.span
    assert DEFAULT_POST.span == span
    ok, parts = True, []
    for dt_ns in (1, 4, 16, -1, -4, -16):
        d = dt_ns * NS
        direction = Direction.AP_TO_P if d > 0 else Direction.P_TO_AP
        s0 = State(direction.initial_state)
        pair = estimate_switch_prob(MAT, TH, _model(s0), proto.waveform(d), SimConfig(), n_trials=1000, device_id=50)
        cfg = CrossbarConfig(1, 1, initial_states=((s0,),))
        first, second = SpikeSchedule(((0.0,),)), SpikeSchedule(((span + abs(d),),))
        pre, post = (first, second) if d > 0 else (second, first)
        px = switch_probability(cfg, pre, post, SimConfig(), 1000)[0, 0]
        ci_x = wilson_interval(round(px * 1000), 1000)
        agree = _overlap(pair.ci, ci_x)
        ok &= agree
        parts.append(f"{dt_ns:+d} ns pair {pair.p:.3f} crossbar {px:.3f}{'' if agree else ' (disjoint)'}")
    record_acceptance(9, ok, "1x1 crossbar vs pair protocol, 1000 trials: " + "; ".join(parts))
    assert ok


# 10 --------------------------------------------------------------------------


def test_criterion_10_determinism(tmp_path):
    def run(command, threads, tag):
        out = tmp_path / f"{command}-{tag}"
        extra = ["--trials", "50"] if command == "stdp-sweep" else []
        assert cli_main([command, "--threads", str(threads), "--out-dir", str(out), "--seed", "99"] + extra) == 0
        return {p.name: p.read_bytes() for p in sorted(out.iterdir())}

    ok, parts = True, []
    for command in ("thermal-trace", "trial", "stdp-sweep", "crossbar"):
        a, b, c = run(command, 1, "a"), run(command, 1, "b"), run(command, 8, "c")
        same = a == b == c
        ok &= same
        parts.append(f"{command} {'identical' if same else 'DIFFERENT'} ({', '.join(a)})")
    record_acceptance(10, ok, "reruns at 1, 1 and 8 workers: " + "; ".join(parts))
    assert ok


# 11 --------------------------------------------------------------------------


def test_criterion_11_noise_convention():
    pair = StdpProtocol().waveform(1 * NS)
    reference = Waveform(((0.0, DEFAULT_POST.switching.duration, -9.0),))

    def p_at(convention, wf, dt):
        mat = replace(MAT, noise_convention=convention)
        return estimate_switch_prob(mat, TH, _model(State.AP), wf, SimConfig(dt=dt), n_trials=2000)

    def pair_of(convention, wf):
        a, b = (p_at(convention, wf, dt) for dt in (1e-12, 0.5e-12))
        return a, b, _overlap(a.ci, b.ci)

    brown = pair_of("brown", pair)
    ok = brown[2]
    notes = []
    for label, wf in (("pair +1 ns", pair), ("9 V reference pulse", reference)):
        a, b, same = pair_of("paper-literal", wf)
        notes.append(f"{label} p = {a.p:.4f} (1 ps) vs {b.p:.4f} (0.5 ps), CIs {'overlap' if same else 'disjoint'}")
    # paper-literal noise variance is (dt^2 / 2) times the brown value, so the
    # in-pulse noise all but vanishes and outcomes follow the initial angle
    record_acceptance(
        11, ok,
        f"brown pair +1 ns p = {brown[0].p:.4f} (dt 1 ps) vs {brown[1].p:.4f} (dt 0.5 ps), CIs "
        f"{'overlap' if ok else 'disjoint'}; paper-literal: " + "; ".join(notes),
    )
    assert ok
