"""Monte Carlo trials, switching probabilities and STDP curves."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import kernels
from .errors import ConfigurationError
from .magnetodynamics import MAX_DT, MaterialParams
from .rng import make_stream_id
from .thermal import ResistanceModel, State, ThermalParams
from .waveforms import DEFAULT_POST, DEFAULT_PRE, Direction, NeuronPulseSpec, Waveform, pair_protocol

Z95 = 1.959963984540054


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-12
    horizon: Optional[float] = None  # s; None fits each waveform exactly
    relax_window: float = 5e-9
    switch_threshold: float = 0.5
    n_trials: int = 1000
    master_seed: int = 20240611
    record_traces: bool = False
    record_every: int = 1
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.dt <= MAX_DT:
            raise ConfigurationError(f"dt must be in (0, {MAX_DT}] s")
        if self.horizon is not None and not self.horizon > 0:
            raise ConfigurationError("horizon must be > 0")
        if self.relax_window < 0:
            raise ConfigurationError("relax_window must be >= 0")
        if not abs(self.switch_threshold) < 1:
            raise ConfigurationError("|switch_threshold| must be < 1")
        if self.n_trials < 1:
            raise ConfigurationError("n_trials must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError("master_seed must be a 64-bit unsigned integer")
        if self.workers < 1 or self.record_every < 1:
            raise ConfigurationError("workers and record_every must be >= 1")

    def horizon_for(self, waveform: Waveform) -> float:
        if self.horizon is None:
            return max(waveform.end, self.dt)
        if waveform.end > self.horizon * (1 + 1e-12):
            raise ConfigurationError(
                f"waveform ends at {waveform.end:.4g} s, beyond the horizon {self.horizon:.4g} s"
            )
        return self.horizon

    def n_steps(self, horizon: float) -> int:
        return int(round((horizon + self.relax_window) / self.dt))


@dataclass
class TrialOutcome:
    switched: bool
    initial_state: State
    final_state: State
    final_m: np.ndarray
    peak_temperature: float
    events: list  # [(time_s, new_state)]
    traces: Optional[dict] = None


def wilson_interval(k: int, n: int, z: float = Z95):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class SwitchEstimate:
    n_trials: int
    n_switched: int

    @property
    def p(self) -> float:
        return self.n_switched / self.n_trials

    @property
    def ci(self):
        return wilson_interval(self.n_switched, self.n_trials)

    def __iter__(self):
        lo, hi = self.ci
        return iter((self.p, lo, hi))


def _elec(params: MaterialParams, thermal: ThermalParams, model: ResistanceModel) -> np.ndarray:
    e = np.zeros(kernels.ELEC_SIZE)
    e[kernels.T_RT] = thermal.room_temperature
    e[kernels.ALPHA_J] = thermal.joule_heating_constant
    e[kernels.TAU] = thermal.thermal_time_constant
    e[kernels.R_P] = model.R_P
    e[kernels.TMR] = model.TMR
    e[kernels.ETA] = params.spin_polarization
    e[kernels.DELTA0] = params.energy_barrier * params.barrier_temperature / thermal.room_temperature
    return e


def run_batch(params, thermal, model, waveforms: Sequence[Waveform], init_states, stream_ids, config: SimConfig,
              clamp=None, n_steps=None, max_events=16) -> kernels.BatchResult:
    """Integrate one trial per waveform, split across ``config.workers`` threads.

    Every trial is keyed by its own stream id, so the result does not depend
    on the worker count or the chunking.
    """
    n = len(waveforms)
    if n_steps is None:
        n_steps = max(config.n_steps(config.horizon_for(w)) for w in waveforms)
    segments = kernels.Segments.build([w.to_steps(config.dt) for w in waveforms])
    stream_ids = np.asarray(stream_ids, dtype=np.uint64)
    init_states = np.asarray(init_states, dtype=np.int64)
    clamp = np.zeros(n) if clamp is None else np.broadcast_to(np.asarray(clamp, dtype=float), (n,)).copy()
    rec = config.record_every if config.record_traces else 0
    args = (params.pack(), _elec(params, thermal, model), config.dt, n_steps, config.master_seed)

    def work(idx):
        return kernels.integrate(*args, stream_ids[idx], init_states[idx], segments.take(idx), clamp[idx],
                                 config.switch_threshold, rec, max_events)

    chunks = [c for c in np.array_split(np.arange(n), min(config.workers, n)) if c.size]
    if len(chunks) == 1:
        return work(chunks[0])
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(work, chunks))
    return kernels.BatchResult.concat(parts)


def _outcome(batch, i, init_state, dt):
    events = [
        (int(batch.event_step[i, j]) * dt, State(int(batch.event_dir[i, j])))
        for j in range(min(batch.event_count[i], batch.event_step.shape[1]))
    ]
    traces = None
    if batch.trace is not None:
        tr = batch.trace[i]
        traces = {name: tr[:, j].copy() for j, name in enumerate(kernels.TRACE_COLUMNS)}
    final = State(int(batch.final_state[i]))
    return TrialOutcome(
        switched=final != init_state,
        initial_state=State(init_state),
        final_state=final,
        final_m=batch.final_m[i].copy(),
        peak_temperature=float(batch.peak_temperature[i]),
        events=events,
        traces=traces,
    )


def run_trial(params: MaterialParams, thermal_params: ThermalParams, model: ResistanceModel, waveform: Waveform,
              config: SimConfig, trial_index: int, device_id: int = 0, clamp_temperature: float = 0.0) -> TrialOutcome:
    """One coupled trial starting from ``model.current_state`` at room temperature."""
    init = int(model.current_state)
    batch = run_batch(params, thermal_params, model, [waveform], [init],
                      [make_stream_id(device_id, trial_index)], config, clamp=clamp_temperature)
    return _outcome(batch, 0, State(init), config.dt)


def estimate_switch_prob(params, thermal_params, model, waveform, config: SimConfig, n_trials: int = None,
                         device_id: int = 0, clamp_temperature: float = 0.0) -> SwitchEstimate:
    """Switching probability of ``waveform`` from ``model.current_state``."""
    n = config.n_trials if n_trials is None else n_trials
    if n < 1:
        raise ConfigurationError("n_trials must be >= 1")
    init = int(model.current_state)
    streams = [make_stream_id(device_id, i) for i in range(n)]
    batch = run_batch(params, thermal_params, model, [waveform] * n, [init] * n, streams, config,
                      clamp=clamp_temperature)
    return SwitchEstimate(n, int(np.count_nonzero(batch.final_state != init)))


# ---------------------------------------------------------------------------
# STDP


@dataclass(frozen=True)
class StdpProtocol:
    """Pulse programs of the pre- and post-neurons.

    Potentiation (pre fires first) pairs the pre heating pulse with the post
    switching pulse on an AP device; depression pairs the post heating pulse
    with the pre switching pulse on a P device. Heating polarities are taken
    in the device frame a crossbar would produce (pre side +, post side -).
    """

    pre: NeuronPulseSpec = DEFAULT_PRE
    post: NeuronPulseSpec = DEFAULT_POST

    def pulses(self, direction: Direction):
        direction = Direction(direction)
        if direction is Direction.AP_TO_P:
            return self.pre.heating, self.post.switching
        return self.post.heating.with_polarity(-self.post.heating.polarity), self.pre.switching

    def waveform(self, delta_t: float) -> Waveform:
        direction = Direction.AP_TO_P if delta_t > 0 else Direction.P_TO_AP
        heating, switching = self.pulses(direction)
        return pair_protocol(abs(delta_t), heating, switching, direction)

    def baseline_waveform(self, direction: Direction) -> Waveform:
        """The switching pulse alone, placed where a pairing would put it."""
        heating, switching = self.pulses(direction)
        return pair_protocol(0.0, heating.scaled(0.0), switching, direction)


@dataclass(frozen=True)
class StdpPoint:
    delta_t: float
    direction: Direction
    n_trials: int
    n_switched: int
    p_signed: float
    ci_low: float
    ci_high: float

    @property
    def p(self) -> float:
        return abs(self.p_signed)


@dataclass
class StdpCurve:
    points: List[StdpPoint] = field(default_factory=list)

    def branch(self, direction: Direction) -> List[StdpPoint]:
        direction = Direction(direction)
        return [pt for pt in self.points if pt.direction is direction]

    @property
    def delta_t(self) -> np.ndarray:
        return np.array([pt.delta_t for pt in self.points])

    @property
    def p_signed(self) -> np.ndarray:
        return np.array([pt.p_signed for pt in self.points])


def _sign_for(direction: Direction, convention: str) -> int:
    if convention not in ("caption", "text"):
        raise ConfigurationError("sign convention must be 'caption' or 'text'")
    positive = Direction.AP_TO_P if convention == "caption" else Direction.P_TO_AP
    return 1 if direction is positive else -1


def sweep_jobs(delta_ts):
    """``(delta_t, direction)`` pairs in ascending delta_t; 0 runs both branches."""
    jobs = []
    for dt in sorted(float(x) for x in delta_ts):
        if dt < 0:
            jobs.append((dt, Direction.P_TO_AP))
        elif dt > 0:
            jobs.append((dt, Direction.AP_TO_P))
        else:
            jobs.extend([(0.0, Direction.P_TO_AP), (0.0, Direction.AP_TO_P)])
    return jobs


def stdp_sweep(delta_ts, protocol: StdpProtocol, params: MaterialParams, thermal_params: ThermalParams,
               model: ResistanceModel, config: SimConfig, n_trials: int = None,
               sign_convention: str = "caption") -> StdpCurve:
    """Signed switching probability against spike interval.

    delta_t > 0 (pre before post) drives AP -> P from AP; delta_t < 0 drives
    P -> AP from P. With the default ``caption`` convention AP -> P counts
    positive; ``text`` flips the sign.
    """
    jobs = sweep_jobs(delta_ts)
    if not jobs:
        raise ValueError("delta_t grid must not be empty")
    n = config.n_trials if n_trials is None else n_trials
    curve = StdpCurve()
    for idx, (dt, direction) in enumerate(jobs):
        heating, switching = protocol.pulses(direction)
        wf = pair_protocol(abs(dt), heating, switching, direction)
        est = estimate_switch_prob(params, thermal_params, model.with_state(direction.initial_state), wf, config,
                                   n_trials=n, device_id=1 + idx)
        _, lo, hi = est
        curve.points.append(StdpPoint(dt, direction, n, est.n_switched,
                                      _sign_for(direction, sign_convention) * est.p, lo, hi))
    return curve


# ---------------------------------------------------------------------------
# deterministic temperature trace


@dataclass
class ThermalTrace:
    t: np.ndarray
    voltage: np.ndarray
    power: np.ndarray
    temperature: np.ndarray


def thermal_trace(waveform: Waveform, thermal_params: ThermalParams, model: ResistanceModel,
                  config: SimConfig) -> ThermalTrace:
    """Temperature on the simulation grid with the junction held in
    ``model.current_state``; row k holds the values at t_k = k dt, with the
    voltage and power applied over [t_k, t_k + dt)."""
    horizon = config.horizon_for(waveform)
    n = config.n_steps(horizon)
    volts = np.zeros(n + 1)
    for k0, k1, v in waveform.to_steps(config.dt):
        volts[k0:min(k1, n + 1)] = v
    r = model.R_P if model.current_state == State.P else model.R_AP
    power = volts * volts / r
    decay = math.exp(-config.dt / thermal_params.thermal_time_constant)
    temp = np.empty(n + 1)
    T = thermal_params.room_temperature
    for k in range(n + 1):
        temp[k] = T
        target = thermal_params.room_temperature + thermal_params.joule_heating_constant * power[k]
        T = target + (T - target) * decay
    return ThermalTrace(np.arange(n + 1) * config.dt, volts, power, temp)
