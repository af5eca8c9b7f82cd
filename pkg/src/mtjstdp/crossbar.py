"""R x C arrays of junctions driven by row (pre) and column (post) neurons.

Device (r, c) sees V_row_r(t) - V_col_c(t). Selectors, sneak paths and line
parasitics are ignored, and overlapping spikes on one line add linearly.
Every device owns the Philox stream ``make_stream_id(r * cols + c,
repetition)``, so an array run equals running each device on its own.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError
from .magnetodynamics import MaterialParams
from .montecarlo import SimConfig, run_batch
from .rng import make_stream_id
from .thermal import ResistanceModel, State, ThermalParams
from .waveforms import DEFAULT_POST, DEFAULT_PRE, NeuronPulseSpec, Waveform, neuron_waveform

Cell = Tuple[int, int]


@dataclass(frozen=True)
class DeviceParams:
    material: MaterialParams = MaterialParams()
    thermal: ThermalParams = ThermalParams()
    resistance: ResistanceModel = ResistanceModel()


@dataclass(frozen=True)
class CrossbarConfig:
    rows: int
    cols: int
    device: DeviceParams = DeviceParams()
    pre_spec: NeuronPulseSpec = DEFAULT_PRE
    post_spec: NeuronPulseSpec = DEFAULT_POST
    initial_states: Optional[Tuple[Tuple[State, ...], ...]] = None  # None: all AP
    overrides: Mapping[Cell, DeviceParams] = field(default_factory=dict)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigurationError("rows and cols must be >= 1")
        init = self.initial_states
        if init is None:
            init = ((State.AP,) * self.cols,) * self.rows
        init = tuple(tuple(State(int(s)) for s in row) for row in init)
        if len(init) != self.rows or any(len(row) != self.cols for row in init):
            raise ConfigurationError(f"initial_states must be {self.rows}x{self.cols}")
        object.__setattr__(self, "initial_states", init)
        for r, c in self.overrides:
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise ConfigurationError(f"override for cell ({r}, {c}) lies outside the array")

    def params(self, r: int, c: int) -> DeviceParams:
        return self.overrides.get((r, c), self.device)


@dataclass(frozen=True)
class SpikeSchedule:
    """``times[i]``: spike times (s) of neuron i, strictly increasing."""

    times: Tuple[Tuple[float, ...], ...]

    def __post_init__(self):
        times = tuple(tuple(float(t) for t in row) for row in self.times)
        for i, row in enumerate(times):
            if any(t < 0 for t in row):
                raise ConfigurationError(f"neuron {i}: spike times must be non-negative")
            if any(b <= a for a, b in zip(row, row[1:])):
                raise ConfigurationError(f"neuron {i}: spike times must be strictly increasing")
        object.__setattr__(self, "times", times)

    @classmethod
    def silent(cls, n: int) -> "SpikeSchedule":
        return cls(((),) * n)

    def __len__(self):
        return len(self.times)


@dataclass
class CrossbarResult:
    initial_states: np.ndarray  # (rows, cols) of +1 P / -1 AP
    final_states: np.ndarray
    events: Dict[Cell, List[Tuple[float, State]]]
    peak_temperature: np.ndarray

    def state_matrix(self) -> List[List[str]]:
        return [[State(int(s)).name for s in row] for row in self.final_states]


def device_waveforms(config: CrossbarConfig, pre: SpikeSchedule, post: SpikeSchedule) -> Dict[Cell, Waveform]:
    if len(pre) != config.rows or len(post) != config.cols:
        raise ConfigurationError(
            f"schedules give {len(pre)} pre and {len(post)} post neurons for a {config.rows}x{config.cols} array"
        )
    row_v = [neuron_waveform(t, config.pre_spec) for t in pre.times]
    col_v = [neuron_waveform(t, config.post_spec) for t in post.times]
    return {(r, c): row_v[r] - col_v[c] for r in range(config.rows) for c in range(config.cols)}


def _common_steps(waves, sim: SimConfig) -> int:
    horizon = max(sim.horizon_for(w) for w in waves)
    return sim.n_steps(horizon)


def simulate(config: CrossbarConfig, pre: SpikeSchedule, post: SpikeSchedule, sim: SimConfig,
             repetition: int = 0) -> CrossbarResult:
    """One realization of the array; ``repetition`` selects the trial index of every stream.

    All devices share one step count (horizon plus relax window; with
    ``sim.horizon=None`` the horizon is the latest waveform end in the array).
    """
    waves = device_waveforms(config, pre, post)
    n_steps = _common_steps(waves.values(), sim)
    shape = (config.rows, config.cols)
    init = np.array(config.initial_states, dtype=np.int64).reshape(shape)
    final = np.zeros(shape, dtype=np.int64)
    peak = np.zeros(shape)
    events: Dict[Cell, List[Tuple[float, State]]] = {}
    groups: Dict[DeviceParams, List[Cell]] = {}
    for cell in waves:
        groups.setdefault(config.params(*cell), []).append(cell)
    for dev, cells in groups.items():
        batch = run_batch(
            dev.material, dev.thermal, dev.resistance,
            [waves[c] for c in cells], [init[c] for c in cells],
            [make_stream_id(r * config.cols + c, repetition) for r, c in cells],
            sim, n_steps=n_steps, max_events=64,
        )
        for i, cell in enumerate(cells):
            final[cell] = batch.final_state[i]
            peak[cell] = batch.peak_temperature[i]
            n_ev = min(int(batch.event_count[i]), batch.event_step.shape[1])
            events[cell] = [(int(batch.event_step[i, j]) * sim.dt, State(int(batch.event_dir[i, j])))
                            for j in range(n_ev)]
    return CrossbarResult(init, final, dict(sorted(events.items())), peak)


def switch_probability(config: CrossbarConfig, pre: SpikeSchedule, post: SpikeSchedule, sim: SimConfig,
                       n_repetitions: int) -> np.ndarray:
    """Per-device fraction of repetitions whose final state differs from the initial one.

    Repetition k uses the same streams as ``simulate(..., repetition=k)``.
    """
    if n_repetitions < 1:
        raise ConfigurationError("n_repetitions must be >= 1")
    waves = device_waveforms(config, pre, post)
    n_steps = _common_steps(waves.values(), sim)
    out = np.zeros((config.rows, config.cols))
    for (r, c), wf in waves.items():
        dev = config.params(r, c)
        s0 = int(config.initial_states[r][c])
        batch = run_batch(
            dev.material, dev.thermal, dev.resistance, [wf] * n_repetitions, [s0] * n_repetitions,
            [make_stream_id(r * config.cols + c, k) for k in range(n_repetitions)], sim, n_steps=n_steps,
        )
        out[r, c] = np.count_nonzero(batch.final_state != s0) / n_repetitions
    return out


def effective_pairings(pre: SpikeSchedule, post: SpikeSchedule, pre_spec: NeuronPulseSpec = DEFAULT_PRE,
                       post_spec: NeuronPulseSpec = DEFAULT_POST) -> List[Tuple[Cell, float]]:
    """Heating-to-switching intervals seen by each device.

    Every switching pulse is paired with the latest heating pulse from the
    other line that ended no later than its start. A post switching pulse
    after a pre heating pulse gives a positive interval; a pre switching
    pulse after a post heating pulse gives a negative one.
    """
    out = []
    for r, pre_t in enumerate(pre.times):
        for c, post_t in enumerate(post.times):
            pairs = []
            pairs += [(t, _gap(t, pre_t, pre_spec)) for t in post_t]
            pairs += [(t, _neg(_gap(t, post_t, post_spec))) for t in pre_t]
            out += [((r, c), d) for _, d in sorted(pairs) if d is not None]
    return out


def _gap(t_switch: float, heaters: Sequence[float], spec: NeuronPulseSpec):
    ends = [t + spec.span for t in heaters if t + spec.span <= t_switch]
    return t_switch - max(ends) if ends else None


def _neg(x):
    return None if x is None else (-x if x else 0.0)
