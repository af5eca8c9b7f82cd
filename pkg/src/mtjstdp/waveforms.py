"""Piecewise-constant voltage programs.

Device voltage is measured pinned-layer terminal minus free-layer terminal:
pre-neurons drive the pinned side (rows), post-neurons the free side
(columns). Positive device voltage favors AP, negative favors P.
"""

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError


class Direction(str, Enum):
    AP_TO_P = "AP->P"
    P_TO_AP = "P->AP"

    @property
    def drive_sign(self) -> int:
        """Sign of the device voltage that pushes toward the target state."""
        return -1 if self is Direction.AP_TO_P else 1

    @property
    def initial_state(self) -> int:
        return -1 if self is Direction.AP_TO_P else 1


@dataclass(frozen=True)
class PulseSpec:
    amplitude: float  # V
    duration: float  # s
    polarity: int = 1

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigurationError(f"pulse duration must be > 0, got {self.duration!r}")
        if self.amplitude < 0:
            raise ConfigurationError(f"pulse amplitude must be >= 0, got {self.amplitude!r}")
        if self.polarity not in (1, -1):
            raise ConfigurationError(f"pulse polarity must be +1 or -1, got {self.polarity!r}")

    @property
    def voltage(self) -> float:
        return self.polarity * self.amplitude

    def with_polarity(self, polarity: int) -> "PulseSpec":
        return PulseSpec(self.amplitude, self.duration, polarity)

    def scaled(self, factor: float) -> "PulseSpec":
        return PulseSpec(self.amplitude * factor, self.duration, self.polarity)


@dataclass(frozen=True)
class NeuronPulseSpec:
    """A spike event: switching pulse, then ``gap`` seconds later a heating pulse."""

    switching: PulseSpec
    heating: PulseSpec
    gap: float = 0.0

    def __post_init__(self):
        if self.gap < 0:
            raise ConfigurationError("gap must be >= 0")

    @property
    def heating_offset(self) -> float:
        return self.switching.duration + self.gap

    @property
    def span(self) -> float:
        return self.heating_offset + self.heating.duration


Segment = Tuple[float, float, float]


def _merge(pieces: List[Segment]) -> Tuple[Segment, ...]:
    """Drop empty and 0 V pieces; abutting pieces stay separate segments."""
    return tuple((a, b, v) for a, b, v in pieces if v != 0.0 and b > a)


@dataclass(frozen=True)
class Waveform:
    """Sorted, disjoint ``(start, end, voltage)`` segments; 0 V elsewhere."""

    segments: Tuple[Segment, ...] = ()

    def __post_init__(self):
        segs = tuple((float(a), float(b), float(v)) for a, b, v in self.segments)
        for a, b, _ in segs:
            if not b > a:
                raise ConfigurationError(f"segment end must exceed start: ({a}, {b})")
        for (_, b0, _), (a1, _, _) in zip(segs, segs[1:]):
            if a1 < b0:
                raise ConfigurationError("segments must be sorted and non-overlapping")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def superpose(cls, parts: Iterable["Waveform"], signs: Sequence[float] = None) -> "Waveform":
        """Linear superposition of waveforms (overlaps add)."""
        parts = list(parts)
        signs = [1.0] * len(parts) if signs is None else list(signs)
        edges = sorted({t for w in parts for a, b, _ in w.segments for t in (a, b)})
        pieces = []
        for a, b in zip(edges, edges[1:]):
            mid = 0.5 * (a + b)
            v = sum(s * w(mid) for w, s in zip(parts, signs))
            pieces.append((a, b, v))
        return cls(_merge(pieces))

    def __call__(self, t: float) -> float:
        for a, b, v in self.segments:
            if a <= t < b:
                return v
        return 0.0

    def __sub__(self, other: "Waveform") -> "Waveform":
        return Waveform.superpose([self, other], [1.0, -1.0])

    def __add__(self, other: "Waveform") -> "Waveform":
        return Waveform.superpose([self, other])

    def shifted(self, dt: float) -> "Waveform":
        return Waveform(tuple((a + dt, b + dt, v) for a, b, v in self.segments))

    @property
    def end(self) -> float:
        return self.segments[-1][1] if self.segments else 0.0

    @property
    def support(self) -> float:
        return sum(b - a for a, b, _ in self.segments)

    def sample(self, times) -> np.ndarray:
        return np.array([self(t) for t in np.atleast_1d(times)])

    def to_steps(self, dt: float) -> List[Tuple[int, int, float]]:
        """Segments in integer step units; boundaries are rounded to the grid."""
        out = []
        for a, b, v in self.segments:
            k0, k1 = int(round(a / dt)), int(round(b / dt))
            if k1 > k0:
                out.append((k0, k1, v))
        return out

    def to_dict(self) -> list:
        return [[a, b, v] for a, b, v in self.segments]

    @classmethod
    def from_dict(cls, data) -> "Waveform":
        return cls(tuple(tuple(row) for row in data))

    def to_csv(self, dt: float, horizon: float) -> str:
        """``t_ns,voltage_V`` sampled on the simulation grid."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_ns", "voltage_V"])
        n = int(round(horizon / dt))
        steps = self.to_steps(dt)
        j = 0
        for k in range(n + 1):
            while j < len(steps) and k >= steps[j][1]:
                j += 1
            v = steps[j][2] if j < len(steps) and k >= steps[j][0] else 0.0
            w.writerow([f"{k * dt * 1e9:.9g}", f"{v:.9g}"])
        return buf.getvalue()


def device_voltage(pre: Waveform, post: Waveform, t: float) -> float:
    """Voltage across the junction: pre (pinned side) minus post (free side)."""
    return pre(t) - post(t)


def opposing_heating(heating: PulseSpec, direction: Direction) -> PulseSpec:
    """Heating pulse whose spin torque opposes the switch it precedes."""
    return heating.with_polarity(-direction.drive_sign)


def pair_protocol(delta_t: float, heating: PulseSpec, switching: PulseSpec, direction: Direction) -> Waveform:
    """Heating pulse on ``[0, t1]``, switching pulse on ``[t1 + dt, t1 + dt + t2]``.

    The heating pulse keeps its own polarity; the switching polarity is set
    by ``direction``.
    """
    if delta_t < 0:
        raise ValueError("delta_t must be >= 0; mirror the protocol for negative intervals")
    direction = Direction(direction)
    t1, t2 = heating.duration, switching.duration
    segs = [(0.0, t1, heating.voltage)] if heating.amplitude > 0 else []
    if switching.amplitude > 0:
        segs.append((t1 + delta_t, t1 + delta_t + t2, direction.drive_sign * switching.amplitude))
    return Waveform(_merge(segs))


def neuron_waveform(spike_times, spec: NeuronPulseSpec) -> Waveform:
    """Line voltage of a neuron firing at ``spike_times`` (a time or a list).

    Each spike emits the switching pulse at the spike time and the heating
    pulse ``gap`` after it ends; pulses from different spikes superpose.
    """
    times = [spike_times] if np.isscalar(spike_times) else list(spike_times)
    parts = []
    for t in times:
        if t < 0:
            raise ValueError("spike times must be non-negative")
        segs = []
        if spec.switching.amplitude > 0:
            segs.append((t, t + spec.switching.duration, spec.switching.voltage))
        if spec.heating.amplitude > 0:
            h0 = t + spec.heating_offset
            segs.append((h0, h0 + spec.heating.duration, spec.heating.voltage))
        parts.append(Waveform(_merge(segs)))
    if not parts:
        return Waveform()
    if len(parts) == 1:
        return parts[0]
    return Waveform.superpose(parts)


# Engineering defaults. The heating pulse is far shorter than the spin-torque
# incubation time even when it destabilizes the junction, and the 50 ns gap
# lets the self-heating of a neuron's own switching pulse decay before its
# heating pulse, so a crossbar pairing sees the same temperature history as
# the two-pulse protocol. Each amplitude is scaled by the resistance of the
# state it acts on (pre switches P, heats AP; post switches AP, heats P) so
# both STDP branches see similar currents and Joule powers.
DEFAULT_PRE = NeuronPulseSpec(
    switching=PulseSpec(3.4, 4e-9),
    heating=PulseSpec(42.0, 0.1e-9),
    gap=50e-9,
)
DEFAULT_POST = NeuronPulseSpec(
    switching=PulseSpec(6.8, 4e-9),
    heating=PulseSpec(30.0, 0.1e-9),
    gap=50e-9,
)
DEFAULT_DELTA_T_GRID = tuple(s * x * 1e-9 for s in (-1, 1) for x in (0.5, 1, 2, 4, 6, 8, 12, 16, 24, 32))
