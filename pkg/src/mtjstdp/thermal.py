"""Free-layer temperature under Joule heating, and the two-level resistance.

Heating and cooling share one first-order relaxation,

    dT/dt = (T_RT + alpha_J * P - T) / tau_TR,

which is integrated exactly over each constant-power step. From T = T_RT at
constant P it reproduces the closed-form heating curve; with P = 0 it decays
exponentially back to T_RT.
"""

import math
from dataclasses import dataclass, replace
from enum import IntEnum

from .errors import ConfigurationError


class State(IntEnum):
    """Binary junction state; the value is the sign of m along the pinned axis."""

    P = 1
    AP = -1

    def flipped(self) -> "State":
        return State(-int(self))


@dataclass(frozen=True)
class ThermalParams:
    room_temperature: float = 300.0  # K
    joule_heating_constant: float = 83600.0  # K/W
    thermal_time_constant: float = 10e-9  # s

    def __post_init__(self):
        if self.room_temperature <= 0:
            raise ConfigurationError("room_temperature must be > 0")
        if self.joule_heating_constant < 0:
            raise ConfigurationError("joule_heating_constant must be >= 0")
        if self.thermal_time_constant <= 0:
            raise ConfigurationError("thermal_time_constant must be > 0")


@dataclass(frozen=True)
class ThermalState:
    T_AF: float  # K, instantaneous free-layer temperature
    T_0: float  # K, temperature at the start of the current segment

    def __post_init__(self):
        if not self.T_AF > 0:
            raise ValueError("free-layer temperature must stay positive")


@dataclass(frozen=True)
class ResistanceModel:
    R_P: float = 2000.0  # ohm
    TMR: float = 1.0
    current_state: State = State.P

    def __post_init__(self):
        if self.R_P <= 0:
            raise ConfigurationError("R_P must be > 0")
        if self.TMR < 0:
            raise ConfigurationError("TMR must be >= 0")
        object.__setattr__(self, "current_state", State(self.current_state))

    @property
    def R_AP(self) -> float:
        return self.R_P * (1.0 + self.TMR)

    def with_state(self, state) -> "ResistanceModel":
        return replace(self, current_state=State(state))

    def toggled(self) -> "ResistanceModel":
        return self.with_state(self.current_state.flipped())


def resistance(model: ResistanceModel) -> float:
    return model.R_P if model.current_state == State.P else model.R_AP


def joule_power(voltage: float, model: ResistanceModel) -> float:
    """Power dissipated in the junction, W."""
    return voltage * voltage / resistance(model)


def thermal_step(state: ThermalState, P_HP: float, params: ThermalParams, dt: float) -> ThermalState:
    """Exact update of the relaxation ODE over ``dt`` at constant power."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    target = params.room_temperature + params.joule_heating_constant * P_HP
    T = target + (state.T_AF - target) * math.exp(-dt / params.thermal_time_constant)
    return ThermalState(T_AF=T, T_0=state.T_0)


def analytic_heating(t: float, P_HP: float, params: ThermalParams) -> float:
    """T_RT + alpha_J P (1 - exp(-t / tau)), heating from room temperature."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return params.room_temperature + params.joule_heating_constant * P_HP * -math.expm1(-t / params.thermal_time_constant)


def analytic_relaxation(t: float, T_0: float, T_target: float, params: ThermalParams) -> float:
    """T_0 + (T_target - T_0)(1 - exp(-t / tau)): relaxation from T_0 toward T_target."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return T_0 + (T_target - T_0) * -math.expm1(-t / params.thermal_time_constant)


def analytic_cooling(t: float, T_0: float, params: ThermalParams) -> float:
    """Decay from T_0 back to room temperature after the power is removed."""
    return analytic_relaxation(t, T_0, params.room_temperature, params)
