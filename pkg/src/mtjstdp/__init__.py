"""Macrospin simulator for temperature-driven STDP in magnetic tunnel junctions."""

from .errors import ConfigurationError
from .magnetodynamics import MaterialParams, SpinCurrent, effective_field, llgs_step, sample_initial_angle, spin_current, thermal_field
from .montecarlo import SimConfig, StdpCurve, StdpPoint, StdpProtocol, TrialOutcome, estimate_switch_prob, run_trial, stdp_sweep, thermal_trace, wilson_interval
from .rng import RngStream
from .thermal import ResistanceModel, State, ThermalParams, ThermalState, joule_power, thermal_step
from .waveforms import Direction, NeuronPulseSpec, PulseSpec, Waveform, device_voltage, neuron_waveform, pair_protocol

__version__ = "0.1.0"
