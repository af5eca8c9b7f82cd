"""Experiment configuration: a JSON document with unit-suffixed keys.

Sections: material, thermal, resistance, pulses, simulation, sweep, crossbar.
Unknown keys are rejected with a suggestion, required keys (tau_tr_ns, pulse
amplitudes, master_seed) must be present, and everything else falls back to
the defaults below. ``resolve`` returns a complete document that parses back
to itself.
"""

import copy
import difflib
import json
from dataclasses import dataclass, replace
from importlib import resources
from typing import Any, Dict, List, Optional, Tuple

from .crossbar import CrossbarConfig, DeviceParams, SpikeSchedule
from .errors import ConfigurationError
from .magnetodynamics import MaterialParams
from .montecarlo import SimConfig, StdpProtocol
from .thermal import ResistanceModel, State, ThermalParams
from .waveforms import DEFAULT_DELTA_T_GRID, DEFAULT_POST, DEFAULT_PRE, NeuronPulseSpec, PulseSpec

REQUIRED = object()
NS, NM = 1e-9, 1e-7  # s, cm


def _u(x: float) -> float:
    """Strip float noise from a unit conversion (1.42e-7 cm -> 1.42 nm)."""
    return float(f"{x:.12g}")


def _pulse_schema(spec: NeuronPulseSpec):
    return {
        "switching_amplitude_V": REQUIRED,
        "switching_duration_ns": _u(spec.switching.duration / NS),
        "switching_polarity": spec.switching.polarity,
        "heating_amplitude_V": REQUIRED,
        "heating_duration_ns": _u(spec.heating.duration / NS),
        "heating_polarity": spec.heating.polarity,
        "gap_ns": _u(spec.gap / NS),
    }


_M = MaterialParams()
_T = ThermalParams()
_R = ResistanceModel()
_S = SimConfig()

MATERIAL = {
    "saturation_magnetization_emu_per_cm3": _M.saturation_magnetization,
    "interface_anisotropy_erg_per_cm2": _M.interface_anisotropy,
    "damping": _M.damping,
    "gyromagnetic_ratio_rad_per_s_Oe": _M.gyromagnetic_ratio,
    "energy_barrier_kT": _M.energy_barrier,
    "free_layer_diameter_nm": _u(_M.free_layer_diameter / NM),
    "aspect_ratio": _M.aspect_ratio,
    "free_layer_thickness_nm": _u(_M.free_layer_thickness / NM),
    "demag_tensor": None,
    "spin_polarization": _M.spin_polarization,
    "pinned_axis": list(_M.pinned_axis),
    "barrier_temperature_K": _M.barrier_temperature,
    "curie_temperature_K": None,
    "noise_convention": _M.noise_convention,
}
THERMAL = {
    "room_temperature_K": _T.room_temperature,
    "joule_heating_constant_K_per_W": _T.joule_heating_constant,
    "tau_tr_ns": REQUIRED,
}
RESISTANCE = {"r_p_ohm": _R.R_P, "tmr": _R.TMR, "initial_state": "AP"}
SIMULATION = {
    "dt_ps": _u(_S.dt / 1e-12),
    "horizon_ns": None,
    "relax_window_ns": _u(_S.relax_window / NS),
    "switch_threshold": _S.switch_threshold,
    "n_trials": _S.n_trials,
    "master_seed": REQUIRED,
    "record_every": _S.record_every,
    "workers": _S.workers,
}
SWEEP = {
    "delta_t_ns": [_u(x / NS) for x in DEFAULT_DELTA_T_GRID],
    "sign_convention": "caption",
    "trial_delta_t_ns": 4.0,
}
CROSSBAR = {
    "rows": 2,
    "cols": 2,
    "initial_states": None,
    "pre_spikes_ns": None,
    "post_spikes_ns": None,
    "repetition": 0,
    "overrides": [],
}
OVERRIDE = {"row": REQUIRED, "col": REQUIRED, "material": {}, "thermal": {}, "resistance": {}}

SCHEMA = {
    "material": MATERIAL,
    "thermal": THERMAL,
    "resistance": RESISTANCE,
    "pulses": {"pre": _pulse_schema(DEFAULT_PRE), "post": _pulse_schema(DEFAULT_POST)},
    "simulation": SIMULATION,
    "sweep": SWEEP,
    "crossbar": CROSSBAR,
}


def _check_keys(doc: dict, schema: dict, path: str):
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path or 'config'}: expected an object")
    for key in doc:
        if key not in schema:
            hint = difflib.get_close_matches(key, list(schema), n=1, cutoff=0.5)
            where = f"{path}.{key}" if path else key
            msg = f"unknown key '{where}'"
            if hint:
                msg += f"; expected key '{hint[0]}'"
            raise ConfigurationError(msg)


def _fill(doc: dict, schema: dict, path: str, partial: bool = False) -> dict:
    _check_keys(doc, schema, path)
    out = {}
    for key, default in schema.items():
        where = f"{path}.{key}" if path else key
        if isinstance(default, dict) and default:
            out[key] = _fill(doc.get(key, {}), default, where, partial)
        elif key in doc:
            out[key] = copy.deepcopy(doc[key])
        elif default is REQUIRED:
            if partial:
                continue
            raise ConfigurationError(f"missing required key '{where}'")
        else:
            out[key] = copy.deepcopy(default)
    return out


def resolve(doc: dict) -> dict:
    """Validate ``doc`` and fill defaults; the result is a complete document."""
    _check_keys(doc, SCHEMA, "")
    out = {}
    for section, schema in SCHEMA.items():
        out[section] = _fill(doc.get(section, {}), schema, section)
    out["crossbar"]["overrides"] = [_override(o, i) for i, o in enumerate(out["crossbar"]["overrides"] or [])]
    build(out)  # semantic validation
    return out


def _override(o, i):
    path = f"crossbar.overrides[{i}]"
    _check_keys(o, OVERRIDE, path)
    res = {}
    for key in ("row", "col"):
        if key not in o:
            raise ConfigurationError(f"missing required key '{path}.{key}'")
        res[key] = o[key]
    for sec, schema in (("material", MATERIAL), ("thermal", THERMAL), ("resistance", RESISTANCE)):
        res[sec] = _fill(o.get(sec, {}), schema, f"{path}.{sec}", partial=True)
        for k in list(res[sec]):
            if k not in o.get(sec, {}):
                del res[sec][k]
    return res


def load(path: Optional[str]) -> dict:
    """Read and resolve a config file; ``None`` loads the shipped default profile."""
    if path is None:
        text = resources.files("mtjstdp").joinpath("profiles/default.json").read_text()
        where = "profiles/default.json"
    else:
        where = path
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{where}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return resolve(doc)


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# document -> domain objects


def _material(m: dict) -> MaterialParams:
    return MaterialParams(
        saturation_magnetization=float(m["saturation_magnetization_emu_per_cm3"]),
        interface_anisotropy=float(m["interface_anisotropy_erg_per_cm2"]),
        damping=float(m["damping"]),
        gyromagnetic_ratio=float(m["gyromagnetic_ratio_rad_per_s_Oe"]),
        energy_barrier=float(m["energy_barrier_kT"]),
        free_layer_diameter=float(m["free_layer_diameter_nm"]) * NM,
        aspect_ratio=float(m["aspect_ratio"]),
        free_layer_thickness=float(m["free_layer_thickness_nm"]) * NM,
        demag_tensor=None if m["demag_tensor"] is None else tuple(float(x) for x in m["demag_tensor"]),
        spin_polarization=float(m["spin_polarization"]),
        pinned_axis=tuple(float(x) for x in m["pinned_axis"]),
        barrier_temperature=float(m["barrier_temperature_K"]),
        curie_temperature=None if m["curie_temperature_K"] is None else float(m["curie_temperature_K"]),
        noise_convention=m["noise_convention"],
    )


def _thermal(t: dict) -> ThermalParams:
    return ThermalParams(float(t["room_temperature_K"]), float(t["joule_heating_constant_K_per_W"]),
                         float(t["tau_tr_ns"]) * NS)


def _state(name, where) -> State:
    try:
        return State[name]
    except (KeyError, TypeError):
        raise ConfigurationError(f"{where}: state must be 'P' or 'AP', got {name!r}") from None


def _resistance(r: dict) -> ResistanceModel:
    return ResistanceModel(float(r["r_p_ohm"]), float(r["tmr"]), _state(r["initial_state"], "resistance.initial_state"))


def _neuron(p: dict) -> NeuronPulseSpec:
    return NeuronPulseSpec(
        switching=PulseSpec(float(p["switching_amplitude_V"]), float(p["switching_duration_ns"]) * NS,
                            int(p["switching_polarity"])),
        heating=PulseSpec(float(p["heating_amplitude_V"]), float(p["heating_duration_ns"]) * NS,
                          int(p["heating_polarity"])),
        gap=float(p["gap_ns"]) * NS,
    )


def _sim(s: dict) -> SimConfig:
    seed = s["master_seed"]
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigurationError("simulation.master_seed must be an integer")
    return SimConfig(
        dt=float(s["dt_ps"]) * 1e-12,
        horizon=None if s["horizon_ns"] is None else float(s["horizon_ns"]) * NS,
        relax_window=float(s["relax_window_ns"]) * NS,
        switch_threshold=float(s["switch_threshold"]),
        n_trials=int(s["n_trials"]),
        master_seed=seed,
        record_every=int(s["record_every"]),
        workers=int(s["workers"]),
    )


def _schedule(rows, n, where) -> SpikeSchedule:
    if rows is None:
        return SpikeSchedule.silent(n)
    if not isinstance(rows, list) or len(rows) != n:
        raise ConfigurationError(f"{where}: expected a list of {n} spike-time lists")
    return SpikeSchedule(tuple(tuple(float(t) * NS for t in row) for row in rows))


@dataclass(frozen=True)
class Experiment:
    material: MaterialParams
    thermal: ThermalParams
    resistance: ResistanceModel
    protocol: StdpProtocol
    sim: SimConfig
    delta_t_grid: Tuple[float, ...]
    sign_convention: str
    trial_delta_t: float
    crossbar: CrossbarConfig
    pre_spikes: SpikeSchedule
    post_spikes: SpikeSchedule
    repetition: int

    def with_sim(self, **changes) -> "Experiment":
        return replace(self, sim=replace(self.sim, **changes))


def build(doc: dict) -> Experiment:
    """Domain objects for a resolved document."""
    mat = _material(doc["material"])
    th = _thermal(doc["thermal"])
    res = _resistance(doc["resistance"])
    sw = doc["sweep"]
    if sw["sign_convention"] not in ("caption", "text"):
        raise ConfigurationError("sweep.sign_convention must be 'caption' or 'text'")
    if not sw["delta_t_ns"]:
        raise ConfigurationError("sweep.delta_t_ns must not be empty")
    cb = doc["crossbar"]
    rows, cols = int(cb["rows"]), int(cb["cols"])
    init = cb["initial_states"]
    if init is not None:
        init = tuple(tuple(_state(s, "crossbar.initial_states") for s in row) for row in init)
    overrides = {}
    for o in cb["overrides"]:
        base_m, base_t, base_r = doc["material"], doc["thermal"], doc["resistance"]
        overrides[(int(o["row"]), int(o["col"]))] = DeviceParams(
            _material({**base_m, **o["material"]}), _thermal({**base_t, **o["thermal"]}),
            _resistance({**base_r, **o["resistance"]}),
        )
    protocol = StdpProtocol(_neuron(doc["pulses"]["pre"]), _neuron(doc["pulses"]["post"]))
    xbar = CrossbarConfig(rows, cols, DeviceParams(mat, th, res), protocol.pre, protocol.post, init, overrides)
    return Experiment(
        material=mat, thermal=th, resistance=res, protocol=protocol, sim=_sim(doc["simulation"]),
        delta_t_grid=tuple(float(x) * NS for x in sw["delta_t_ns"]), sign_convention=sw["sign_convention"],
        trial_delta_t=float(sw["trial_delta_t_ns"]) * NS, crossbar=xbar,
        pre_spikes=_schedule(cb["pre_spikes_ns"], rows, "crossbar.pre_spikes_ns"),
        post_spikes=_schedule(cb["post_spikes_ns"], cols, "crossbar.post_spikes_ns"),
        repetition=int(cb["repetition"]),
    )


def default_document(master_seed: int = 20240611, tau_tr_ns: float = 10.0) -> Dict[str, Any]:
    """A complete document built from the library defaults."""
    doc = {"thermal": {"tau_tr_ns": tau_tr_ns}, "simulation": {"master_seed": master_seed}, "pulses": {}}
    for name, spec in (("pre", DEFAULT_PRE), ("post", DEFAULT_POST)):
        doc["pulses"][name] = {"switching_amplitude_V": spec.switching.amplitude,
                               "heating_amplitude_V": spec.heating.amplitude}
    return resolve(doc)
