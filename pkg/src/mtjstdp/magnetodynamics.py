"""Macrospin LLG-S dynamics of the free layer.

Units are CGS-Gaussian (Oe, emu/cm^3, erg, cm, s); currents are in A.
The Gilbert form is solved for dm/dt analytically, which gives the
Landau-Lifshitz form with a 1/(1 + alpha^2) prefactor and a small
field-like spin-torque term alpha * a * (m x p).
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import constants as C
from ._backend import njit
from .errors import ConfigurationError
from .rng import TAG_INITIAL_ANGLE, RngStream, to_unit_open, uniform4

MAX_DT = 5e-12

# layout of the packed float64 parameter vector handed to kernels
HK, NX, NY, NZ, MS, ALPHA, GAMMA, VOLUME, PX, PY, PZ, STT, TC, LITERAL = range(14)
PACK_SIZE = 14

NOISE_CONVENTIONS = ("brown", "paper-literal")


def calibrated_demag(
    saturation_magnetization: float,
    interface_field: float,
    energy_barrier: float,
    volume: float,
    barrier_temperature: float = 300.0,
) -> Tuple[float, float, float]:
    """In-plane isotropic demag factors (sum 4*pi) whose net perpendicular
    anisotropy field gives a barrier of ``energy_barrier`` kT.

    Ms * (Nz - Nx) = H_int - H_k,eff with H_k,eff = 2 E_B k T / (Ms V).
    """
    hk_eff = 2.0 * energy_barrier * C.BOLTZMANN * barrier_temperature / (saturation_magnetization * volume)
    split = (interface_field - hk_eff) / saturation_magnetization
    nx = (C.FOUR_PI - split) / 3.0
    nz = nx + split
    if nx < 0 or nz < 0:
        raise ConfigurationError(
            f"no non-negative demag tensor reproduces E_B = {energy_barrier} kT "
            f"(interface field {interface_field:.1f} Oe, required {hk_eff:.1f} Oe)"
        )
    return (nx, nx, nz)


@dataclass(frozen=True)
class MaterialParams:
    """Free-layer material and geometry.

    ``demag_tensor=None`` selects factors calibrated so that the dynamic
    barrier matches ``energy_barrier`` (see :func:`calibrated_demag`).
    """

    saturation_magnetization: float = 1257.3  # emu/cm^3
    interface_anisotropy: float = 1.3  # erg/cm^2
    damping: float = 0.015
    gyromagnetic_ratio: float = C.GYROMAGNETIC_RATIO  # rad/(s Oe)
    energy_barrier: float = 73.0  # kT at barrier_temperature
    free_layer_diameter: float = 40e-7  # cm, minor axis
    aspect_ratio: float = 1.0
    free_layer_thickness: float = 1.42e-7  # cm
    demag_tensor: Optional[Tuple[float, float, float]] = None
    spin_polarization: float = 0.02
    pinned_axis: Tuple[float, float, float] = (0.0, 0.0, 1.0)
    barrier_temperature: float = 300.0  # K
    curie_temperature: Optional[float] = None  # K; None keeps Ms constant
    noise_convention: str = "brown"
    _demag: Tuple[float, float, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        checks = [
            (self.saturation_magnetization > 0, "saturation_magnetization must be > 0"),
            (self.free_layer_thickness > 0, "free_layer_thickness must be > 0"),
            (self.free_layer_diameter > 0, "free_layer_diameter must be > 0"),
            (self.aspect_ratio >= 1, "aspect_ratio must be >= 1"),
            (self.damping > 0, "damping must be > 0"),
            (self.energy_barrier > 0, "energy_barrier must be > 0"),
            (0 < self.spin_polarization <= 1, "spin_polarization must be in (0, 1]"),
            (self.noise_convention in NOISE_CONVENTIONS, f"noise_convention must be one of {NOISE_CONVENTIONS}"),
            (self.curie_temperature is None or self.curie_temperature > 0, "curie_temperature must be > 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigurationError(msg)
        p = np.asarray(self.pinned_axis, dtype=float)
        if p.shape != (3,) or abs(np.linalg.norm(p) - 1.0) > 1e-9:
            raise ConfigurationError("pinned_axis must be a unit 3-vector")
        if self.demag_tensor is None:
            demag = calibrated_demag(
                self.saturation_magnetization, self.interface_field, self.energy_barrier,
                self.volume, self.barrier_temperature,
            )
        else:
            demag = tuple(float(v) for v in self.demag_tensor)
            if len(demag) != 3 or abs(sum(demag) - C.FOUR_PI) > 1e-6:
                raise ConfigurationError("demag_tensor must have three entries summing to 4*pi")
        object.__setattr__(self, "_demag", demag)

    @property
    def demag(self) -> Tuple[float, float, float]:
        return self._demag

    @property
    def area(self) -> float:
        d = self.free_layer_diameter
        return np.pi / 4.0 * d * d * self.aspect_ratio

    @property
    def volume(self) -> float:
        return self.area * self.free_layer_thickness

    @property
    def n_spins(self) -> float:
        return self.saturation_magnetization * self.volume / C.BOHR_MAGNETON

    @property
    def interface_field(self) -> float:
        """2 K_i / (Ms t_fl), Oe."""
        return 2.0 * self.interface_anisotropy / (self.saturation_magnetization * self.free_layer_thickness)

    @property
    def effective_anisotropy_field(self) -> float:
        nx, ny, nz = self.demag
        return self.interface_field - self.saturation_magnetization * (nz - 0.5 * (nx + ny))

    @property
    def critical_current(self) -> float:
        """Zero-temperature STT switching current (A) for the P/AP states."""
        a_crit = self.damping * self.gyromagnetic_ratio * self.effective_anisotropy_field
        return a_crit / (self.stt_per_amp * self.spin_polarization)

    @property
    def stt_per_amp(self) -> float:
        """Spin-torque rate (1/s) per ampere of spin current, 1/(q N_s)."""
        return 1.0 / (C.ELEMENTARY_CHARGE * self.n_spins)

    def pack(self) -> np.ndarray:
        v = np.zeros(PACK_SIZE)
        v[HK] = self.interface_field
        v[NX], v[NY], v[NZ] = self.demag
        v[MS] = self.saturation_magnetization
        v[ALPHA] = self.damping
        v[GAMMA] = abs(self.gyromagnetic_ratio)
        v[VOLUME] = self.volume
        v[PX], v[PY], v[PZ] = self.pinned_axis
        v[STT] = self.stt_per_amp
        v[TC] = self.curie_temperature or 0.0
        v[LITERAL] = 1.0 if self.noise_convention == "paper-literal" else 0.0
        return v


@dataclass(frozen=True)
class SpinCurrent:
    """Spin current through the junction. ``sign`` is +1 when it favors P."""

    magnitude: float  # A
    sign: int = 1

    def torque_rate(self, params: MaterialParams) -> float:
        """Signed coefficient of m x (m x p); positive pushes m away from p."""
        return -self.sign * self.magnitude * params.stt_per_amp


# ---------------------------------------------------------------------------
# kernels shared by the scalar API and the batch integrators; they are written
# so that numpy arrays may be passed for every vector component


@njit
def cross(ax, ay, az, bx, by, bz):
    return ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx


@njit
def deterministic_field(mx, my, mz, mat):
    ms = mat[MS]
    return -mat[NX] * ms * mx, -mat[NY] * ms * my, (mat[HK] - mat[NZ] * ms) * mz


@njit
def noise_sigma(temperature, dt, mat):
    ms = mat[MS]
    if mat[TC] > 0.0:
        ms = ms * np.maximum(1.0 - (temperature / mat[TC]) ** 1.5, 1e-6)
    base = mat[ALPHA] * C.BOLTZMANN * temperature / (mat[GAMMA] * ms * mat[VOLUME])
    if mat[LITERAL] > 0.0:
        return np.sqrt(base * dt)
    return np.sqrt(2.0 * base / dt)


@njit
def llgs_rhs(mx, my, mz, hx, hy, hz, a, mat):
    alpha = mat[ALPHA]
    gamma = mat[GAMMA]
    px, py, pz = mat[PX], mat[PY], mat[PZ]
    pre = 1.0 / (1.0 + alpha * alpha)
    ax, ay, az = cross(mx, my, mz, hx, hy, hz)
    bx, by, bz = cross(mx, my, mz, ax, ay, az)
    cx, cy, cz = cross(mx, my, mz, px, py, pz)
    dx, dy, dz = cross(mx, my, mz, cx, cy, cz)
    return (
        pre * (-gamma * ax - alpha * gamma * bx + a * dx - alpha * a * cx),
        pre * (-gamma * ay - alpha * gamma * by + a * dy - alpha * a * cy),
        pre * (-gamma * az - alpha * gamma * bz + a * dz - alpha * a * cz),
    )


@njit
def heun_step(mx, my, mz, tx, ty, tz, a, dt, mat):
    """One stochastic Heun step; (tx, ty, tz) is the thermal field held
    fixed across predictor and corrector. Returns the renormalized m."""
    hx, hy, hz = deterministic_field(mx, my, mz, mat)
    k1x, k1y, k1z = llgs_rhs(mx, my, mz, hx + tx, hy + ty, hz + tz, a, mat)
    qx = mx + dt * k1x
    qy = my + dt * k1y
    qz = mz + dt * k1z
    hx, hy, hz = deterministic_field(qx, qy, qz, mat)
    k2x, k2y, k2z = llgs_rhs(qx, qy, qz, hx + tx, hy + ty, hz + tz, a, mat)
    nx = mx + 0.5 * dt * (k1x + k2x)
    ny = my + 0.5 * dt * (k1y + k2y)
    nz = mz + 0.5 * dt * (k1z + k2z)
    inv = 1.0 / np.sqrt(nx * nx + ny * ny + nz * nz)
    return nx * inv, ny * inv, nz * inv


@njit
def orthonormal_basis(ax, ay, az):
    """Two unit vectors completing ``a`` to a right-handed frame."""
    if abs(az) < 0.9:
        hx, hy, hz = 0.0, 0.0, 1.0
    else:
        hx, hy, hz = 1.0, 0.0, 0.0
    ux, uy, uz = cross(hx, hy, hz, ax, ay, az)
    n = np.sqrt(ux * ux + uy * uy + uz * uz)
    ux, uy, uz = ux / n, uy / n, uz / n
    vx, vy, vz = cross(ax, ay, az, ux, uy, uz)
    return ux, uy, uz, vx, vy, vz


@njit
def cos_theta_proposal(u, delta):
    """Truncated exponential on [0, 1] with density ~ exp(delta * w)."""
    return 1.0 + np.log1p(u * np.expm1(-delta)) / delta


@njit
def draw_initial_direction(seed, stream, counter, delta, ax, ay, az):
    """Rejection sampler for p(theta) ~ sin(theta) exp(-delta sin^2 theta)
    on the hemisphere around ``a``.

    In w = cos(theta) the density is ~ exp(delta w^2) on [0, 1]; the chord
    delta w bounds delta w^2 from above, so proposals from exp(delta w) are
    accepted with probability exp(-delta w (1 - w)). Returns the direction
    and the next unused counter value.
    """
    ux, uy, uz, vx, vy, vz = orthonormal_basis(ax, ay, az)
    tag = np.uint64(TAG_INITIAL_ANGLE)
    while True:
        u0, u1, u2, _ = uniform4(seed, stream, counter, tag)
        counter = counter + np.uint64(1)
        if delta > 1e12:
            w = 1.0
        else:
            w = cos_theta_proposal(u0, delta)
            if u1 > np.exp(-delta * w * (1.0 - w)):
                continue
        s = np.sqrt(np.maximum(1.0 - w * w, 0.0))
        phi = 6.283185307179586 * (u2 - 0.5)
        c = np.cos(phi)
        sn = np.sin(phi)
        return (
            w * ax + s * (c * ux + sn * vx),
            w * ay + s * (c * uy + sn * vy),
            w * az + s * (c * uz + sn * vz),
            counter,
        )


# ---------------------------------------------------------------------------
# public value-level API


def _unit(m, what="m"):
    m = np.asarray(m, dtype=float)
    if m.shape != (3,) or not np.all(np.isfinite(m)):
        raise ValueError(f"{what} must be a finite 3-vector")
    if abs(np.linalg.norm(m) - 1.0) > 1e-6:
        raise ValueError(f"{what} must be a unit vector, |{what}| = {np.linalg.norm(m)!r}")
    return m


def _check_dt(dt):
    if not 0 < dt <= MAX_DT:
        raise ConfigurationError(f"dt must be in (0, {MAX_DT}] s, got {dt!r}")


def thermal_field(T_AF: float, params: MaterialParams, dt: float, rng: RngStream) -> np.ndarray:
    """Thermal field (Oe) for one step; uses the block at ``rng.counter``."""
    if T_AF < 0:
        raise ValueError("temperature must be non-negative")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T_AF == 0:
        return np.zeros(3)
    sigma = float(noise_sigma(float(T_AF), float(dt), params.pack()))
    return sigma * rng.normals()[:3]


def effective_field(m, params: MaterialParams, T_AF: float, dt: float, rng: RngStream) -> np.ndarray:
    """Demagnetizing + interface anisotropy + thermal field, Oe."""
    m = _unit(m)
    if T_AF < 0:
        raise ValueError("temperature must be non-negative")
    det = np.array(deterministic_field(m[0], m[1], m[2], params.pack()))
    return det + thermal_field(T_AF, params, dt, rng)


def spin_current(voltage: float, resistance: float, polarization: float) -> SpinCurrent:
    """Spin current for a terminal voltage (pinned minus free side).

    Positive voltage drives electrons from the free layer into the pinned
    layer, which favors AP; negative voltage favors P.
    """
    if resistance <= 0:
        raise ConfigurationError(f"resistance must be > 0, got {resistance!r}")
    charge = voltage / resistance
    return SpinCurrent(magnitude=abs(charge) * polarization, sign=-1 if voltage > 0 else 1)


def llgs_step(m, I_s: SpinCurrent, params: MaterialParams, T_AF: float, dt: float, rng: RngStream) -> np.ndarray:
    """Advance ``m`` by one stochastic Heun step of length ``dt``."""
    m = _unit(m)
    _check_dt(dt)
    h = thermal_field(T_AF, params, dt, rng)
    out = heun_step(m[0], m[1], m[2], h[0], h[1], h[2], I_s.torque_rate(params), dt, params.pack())
    return np.array(out, dtype=float)


def sample_initial_angle(params: MaterialParams, T: float, rng: RngStream, state: int = 1) -> np.ndarray:
    """Thermal initial direction around the P (``state=+1``) or AP (``-1``) axis."""
    if T <= 0:
        raise ValueError("temperature must be positive")
    delta = params.energy_barrier * params.barrier_temperature / T
    return _sample(params, delta, rng, state)[0]


def _sample(params, delta, rng, state):
    axis = state * np.asarray(params.pinned_axis, dtype=float)
    seed, stream, ctr, _ = rng._args(TAG_INITIAL_ANGLE)
    x, y, z, nxt = draw_initial_direction(seed, stream, ctr, float(delta), axis[0], axis[1], axis[2])
    return np.array([x, y, z], dtype=float).reshape(3), int(np.asarray(nxt).reshape(-1)[0])
