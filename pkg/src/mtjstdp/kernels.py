"""Batch integration of coupled magnetization + temperature trials.

Each trial owns a Philox stream keyed by ``(seed, stream_id)`` and is
independent of every other trial, so batches can be split across workers
arbitrarily. Two implementations share one contract:

* ``integrate_numba``: a compiled per-trial loop (default backend)
* ``integrate_numpy``: a pure numpy loop over time, vectorized over trials

Select with the ``MTJSTDP_BACKEND`` environment variable.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._backend import USE_NUMBA, njit
from .magnetodynamics import PX, PY, PZ, STT, draw_initial_direction, heun_step, noise_sigma
from .rng import TAG_DYNAMICS, TAG_INITIAL_ANGLE, normal4, uniform4

# layout of the electrical/thermal parameter vector
T_RT, ALPHA_J, TAU, R_P, TMR, ETA, DELTA0 = range(7)
ELEC_SIZE = 7

TRACE_COLUMNS = ("t", "mx", "my", "mz", "temperature", "voltage")


@dataclass
class Segments:
    """Flattened per-trial piecewise-constant voltage programs in step units.

    Trial ``i`` owns rows ``offsets[i]:offsets[i + 1]``, sorted and disjoint;
    row ``j`` applies ``volts[j]`` on steps ``k0[j] <= k < k1[j]``.
    """

    offsets: np.ndarray
    k0: np.ndarray
    k1: np.ndarray
    volts: np.ndarray

    @classmethod
    def build(cls, programs):
        """``programs``: one list of ``(k0, k1, volts)`` per trial."""
        offsets = np.zeros(len(programs) + 1, dtype=np.int64)
        rows = []
        for i, prog in enumerate(programs):
            rows.extend(prog)
            offsets[i + 1] = len(rows)
        if rows:
            k0, k1, v = (np.array(c) for c in zip(*rows))
        else:
            k0 = k1 = v = np.zeros(0)
        return cls(offsets, k0.astype(np.int64), k1.astype(np.int64), v.astype(np.float64))

    def take(self, idx):
        progs = [
            list(zip(self.k0[a:b], self.k1[a:b], self.volts[a:b]))
            for a, b in ((self.offsets[i], self.offsets[i + 1]) for i in idx)
        ]
        return Segments.build(progs)


@dataclass
class BatchResult:
    final_m: np.ndarray  # (n, 3)
    final_state: np.ndarray  # (n,) +1 P / -1 AP, sign rule at the end
    peak_temperature: np.ndarray  # (n,)
    event_count: np.ndarray  # (n,)
    event_step: np.ndarray  # (n, max_events)
    event_dir: np.ndarray  # (n, max_events) +1 -> P, -1 -> AP
    trace: Optional[np.ndarray]  # (n, n_rec, 6) or None

    @staticmethod
    def concat(parts):
        tr = [p.trace for p in parts]
        return BatchResult(
            np.concatenate([p.final_m for p in parts]),
            np.concatenate([p.final_state for p in parts]),
            np.concatenate([p.peak_temperature for p in parts]),
            np.concatenate([p.event_count for p in parts]),
            np.concatenate([p.event_step for p in parts]),
            np.concatenate([p.event_dir for p in parts]),
            None if tr[0] is None else np.concatenate(tr),
        )


@njit(nogil=True)
def _integrate_numba(mat, elec, dt, n_steps, seed, stream_ids, init_state, offsets, seg_k0, seg_k1, seg_v,
                     clamp, thr, rec_every, out_m, out_state, out_peak, out_ev_n, out_ev_k, out_ev_dir, out_trace):
    n = stream_ids.shape[0]
    max_ev = out_ev_k.shape[1]
    px, py, pz = mat[PX], mat[PY], mat[PZ]
    decay = np.exp(-dt / elec[TAU])
    tag = np.uint64(TAG_DYNAMICS)
    for i in range(n):
        stream = stream_ids[i]
        st = init_state[i]
        temp = elec[T_RT] if clamp[i] <= 0.0 else clamp[i]
        # a clamped device starts from its equilibrium spread at the clamp temperature
        delta = elec[DELTA0] * elec[T_RT] / temp
        mx, my, mz, _ = draw_initial_direction(seed, stream, np.uint64(0), delta, st * px, st * py, st * pz)
        peak = temp
        ptr = offsets[i]
        end = offsets[i + 1]
        n_ev = 0
        rec = 0
        for k in range(n_steps):
            while ptr < end and k >= seg_k1[ptr]:
                ptr += 1
            volts = 0.0
            if ptr < end and k >= seg_k0[ptr]:
                volts = seg_v[ptr]
            if rec_every > 0 and k % rec_every == 0:
                out_trace[i, rec, 0] = k * dt
                out_trace[i, rec, 1] = mx
                out_trace[i, rec, 2] = my
                out_trace[i, rec, 3] = mz
                out_trace[i, rec, 4] = temp
                out_trace[i, rec, 5] = volts
                rec += 1
            res = elec[R_P] if st > 0 else elec[R_P] * (1.0 + elec[TMR])
            if clamp[i] <= 0.0:
                target = elec[T_RT] + elec[ALPHA_J] * volts * volts / res
                temp = target + (temp - target) * decay
            if temp > peak:
                peak = temp
            a = mat[STT] * elec[ETA] * volts / res
            z0, z1, z2, _ = normal4(seed, stream, np.uint64(k), tag)
            sig = noise_sigma(temp, dt, mat) if temp > 0.0 else 0.0
            mx, my, mz = heun_step(mx, my, mz, sig * z0, sig * z1, sig * z2, a, dt, mat)
            proj = mx * px + my * py + mz * pz
            if (st > 0 and proj < -thr) or (st < 0 and proj > thr):
                st = -st
                if n_ev < max_ev:
                    out_ev_k[i, n_ev] = k + 1
                    out_ev_dir[i, n_ev] = st
                n_ev += 1
        proj = mx * px + my * py + mz * pz
        final = 1 if proj > 0.0 else -1
        if final != st:
            if n_ev < max_ev:
                out_ev_k[i, n_ev] = n_steps
                out_ev_dir[i, n_ev] = final
            n_ev += 1
        if rec_every > 0:
            out_trace[i, rec, 0] = n_steps * dt
            out_trace[i, rec, 1] = mx
            out_trace[i, rec, 2] = my
            out_trace[i, rec, 3] = mz
            out_trace[i, rec, 4] = temp
            out_trace[i, rec, 5] = 0.0
        out_m[i, 0] = mx
        out_m[i, 1] = my
        out_m[i, 2] = mz
        out_state[i] = final
        out_peak[i] = peak
        out_ev_n[i] = n_ev


def _initial_directions_numpy(seed, streams, deltas, axes):
    """Vectorized twin of ``draw_initial_direction`` (same draws, same order)."""
    n = streams.shape[0]
    out = np.zeros((n, 3))
    ctr = np.zeros(n, dtype=np.uint64)
    todo = np.arange(n)
    tag = np.uint64(TAG_INITIAL_ANGLE)
    from .magnetodynamics import cos_theta_proposal, orthonormal_basis

    while todo.size:
        u0, u1, u2, _ = uniform4(np.full(todo.size, seed, dtype=np.uint64), streams[todo], ctr[todo],
                                 np.full(todo.size, tag, dtype=np.uint64))
        ctr[todo] += np.uint64(1)
        delta = deltas[todo]
        rigid = delta > 1e12
        with np.errstate(over="ignore", invalid="ignore"):
            w = np.where(rigid, 1.0, cos_theta_proposal(u0, np.where(rigid, 1.0, delta)))
            ok = rigid | (u1 <= np.exp(-delta * w * (1.0 - w)))
        idx = todo[ok]
        w, u2 = w[ok], u2[ok]
        ax = axes[idx]
        s = np.sqrt(np.maximum(1.0 - w * w, 0.0))
        phi = 6.283185307179586 * (u2 - 0.5)
        for j, a in zip(range(len(idx)), ax):
            ux, uy, uz, vx, vy, vz = orthonormal_basis(a[0], a[1], a[2])
            c, sn = np.cos(phi[j]), np.sin(phi[j])
            out[idx[j]] = w[j] * a + s[j] * (c * np.array([ux, uy, uz]) + sn * np.array([vx, vy, vz]))
        todo = todo[~ok]
    return out


def _integrate_numpy(mat, elec, dt, n_steps, seed, stream_ids, init_state, offsets, seg_k0, seg_k1, seg_v,
                     clamp, thr, rec_every, out_m, out_state, out_peak, out_ev_n, out_ev_k, out_ev_dir, out_trace):
    n = stream_ids.shape[0]
    max_ev = out_ev_k.shape[1]
    p = np.array([mat[PX], mat[PY], mat[PZ]])
    st = init_state.astype(np.int64).copy()
    free = clamp <= 0.0
    temp = np.where(free, elec[T_RT], clamp)
    m = _initial_directions_numpy(seed, stream_ids, elec[DELTA0] * elec[T_RT] / temp, st[:, None] * p[None, :])
    mx, my, mz = m[:, 0].copy(), m[:, 1].copy(), m[:, 2].copy()
    peak = temp.copy()
    decay = np.exp(-dt / elec[TAU])
    ptr = offsets[:-1].copy()
    end = offsets[1:]
    n_ev = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    seeds = np.full(n, seed, dtype=np.uint64)
    tags = np.full(n, TAG_DYNAMICS, dtype=np.uint64)
    rec = 0
    for k in range(n_steps):
        while True:
            adv = ptr < end
            adv[adv] = k >= seg_k1[ptr[adv]]
            if not adv.any():
                break
            ptr += adv
        volts = np.zeros(n)
        live = ptr < end
        live[live] = k >= seg_k0[ptr[live]]
        volts[live] = seg_v[ptr[live]]
        if rec_every > 0 and k % rec_every == 0:
            out_trace[:, rec] = np.stack([np.full(n, k * dt), mx, my, mz, temp, volts], axis=1)
            rec += 1
        res = np.where(st > 0, elec[R_P], elec[R_P] * (1.0 + elec[TMR]))
        target = elec[T_RT] + elec[ALPHA_J] * volts * volts / res
        temp = np.where(free, target + (temp - target) * decay, temp)
        peak = np.maximum(peak, temp)
        a = mat[STT] * elec[ETA] * volts / res
        z0, z1, z2, _ = normal4(seeds, stream_ids, np.full(n, k, dtype=np.uint64), tags)
        sig = np.where(temp > 0.0, noise_sigma(np.maximum(temp, 1e-300), dt, mat), 0.0)
        mx, my, mz = heun_step(mx, my, mz, sig * z0, sig * z1, sig * z2, a, dt, mat)
        proj = mx * p[0] + my * p[1] + mz * p[2]
        flip = ((st > 0) & (proj < -thr)) | ((st < 0) & (proj > thr))
        if flip.any():
            st[flip] = -st[flip]
            store = flip & (n_ev < max_ev)
            out_ev_k[rows[store], n_ev[store]] = k + 1
            out_ev_dir[rows[store], n_ev[store]] = st[store]
            n_ev += flip
    proj = mx * p[0] + my * p[1] + mz * p[2]
    final = np.where(proj > 0.0, 1, -1)
    tail = final != st
    store = tail & (n_ev < max_ev)
    out_ev_k[rows[store], n_ev[store]] = n_steps
    out_ev_dir[rows[store], n_ev[store]] = final[store]
    n_ev += tail
    if rec_every > 0:
        out_trace[:, rec] = np.stack([np.full(n, n_steps * dt), mx, my, mz, temp, np.zeros(n)], axis=1)
    out_m[:] = np.stack([mx, my, mz], axis=1)
    out_state[:] = final
    out_peak[:] = peak
    out_ev_n[:] = n_ev


def integrate(mat, elec, dt, n_steps, seed, stream_ids, init_state, segments: Segments, clamp=None, thr=0.5,
              rec_every=0, max_events=16) -> BatchResult:
    """Run one batch of trials; see module docstring."""
    n = len(stream_ids)
    stream_ids = np.asarray(stream_ids, dtype=np.uint64)
    init_state = np.asarray(init_state, dtype=np.int64)
    clamp = np.zeros(n) if clamp is None else np.asarray(clamp, dtype=np.float64)
    n_rec = n_steps // rec_every + 2 if rec_every > 0 else 1
    out = BatchResult(
        np.zeros((n, 3)), np.zeros(n, dtype=np.int64), np.zeros(n), np.zeros(n, dtype=np.int64),
        np.zeros((n, max_events), dtype=np.int64), np.zeros((n, max_events), dtype=np.int64),
        np.zeros((n, n_rec, 6)),
    )
    fn = _integrate_numba if USE_NUMBA else _integrate_numpy
    if n:
        fn(np.asarray(mat, dtype=np.float64), np.asarray(elec, dtype=np.float64), float(dt), int(n_steps),
           np.uint64(seed), stream_ids, init_state, segments.offsets, segments.k0, segments.k1, segments.volts,
           clamp, float(thr), int(rec_every), out.final_m, out.final_state, out.peak_temperature,
           out.event_count, out.event_step, out.event_dir, out.trace)
    if rec_every > 0:
        n_used = n_steps // rec_every + (1 if n_steps % rec_every else 0) + 1
        out.trace = out.trace[:, :n_used]
    else:
        out.trace = None
    return out
