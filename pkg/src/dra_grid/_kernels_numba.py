"""Numba-compiled integration kernels (default backend).

Same step semantics as _kernels_numpy, written as explicit loops so the
whole multi-step integration runs inside one JIT-compiled function.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._kernels_numpy import MARGIN_FRAC, MAX_HALVINGS, STATUS_COLLAPSE, STATUS_OK


@njit(cache=True, nogil=True)
def _active_fill_outputs(x, t, xstar, soc_init, soc_lower, soc_upper, cap, active_base, mu, eta, eps, out):
    n_pev, n_slot = x.shape
    agg = np.empty(n_slot)
    for k in range(n_slot):
        total = active_base[k]
        for i in range(n_pev):
            total += x[i, k] / t[i, k]
        agg[k] = total
    for i in range(n_pev):
        prefix = 0.0
        for k in range(n_slot):
            pe = soc_init[i] + prefix
            lo = soc_lower[i] - pe
            if lo < -cap[i, k]:
                lo = -cap[i, k]
            hi = soc_upper[i] - pe
            if hi > cap[i, k]:
                hi = cap[i, k]
            prev = agg[k - 1] if k > 0 else agg[0]
            nxt = agg[k + 1] if k < n_slot - 1 else agg[n_slot - 1]
            curv = 2.0 * agg[k] - prev - nxt
            cost = (1.0 - mu) * (x[i, k] - xstar[i, k]) / t[i, k] + mu * eta * agg[k]
            cost += mu * (1.0 - eta) * curv
            out[i, k] = eps * np.log((x[i, k] - lo) / (hi - x[i, k])) + cost
            prefix += x[i, k]


@njit(cache=True, nogil=True)
def _active_row_feasible(row, soc_init, soc_lower, soc_upper, cap_row):
    n_slot = row.shape[0]
    prefix = 0.0
    for k in range(n_slot):
        pe = soc_init + prefix
        lo = soc_lower - pe
        if lo < -cap_row[k]:
            lo = -cap_row[k]
        hi = soc_upper - pe
        if hi > cap_row[k]:
            hi = cap_row[k]
        width = hi - lo
        if width <= 0.0:
            return False, k
        margin = MARGIN_FRAC * width
        if row[k] < lo + margin or row[k] > hi - margin:
            return False, k
        prefix += row[k]
    return True, -1


@njit(cache=True, nogil=True)
def active_phase(
    x,
    t,
    xstar,
    soc_init,
    soc_lower,
    soc_upper,
    cap,
    active_base,
    mu,
    eta,
    eps,
    lap,
    h,
    tol,
    max_steps,
    record_stride,
    backtrack,
    rec_steps,
    rec_spreads,
    rec_states,
    final_spread,
):
    n_pev, n_slot = x.shape
    out = np.empty((n_pev, n_slot))
    vel = np.empty((n_pev, n_slot))
    cand = np.empty(n_slot)
    step = 0
    n_rec = 0
    status = STATUS_OK
    fail_i = -1
    fail_k = -1
    converged = False
    while True:
        _active_fill_outputs(
            x, t, xstar, soc_init, soc_lower, soc_upper, cap, active_base, mu, eta, eps, out
        )
        converged = True
        for i in range(n_pev):
            omax = out[i, 0]
            omin = out[i, 0]
            for k in range(1, n_slot):
                if out[i, k] > omax:
                    omax = out[i, k]
                if out[i, k] < omin:
                    omin = out[i, k]
            final_spread[i] = omax - omin
            if omax - omin > tol:
                converged = False
        done = converged or step >= max_steps
        if (step % record_stride == 0 or done) and (n_rec == 0 or rec_steps[n_rec - 1] != step):
            rec_steps[n_rec] = step
            for i in range(n_pev):
                rec_spreads[n_rec, i] = final_spread[i]
                for k in range(n_slot):
                    rec_states[n_rec, i, k] = x[i, k]
            n_rec += 1
        if done:
            break
        for i in range(n_pev):
            for k in range(n_slot):
                acc = 0.0
                for j in range(n_slot):
                    acc += lap[k, j] * out[i, j]
                vel[i, k] = -acc
        for i in range(n_pev):
            hh = h
            committed = False
            for attempt in range(MAX_HALVINGS + 1):
                for k in range(n_slot):
                    cand[k] = x[i, k] + hh * vel[i, k]
                ok, bad_k = _active_row_feasible(
                    cand, soc_init[i], soc_lower[i], soc_upper[i], cap[i]
                )
                if ok:
                    for k in range(n_slot):
                        x[i, k] = cand[k]
                    committed = True
                    break
                fail_k = bad_k
                if not backtrack:
                    break
                hh *= 0.5
            if not committed:
                status = STATUS_COLLAPSE
                fail_i = i
                break
        if status != STATUS_OK:
            break
        step += 1
    return status, fail_i, fail_k, step, converged, n_rec


@njit(cache=True, nogil=True)
def _reactive_fill_outputs(z, lo, hi, reactive_base, mu, eta, eps, out):
    n_pev, width = z.shape
    n_slot = width - 1
    agg = np.empty(n_slot)
    for k in range(n_slot):
        total = reactive_base[k]
        for i in range(n_pev):
            total += z[i, k]
        agg[k] = total
    for i in range(n_pev):
        for k in range(width):
            out[i, k] = eps * np.log((z[i, k] - lo[i, k]) / (hi[i, k] - z[i, k]))
        for k in range(n_slot):
            prev = agg[k - 1] if k > 0 else agg[0]
            nxt = agg[k + 1] if k < n_slot - 1 else agg[n_slot - 1]
            curv = 2.0 * agg[k] - prev - nxt
            out[i, k] += (1.0 - mu) * z[i, k] + mu * eta * agg[k] + mu * (1.0 - eta) * curv


@njit(cache=True, nogil=True)
def reactive_phase(
    z,
    qbar,
    qtot,
    reactive_base,
    mu,
    eta,
    eps,
    lap,
    h,
    tol,
    max_steps,
    record_stride,
    backtrack,
    rec_steps,
    rec_spreads,
    rec_states,
    final_spread,
):
    n_pev, width = z.shape
    n_slot = width - 1
    lo = np.empty((n_pev, width))
    hi = np.empty((n_pev, width))
    for i in range(n_pev):
        for k in range(n_slot):
            lo[i, k] = -qbar[i, k]
            hi[i, k] = qbar[i, k]
        lo[i, n_slot] = -qtot[i]
        hi[i, n_slot] = qtot[i]
    out = np.empty((n_pev, width))
    vel = np.empty((n_pev, width))
    cand = np.empty(width)
    step = 0
    n_rec = 0
    status = STATUS_OK
    fail_i = -1
    fail_k = -1
    converged = False
    while True:
        _reactive_fill_outputs(z, lo, hi, reactive_base, mu, eta, eps, out)
        converged = True
        for i in range(n_pev):
            omax = out[i, 0]
            omin = out[i, 0]
            for k in range(1, width):
                if out[i, k] > omax:
                    omax = out[i, k]
                if out[i, k] < omin:
                    omin = out[i, k]
            final_spread[i] = omax - omin
            if omax - omin > tol:
                converged = False
        done = converged or step >= max_steps
        if (step % record_stride == 0 or done) and (n_rec == 0 or rec_steps[n_rec - 1] != step):
            rec_steps[n_rec] = step
            for i in range(n_pev):
                rec_spreads[n_rec, i] = final_spread[i]
                for k in range(width):
                    rec_states[n_rec, i, k] = z[i, k]
            n_rec += 1
        if done:
            break
        for i in range(n_pev):
            for k in range(width):
                acc = 0.0
                for j in range(width):
                    acc += lap[k, j] * out[i, j]
                vel[i, k] = -acc
        for i in range(n_pev):
            hh = h
            committed = False
            for attempt in range(MAX_HALVINGS + 1):
                feasible = True
                for k in range(width):
                    cand[k] = z[i, k] + hh * vel[i, k]
                    margin = MARGIN_FRAC * (hi[i, k] - lo[i, k])
                    if cand[k] < lo[i, k] + margin or cand[k] > hi[i, k] - margin:
                        feasible = False
                        fail_k = k
                        break
                if feasible:
                    for k in range(width):
                        z[i, k] = cand[k]
                    committed = True
                    break
                if not backtrack:
                    break
                hh *= 0.5
            if not committed:
                status = STATUS_COLLAPSE
                fail_i = i
                break
        if status != STATUS_OK:
            break
        step += 1
    return status, fail_i, fail_k, step, converged, n_rec
