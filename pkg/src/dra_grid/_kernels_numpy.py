"""Pure-numpy integration kernels (fallback backend).

Vectorized per step over the whole fleet; one Python-level loop over
Euler steps. Semantics are identical to the numba backend; select with
DRA_GRID_BACKEND=numpy.
"""

from __future__ import annotations

import numpy as np

#: Relative margin kept between a state and its interval ends.
MARGIN_FRAC = 1e-9

#: Step halvings tried before a step is declared collapsed.
MAX_HALVINGS = 20

STATUS_OK = 0
STATUS_COLLAPSE = 1


def active_interval(x, soc_init, soc_lower, soc_upper, cap):
    """Per-slot feasible intervals (lo, hi) for active strategies.

    x is (N, K); the interval of slot k holds the SoC prefix through
    slot k-1 fixed and clips to the per-slot charger energy cap.
    """
    prefix_excl = soc_init[:, None] + np.cumsum(x, axis=1) - x
    lo = np.maximum(soc_lower[:, None] - prefix_excl, -cap)
    hi = np.minimum(soc_upper[:, None] - prefix_excl, cap)
    return lo, hi


def active_outputs(x, t, xstar, soc_init, soc_lower, soc_upper, cap, active_base, mu, eta, eps):
    """Consensus outputs (marginal cost + barrier) of every active node.

    Returns (outputs, lo, hi); all (N, K).
    """
    lo, hi = active_interval(x, soc_init, soc_lower, soc_upper, cap)
    agg = active_base + np.sum(x / t, axis=0)
    prev = np.concatenate((agg[:1], agg[:-1]))
    nxt = np.concatenate((agg[1:], agg[-1:]))
    curv = 2.0 * agg - prev - nxt
    cost = (1.0 - mu) * (x - xstar) / t + mu * eta * agg + mu * (1.0 - eta) * curv
    out = eps * np.log((x - lo) / (hi - x)) + cost
    return out, lo, hi

def _row_feasible(row, soc_init, soc_lower, soc_upper, cap_row):
    prefix_excl = soc_init + np.cumsum(row) - row
    lo = np.maximum(soc_lower - prefix_excl, -cap_row)
    hi = np.minimum(soc_upper - prefix_excl, cap_row)
    width = hi - lo
    if np.any(width <= 0.0):
        return False, int(np.argmax(width <= 0.0))
    margin = MARGIN_FRAC * width
    bad = (row < lo + margin) | (row > hi - margin)
    if np.any(bad):
        return False, int(np.argmax(bad))
    return True, -1


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
    """Integrate the active allocation flow until output consensus.

    Mutates x in place; writes telemetry into the rec_* arrays every
    record_stride steps (plus the final step). Returns
    (status, fail_pev, fail_slot, steps_taken, converged, n_records).
    """
    n_pev = x.shape[0]
    step = 0
    n_rec = 0
    status = STATUS_OK
    fail_i = -1
    fail_k = -1
    converged = False
    while True:
        out, _, _ = active_outputs(
            x, t, xstar, soc_init, soc_lower, soc_upper, cap, active_base, mu, eta, eps
        )
        spreads = out.max(axis=1) - out.min(axis=1)
        converged = bool(np.all(spreads <= tol))
        done = converged or step >= max_steps
        if (step % record_stride == 0 or done) and (n_rec == 0 or rec_steps[n_rec - 1] != step):
            rec_steps[n_rec] = step
            rec_spreads[n_rec] = spreads
            rec_states[n_rec] = x
            n_rec += 1
        if done:
            break
        vel = -(out @ lap)
        for i in range(n_pev):
            hh = h
            committed = False
            for attempt in range(MAX_HALVINGS + 1):
                cand = x[i] + hh * vel[i]
                ok, bad_k = _row_feasible(cand, soc_init[i], soc_lower[i], soc_upper[i], cap[i])
                if ok:
                    x[i] = cand
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
    final_spread[:] = out.max(axis=1) - out.min(axis=1)
    return status, fail_i, fail_k, step, converged, n_rec


def reactive_outputs(z, qbar, qtot, reactive_base, mu, eta, eps):
    """Consensus outputs of reactive nodes plus the slack node.

    z is (N, K+1): K reactive strategies then the slack. Bounds are the
    fixed envelope intervals. Returns (outputs, lo, hi).
    """
    n_pev, width = z.shape
    k = width - 1
    lo = np.empty_like(z)
    hi = np.empty_like(z)
    lo[:, :k] = -qbar
    hi[:, :k] = qbar
    lo[:, k] = -qtot
    hi[:, k] = qtot
    agg = reactive_base + np.sum(z[:, :k], axis=0)
    prev = np.concatenate((agg[:1], agg[:-1]))
    nxt = np.concatenate((agg[1:], agg[-1:]))
    curv = 2.0 * agg - prev - nxt
    out = eps * np.log((z - lo) / (hi - z))
    out[:, :k] += (1.0 - mu) * z[:, :k] + mu * eta * agg + mu * (1.0 - eta) * curv
    return out, lo, hi


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
    """Integrate the reactive flow over K strategy nodes plus the slack.

    Same contract as active_phase with z = [y | slack] per PEV and
    fixed envelope bounds.
    """
    n_pev, width = z.shape
    lo = np.empty_like(z)
    hi = np.empty_like(z)
    lo[:, : width - 1] = -qbar
    hi[:, : width - 1] = qbar
    lo[:, width - 1] = -qtot
    hi[:, width - 1] = qtot
    margin = MARGIN_FRAC * (hi - lo)
    step = 0
    n_rec = 0
    status = STATUS_OK
    fail_i = -1
    fail_k = -1
    converged = False
    while True:
        out, _, _ = reactive_outputs(z, qbar, qtot, reactive_base, mu, eta, eps)
        spreads = out.max(axis=1) - out.min(axis=1)
        converged = bool(np.all(spreads <= tol))
        done = converged or step >= max_steps
        if (step % record_stride == 0 or done) and (n_rec == 0 or rec_steps[n_rec - 1] != step):
            rec_steps[n_rec] = step
            rec_spreads[n_rec] = spreads
            rec_states[n_rec] = z
            n_rec += 1
        if done:
            break
        vel = -(out @ lap)
        for i in range(n_pev):
            hh = h
            committed = False
            for attempt in range(MAX_HALVINGS + 1):
                cand = z[i] + hh * vel[i]
                bad = (cand < lo[i] + margin[i]) | (cand > hi[i] - margin[i])
                if not np.any(bad):
                    z[i] = cand
                    committed = True
                    break
                fail_k = int(np.argmax(bad))
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
    final_spread[:] = out.max(axis=1) - out.min(axis=1)
    return status, fail_i, fail_k, step, converged, n_rec
