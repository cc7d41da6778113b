"""Jitted inner loops for the recovery procedures.

These kernels are the single execution path used by the public recover
functions, so reruns with identical inputs are bitwise reproducible.  The
violation-gradient accumulations gather only the violated rows (the
one-sided potential has zero gradient on satisfied measurements), which is
where these loops spend their time at desk scale.

Status codes shared by the loop kernels: 0 converged, 1 all-zero shrinkage,
2 iteration cap reached.
"""

import math

import numpy as np
from numba import njit

STATUS_CONVERGED = 0
STATUS_ALLZERO = 1
STATUS_MAXITER = 2


@njit(cache=True)
def _viol_gradient(phi_f, v):
    """phi_f^T f'(v) accumulated over violated rows only (v_mu < 0)."""
    M, N = phi_f.shape
    g = np.zeros(N)
    for mu in range(M):
        c = v[mu]
        if c < 0.0:
            row = phi_f[mu]
            for i in range(N):
                g[i] += c * row[i]
    return g


@njit(cache=True)
def rfpi_step(x, phi_f, delta, thresh):
    """One inner sweep of the renormalized fixed-point iteration.

    Returns (x_new, allzero): gradient of the one-sided quadratic, projection
    onto the sphere tangent space, descent, soft threshold, renormalization.
    ``allzero`` means the shrinkage wiped every entry; x_new is then x.
    """
    M, N = phi_f.shape
    v = phi_f @ x
    fbar = _viol_gradient(phi_f, v)
    dot = 0.0
    for i in range(N):
        dot += fbar[i] * x[i]
    dot /= N
    u = np.empty(N)
    nrm2 = 0.0
    for i in range(N):
        h = x[i] - delta * (fbar[i] - dot * x[i])
        a = abs(h) - thresh
        ui = 0.0 if a <= 0.0 else (a if h > 0.0 else -a)
        u[i] = ui
        nrm2 += ui * ui
    if nrm2 == 0.0:
        return x.copy(), True
    scale = math.sqrt(N) / math.sqrt(nrm2)
    for i in range(N):
        u[i] *= scale
    return u, False


@njit(cache=True)
def rfpi_inner_loop(x, phi_f, delta, thresh, inner_tol, max_inner, record):
    """Iterate rfpi_step until the per-entry l1 change drops below inner_tol.

    When ``record`` is set, returns per-step (residual, l1 norm, one-sided
    penalty) of each accepted iterate for trace diagnostics.
    """
    N = x.size
    res_trace = np.empty(max_inner if record else 0)
    l1_trace = np.empty(max_inner if record else 0)
    pen_trace = np.empty(max_inner if record else 0)
    steps = 0
    status = STATUS_MAXITER
    for k in range(max_inner):
        xn, allzero = rfpi_step(x, phi_f, delta, thresh)
        if allzero:
            status = STATUS_ALLZERO
            break
        diff = 0.0
        for i in range(N):
            diff += abs(xn[i] - x[i])
        x = xn
        steps = k + 1
        if record:
            l1 = 0.0
            for i in range(N):
                l1 += abs(x[i])
            v = phi_f @ x
            pen = 0.0
            for mu in range(v.size):
                if v[mu] < 0.0:
                    pen += 0.5 * v[mu] * v[mu]
            res_trace[k] = diff / N
            l1_trace[k] = l1
            pen_trace[k] = pen
        if diff / N < inner_tol:
            status = STATUS_CONVERGED
            break
    return x, steps, status, res_trace[:steps], l1_trace[:steps], pen_trace[:steps]


@njit(cache=True)
def cisr_step(x, h, phi_f, b, onsager):
    """One inner sweep of the cavity-inspired recovery.

    Field update H <- H - B^-1 phi^T f'(phi x), Onsager coefficient
    Gamma = (N B)^-1 sum f'', self-feedback cancellation H~ = H + Gamma x
    (skipped when ``onsager`` is off), unit-threshold shrinkage, and
    renormalization to sqrt(N).

    Returns (x_new, h_new, allzero, w) where w is the field increment that a
    replay of this sweep would scale by 1/B' — the quantity the restart rule
    needs to pick a new B.
    """
    M, N = phi_f.shape
    v = phi_f @ x
    nneg = 0
    for mu in range(M):
        if v[mu] < 0.0:
            nneg += 1
    g = _viol_gradient(phi_f, v)
    gamma_num = nneg / N  # B * Gamma
    w = np.empty(N)
    for i in range(N):
        w[i] = -g[i] + (gamma_num * x[i] if onsager else 0.0)
    hnew = np.empty(N)
    u = np.empty(N)
    nrm2 = 0.0
    for i in range(N):
        hnew[i] = h[i] - g[i] / b
        ht = hnew[i] + (gamma_num / b) * x[i] if onsager else hnew[i]
        a = abs(ht) - 1.0
        ui = 0.0 if a <= 0.0 else (a if ht > 0.0 else -a)
        u[i] = ui
        nrm2 += ui * ui
    if nrm2 == 0.0:
        return x.copy(), h.copy(), True, w
    scale = math.sqrt(N) / math.sqrt(nrm2)
    for i in range(N):
        u[i] *= scale
    return u, hnew, False, w


@njit(cache=True)
def cisr_inner_loop(x, h, phi_f, b, onsager, inner_tol, max_inner):
    """Iterate cisr_step until the per-entry l1 change in x drops below tol.

    On all-zero shrinkage the pre-sweep (x, h) are returned together with the
    scale-free field increment w so the caller can apply the restart rule.
    """
    N = x.size
    steps = 0
    status = STATUS_MAXITER
    w = np.zeros(N)
    for k in range(max_inner):
        xn, hn, allzero, w = cisr_step(x, h, phi_f, b, onsager)
        if allzero:
            status = STATUS_ALLZERO
            break
        diff = 0.0
        for i in range(N):
            diff += abs(xn[i] - x[i])
        x = xn
        h = hn
        steps = k + 1
        if diff / N < inner_tol:
            status = STATUS_CONVERGED
            break
    return x, h, steps, status, w


@njit(cache=True)
def hard_threshold_k(x, k):
    """Keep the k largest-magnitude entries, zero the rest.

    Stable sort: among equal magnitudes the lowest index wins.
    """
    order = np.argsort(-np.abs(x), kind="mergesort")
    out = np.zeros(x.size)
    for j in range(min(k, x.size)):
        out[order[j]] = x[order[j]]
    return out


@njit(cache=True)
def biht_loop(phi_f, k, iters):
    """Binary iterative hard thresholding on the folded matrix.

    Matched-filter start (phi_f^T 1 hard-thresholded), then ``iters`` rounds
    of x <- HT_k(x - phi_f^T f'(phi_f x)) with unit step, rescaled to sqrt(N)
    at the end.  Degenerate all-zero outcomes fall back to the strongest
    matched-filter column.
    """
    M, N = phi_f.shape
    mf = np.zeros(N)
    for mu in range(M):
        row = phi_f[mu]
        for i in range(N):
            mf[i] += row[i]
    x = hard_threshold_k(mf, k)
    for _ in range(iters):
        v = phi_f @ x
        g = _viol_gradient(phi_f, v)
        for i in range(N):
            x[i] -= g[i]
        x = hard_threshold_k(x, k)
    nrm2 = 0.0
    for i in range(N):
        nrm2 += x[i] * x[i]
    if nrm2 == 0.0:
        j = 0
        best = 0.0
        for i in range(N):
            if abs(mf[i]) > best:
                best = abs(mf[i])
                j = i
        x = np.zeros(N)
        x[j] = math.sqrt(N) if mf[j] >= 0.0 else -math.sqrt(N)
        return x
    scale = math.sqrt(N) / math.sqrt(nrm2)
    for i in range(N):
        x[i] *= scale
    return x


@njit(cache=True)
def naive_cavity_loop(x, phi_fT, phi_f, b0, max_iters, tol):
    """Sweep the self-consistent cavity equations in their raw form.

    Per sweep: K = phi x - B a_hat, a_hat = -f'(K)/B, H = phi^T a_hat
    + Gamma x, x = g'(H)/A with A fixed by the spherical normalization,
    then B = mean(g''(H))/A and Gamma = mean-over-rows f''(K) / B.

    ``b0`` seeds B for the first sweep (a unit B leaves every initial field
    inside the dead zone and kills the iteration before it can do anything).

    Returns (x, a_hat, k_field, h_field, sweeps, status, residual_trace,
    a_param, b_param); status 3 flags degenerate A or B (iteration halted,
    trace kept).
    """
    M, N = phi_f.shape
    a_hat = np.zeros(M)
    kf = np.zeros(M)
    hf = np.zeros(N)
    A = 1.0
    B = b0
    gamma = 0.0
    trace = np.empty(max_iters)
    status = STATUS_MAXITER
    sweeps = 0
    for it in range(max_iters):
        kf = phi_f @ x
        for mu in range(M):
            kf[mu] -= B * a_hat[mu]
        nneg = 0
        for mu in range(M):
            if kf[mu] <= 0.0:
                a_hat[mu] = -kf[mu] / B
                if kf[mu] < 0.0:
                    nneg += 1
            else:
                a_hat[mu] = 0.0
        hf = phi_fT @ a_hat
        for i in range(N):
            hf[i] += gamma * x[i]
        xg = np.empty(N)
        nrm2 = 0.0
        nout = 0
        for i in range(N):
            a = abs(hf[i]) - 1.0
            gi = 0.0 if a <= 0.0 else (a if hf[i] > 0.0 else -a)
            xg[i] = gi
            nrm2 += gi * gi
            if a > 0.0:
                nout += 1
        if nrm2 == 0.0:
            status = 3
            break
        A = math.sqrt(nrm2) / math.sqrt(N)
        diff = 0.0
        for i in range(N):
            xn = xg[i] / A
            diff += abs(xn - x[i])
            x[i] = xn
        B = (nout / N) / A
        if B == 0.0:
            status = 3
            sweeps = it + 1
            trace[it] = diff / N
            break
        gamma = (nneg / N) / B
        trace[it] = diff / N
        sweeps = it + 1
        if diff / N < tol:
            status = STATUS_CONVERGED
            break
    return x, a_hat, kf, hf, sweeps, status, trace[:sweeps], A, B
