"""Signal recovery on the sphere from 1-bit measurements.

Four procedures share the folded-matrix representation (rows multiplied by
their measured signs, so every constraint reads (phi x)_mu > 0) and the
norm-sqrt(N) convention:

* ``rfpi_recover``    — double-loop renormalized fixed-point iteration:
  tangent-projected gradient of the one-sided quadratic, soft threshold
  delta/lambda, renormalization; the outer loop grows lambda geometrically.
* ``cisr_recover``    — cavity-inspired recovery: accumulated field updates
  with an Onsager self-feedback correction, unit-threshold shrinkage, and an
  outer schedule shrinking the gain parameter B.
* ``biht_init``       — binary iterative hard thresholding, used to seed CISR.
* ``naive_cavity_recover`` — the raw self-consistent cavity equations, kept
  as a diagnostic: they rarely converge, which is the point of reporting it.

All procedures are deterministic functions of (instance, config, init/seed).
"""

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from .model import ProblemInstance, fold_signs

__all__ = [
    "RfpiConfig",
    "CisrConfig",
    "CisrState",
    "CavityState",
    "RecoveryResult",
    "AllZeroShrinkage",
    "DegenerateParameters",
    "rfpi_inner_step",
    "rfpi_recover",
    "cisr_inner_step",
    "cisr_recover",
    "biht_init",
    "naive_cavity_recover",
]

# Salt for deriving the default RFPI starting point from an instance seed.
_RFPI_INIT_SALT = 0x5EED1217


class AllZeroShrinkage(Exception):
    """The shrinkage step zeroed every entry.

    For CISR this signals the restart rule; the exception carries the state
    needed to replay the failed sweep under a smaller B.
    """

    def __init__(self, h_field=None, gamma=None, h_tilde=None):
        super().__init__("shrinkage produced the all-zero vector")
        self.h_field = h_field
        self.gamma = gamma
        self.h_tilde = h_tilde


class DegenerateParameters(Exception):
    """A or B collapsed to zero on the very first cavity sweep.

    Later collapses halt the iteration and are flagged on the result instead,
    so the partial residual trace is still returned.
    """


@dataclass(frozen=True)
class RfpiConfig:
    """Double-loop protocol constants for the fixed-point iteration.

    Defaults follow the benchmark protocol: descent step 0.01, initial
    lambda 0.005 doubled each outer stage, per-entry l1 tolerances 1e-8.
    """

    delta: float = 0.01
    lambda0: float = 0.005
    lambda_growth: float = 2.0
    inner_tol: float = 1e-8
    outer_tol: float = 1e-8
    max_inner: int = 10_000
    max_outer: int = 60

    def __post_init__(self):
        if min(self.delta, self.lambda0, self.inner_tol, self.outer_tol) <= 0:
            raise ValueError("delta, lambda0 and tolerances must be positive")
        if self.lambda_growth <= 1.0:
            raise ValueError(f"lambda_growth must exceed 1, got {self.lambda_growth}")


@dataclass(frozen=True)
class CisrConfig:
    """Outer-schedule constants for cavity-inspired recovery.

    ``onsager_enabled=False`` reproduces the ablation with the reaction term
    removed (NORT).
    """

    b_shrink: float = 0.9
    inner_tol: float = 1e-8
    outer_tol: float = 1e-8
    max_inner: int = 10_000
    max_outer: int = 200
    max_restarts: int = 50
    biht_iters: int = 50
    onsager_enabled: bool = True

    def __post_init__(self):
        if not 0.0 < self.b_shrink < 1.0:
            raise ValueError(f"b_shrink must be in (0, 1), got {self.b_shrink}")
        if min(self.inner_tol, self.outer_tol) <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class CisrState:
    """Inner-loop state: estimate, accumulated field, gain B, Onsager coefficient."""

    x_hat: np.ndarray
    h: np.ndarray
    b: float
    gamma: float = 0.0


@dataclass
class CavityState:
    """Raw cavity iteration state; the multiplier is absorbed by the
    normalization that fixes A."""

    x_hat: np.ndarray
    a_hat: np.ndarray
    k_field: np.ndarray
    h_field: np.ndarray
    a_param: float
    b_param: float
    lambda_mult: float = 0.0


@dataclass
class RecoveryResult:
    x_hat: np.ndarray
    inner_iterations_total: int
    outer_iterations: int
    converged: bool
    wall_time: float
    restarts: int = 0
    objective_trace: Optional[list] = field(default=None, repr=False)


def _default_rfpi_init(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed) & (2**64 - 1), _RFPI_INIT_SALT)))
    x = rng.standard_normal(n)
    return x * (math.sqrt(n) / np.linalg.norm(x))


def rfpi_inner_step(x_prev: np.ndarray, phi_folded: np.ndarray, delta: float, lam: float) -> np.ndarray:
    """One inner sweep: violation gradient, tangent projection, descent,
    soft threshold delta/lambda, renormalization to sqrt(N).

    Raises AllZeroShrinkage when the threshold wipes every entry.
    """
    if delta <= 0 or lam <= 0:
        raise ValueError("delta and lambda must be positive")
    xn, allzero = K.rfpi_step(np.ascontiguousarray(x_prev, dtype=float),
                              np.ascontiguousarray(phi_folded, dtype=float),
                              delta, delta / lam)
    if allzero:
        raise AllZeroShrinkage()
    return xn


def _tangent_gradient_inf(phi_f: np.ndarray, x: np.ndarray) -> float:
    """Sup norm of the sphere-projected violation gradient at x."""
    v = phi_f @ x
    fbar = K._viol_gradient(phi_f, np.minimum(v, 0.0))
    ftilde = fbar - (fbar @ x / x.size) * x
    return float(np.abs(ftilde).max())


def rfpi_recover(instance: ProblemInstance, cfg: RfpiConfig = RfpiConfig(),
                 x_init: Optional[np.ndarray] = None, record_objective: bool = False) -> RecoveryResult:
    """Run the double-loop fixed-point iteration on one instance.

    The outer loop grows lambda (shrinking the threshold delta/lambda) and
    stops once consecutive stage convergents differ by less than
    ``outer_tol`` per entry in l1.  While the threshold exceeds the live
    gradient scale delta * ||ftilde||_inf the shrinkage pins the support, so
    consecutive stages can agree without the anneal being anywhere near done;
    stage agreement therefore only terminates the loop once the support is
    gradient-live (threshold below that scale) or the threshold itself has
    annealed below the tolerance.  All-zero shrinkage ends the stage and
    annealing continues with a smaller threshold.

    ``record_objective`` fills ``RecoveryResult.objective_trace`` with
    (outer, inner, residual, l1 norm, one-sided penalty) per accepted step.
    """
    t0 = time.perf_counter()
    phi_f = np.ascontiguousarray(fold_signs(instance.phi, instance.y).phi_folded)
    n = instance.n
    if x_init is None:
        x = _default_rfpi_init(n, instance.seed)
    else:
        x = np.asarray(x_init, dtype=float).copy()
        if abs(np.linalg.norm(x) - math.sqrt(n)) > 1e-6 * math.sqrt(n):
            raise ValueError("x_init must have norm sqrt(N)")
    lam = cfg.lambda0
    prev = x.copy()
    total = 0
    outer = 0
    converged = False
    trace = [] if record_objective else None
    for stage in range(cfg.max_outer):
        outer += 1
        thresh = cfg.delta / lam
        x, steps, status, resids, l1s, pens = K.rfpi_inner_loop(
            x, phi_f, cfg.delta, thresh, cfg.inner_tol, cfg.max_inner,
            record_objective)
        total += steps
        if record_objective:
            # (outer, inner, residual, l1, penalty): the descent objective at
            # this stage is penalty + l1 / lambda
            trace.extend((stage, k, float(r), float(l1), float(pen))
                         for k, (r, l1, pen) in enumerate(zip(resids, l1s, pens)))
        if status != K.STATUS_ALLZERO:
            d = float(np.abs(x - prev).mean())
            if stage > 0 and d < cfg.outer_tol:
                if thresh < cfg.outer_tol or cfg.delta * _tangent_gradient_inf(phi_f, x) > thresh:
                    converged = True
                    break
            prev = x.copy()
        lam *= cfg.lambda_growth
    return RecoveryResult(x_hat=x, inner_iterations_total=total, outer_iterations=outer,
                          converged=converged, wall_time=time.perf_counter() - t0,
                          objective_trace=trace)


def cisr_inner_step(state: CisrState, phi_folded: np.ndarray, onsager: bool = True) -> CisrState:
    """One inner sweep of cavity-inspired recovery on an explicit state.

    Raises AllZeroShrinkage carrying (updated field, Onsager coefficient,
    pre-shrinkage field) so callers can inspect the failed sweep.
    """
    phi_f = np.ascontiguousarray(phi_folded, dtype=float)
    x = np.ascontiguousarray(state.x_hat, dtype=float)
    h = np.ascontiguousarray(state.h, dtype=float)
    if state.b <= 0:
        raise ValueError(f"B must be positive, got {state.b}")
    xn, hn, allzero, w = K.cisr_step(x, h, phi_f, state.b, onsager)
    v = phi_f @ x
    gamma = float((v < 0).sum()) / (x.size * state.b)
    if allzero:
        h_upd = h - K._viol_gradient(phi_f, np.minimum(v, 0.0)) / state.b
        raise AllZeroShrinkage(h_field=h_upd, gamma=gamma,
                               h_tilde=h_upd + (gamma * x if onsager else 0.0))
    return CisrState(x_hat=xn, h=hn, b=state.b, gamma=gamma if onsager else 0.0)


def _one_sparse_seed(x: np.ndarray) -> np.ndarray:
    """Largest-magnitude entry only, rescaled to sqrt(N); lowest index wins ties."""
    n = x.size
    j = int(np.argmax(np.abs(x)))
    out = np.zeros(n)
    out[j] = math.sqrt(n) * (1.0 if x[j] >= 0 else -1.0)
    return out


def _initial_b(w: np.ndarray) -> float:
    """Pick B so exactly one field magnitude |w|/B crosses the unit threshold.

    The second-largest magnitude lands at 0.99; near-ties fall back to the
    geometric mean of the top two so the leader still crosses.
    """
    aw = np.sort(np.abs(w))[::-1]
    if aw[0] == 0.0:
        return 1.0
    if aw.size < 2 or aw[1] == 0.0:
        return aw[0] * 0.5
    b = aw[1] / 0.99
    if b >= aw[0]:
        b = math.sqrt(aw[0] * aw[1])
    return float(b)


def _restart_b(h: np.ndarray, w: np.ndarray, b: float) -> Optional[float]:
    """Reduce B so only the first field entry to cross the unit threshold survives.

    Replaying the failed sweep under B' gives fields h + w/B'; scanning
    t = 1/B' upward from 1/B, the first component to reach magnitude one is
    the survivor.  Returns None when no crossing exists (w is zero wherever
    it matters): the caller then gives up on restarting this stage.
    """
    tcur = 1.0 / b
    tbest = math.inf
    tsecond = math.inf
    for i in range(w.size):
        if w[i] == 0.0:
            continue
        for target in (1.0, -1.0):
            t = (target - h[i]) / w[i]
            if t > tcur * (1.0 + 1e-12):
                if t < tbest:
                    tsecond = tbest
                    tbest = t
                elif t < tsecond:
                    tsecond = t
    if not math.isfinite(tbest):
        return None
    tnew = tbest * 1.01 if tbest * 1.01 < tsecond else 0.5 * (tbest + tsecond)
    return 1.0 / tnew


def cisr_recover(instance: ProblemInstance, cfg: CisrConfig = CisrConfig(),
                 k_prior: int = 1) -> RecoveryResult:
    """Run cavity-inspired recovery with the B-annealing outer loop.

    The starting point is the strongest entry of a k_prior-sparse BIHT
    estimate (a 1-sparse vector of norm sqrt(N)); the initial B makes exactly
    one field magnitude cross the unit threshold on the first sweep.  On
    all-zero shrinkage the restart rule lowers B just enough for one entry to
    survive and resumes the sweep (capped per stage, then the schedule moves
    on).  Outer stages multiply B by ``b_shrink`` and terminate when
    consecutive stage convergents differ by less than ``outer_tol`` per entry
    in l1 at a sign-feasible iterate: there the one-sided gradient vanishes
    identically, the field can never change again, and the state is a
    provable fixed point.  Infeasible stalls keep annealing instead (the true
    fixed points of this iteration are feasible).
    """
    if not 1 <= k_prior <= instance.n:
        raise ValueError(f"k_prior must be in [1, N], got {k_prior}")
    t0 = time.perf_counter()
    phi_f = np.ascontiguousarray(fold_signs(instance.phi, instance.y).phi_folded)
    n = instance.n
    onsager = cfg.onsager_enabled
    x = _one_sparse_seed(K.biht_loop(phi_f, k_prior, cfg.biht_iters))
    h = np.zeros(n)
    # One probe sweep at B=1 yields the scale-free field increment w.
    _, _, _, w = K.cisr_step(x, h, phi_f, 1.0, onsager)
    b = _initial_b(w)
    prev = x.copy()
    total = 0
    outer = 0
    restarts = 0
    converged = False
    for stage in range(cfg.max_outer):
        outer += 1
        stage_restarts = 0
        while True:
            x, h, steps, status, w = K.cisr_inner_loop(
                x, h, phi_f, b, onsager, cfg.inner_tol, cfg.max_inner)
            total += steps
            if status != K.STATUS_ALLZERO:
                break
            b_new = _restart_b(h, w, b)
            stage_restarts += 1
            restarts += 1
            if b_new is None or stage_restarts > cfg.max_restarts:
                break
            b = b_new
        d = float(np.abs(x - prev).mean())
        if stage > 0 and d < cfg.outer_tol:
            feasible = not bool((phi_f @ x < 0.0).any())
            if feasible:
                converged = True
                break
        prev = x.copy()
        b *= cfg.b_shrink
    return RecoveryResult(x_hat=x, inner_iterations_total=total, outer_iterations=outer,
                          converged=converged, wall_time=time.perf_counter() - t0,
                          restarts=restarts)


def biht_init(instance: ProblemInstance, k: int, iters: int = 50) -> np.ndarray:
    """K-sparse initializer: hard-thresholded violation-gradient descent.

    Returns a vector with at most k nonzeros and norm sqrt(N).
    """
    if not 1 <= k <= instance.n:
        raise ValueError(f"k must be in [1, N], got {k}")
    phi_f = np.ascontiguousarray(fold_signs(instance.phi, instance.y).phi_folded)
    return K.biht_loop(phi_f, k, iters)


def naive_cavity_recover(instance: ProblemInstance, max_iters: int = 500,
                         tol: float = 1e-8, k_prior: Optional[int] = None,
                         return_state: bool = False):
    """Iterate the raw self-consistent cavity equations and report the trace.

    Seeded from a BIHT estimate with k = round(rho N) unless ``k_prior``
    overrides it.  The first sweep's B is set to the (k+1)-th largest
    magnitude of the initial field phi^T f'(phi x), so exactly k entries
    start outside the unit dead zone; a unit B leaves every field inside it
    and collapses A on the spot.  Returns (RecoveryResult, residual_trace);
    convergence is rare (the sweeps are kept in their raw form, without the
    stabilizing outer schedule) and non-convergence is reported, not raised.
    A collapse of A or B to zero halts the iteration with the trace intact.
    With ``return_state`` the final CavityState is appended to the return
    tuple.
    """
    t0 = time.perf_counter()
    phi_f = np.ascontiguousarray(fold_signs(instance.phi, instance.y).phi_folded)
    phi_fT = np.ascontiguousarray(phi_f.T)
    n = instance.n
    if k_prior is None:
        k_prior = max(1, int(round((np.count_nonzero(instance.x0) / n) * n)))
    x = K.biht_loop(phi_f, k_prior, 50)
    field = -K._viol_gradient(phi_f, np.minimum(phi_f @ x, 0.0))
    mags = np.sort(np.abs(field))[::-1]
    kk = min(k_prior, mags.size - 1)
    b0 = float(mags[kk]) if mags[kk] > 0 else 1.0
    x, a_hat, k_field, h_field, sweeps, status, trace, a_param, b_param = \
        K.naive_cavity_loop(x, phi_fT, phi_f, b0, max_iters, tol)
    if status == 3 and sweeps == 0:
        raise DegenerateParameters("every field inside the dead zone at the start")
    result = RecoveryResult(x_hat=x, inner_iterations_total=sweeps,
                            outer_iterations=1,
                            converged=status == K.STATUS_CONVERGED,
                            wall_time=time.perf_counter() - t0)
    if status == 3:
        result.converged = False
    if return_state:
        state = CavityState(x_hat=x, a_hat=a_hat, k_field=k_field,
                            h_field=h_field, a_param=a_param, b_param=b_param)
        return result, np.asarray(trace), state
    return result, np.asarray(trace)
