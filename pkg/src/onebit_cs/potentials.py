"""Scalar potentials and special functions shared by recovery and theory.

All functions are pure, accept scalars or numpy arrays, and are total on
finite input.  Kink conventions (measure-zero points, chosen so the
operators are deterministic and match the shrinkage pseudocode's
``max(., 0)`` behavior): ``f_prime(0) = 0``, ``f_second(0) = 0`` and
``g_second(+-1) = 0``.
"""

import math

import numpy as np
from scipy.special import erfc, erfcx

__all__ = [
    "gauss_tail",
    "f_pot",
    "f_prime",
    "f_second",
    "g_pot",
    "g_prime",
    "g_second",
    "soft_threshold",
    "phi",
    "phi_minimizer",
]

_SQRT2 = math.sqrt(2.0)
_ERFCX_SWITCH = 8.0


def gauss_tail(x):
    """Upper tail of the standard Gaussian, H(x) = int_x^inf dz e^{-z^2/2}/sqrt(2 pi).

    Evaluated through the complementary error function; for large positive
    arguments the scaled form ``0.5 * erfcx(x/sqrt 2) * exp(-x^2/2)`` is used
    so downstream ratios of tails stay well-behaved when the argument grows
    (small conjugate-variance regimes).
    """
    x = np.asarray(x, dtype=float)
    small = x <= _ERFCX_SWITCH
    out = np.where(
        small,
        0.5 * erfc(np.where(small, x, 0.0) / _SQRT2),
        0.5 * erfcx(np.where(small, 0.0, x) / _SQRT2) * np.exp(-0.5 * np.square(np.where(small, 0.0, x))),
    )
    if out.ndim == 0:
        return float(out)
    return out


def f_pot(u):
    """One-sided quadratic penalty: u^2/2 for u <= 0, else 0."""
    u = np.asarray(u, dtype=float)
    out = np.where(u <= 0.0, 0.5 * u * u, 0.0)
    return float(out) if out.ndim == 0 else out


def f_prime(u):
    """Derivative of the one-sided quadratic: u for u <= 0, else 0."""
    u = np.asarray(u, dtype=float)
    out = np.where(u <= 0.0, u, 0.0)
    return float(out) if out.ndim == 0 else out


def f_second(u):
    """Second derivative of the one-sided quadratic: 1 for u < 0, else 0."""
    u = np.asarray(u, dtype=float)
    out = np.where(u < 0.0, 1.0, 0.0)
    return float(out) if out.ndim == 0 else out


def g_pot(u):
    """Shrinkage potential: (|u|-1)^2/2 outside the unit dead zone, else 0."""
    u = np.asarray(u, dtype=float)
    t = np.maximum(np.abs(u) - 1.0, 0.0)
    out = 0.5 * t * t
    return float(out) if out.ndim == 0 else out


def g_prime(u):
    """Soft-threshold map with unit threshold: sign(u) * max(|u|-1, 0)."""
    u = np.asarray(u, dtype=float)
    out = np.sign(u) * np.maximum(np.abs(u) - 1.0, 0.0)
    return float(out) if out.ndim == 0 else out


def g_second(u):
    """Indicator of being outside the unit dead zone: 1 for |u| > 1, else 0."""
    u = np.asarray(u, dtype=float)
    out = np.where(np.abs(u) > 1.0, 1.0, 0.0)
    return float(out) if out.ndim == 0 else out


def soft_threshold(h, t):
    """Soft threshold sign(h) * max(|h|-t, 0); equals ``g_prime(h)`` at t=1.

    ``t`` must be strictly positive.
    """
    if t <= 0.0:
        raise ValueError(f"soft_threshold requires t > 0, got {t}")
    h = np.asarray(h, dtype=float)
    out = np.sign(h) * np.maximum(np.abs(h) - t, 0.0)
    return float(out) if out.ndim == 0 else out


def phi(w, q_big_hat):
    """Minimum of the single-body cost (Qhat/2) x^2 - w x + |x| over x.

    Closed form: -(|w|-1)^2 / (2 Qhat) when |w| > 1, else 0.  Always <= 0 and
    even in w.
    """
    if q_big_hat <= 0.0:
        raise ValueError(f"phi requires q_big_hat > 0, got {q_big_hat}")
    w = np.asarray(w, dtype=float)
    t = np.maximum(np.abs(w) - 1.0, 0.0)
    out = -t * t / (2.0 * q_big_hat)
    return float(out) if out.ndim == 0 else out


def phi_minimizer(w, q_big_hat):
    """Argmin of the single-body cost: soft threshold of the field over Qhat."""
    if q_big_hat <= 0.0:
        raise ValueError(f"phi_minimizer requires q_big_hat > 0, got {q_big_hat}")
    return g_prime(w) / q_big_hat
