"""Problem-instance generation: sparse Gaussian signals, Gaussian measurement
matrices, and 1-bit sign measurements, all deterministically seeded.

A trial's instance is a pure function of ``(params, seed)``: the same seed
always reproduces the same signal, matrix, and sign vector bit for bit.
Streams are derived through ``numpy.random.SeedSequence`` entropy tuples so
trials of an experiment can be generated independently (no sequential
coupling between trials).
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

__all__ = [
    "SignalParams",
    "ProblemInstance",
    "FoldedInstance",
    "ZeroMeasurement",
    "gen_signal",
    "gen_matrix",
    "measure",
    "fold_signs",
    "make_instance",
    "save_instance",
    "load_instance",
]


class ZeroMeasurement(Exception):
    """A linear measurement came out exactly zero; its sign is undefined.

    Carries the offending row index.  Probability-zero under the Gaussian
    ensemble; callers regenerate the instance with a perturbed seed.
    """

    def __init__(self, index: int):
        super().__init__(f"measurement row {index} is exactly zero")
        self.index = index


@dataclass(frozen=True)
class SignalParams:
    """Sparse-signal ensemble: dimension, nonzero density, optional exact support."""

    n: int
    rho: float
    k_exact: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho must be in (0, 1], got {self.rho}")
        if self.k_exact is not None and not 1 <= self.k_exact <= self.n:
            raise ValueError(f"k_exact must be in [1, n], got {self.k_exact}")


@dataclass(frozen=True)
class ProblemInstance:
    """One trial's ground truth: signal x0, matrix phi, signs y = sign(phi x0)."""

    x0: np.ndarray
    phi: np.ndarray
    y: np.ndarray
    seed: int
    alpha: float

    @property
    def n(self) -> int:
        return self.x0.size

    @property
    def m(self) -> int:
        return self.y.size


@dataclass(frozen=True)
class FoldedInstance:
    """Measurement matrix with each row multiplied by its sign: sign(phi_folded x0) = +1."""

    phi_folded: np.ndarray


def gen_signal(params: SignalParams, rng_seed) -> np.ndarray:
    """Draw a sparse signal: entries are 0 w.p. 1-rho, else standard Gaussian.

    With ``k_exact`` set, exactly that many uniformly chosen positions are
    nonzero instead of Bernoulli sampling.  An all-zero draw is resampled from
    the same stream, so the result always has at least one nonzero entry.
    """
    rng = np.random.default_rng(rng_seed)
    n = params.n
    if params.k_exact is not None:
        x = np.zeros(n)
        support = rng.choice(n, size=params.k_exact, replace=False)
        x[support] = rng.standard_normal(params.k_exact)
        while not np.any(x):
            x[support] = rng.standard_normal(params.k_exact)
        return x
    while True:
        mask = rng.random(n) < params.rho
        if np.any(mask):
            break
    x = np.zeros(n)
    x[mask] = rng.standard_normal(int(mask.sum()))
    while not np.any(x):
        x[mask] = rng.standard_normal(int(mask.sum()))
    return x


def gen_matrix(m: int, n: int, rng_seed) -> np.ndarray:
    """Draw an m-by-n matrix of i.i.d. Gaussian(0, 1/n) entries."""
    if m < 1 or n < 1:
        raise ValueError(f"matrix dimensions must be >= 1, got {m}x{n}")
    rng = np.random.default_rng(rng_seed)
    return rng.normal(0.0, 1.0 / math.sqrt(n), size=(m, n))


def measure(phi: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """1-bit measurement y = sign(phi x0), entries in {-1, +1}.

    Raises ZeroMeasurement if any row product is exactly zero.
    """
    z = phi @ x0
    zero = np.flatnonzero(z == 0.0)
    if zero.size:
        raise ZeroMeasurement(int(zero[0]))
    return np.where(z > 0.0, 1.0, -1.0)


def fold_signs(phi: np.ndarray, y: np.ndarray) -> FoldedInstance:
    """Multiply each row of phi by its measured sign.

    After folding, every constraint reads (phi_folded x)_mu > 0; folding twice
    with the same y is the identity.
    """
    if phi.shape[0] != y.size:
        raise ValueError(f"phi has {phi.shape[0]} rows but y has {y.size} entries")
    return FoldedInstance(phi_folded=phi * y[:, None])


def make_instance(n: int, m: int, signal: SignalParams, seed: int) -> ProblemInstance:
    """Build a complete problem instance deterministically from one seed.

    Signal and matrix streams are children of ``SeedSequence((seed, attempt))``.
    Exact-zero measurements (probability zero) bump ``attempt`` and regenerate
    so y = sign(phi x0) holds unconditionally.
    """
    for attempt in range(64):
        ss = np.random.SeedSequence(entropy=(int(seed) & (2**64 - 1), attempt))
        sig_seed, mat_seed = ss.spawn(2)
        x0 = gen_signal(signal, sig_seed)
        phi = gen_matrix(m, n, mat_seed)
        try:
            y = measure(phi, x0)
        except ZeroMeasurement:
            continue
        return ProblemInstance(x0=x0, phi=phi, y=y, seed=int(seed), alpha=m / n)
    raise RuntimeError("could not generate a tie-free instance in 64 attempts")


_MAGIC = 0x1B17C501


def save_instance(inst: ProblemInstance, path) -> None:
    """Dump an instance as flat binary: int64 header (magic, N, M, seed) then
    float64 phi (row-major), x0, y.  Debugging aid for reproducing a trial."""
    path = Path(path)
    with open(path, "wb") as fh:
        np.array([_MAGIC, inst.n, inst.m, inst.seed], dtype=np.int64).tofile(fh)
        inst.phi.astype(np.float64).tofile(fh)
        inst.x0.astype(np.float64).tofile(fh)
        inst.y.astype(np.float64).tofile(fh)


def load_instance(path) -> ProblemInstance:
    """Inverse of :func:`save_instance`."""
    path = Path(path)
    with open(path, "rb") as fh:
        header = np.fromfile(fh, dtype=np.int64, count=4)
        if header.size != 4 or header[0] != _MAGIC:
            raise ValueError(f"{path} is not an instance dump")
        _, n, m, seed = (int(v) for v in header)
        phi = np.fromfile(fh, dtype=np.float64, count=m * n).reshape(m, n)
        x0 = np.fromfile(fh, dtype=np.float64, count=n)
        y = np.fromfile(fh, dtype=np.float64, count=m)
    return ProblemInstance(x0=x0, phi=phi, y=y, seed=seed, alpha=m / n)
