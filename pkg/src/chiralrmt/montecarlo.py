"""Monte Carlo sampling of W = H1 + i mu H2 and histogram / average estimators.

Sample index i belongs to block i // block_size, and block b always draws from
SeedSequence(seed, spawn_key=(stream_id, b)).  Results therefore depend on the
seed, stream id and block size but not on the number of workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from .linalg import RngStream, sample_gue, singular_values

DEFAULT_BLOCK = 10_000


@dataclass(frozen=True)
class SpectrumSample:
    singular_values: np.ndarray
    stream: RngStream


@dataclass(frozen=True)
class HistogramEstimate:
    bin_edges: np.ndarray
    density: np.ndarray
    std_error: np.ndarray
    sample_count: int
    pooled_count: int = 0

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)


@dataclass(frozen=True)
class Histogram2D:
    x_edges: np.ndarray
    y_edges: np.ndarray
    density: np.ndarray
    std_error: np.ndarray
    sample_count: int


def _draw_W(N: int, mu: float, gen: np.random.Generator, size: int) -> np.ndarray:
    H1 = sample_gue(N, gen, size)
    H2 = sample_gue(N, gen, size)
    return H1 + 1j * mu * H2


def sample_spectrum(N: int, mu: float, rng: RngStream) -> SpectrumSample:
    """One draw of the N singular values of W."""
    if N < 1:
        raise ValueError("N must be >= 1")
    W = _draw_W(N, mu, rng.generator(), 1)[0]
    return SpectrumSample(singular_values(W), rng)


def block_generator(seed: int, stream_id: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(stream_id, block))
    return np.random.Generator(np.random.PCG64(ss))


def _block(N: int, mu: float, seed: int, stream_id: int, b: int, n: int) -> np.ndarray:
    return singular_values(_draw_W(N, mu, block_generator(seed, stream_id, b), n))


def sample_spectra(
    N: int, mu: float, samples: int, seed: int, workers: int = 1,
    block_size: int = DEFAULT_BLOCK, stream_id: int = 0,
) -> np.ndarray:
    """(samples, N) array of ascending singular values."""
    if N < 1 or samples < 1:
        raise ValueError("N and samples must be >= 1")
    if not 0.0 <= mu <= 1.0:
        raise ValueError("mu must lie in [0, 1]")
    sizes = [min(block_size, samples - s) for s in range(0, samples, block_size)]
    jobs = [(N, mu, seed, stream_id, b, n) for b, n in enumerate(sizes)]
    if workers <= 1:
        parts = [_block(*j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda j: _block(*j), jobs))
    return np.concatenate(parts, axis=0)


def histogram_density(spectra: ArrayLike, bins: int = 50, range: tuple[float, float] = (0.0, 5.0)) -> HistogramEstimate:
    """Pooled singular-value density normalized by the total pooled count.

    Standard errors are multinomial: sqrt(p (1 - p) / n) / width.
    """
    x = np.asarray(spectra, dtype=float)
    S = x.shape[0] if x.ndim > 1 else x.size
    pooled = x.ravel()
    n = pooled.size
    counts, edges = np.histogram(pooled, bins=bins, range=range)
    w = np.diff(edges)
    p = counts / n
    return HistogramEstimate(edges, p / w, np.sqrt(p * (1.0 - p) / n) / w, S, n)


def pair_correlation_estimate(
    spectra: ArrayLike, bins: int = 20, range: tuple[float, float] = (0.0, 5.0)
) -> Histogram2D:
    """Histogram of all ordered pairs (i != j) per draw; integrates to N(N-1)."""
    x = np.asarray(spectra, dtype=float)
    S, N = x.shape
    if N < 2:
        raise ValueError("pair correlation needs N >= 2")
    i, j = np.where(~np.eye(N, dtype=bool))
    a = x[:, i].ravel()
    b = x[:, j].ravel()
    counts, xe, ye = np.histogram2d(a, b, bins=bins, range=[range, range])
    area = np.outer(np.diff(xe), np.diff(ye))
    dens = counts / (S * area)
    # ordered pairs come in mirrored couples; Poisson error on the count of draws
    se = np.sqrt(counts) / (S * area)
    return Histogram2D(xe, ye, dens, se, S)


def mean_and_se(values: ArrayLike) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))


def second_moment(spectra: ArrayLike) -> tuple[float, float]:
    """Mean and SE of sum_i lambda_i^2."""
    x = np.asarray(spectra, dtype=float)
    return mean_and_se((x * x).sum(axis=1))


def characteristic_average(spectra: ArrayLike, masses: ArrayLike) -> tuple[float, float]:
    """Mean and SE of prod_f prod_i (kappa_f^2 - lambda_i^2)."""
    x2 = np.asarray(spectra, dtype=float) ** 2
    k2 = np.asarray(masses, dtype=float) ** 2
    vals = np.prod(k2[None, :, None] - x2[:, None, :], axis=(1, 2))
    return mean_and_se(vals)


def heine_oracle(j: int, mu: float, x: float, samples: int, rng: RngStream) -> tuple[float, float]:
    """Mean and SE of det(x^2 - W W^dagger) over j x j draws."""
    if j < 1:
        raise ValueError("j must be >= 1")
    spectra = sample_spectra(j, mu, samples, rng.master_seed, stream_id=rng.stream_id)
    return characteristic_average(spectra, [x])


def bin_average(func, edges: np.ndarray, nodes: int = 6) -> np.ndarray:
    """Average of a vectorized function over each bin by Gauss-Legendre."""
    t, w = np.polynomial.legendre.leggauss(nodes)
    lo, hi = edges[:-1, None], edges[1:, None]
    x = 0.5 * (hi + lo) + 0.5 * (hi - lo) * t
    vals = np.asarray(func(x.ravel())).reshape(x.shape)
    return 0.5 * (vals * w).sum(axis=1)


@dataclass(frozen=True)
class Comparison:
    centers: np.ndarray
    analytic: np.ndarray
    histogram: np.ndarray
    std_error: np.ndarray
    z: np.ndarray
    chi2_dof: float
    frac_within_3se: float
    max_abs_z: float


def compare_density(hist: HistogramEstimate, density_func, nodes: int = 6) -> Comparison:
    """Bin-wise z-scores of a histogram against an analytic density.

    Bins with no counts use the model multinomial SE.
    """
    model = bin_average(density_func, hist.bin_edges, nodes)
    w = hist.widths
    pooled = hist.pooled_count
    p_model = np.clip(model * w, 0.0, 1.0)
    model_se = np.sqrt(p_model * (1 - p_model) / pooled) / w
    se = np.where(hist.std_error > 0, hist.std_error, model_se)
    z = np.where(se > 0, (hist.density - model) / np.where(se > 0, se, 1.0), 0.0)
    return Comparison(hist.centers, model, hist.density, se, z, float(np.mean(z * z)),
                      float(np.mean(np.abs(z) <= 3.0)), float(np.max(np.abs(z))))
