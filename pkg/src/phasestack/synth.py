"""Synthetic interferometry lab: ground-truth surfaces, noisy wrapped
stacks, contaminated trials, and four-bucket interferogram simulation.

All randomness flows through ``numpy.random.default_rng`` (PCG64), which is
seedable and portable across platforms.  Per-frame noise streams are keyed
by ``(seed, 0, frame_slot)`` so frames can be synthesized in any order and
still reproduce bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PhaseStack, wrap


def peaks_surface(n: int, target_pv: float) -> np.ndarray:
    """Classic two-dimensional peaks test surface, scaled to an exact
    peak-to-valley range.

    The surface is evaluated on an n x n uniform grid over [-3, 3]^2:

        p(x, y) = 3(1-x)^2 exp(-x^2 - (y+1)^2)
                  - 10(x/5 - x^3 - y^5) exp(-x^2 - y^2)
                  - (1/3) exp(-(x+1)^2 - y^2)

    then multiplied by a scalar so that max - min == target_pv.

    Parameters
    ----------
    n : grid size per side (>= 8)
    target_pv : desired peak-to-valley in radians (> 0)
    """
    if n < 8:
        raise ValueError(f"peaks_surface: grid size {n} < 8")
    if not target_pv > 0:
        raise ValueError("peaks_surface: target_pv must be positive")
    x = np.linspace(-3.0, 3.0, n)
    X, Y = np.meshgrid(x, x)
    p = (
        3.0 * (1.0 - X) ** 2 * np.exp(-(X**2) - (Y + 1.0) ** 2)
        - 10.0 * (X / 5.0 - X**3 - Y**5) * np.exp(-(X**2) - Y**2)
        - (1.0 / 3.0) * np.exp(-((X + 1.0) ** 2) - Y**2)
    )
    pv = p.max() - p.min()
    return p * (target_pv / pv)


def noise_sigma(snr_db: float, reference_power="unit", surface: np.ndarray | None = None) -> float:
    """Noise standard deviation for a target SNR in dB.

    reference_power selects the signal-power convention:

    * ``"unit"`` (default): the signal is assumed to carry unit power, so
      sigma^2 = 10^(-snr_db/10).  This is the convention of the common
      ``awgn(x, snr)`` one-liner; wrapped phases live in (-pi, pi], so
      unit reference power is the natural scale for them.
    * ``"measured"``: sigma^2 = P / 10^(snr_db/10) with P the mean squared
      mean-removed value of `surface`.
    * any positive float: used directly as the reference power.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    if reference_power == "unit":
        p = 1.0
    elif reference_power == "measured":
        if surface is None:
            raise ValueError("measured reference power requires a surface")
        v = np.asarray(surface, dtype=np.float64)
        if v.size < 2:
            raise ValueError("surface must have at least 2 pixels")
        p = float(np.mean((v - v.mean()) ** 2))
        if p == 0.0:
            raise ValueError("SNR undefined for a zero-variance surface")
    else:
        p = float(reference_power)
        if not p > 0:
            raise ValueError("reference power must be positive")
    return math.sqrt(p / 10.0 ** (snr_db / 10.0))


def add_awgn(surface: np.ndarray, snr_db: float, seed: int, reference_power="unit") -> np.ndarray:
    """Add white Gaussian noise at the requested SNR; deterministic per seed.

    ``snr_db = math.inf`` disables the noise and returns a copy.
    """
    surface = np.asarray(surface, dtype=np.float64)
    if surface.size < 2:
        raise ValueError("add_awgn: surface must have at least 2 pixels")
    sigma = noise_sigma(snr_db, reference_power, surface)
    if sigma == 0.0:
        return surface.copy()
    rng = np.random.default_rng(seed)
    return surface + rng.normal(0.0, sigma, surface.shape)


def four_bucket_patterns(phase: np.ndarray, bias: float = 2.0, modulation: float = 1.0):
    """Simulate the four phase-shifted interferograms I_k = A + B cos(phi + (k-1) pi/2)."""
    phase = np.asarray(phase, dtype=np.float64)
    return tuple(bias + modulation * np.cos(phase + k * np.pi / 2.0) for k in range(4))


def four_bucket_demodulate(i1, i2, i3, i4):
    """Recover the wrapped phase from four phase-shifted interferograms.

    psi = atan2(I4 - I2, I1 - I3), wrapped into (-pi, pi].  Pixels with
    zero modulation (both numerator and denominator zero) are flagged
    invalid in the returned mask.

    Returns
    -------
    (frame, mask) : wrapped-phase array and bool validity mask
    """
    rasters = [np.asarray(i, dtype=np.float64) for i in (i1, i2, i3, i4)]
    shape = rasters[0].shape
    if any(r.shape != shape for r in rasters):
        raise ValueError("four_bucket_demodulate: rasters must share one shape")
    num = rasters[3] - rasters[1]
    den = rasters[0] - rasters[2]
    mask = (num != 0.0) | (den != 0.0)
    frame = wrap(np.arctan2(num, den))
    frame = np.where(mask, frame, 0.0)
    return frame, mask


@dataclass
class TrialSpec:
    """Parameters of one synthetic repeated-measurement trial.

    Attributes
    ----------
    frame_count : number of acquired frames N
    grid : pixels per side of the (square) frames
    snr_db : per-frame noise level (math.inf disables noise)
    perturbation_count : number Q of stable perturbed-phase families
    contaminant_fraction : fraction of frames replaced by outlier frames
    tilt_jitter : peak family tilt in radians (per normalized axis)
    seed : nonnegative 64-bit reproducibility seed
    reference_power : SNR convention passed to the noise generator
    """

    frame_count: int
    grid: int
    snr_db: float
    perturbation_count: int = 1
    contaminant_fraction: float = 0.0
    tilt_jitter: float = 0.0
    seed: int = 0
    reference_power: object = "unit"

    def __post_init__(self):
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if self.grid < 8:
            raise ValueError("grid must be >= 8")
        if self.perturbation_count < 1:
            raise ValueError("perturbation_count must be >= 1")
        if not 0.0 <= self.contaminant_fraction < 1.0:
            raise ValueError("contaminant_fraction must be in [0, 1)")
        if self.tilt_jitter < 0.0:
            raise ValueError("tilt_jitter must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    @property
    def contaminant_count(self) -> int:
        # round half up, so 3% of 100 is exactly 3
        return int(math.floor(self.contaminant_fraction * self.frame_count + 0.5))


CONTAMINANT = -1


def make_trial(truth: np.ndarray, spec: TrialSpec):
    """Build a synthetic wrapped-phase stack from a ground-truth surface.

    Non-contaminant frames are wrap(truth + family tilt + noise); family
    tilts are drawn uniformly in +-tilt_jitter per axis.  Contaminant
    frames get an independent large tilt (5x to 10x tilt_jitter) and
    doubled noise power.  Frame order is randomized by the seed.

    Family tilts depend only on (seed, perturbation_count), so trials that
    differ only in frame_count share the same cluster structure.

    Returns
    -------
    (stack, labels) : PhaseStack plus an int array of per-frame labels,
        family index >= 0 or CONTAMINANT (-1).  Labels exist for test
        oracles only; the processing pipeline never sees them.
    """
    truth = np.asarray(truth, dtype=np.float64)
    if truth.shape != (spec.grid, spec.grid):
        raise ValueError(
            f"truth shape {truth.shape} does not match spec.grid {spec.grid}"
        )
    n = spec.frame_count
    n_cont = spec.contaminant_count
    if n_cont >= n:
        raise ValueError("contaminant fraction leaves no useful frames")

    trial_rng = np.random.default_rng([spec.seed, 1])
    q = spec.perturbation_count
    family_tilts = trial_rng.uniform(-spec.tilt_jitter, spec.tilt_jitter, (q, 2))

    n_useful = n - n_cont
    labels = np.concatenate(
        [np.arange(n_useful) % q, np.full(n_cont, CONTAMINANT, dtype=np.int64)]
    )
    trial_rng.shuffle(labels)

    xn = np.linspace(-1.0, 1.0, spec.grid)
    XN, YN = np.meshgrid(xn, xn)
    sigma = noise_sigma(spec.snr_db, spec.reference_power, truth)

    frames = np.empty((n, spec.grid, spec.grid))
    for i in range(n):
        rng = np.random.default_rng([spec.seed, 0, i])
        if labels[i] == CONTAMINANT:
            mag = rng.uniform(5.0, 10.0, 2) * spec.tilt_jitter
            sign = rng.choice([-1.0, 1.0], 2)
            gx, gy = mag * sign
            s = sigma * math.sqrt(2.0)
        else:
            gx, gy = family_tilts[labels[i]]
            s = sigma
        field = truth + gx * XN + gy * YN
        if s > 0.0:
            field = field + rng.normal(0.0, s, truth.shape)
        frames[i] = wrap(field)

    stack = PhaseStack(frames=frames, mask=np.ones(truth.shape, dtype=bool))
    return stack, labels
