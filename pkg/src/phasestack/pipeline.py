"""Orchestration of the two measurement procedures and their comparison.

Clustered route: piston-shift all frames, classify the pooled copies by
average-linkage clustering, circular-mean each chosen cluster at full
resolution, unwrap one denoised frame per cluster, remove low-order
Zernike modes per cluster surface, and combine by weighted mean.  The
unwrap count equals the number of chosen clusters, not the number of
frames.

Conventional route: unwrap every frame, remove per-frame piston, average,
then remove the remaining modes.

Per-cluster surfaces are piston-aligned before averaging because
unwrapping leaves an arbitrary 2*pi*k offset per surface; averaging
without alignment would be meaningless.  Same reason for the per-frame
piston removal in the conventional route.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .circular import circular_mean_frame
from .cluster import agglomerate, min_samples_from_fraction, pairwise_distances, select_clusters
from .core import PhaseStack
from .preprocess import center_pixel, prepare_for_clustering
from .unwrap import GoldsteinUnwrapper, Surface, default_seed
from .zernike import DEFAULT_WAVELENGTH_NM, MODES, phase_to_height, rmse, zernike_fit_remove

WEIGHTINGS = ("by-size", "uniform")


@dataclass
class PipelineParams:
    """Knobs of the clustered route; the conventional route uses only
    modes_removed and wavelength_nm.

    Exactly one of min_samples / min_fraction may be set; min_fraction is
    converted with ceil(fraction * N) at run time.
    """

    cut: float = 0.5
    min_samples: int | None = 2
    min_fraction: float | None = None
    pool_levels: int = 1
    cluster_weighting: str = "by-size"
    modes_removed: tuple = MODES
    wavelength_nm: float = DEFAULT_WAVELENGTH_NM
    classify: bool = True

    def __post_init__(self):
        if not 0.0 < self.cut <= 1.0:
            raise ValueError("cut must be in (0, 1]")
        if (self.min_samples is None) == (self.min_fraction is None):
            raise ValueError("set exactly one of min_samples / min_fraction")
        if self.min_samples is not None and self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")
        if self.min_fraction is not None and not 0.0 < self.min_fraction < 1.0:
            raise ValueError("min_fraction must be in (0, 1)")
        if self.pool_levels < 0:
            raise ValueError("pool_levels must be >= 0")
        if self.cluster_weighting not in WEIGHTINGS:
            raise ValueError(f"cluster_weighting must be one of {WEIGHTINGS}")
        self.modes_removed = tuple(self.modes_removed)
        if any(m not in MODES for m in self.modes_removed):
            raise ValueError(f"modes_removed must be a subset of {MODES}")
        if self.wavelength_nm <= 0:
            raise ValueError("wavelength_nm must be positive")

    def resolve_min_samples(self, n_frames: int) -> int:
        if self.min_samples is not None:
            return self.min_samples
        return min_samples_from_fraction(self.min_fraction, n_frames)


@dataclass
class SurfaceReport:
    """Result of one measurement run."""

    method: str
    surface: Surface
    rmse_rad: float
    rmse_nm: float
    frame_count: int
    unwrap_call_count: int
    chosen_sizes: list
    abandoned_sizes: list
    abandoned_frames: list
    fits: list = field(default_factory=list)
    stage_times_ms: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def total_time_ms(self) -> float:
        return float(sum(self.stage_times_ms.values()))

    def to_dict(self, params=None, seed=None, with_surface: bool = False) -> dict:
        """Report-file form: JSON-native types only, stable field set."""
        out = {
            "schema_version": 1,
            "method": self.method,
            "params": None if params is None else dataclasses.asdict(params),
            "seed": seed,
            "rmse_rad": self.rmse_rad,
            "rmse_nm": self.rmse_nm,
            "frame_count": self.frame_count,
            "unwrap_call_count": self.unwrap_call_count,
            "cluster_sizes_chosen": [int(v) for v in self.chosen_sizes],
            "cluster_sizes_abandoned": [int(v) for v in self.abandoned_sizes],
            "abandoned_frame_indices": [int(v) for v in self.abandoned_frames],
            "zernike_fits": [
                {"modes": list(f.modes), "coefficients": [float(c) for c in f.coefficients]}
                for f in self.fits
            ],
            "stage_times_ms": {k: float(v) for k, v in self.stage_times_ms.items()},
            "total_time_ms": self.total_time_ms,
            "warnings": list(self.warnings),
        }
        if params is not None:
            out["params"]["modes_removed"] = list(params.modes_removed)
        if with_surface:
            out["surface"] = {
                "values": self.surface.values.tolist(),
                "mask": self.surface.mask.astype(int).tolist(),
            }
        return out


def _anchor_for(mask: np.ndarray):
    """Center pixel when valid, else the valid pixel nearest the centroid."""
    i, j = center_pixel(mask.shape)
    if mask[i, j]:
        return (i, j)
    return default_seed(mask)


def _combine(surfaces: list, weights: list):
    """Per-pixel weighted mean of surfaces; a pixel is valid where at
    least one contributing surface is valid."""
    num = np.zeros_like(surfaces[0].values)
    den = np.zeros_like(surfaces[0].values)
    for s, w in zip(surfaces, weights):
        num += np.where(s.mask, w * s.values, 0.0)
        den += np.where(s.mask, float(w), 0.0)
    mask = den > 0
    values = np.where(mask, num / np.where(mask, den, 1.0), 0.0)
    return values, mask


def run_clustered(stack: PhaseStack, params: PipelineParams) -> SurfaceReport:
    """Classify, denoise per cluster, unwrap once per chosen cluster.

    Raises NoClusterError (with the cluster census attached) when no
    cluster reaches the minimum sampling number.
    """
    unwrapper = GoldsteinUnwrapper()
    times: dict = {}
    warnings: list = []
    n = len(stack)
    anchor = _anchor_for(stack.mask)

    t0 = time.perf_counter()
    shifted, pooled, pooled_mask = prepare_for_clustering(
        stack.frames, stack.mask, params.pool_levels, anchor
    )
    times["preprocess"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    if params.classify:
        if n < 2:
            raise ValueError("run_clustered: need at least 2 frames to classify")
        d = pairwise_distances(pooled, pooled_mask)
        dendrogram = agglomerate(d)
        clusters = select_clusters(dendrogram, params.cut, params.resolve_min_samples(n))
        chosen = clusters.chosen
        abandoned = clusters.abandoned
    else:
        chosen = [list(range(n))]
        abandoned = []
    times["classify"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    denoised = []
    for members in chosen:
        mean_frame, _resultant, out_mask = circular_mean_frame(shifted[members], stack.mask)
        denoised.append((mean_frame, out_mask))
    times["denoise"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    unwrapped = []
    for mean_frame, out_mask in denoised:
        s = unwrapper(mean_frame, out_mask, seed=_anchor_for(out_mask))
        if s.warning:
            warnings.append(s.warning)
        unwrapped.append(s)
    times["unwrap"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    residuals, fits = [], []
    for s in unwrapped:
        r, f = zernike_fit_remove(s, modes=params.modes_removed)
        residuals.append(r)
        fits.append(f)
    times["fit"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    if params.cluster_weighting == "by-size":
        weights = [len(m) for m in chosen]
    else:
        weights = [1] * len(chosen)
    values, mask = _combine(residuals, weights)
    surface = Surface(values=values, mask=mask, warning=None)
    rmse_rad = rmse(surface)
    times["combine"] = (time.perf_counter() - t0) * 1e3

    return SurfaceReport(
        method="clustered" if params.classify else "no-classify",
        surface=surface,
        rmse_rad=rmse_rad,
        rmse_nm=float(phase_to_height(rmse_rad, params.wavelength_nm)),
        frame_count=n,
        unwrap_call_count=unwrapper.call_count,
        chosen_sizes=[len(m) for m in chosen],
        abandoned_sizes=[len(m) for m in abandoned],
        abandoned_frames=sorted(i for m in abandoned for i in m),
        fits=fits,
        stage_times_ms=times,
        warnings=warnings,
    )


def run_conventional(stack: PhaseStack, params: PipelineParams) -> SurfaceReport:
    """Unwrap every frame, align pistons, average, remove the rest."""
    unwrapper = GoldsteinUnwrapper()
    times: dict = {}
    warnings: list = []
    n = len(stack)
    anchor = _anchor_for(stack.mask)

    t0 = time.perf_counter()
    shifted, _, _ = prepare_for_clustering(stack.frames, stack.mask, 0, anchor)
    times["preprocess"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    aligned = []
    for i in range(n):
        try:
            s = unwrapper(shifted[i], stack.mask, seed=anchor)
            r, _f = zernike_fit_remove(s, modes=("piston",))
        except Exception as exc:  # drop the frame, keep the run alive
            warnings.append(f"frame {i} excluded: {exc}")
            continue
        if s.warning:
            warnings.append(f"frame {i}: {s.warning}")
        aligned.append(r)
    if not aligned:
        raise ValueError("run_conventional: every frame failed to unwrap")
    times["unwrap"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    values, mask = _combine(aligned, [1] * len(aligned))
    residual, fit = zernike_fit_remove(
        Surface(values=values, mask=mask), modes=params.modes_removed
    )
    rmse_rad = rmse(residual)
    times["fit"] = (time.perf_counter() - t0) * 1e3

    return SurfaceReport(
        method="conventional",
        surface=residual,
        rmse_rad=rmse_rad,
        rmse_nm=float(phase_to_height(rmse_rad, params.wavelength_nm)),
        frame_count=n,
        unwrap_call_count=unwrapper.call_count,
        chosen_sizes=[len(aligned)],
        abandoned_sizes=[],
        abandoned_frames=[],
        fits=[fit],
        stage_times_ms=times,
        warnings=warnings,
    )


def snr_from_min_fraction(fraction: float) -> float:
    """Signal-to-noise ratio guaranteed by a minimum sampling fraction.

    A cluster holding a fraction f of the frames leaves at most (1 - f)
    contaminated, so the worst-case power ratio is (1 - f) / f.
    """
    if not 0.0 < fraction < 0.5:
        raise ValueError("min fraction must be in (0, 0.5)")
    return 10.0 * math.log10((1.0 - fraction) / fraction)


@dataclass
class ComparisonReport:
    """Aggregate of repeated trials run through both routes."""

    trial_count: int
    success_count: int
    clustered_rmse_rad: list
    conventional_rmse_rad: list
    clustered_mean: float
    conventional_mean: float
    clustered_sd: float
    conventional_sd: float
    sd_ratio: float | None
    time_ratio: float | None
    clustered_time_ms: float
    conventional_time_ms: float
    errors: list

    def to_dict(self, params=None, seed=None) -> dict:
        out = {
            "schema_version": 1,
            "params": None if params is None else dataclasses.asdict(params),
            "seed": seed,
            "trial_count": self.trial_count,
            "success_count": self.success_count,
            "clustered_rmse_rad": [float(v) for v in self.clustered_rmse_rad],
            "conventional_rmse_rad": [float(v) for v in self.conventional_rmse_rad],
            "clustered_mean": self.clustered_mean,
            "conventional_mean": self.conventional_mean,
            "clustered_sd": self.clustered_sd,
            "conventional_sd": self.conventional_sd,
            "sd_ratio": self.sd_ratio,
            "time_ratio": self.time_ratio,
            "clustered_time_ms": self.clustered_time_ms,
            "conventional_time_ms": self.conventional_time_ms,
            "errors": list(self.errors),
        }
        if params is not None:
            out["params"]["modes_removed"] = list(params.modes_removed)
        return out


def compare(trials: list) -> ComparisonReport:
    """Run both routes on each (stack, params) trial and aggregate.

    Per-trial failures are recorded and skipped; statistics cover the
    successful trials only.
    """
    if len(trials) < 2:
        raise ValueError("compare: need at least 2 trials")
    rms_c, rms_v, errors = [], [], []
    t_c = t_v = 0.0
    for idx, (stack, params) in enumerate(trials):
        try:
            rep_c = run_clustered(stack, params)
            rep_v = run_conventional(stack, params)
        except Exception as exc:
            errors.append(f"trial {idx}: {exc}")
            continue
        rms_c.append(rep_c.rmse_rad)
        rms_v.append(rep_v.rmse_rad)
        t_c += rep_c.total_time_ms
        t_v += rep_v.total_time_ms

    def _mean(v):
        return float(np.mean(v)) if v else float("nan")

    def _sd(v):
        return float(np.std(v, ddof=1)) if len(v) >= 2 else float("nan")

    sd_c, sd_v = _sd(rms_c), _sd(rms_v)
    return ComparisonReport(
        trial_count=len(trials),
        success_count=len(rms_c),
        clustered_rmse_rad=rms_c,
        conventional_rmse_rad=rms_v,
        clustered_mean=_mean(rms_c),
        conventional_mean=_mean(rms_v),
        clustered_sd=sd_c,
        conventional_sd=sd_v,
        sd_ratio=(sd_c / sd_v) if sd_v and math.isfinite(sd_v) and sd_v > 0 else None,
        time_ratio=(t_c / t_v) if t_v > 0 else None,
        clustered_time_ms=t_c,
        conventional_time_ms=t_v,
        errors=errors,
    )
