"""Low-order Zernike removal and surface figure metrics.

Only the four modes the comparison needs: piston Z0 = 1, tilt-x
Z1 = rho*cos(theta), tilt-y Z2 = rho*sin(theta), and power (defocus)
Z3 = 2*rho^2 - 1.  The unit disk is the mask's bounding circle centered
at the mask centroid, so rho <= 1 on every valid pixel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .unwrap import Surface

DEFAULT_WAVELENGTH_NM = 632.8  # HeNe, double-pass

MODES = ("piston", "tilt_x", "tilt_y", "power")


def _values_mask(surface, mask):
    if isinstance(surface, Surface):
        return np.asarray(surface.values, dtype=np.float64), np.asarray(surface.mask, dtype=bool)
    values = np.asarray(surface, dtype=np.float64)
    if mask is None:
        mask = np.ones(values.shape, dtype=bool)
    return values, np.asarray(mask, dtype=bool)


@dataclass
class ZernikeFit:
    """Least-squares coefficients (radians) and the disk mapping used."""

    modes: tuple
    coefficients: np.ndarray
    center: tuple
    radius: float

    def evaluate(self, shape: tuple) -> np.ndarray:
        """Fitted component on the full grid."""
        rr, cc = np.mgrid[0 : shape[0], 0 : shape[1]]
        dx = (cc - self.center[1]) / self.radius
        dy = (rr - self.center[0]) / self.radius
        out = np.zeros(shape, dtype=np.float64)
        for mode, coef in zip(self.modes, self.coefficients):
            out += coef * _mode_values(mode, dx, dy)
        return out

    def coefficient(self, mode: str) -> float:
        return float(self.coefficients[self.modes.index(mode)])


def _mode_values(mode: str, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    if mode == "piston":
        return np.ones_like(dx)
    if mode == "tilt_x":
        return dx
    if mode == "tilt_y":
        return dy
    if mode == "power":
        return 2.0 * (dx * dx + dy * dy) - 1.0
    raise ValueError(f"unknown Zernike mode {mode!r}")


def zernike_fit_remove(surface, mask=None, modes=MODES):
    """Fit the selected modes over valid pixels and subtract them.

    Returns (residual, fit); residual is a Surface when a Surface was
    passed in, otherwise a plain array.  Raises on a rank-deficient
    design (e.g., all valid pixels collinear).
    """
    values, m = _values_mask(surface, mask)
    modes = tuple(modes)
    if not modes or any(name not in MODES for name in modes):
        raise ValueError(f"modes must be a nonempty subset of {MODES}")
    rows, cols = np.nonzero(m)
    if rows.size < 10:
        raise ValueError("zernike_fit_remove: need at least 10 valid pixels")
    cy, cx = rows.mean(), cols.mean()
    radius = float(np.sqrt(((rows - cy) ** 2 + (cols - cx) ** 2).max()))
    if radius == 0.0:
        raise ValueError("zernike_fit_remove: degenerate mask geometry")
    dx = (cols - cx) / radius
    dy = (rows - cy) / radius
    design = np.column_stack([_mode_values(name, dx, dy) for name in modes])
    coef, _res, rank, _sv = np.linalg.lstsq(design, values[rows, cols], rcond=None)
    if rank < len(modes):
        raise ValueError("zernike_fit_remove: rank-deficient design (collinear valid pixels)")
    fit = ZernikeFit(modes=modes, coefficients=coef, center=(float(cy), float(cx)), radius=radius)
    residual = values.copy()
    residual[rows, cols] -= design @ coef
    residual[~m] = 0.0
    if isinstance(surface, Surface):
        return Surface(values=residual, mask=m, warning=surface.warning), fit
    return residual, fit


def rmse(surface, mask=None) -> float:
    """Mean-removed RMS over valid pixels, in input units."""
    values, m = _values_mask(surface, mask)
    v = values[m]
    if v.size == 0:
        raise ValueError("rmse: no valid pixels")
    return float(np.sqrt(np.mean((v - v.mean()) ** 2)))


def phase_to_height(values, wavelength_nm: float = DEFAULT_WAVELENGTH_NM):
    """Phase in radians to surface height in nm, double-pass convention."""
    if wavelength_nm <= 0:
        raise ValueError("wavelength must be positive")
    if isinstance(values, Surface):
        values = values.values
    return np.asarray(values, dtype=np.float64) * (wavelength_nm / (4.0 * np.pi))
