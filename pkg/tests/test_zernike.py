import math

import numpy as np
import pytest

from phasestack.core import circular_aperture
from phasestack.unwrap import Surface
from phasestack.zernike import (
    DEFAULT_WAVELENGTH_NM,
    MODES,
    ZernikeFit,
    phase_to_height,
    rmse,
    zernike_fit_remove,
)


def disk_mask(n):
    return circular_aperture((n, n))


class TestFitRemove:
    def test_plane_removed_to_zero(self):
        r, c = np.mgrid[0:33, 0:33]
        values = 0.4 + 0.03 * r - 0.05 * c
        mask = disk_mask(33)
        residual, fit = zernike_fit_remove(values, mask)
        assert np.abs(residual[mask]).max() < 1e-9
        assert fit.coefficient("power") == pytest.approx(0.0, abs=1e-9)

    def test_pure_defocus_lands_in_power(self):
        mask = disk_mask(33)
        rows, cols = np.nonzero(mask)
        cy, cx = rows.mean(), cols.mean()
        radius = float(np.sqrt(((rows - cy) ** 2 + (cols - cx) ** 2).max()))
        rr, cc = np.mgrid[0:33, 0:33]
        rho2 = ((rr - cy) ** 2 + (cc - cx) ** 2) / radius**2
        values = 1.5 * (2 * rho2 - 1)
        residual, fit = zernike_fit_remove(values, mask)
        assert fit.coefficient("power") == pytest.approx(1.5, abs=1e-6)
        assert np.abs(residual[mask]).max() < 1e-6

    def test_tilt_coefficient_recovered(self):
        mask = disk_mask(33)
        rows, cols = np.nonzero(mask)
        cy, cx = rows.mean(), cols.mean()
        radius = float(np.sqrt(((rows - cy) ** 2 + (cols - cx) ** 2).max()))
        rr, cc = np.mgrid[0:33, 0:33]
        values = 2.0 * (cc - cx) / radius  # 2 * tilt_x basis exactly
        _, fit = zernike_fit_remove(values, mask)
        assert fit.coefficient("tilt_x") == pytest.approx(2.0, abs=1e-6)
        assert fit.coefficient("tilt_y") == pytest.approx(0.0, abs=1e-6)

    def test_idempotent(self):
        rng = np.random.default_rng(6)
        values = rng.normal(size=(21, 21))
        mask = disk_mask(21)
        once, _ = zernike_fit_remove(values, mask)
        twice, fit2 = zernike_fit_remove(once, mask)
        assert np.abs(once - twice)[mask].max() < 1e-9
        assert np.abs(fit2.coefficients).max() < 1e-9

    def test_residual_orthogonal_to_fitted_component(self):
        rng = np.random.default_rng(7)
        values = rng.normal(size=(25, 25))
        mask = disk_mask(25)
        residual, fit = zernike_fit_remove(values, mask)
        comp = fit.evaluate((25, 25))
        dot = float((residual[mask] * comp[mask]).sum())
        scale = np.linalg.norm(residual[mask]) * max(np.linalg.norm(comp[mask]), 1e-30)
        assert abs(dot) < 1e-6 * max(scale, 1.0)

    def test_surface_in_surface_out(self):
        values = np.zeros((16, 16))
        mask = np.ones((16, 16), dtype=bool)
        surf = Surface(values=values, mask=mask, warning="w")
        residual, _ = zernike_fit_remove(surf)
        assert isinstance(residual, Surface)
        assert residual.warning == "w"
        assert np.array_equal(residual.mask, mask)

    def test_piston_only_subset(self):
        values = np.full((16, 16), 2.5)
        values[0, 0] = 3.5
        residual, fit = zernike_fit_remove(values, modes=("piston",))
        assert fit.modes == ("piston",)
        assert fit.coefficient("piston") == pytest.approx(values.mean(), abs=1e-9)
        assert residual[0, 0] == pytest.approx(3.5 - values.mean(), abs=1e-9)

    def test_invalid_pixels_zeroed(self):
        values = np.ones((16, 16))
        mask = np.ones((16, 16), dtype=bool)
        mask[3, 3] = False
        residual, _ = zernike_fit_remove(values, mask)
        assert residual[3, 3] == 0.0

    def test_collinear_mask_rank_deficient(self):
        values = np.zeros((12, 12))
        mask = np.zeros((12, 12), dtype=bool)
        mask[5, :] = True  # 12 pixels on one row: tilt_y indistinguishable
        with pytest.raises(ValueError, match="rank-deficient"):
            zernike_fit_remove(values, mask)

    def test_too_few_pixels(self):
        values = np.zeros((8, 8))
        mask = np.zeros((8, 8), dtype=bool)
        mask[0:3, 0:3] = True
        with pytest.raises(ValueError, match="at least 10"):
            zernike_fit_remove(values, mask)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            zernike_fit_remove(np.zeros((16, 16)), modes=("piston", "coma"))
        with pytest.raises(ValueError):
            zernike_fit_remove(np.zeros((16, 16)), modes=())

    def test_fit_evaluate_matches_design_on_valid_pixels(self):
        rng = np.random.default_rng(8)
        values = rng.normal(size=(19, 19))
        mask = disk_mask(19)
        residual, fit = zernike_fit_remove(values, mask)
        recon = residual + fit.evaluate((19, 19))
        assert np.abs(recon - values)[mask].max() < 1e-9


class TestRmse:
    def test_constant_surface_zero(self):
        assert rmse(np.full((8, 8), 3.0)) == 0.0

    def test_alternating_unit_values(self):
        v = np.array([[1.0, -1.0], [1.0, -1.0]])
        assert rmse(v) == pytest.approx(1.0, abs=1e-12)

    def test_mean_removed(self):
        v = np.array([[10.0, 12.0], [10.0, 12.0]])
        assert rmse(v) == pytest.approx(1.0, abs=1e-12)

    def test_mask_and_surface_forms_agree(self):
        rng = np.random.default_rng(9)
        values = rng.normal(size=(10, 10))
        mask = disk_mask(10)
        a = rmse(values, mask)
        b = rmse(Surface(values=values, mask=mask))
        assert a == b

    def test_empty_selection_rejected(self):
        with pytest.raises(ValueError):
            rmse(np.zeros((4, 4)), np.zeros((4, 4), dtype=bool))


class TestPhaseToHeight:
    def test_full_period_is_half_wavelength(self):
        assert phase_to_height(4 * math.pi) == pytest.approx(DEFAULT_WAVELENGTH_NM, abs=1e-9)

    def test_zero_is_zero(self):
        assert phase_to_height(0.0) == 0.0

    def test_quarter(self):
        assert phase_to_height(math.pi) == pytest.approx(632.8 / 4, abs=1e-9)

    def test_custom_wavelength(self):
        assert phase_to_height(4 * math.pi, wavelength_nm=1000.0) == pytest.approx(1000.0)

    def test_surface_input(self):
        s = Surface(values=np.full((2, 2), 4 * math.pi), mask=np.ones((2, 2), dtype=bool))
        out = phase_to_height(s)
        assert np.allclose(out, DEFAULT_WAVELENGTH_NM)

    def test_nonpositive_wavelength_rejected(self):
        with pytest.raises(ValueError):
            phase_to_height(1.0, wavelength_nm=0.0)


class TestZernikeFitObject:
    def test_coefficient_lookup_and_evaluate_shape(self):
        fit = ZernikeFit(modes=MODES, coefficients=np.array([1.0, 0.0, 0.0, 0.0]),
                         center=(2.0, 2.0), radius=2.0)
        out = fit.evaluate((5, 5))
        assert out.shape == (5, 5)
        assert np.allclose(out, 1.0)
        assert fit.coefficient("piston") == 1.0
        with pytest.raises(ValueError):
            fit.coefficient("coma")
