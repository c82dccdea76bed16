import numpy as np
import pytest

from ringlock.overlap import (
    VACUUM_PERMITTIVITY,
    Chi3Params,
    ModeFieldGrid,
    beta_and_veff,
    core_volume,
    disk_like_classifier,
    gaussian_mode,
    integral_A_cyl,
    integral_B_cyl,
    phi_average_oracle,
)

CHI = Chi3Params(chi_1111=2.8e-19, chi_1122=2.8e-19 / 3.0, n_core=3.48)


def make_grid(e_r=0.0, e_phi=0.0, e_z=0.0, nr=24, nz=18, mask=None):
    r = np.linspace(17e-6, 21e-6, nr)
    z = np.linspace(-0.5e-6, 0.5e-6, nz)
    shape = (nr, nz)
    full = np.ones(shape, bool) if mask is None else mask

    def expand(v):
        return np.broadcast_to(np.asarray(v, dtype=complex), shape).copy()

    eps = np.full(shape, VACUUM_PERMITTIVITY * CHI.n_core**2)
    return ModeFieldGrid(r, z, expand(e_r), expand(e_phi), expand(e_z), full, eps)


def random_grid(rng, nr=20, nz=14):
    def rnd():
        return rng.normal(size=(nr, nz)) + 1j * rng.normal(size=(nr, nz))

    mask = rng.random((nr, nz)) > 0.3
    if not mask.any():
        mask[0, 0] = True
    g = make_grid(nr=nr, nz=nz)
    return ModeFieldGrid(g.r_axis, g.z_axis, rnd(), rnd(), rnd(), mask, g.permittivity)


class TestClosedForms:
    def test_pure_ez_field(self):
        g = make_grid(e_z=2.0)
        expected = 2.0 * np.pi * np.trapezoid(
            np.trapezoid(np.full(g.shape, 16.0) * g.r_axis[:, None], g.z_axis, axis=1),
            g.r_axis,
        )
        assert integral_A_cyl(g) == pytest.approx(expected, rel=1e-12)
        assert abs(integral_B_cyl(g)) < 1e-12 * abs(expected)

    def test_pure_radial_field_coefficient(self):
        g = make_grid(e_r=1.5)
        base = 2.0 * np.pi * np.trapezoid(
            np.trapezoid(np.full(g.shape, 1.5**4) * g.r_axis[:, None], g.z_axis, axis=1),
            g.r_axis,
        )
        assert integral_A_cyl(g) == pytest.approx(0.75 * base, rel=1e-12)
        assert integral_B_cyl(g) == pytest.approx(0.75 * base, rel=1e-12)

    def test_empty_mask_rejected(self):
        g = make_grid(e_z=1.0)
        bad = ModeFieldGrid(
            g.r_axis, g.z_axis, g.e_r, g.e_phi, g.e_z,
            np.zeros(g.shape, bool), g.permittivity,
        )
        with pytest.raises(ValueError):
            integral_A_cyl(bad)

    def test_global_phase_invariance(self):
        rng = np.random.default_rng(3)
        g = random_grid(rng)
        phase = np.exp(1j * 0.83)
        g2 = ModeFieldGrid(
            g.r_axis, g.z_axis, phase * g.e_r, phase * g.e_phi, phase * g.e_z,
            g.core_mask, g.permittivity,
        )
        assert integral_A_cyl(g2) == pytest.approx(integral_A_cyl(g), rel=1e-12)
        assert integral_B_cyl(g2) == pytest.approx(integral_B_cyl(g), rel=1e-12)

    def test_real_fields_give_real_integrals(self):
        rng = np.random.default_rng(4)
        g0 = make_grid()
        g = ModeFieldGrid(
            g0.r_axis, g0.z_axis,
            rng.normal(size=g0.shape), rng.normal(size=g0.shape), rng.normal(size=g0.shape),
            g0.core_mask, g0.permittivity,
        )
        a = integral_A_cyl(g)
        assert abs(a.imag) < 1e-9 * abs(a)


class TestPhiAverageOracle:
    def test_matches_closed_forms_on_random_complex_fields(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            g = random_grid(rng, nr=12, nz=9)
            a_closed = integral_A_cyl(g)
            b_closed = integral_B_cyl(g)
            a_oracle, b_oracle = phi_average_oracle(g, 16)
            assert abs(a_closed - a_oracle) < 1e-6 * abs(a_oracle)
            assert abs(b_closed - b_oracle) < 1e-6 * abs(b_oracle)

    def test_sample_count_converged_at_eight(self):
        rng = np.random.default_rng(8)
        g = random_grid(rng)
        a8, b8 = phi_average_oracle(g, 8)
        a16, b16 = phi_average_oracle(g, 16)
        assert abs(a8 - a16) < 1e-9 * abs(a16)
        assert abs(b8 - b16) < 1e-9 * max(abs(b16), 1e-300)

    def test_pure_ez_matches_closed_form_exactly(self):
        g = make_grid(e_z=1.0 + 0.5j)
        a_oracle, b_oracle = phi_average_oracle(g, 8)
        assert a_oracle == pytest.approx(integral_A_cyl(g), rel=1e-12)
        assert abs(b_oracle) < 1e-12 * abs(a_oracle)

    def test_minimum_sample_count_enforced(self):
        with pytest.raises(ValueError):
            phi_average_oracle(make_grid(e_z=1.0), 4)


class TestQuadratureConvergence:
    def test_trapezoid_second_order_on_smooth_field(self):
        # truncate the profile while its boundary slope is still finite so
        # the leading h^2 Euler-Maclaurin term dominates the error
        values = []
        for n in (21, 41, 81):
            g = gaussian_mode(19.1e-6, 0.5e-6, 0.1e-6, amplitudes=(0.4, 0.3, 1.0),
                              n_r=n, n_z=n, core_half_width=1e9, core_half_height=1e9,
                              span_sigmas=1.0)
            values.append(integral_A_cyl(g).real)
        ratio = (values[0] - values[1]) / (values[1] - values[2])
        assert ratio == pytest.approx(4.0, rel=0.3)


class TestBetaAndVeff:
    def test_uniform_ez_field_gives_core_volume(self):
        g0 = make_grid()
        mask = np.zeros(g0.shape, bool)
        mask[6:18, 5:13] = True
        ez = np.where(mask, 3.0, 0.0)
        g = ModeFieldGrid(g0.r_axis, g0.z_axis, np.zeros(g0.shape), np.zeros(g0.shape),
                          ez, mask, g0.permittivity)
        beta, veff = beta_and_veff(g, CHI, 1552.5e-9)
        assert veff == pytest.approx(core_volume(g), rel=1e-9)
        assert beta > 0

    def test_normalization_independence(self):
        g = gaussian_mode(19.1e-6, 0.6e-6, 0.12e-6, amplitudes=(0.2, 0.1j, 1.0))
        beta1, veff1 = beta_and_veff(g, CHI, 1552.5e-9)
        g10 = ModeFieldGrid(g.r_axis, g.z_axis, 10 * g.e_r, 10 * g.e_phi, 10 * g.e_z,
                            g.core_mask, g.permittivity)
        beta2, veff2 = beta_and_veff(g10, CHI, 1552.5e-9)
        assert beta2 == pytest.approx(beta1, rel=1e-12)
        assert veff2 == pytest.approx(veff1, rel=1e-12)

    def test_zero_field_rejected(self):
        g = make_grid()
        with pytest.raises(ValueError):
            beta_and_veff(g, CHI, 1552.5e-9)

    def test_beta_scales_inversely_with_mode_volume(self):
        # geometrically similar modes at 14 and 15 um^3 effective volume
        base = gaussian_mode(10e-6, 0.45e-6, 0.1e-6, amplitudes=(0.3, 0.2, 1.0))
        _, v0 = beta_and_veff(base, CHI, 1552.5e-9)
        grids = [base.scaled((target / v0) ** (1.0 / 3.0)) for target in (14e-18, 15e-18)]
        results = [beta_and_veff(g, CHI, 1552.5e-9) for g in grids]
        (beta14, v14), (beta15, v15) = results
        assert v14 == pytest.approx(14e-18, rel=1e-6)
        assert v15 == pytest.approx(15e-18, rel=1e-6)
        assert beta14 > beta15
        assert beta14 / beta15 == pytest.approx(v15 / v14, rel=1e-9)


class TestDiskLikeClassifier:
    def test_constant_volume_all_disk_like(self):
        series = [(1e-6 * (10 + i), 20e-18) for i in range(6)]
        assert all(disk_like_classifier(series, r_out=20e-6))

    def test_steep_slope_none_disk_like(self):
        series = [(1e-6 * (10 + i), 20e-18 * (1 + i)) for i in range(6)]
        assert not any(disk_like_classifier(series, r_out=20e-6))

    def test_knee_location_matches_brute_force(self):
        r_out = 20e-6
        radii = np.linspace(10e-6, 18e-6, 30)
        knee = 14e-6
        v = np.where(radii < knee, 20e-18, 20e-18 * (1 + 40 * (radii - knee) / r_out))
        series = list(zip(radii, v))
        flags = disk_like_classifier(series, r_out=r_out, threshold=0.05)
        slopes = np.gradient(v, radii)
        expected = np.abs(slopes) < 0.05 * (v / r_out)
        assert flags == list(expected)

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            disk_like_classifier([(1e-6, 1e-18), (2e-6, 1e-18)], r_out=10e-6)
