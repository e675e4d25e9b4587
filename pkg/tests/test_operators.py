import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphereflow import (
    CutoffSpec,
    DomainSpec,
    Field,
    build_basis,
    constrained_rhs,
    cutoff_symbol,
    dyadic_project,
    energy,
    grad_energy,
    multiplier_functional,
    nonlinearity,
    power_law,
    quintic_smoothstep,
    smooth_project,
    tangent_gradient,
    tangent_project,
)

PI2 = math.pi ** 2
CUT = CutoffSpec()


class TestCutoff:
    def test_symbol_inside_band_values(self):
        assert cutoff_symbol(5.0, 3) == 1.0          # 5 < 8
        assert cutoff_symbol(16.0, 3) == 0.0         # 16 >= 2^4
        # midpoint of [8, 16]: quintic smoothstep at s = 1/2
        assert cutoff_symbol(12.0, 3) == pytest.approx(
            1.0 - float(quintic_smoothstep(0.5)), abs=1e-15)
        assert cutoff_symbol(12.0, 3) == pytest.approx(0.5, abs=1e-15)

    def test_symbol_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            cutoff_symbol(0.0, 3)
        with pytest.raises(ValueError):
            cutoff_symbol(-1.0, 3)

    def test_rho_support(self):
        for g in (0.1, 0.25, 0.5, 2.0, 3.0, 100.0):
            if g < 0.5 or g > 2.0:
                assert CUT.rho(g) == 0.0
        assert CUT.rho(1.0) > 0.0

    @given(st.floats(1e-6, 2.0 ** 12, allow_nan=False))
    @settings(max_examples=100, deadline=None)
    def test_chi_bounds(self, g):
        val = CUT.chi(g)
        assert 0.0 <= val <= 1.0

    def test_partition_of_unity(self):
        rng = np.random.default_rng(0)
        gammas = rng.uniform(1e-3, 2.0 ** 12, size=50)
        sums = CUT.partition_sum(gammas)
        assert np.max(np.abs(sums - 1.0)) < 1e-12


class TestProjections:
    def test_sharp_cutoff_drops_second_mode(self, basis9):
        u = basis9.unit_mode((1,)) + basis9.unit_mode((2,))
        v = dyadic_project(u, 3)  # 4 pi^2 = 39.48 >= 16
        assert np.array_equal(v.coeffs != 0.0,
                              np.arange(basis9.size) == 0)

    def test_idempotent(self, basis9):
        rng = np.random.default_rng(5)
        for _ in range(10):
            u = basis9.field(rng.standard_normal(basis9.size))
            pu = dyadic_project(u, 7)
            assert np.array_equal(dyadic_project(pu, 7).coeffs, pu.coeffs)

    def test_zero_maps_to_zero(self, basis9):
        z = basis9.field(np.zeros(basis9.size))
        assert np.all(dyadic_project(z, 5).coeffs == 0.0)
        assert np.all(smooth_project(z, 5).coeffs == 0.0)

    def test_smooth_contraction_and_symbol_range(self, basis9):
        rng = np.random.default_rng(6)
        sym = cutoff_symbol(basis9.eigenvalues, 8)
        assert np.all((0.0 <= sym) & (sym <= 1.0))
        for _ in range(100):
            u = basis9.field(rng.standard_normal(basis9.size))
            assert smooth_project(u, 8).l2 <= u.l2 + 1e-14

    def test_level_consistent_identities(self, basis9):
        # S_m is the identity on the range of the sharp cutoff one level
        # down, and the sharp cutoff is the identity on the range of the
        # smoothing one level down
        rng = np.random.default_rng(7)
        for _ in range(20):
            u = basis9.field(rng.standard_normal(basis9.size))
            pm1 = dyadic_project(u, 7)
            assert (smooth_project(pm1, 8) - pm1).l2 < 1e-12
            sm1 = smooth_project(u, 7)
            assert (dyadic_project(sm1, 8) - sm1).l2 < 1e-12
            # with a shared index the smoothing absorbs the sharp cutoff
            assert (smooth_project(dyadic_project(u, 8), 8)
                    - smooth_project(u, 8)).l2 < 1e-12

    def test_smoothing_converges_on_smooth_field(self, basis9):
        # lambda_max = 987 sits in the level-9 band, so the error only
        # vanishes once the plateau covers it (2^10 = 1024)
        psi = basis9.field(1.0 / np.arange(1, basis9.size + 1) ** 3)
        errs = [(smooth_project(psi, m) - psi).l2 for m in range(4, 11)]
        assert all(b <= a + 1e-15 for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 1e-12


class TestNonlinearity:
    def test_pointwise_power_law(self):
        # constant sample value -2 at p = 3 maps to |-2| * (-2) = -4
        assert power_law(np.array([-2.0]), 3.0) == pytest.approx(-4.0)
        assert power_law(np.array([0.0]), 2.5) == 0.0

    def test_p2_identity(self, basis9):
        rng = np.random.default_rng(8)
        u = basis9.field(rng.standard_normal(basis9.size))
        assert nonlinearity(u, 2) is u

    def test_monotone_on_random_pairs(self, basis9):
        rng = np.random.default_rng(9)
        for _ in range(100):
            u = basis9.field(rng.standard_normal(basis9.size) * 0.5)
            v = basis9.field(rng.standard_normal(basis9.size) * 0.5)
            du = u.samples - v.samples
            val = basis9.integrate(
                (power_law(u.samples, 3.0) - power_law(v.samples, 3.0)) * du)
            assert val >= -1e-12

    def test_p_below_two_rejected(self, basis9):
        with pytest.raises(ValueError):
            nonlinearity(basis9.unit_mode((1,)), 1.9)


class TestTangentProjection:
    def test_projecting_base_gives_zero(self, basis9):
        w1 = basis9.unit_mode((1,))
        assert tangent_project(w1, w1).l2 < 1e-14

    def test_already_tangent(self, basis9):
        w1, w2 = basis9.unit_mode((1,)), basis9.unit_mode((2,))
        out = tangent_project(w1, w2)
        assert np.array_equal(out.coeffs, w2.coeffs)

    def test_mixed_vector(self, basis9):
        w1, w2 = basis9.unit_mode((1,)), basis9.unit_mode((2,))
        out = tangent_project(w1, w1 + w2)
        assert (out - w2).l2 < 1e-14

    def test_output_orthogonal(self, basis9):
        rng = np.random.default_rng(10)
        for _ in range(50):
            base = basis9.field(rng.standard_normal(basis9.size))
            base = (1.0 / base.l2) * base
            z = basis9.field(rng.standard_normal(basis9.size))
            assert abs(tangent_project(base, z).inner(base)) < 1e-10

    def test_degenerate_base_rejected(self, basis9):
        tiny = basis9.field(np.full(basis9.size, 1e-12))
        z = basis9.unit_mode((1,))
        with pytest.raises(ValueError, match="degenerate"):
            tangent_project(tiny, z, general_radius=True)

    def test_off_sphere_base_rejected_without_flag(self, basis9):
        base = 2.0 * basis9.unit_mode((1,))
        with pytest.raises(ValueError, match="off the unit sphere"):
            tangent_project(base, basis9.unit_mode((2,)))
        out = tangent_project(base, basis9.unit_mode((1,)), general_radius=True)
        assert out.l2 < 1e-14


class TestEnergyFunctionals:
    def test_energy_first_mode(self, basis9):
        w1 = basis9.unit_mode((1,))
        assert energy(w1, 2) == pytest.approx(PI2 / 2 + 0.5, rel=1e-12)
        assert energy(w1, 4) == pytest.approx(PI2 / 2 + 3.0 / 8.0, rel=1e-12)
        assert energy(basis9.field(np.zeros(basis9.size)), 3) == 0.0

    def test_multiplier_first_mode(self, basis9):
        w1 = basis9.unit_mode((1,))
        assert multiplier_functional(w1, 2) == pytest.approx(PI2 + 1.0, rel=1e-12)
        assert multiplier_functional(w1, 4) == pytest.approx(PI2 + 1.5, rel=1e-12)

    def test_multiplier_is_gradient_pairing_on_sphere(self, basis9):
        rng = np.random.default_rng(11)
        for p in (2.0, 3.0, 4.0):
            u = basis9.field(rng.standard_normal(basis9.size))
            u = (1.0 / u.l2) * u
            pairing = grad_energy(u, p).inner(u)
            assert pairing == pytest.approx(multiplier_functional(u, p), rel=1e-10)

    def test_grad_energy_first_mode_linear(self, basis9):
        w1 = basis9.unit_mode((1,))
        g = grad_energy(w1, 2)
        assert (g - (PI2 + 1.0) * w1).l2 < 1e-12

    def test_grad_energy_zero(self, basis9):
        z = basis9.field(np.zeros(basis9.size))
        assert grad_energy(z, 4).l2 == 0.0


class TestConstrainedRhs:
    def test_first_mode_is_stationary_linear(self, basis9):
        w1 = basis9.unit_mode((1,))
        assert constrained_rhs(w1, 2).l2 < 1e-14

    def test_tangency_on_sphere(self, basis9):
        rng = np.random.default_rng(12)
        for p in (2.0, 3.0, 4.0, 6.0):
            for _ in range(100):
                u = basis9.field(rng.standard_normal(basis9.size))
                u = (1.0 / u.l2) * u
                assert abs(constrained_rhs(u, p).inner(u)) < 1e-9

    def test_equals_minus_tangent_gradient(self, basis9):
        rng = np.random.default_rng(13)
        u = basis9.field(rng.standard_normal(basis9.size))
        u = (1.0 / u.l2) * u
        gap = (constrained_rhs(u, 4) + tangent_gradient(u, 4)).l2
        assert gap < 1e-11

    def test_gradient_norm_relation(self, basis9):
        # ||pi_u grad E||^2 = ||grad E||^2 - S(u)^2 at unit mass
        rng = np.random.default_rng(14)
        for _ in range(50):
            u = basis9.field(rng.standard_normal(basis9.size))
            u = (1.0 / u.l2) * u
            rhs = constrained_rhs(u, 4)
            ge = grad_energy(u, 4)
            s = multiplier_functional(u, 4)
            lhs = float(np.dot(rhs.coeffs, rhs.coeffs))
            rhs_val = float(np.dot(ge.coeffs, ge.coeffs)) - s * s
            assert lhs == pytest.approx(rhs_val, abs=1e-9)

    def test_p2_reduces_to_laplacian_plus_h1(self, basis9):
        # at p = 2 the damping cancels: G(u) = Lap u + ||grad u||^2 u on
        # the sphere
        rng = np.random.default_rng(15)
        u = basis9.field(rng.standard_normal(basis9.size))
        u = (1.0 / u.l2) * u
        rhs = constrained_rhs(u, 2)
        expected = u.with_coeffs(
            -basis9.eigenvalues * u.coeffs + (u.h1 ** 2) * u.coeffs)
        assert (rhs - expected).l2 < 1e-10

    def test_stabilized_tangent_off_sphere(self, basis9):
        rng = np.random.default_rng(16)
        u = basis9.field(rng.standard_normal(basis9.size))  # arbitrary radius
        rhs = constrained_rhs(u, 4, stabilized=True)
        assert abs(rhs.inner(u)) < 1e-9 * max(1.0, u.l2 ** 2)


class TestIntegrationByParts:
    def test_parts_identity_exact_at_p4(self, basis7):
        # (N(u), -Lap u) = (p-1) || |u|^{(p-2)/2} grad u ||^2; the grid is
        # oversampled so the quartic integrands are integrated exactly
        rng = np.random.default_rng(17)
        for _ in range(50):
            u = basis7.field(rng.standard_normal(basis7.size) * 0.5)
            lap = basis7.synthesize(basis7.eigenvalues * u.coeffs)
            grad = basis7.synthesize_gradient(u.coeffs)
            lhs = basis7.integrate(power_law(u.samples, 4.0) * lap)
            rhs = 3.0 * basis7.integrate(u.samples ** 2
                                         * np.sum(grad ** 2, axis=1))
            assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_parts_identity_quadrature_limited_at_p3(self, basis7):
        # |u| has a kink, so midpoint quadrature limits the identity;
        # the module invariant asks for 1e-6 relative
        rng = np.random.default_rng(18)
        big = build_basis(DomainSpec(1, (1.0,), (8192,), 7))
        for _ in range(10):
            u = Field(big, rng.standard_normal(big.size) * 0.5)
            lap = big.synthesize(big.eigenvalues * u.coeffs)
            grad = big.synthesize_gradient(u.coeffs)
            lhs = big.integrate(power_law(u.samples, 3.0) * lap)
            rhs = 2.0 * big.integrate(np.abs(u.samples)
                                      * np.sum(grad ** 2, axis=1))
            assert lhs == pytest.approx(rhs, rel=1e-6)

    def test_grad_energy_norm_expansion(self, basis7):
        # ||grad E(u)||^2 = ||Lap u||^2 + ||u||_{2p-2}^{2p-2}
        #                   + 2(p-1) || |u|^{(p-2)/2} grad u ||^2
        rng = np.random.default_rng(19)
        p = 4.0
        for _ in range(50):
            u = basis7.field(rng.standard_normal(basis7.size) * 0.5)
            lap = basis7.synthesize(basis7.eigenvalues * u.coeffs)
            nl = power_law(u.samples, p)
            grad = basis7.synthesize_gradient(u.coeffs)
            lhs = basis7.integrate((lap + nl) ** 2)
            rhs = (basis7.integrate(lap ** 2)
                   + basis7.integrate(np.abs(u.samples) ** (2 * p - 2))
                   + 2 * (p - 1) * basis7.integrate(
                       u.samples ** 2 * np.sum(grad ** 2, axis=1)))
            assert lhs == pytest.approx(rhs, abs=1e-9)


class TestGradientConsistency:
    def test_finite_difference_second_order(self, basis9):
        rng = np.random.default_rng(20)
        u = basis9.field(rng.standard_normal(basis9.size) * 0.3)
        w = basis9.field(rng.standard_normal(basis9.size) * 0.3)
        p = 4.0
        pairing = grad_energy(u, p).inner(w)
        errs = []
        for h in (1e-3, 1e-4):
            fd = (energy(u + h * w, p) - energy(u - h * w, p)) / (2 * h)
            errs.append(abs(fd - pairing))
        assert errs[0] < 1e-4 * max(1.0, abs(pairing))
        # second-order decay: halving h by 10 should shrink the error ~100x
        assert 25 < errs[0] / max(errs[1], 1e-18) < 400
