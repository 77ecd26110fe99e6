import math

import numpy as np
import pytest

from tomoforge import (ColormapId, DegeneratePdfError, QuadraturePdf,
                       QuantumState, Regulator, TomogramGrid, decode, encode,
                       mean_photon_number, normalize_pdf, quad_moment,
                       quad_variance, report, synthesize, theory_observables,
                       wunsche_moment)
from tomoforge.moments import (CANONICAL_THETAS, FLAG_SPURIOUS, extract_slice,
                               hermite_values)
from tomoforge.classify import build_glossary

from conftest import ALPHAS, pacs_states, paper_states


class TestNormalize:
    def test_normalized_input_unchanged(self):
        x = np.linspace(-5, 5, 501)
        p = np.exp(-x * x) / math.sqrt(math.pi)
        pdf = normalize_pdf(QuadraturePdf(0.0, x, p))
        assert np.max(np.abs(pdf.p - p / np.trapezoid(p, x))) < 1e-12
        assert abs(pdf.integral() - 1.0) < 1e-12

    def test_constant_density(self):
        x = np.linspace(-5, 5, 101)
        pdf = normalize_pdf(QuadraturePdf(0.0, x, np.full(101, 2.0)))
        assert np.allclose(pdf.p, 0.1, atol=1e-14)

    def test_decoded_slice_normalizes(self, canonical_tomograms):
        t = decode(encode(canonical_tomograms["cs:0.0"],
                          ColormapId.SEQUENTIAL_LINEAR))
        pdf = normalize_pdf(extract_slice(t, 0.0))
        assert abs(pdf.integral() - 1.0) < 1e-6

    def test_zero_density_rejected(self):
        x = np.linspace(-5, 5, 11)
        with pytest.raises(DegeneratePdfError):
            normalize_pdf(QuadraturePdf(0.0, x, np.zeros(11)))


class TestQuadMoments:
    def _slice(self, label, theta, tomograms):
        return normalize_pdf(extract_slice(tomograms[label], theta))

    def test_vacuum_second_moment(self, canonical_tomograms):
        pdf = self._slice("cs:0.0", 0.0, canonical_tomograms)
        assert quad_moment(pdf, 2) == pytest.approx(0.5, abs=1e-4)

    def test_displaced_mean(self, canonical_tomograms):
        pdf = self._slice("cs:1.0", 0.0, canonical_tomograms)
        assert quad_moment(pdf, 1) == pytest.approx(math.sqrt(2), abs=1e-3)

    def test_fock_one_second_moment(self, canonical_tomograms):
        pdf = self._slice("fock:1", 0.0, canonical_tomograms)
        assert quad_moment(pdf, 2) == pytest.approx(1.5, abs=1e-4)

    def test_requires_normalization(self, canonical_tomograms):
        raw = extract_slice(canonical_tomograms["cs:0.0"], 0.0)
        with pytest.raises(ValueError):
            quad_moment(raw, 2)

    @pytest.mark.parametrize("n", range(6))
    @pytest.mark.parametrize("theta", [0.0, 0.9, math.pi / 2])
    def test_fock_variance_any_theta(self, n, theta, canonical_tomograms):
        pdf = self._slice(f"fock:{n}", theta, canonical_tomograms)
        assert quad_variance(pdf) == pytest.approx(n + 0.5, abs=2e-3)

    def test_pacs_alpha_one_squeezish(self):
        t = synthesize(QuantumState.photon_added_cs(1.0))
        pdf = normalize_pdf(extract_slice(t, 0.0))
        assert quad_variance(pdf) == pytest.approx(0.50, rel=5e-3)

    def test_pacs_p_variance(self):
        t = synthesize(QuantumState.photon_added_cs(math.sqrt(0.5)))
        pdf = normalize_pdf(extract_slice(t, math.pi / 2))
        assert quad_variance(pdf) == pytest.approx(1.17, rel=5e-3)


class TestWunsche:
    def test_vacuum_zero(self, canonical_tomograms):
        val = wunsche_moment(canonical_tomograms["cs:0.0"], 1, 1)
        assert abs(val) < 1e-9

    def test_fock_one_unity(self, canonical_tomograms):
        # hand integral: each of the 3 slices contributes
        # int w (4x^2 - 2) dx = 4<x^2> - 2 = 4, and C_11 = 1/12
        t = canonical_tomograms["fock:1"]
        x = t.grid.x_centers()
        h2 = hermite_values(2, x)
        pdf = normalize_pdf(extract_slice(t, 0.0))
        assert np.trapezoid(pdf.p * h2, x) == pytest.approx(4.0, abs=1e-3)
        assert wunsche_moment(t, 1, 1).real == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.parametrize("alpha", [0.5, 1.0])
    def test_coherent_alpha_squared(self, alpha):
        t = synthesize(QuantumState.coherent(alpha))
        val = wunsche_moment(t, 1, 1)
        assert val.real == pytest.approx(alpha ** 2, abs=1e-3)
        assert abs(val.imag) < 1e-6

    def test_first_moment_matches_displacement(self):
        # m=1, n=0 probes <a^dag>: sqrt(2) Re<a> = <x> for real states
        t = synthesize(QuantumState.coherent(1.0))
        val = wunsche_moment(t, 1, 0)
        assert val.real == pytest.approx(1.0, abs=2e-3)

    def test_order_limit(self, canonical_tomograms):
        with pytest.raises(ValueError):
            wunsche_moment(canonical_tomograms["cs:0.0"], 40, 30)

    def test_hermite_range_guard(self):
        with pytest.raises(ValueError):
            hermite_values(65, np.zeros(3))

    def test_hermite_against_scipy(self):
        from scipy.special import eval_hermite

        x = np.linspace(-3, 3, 41)
        for order in (0, 1, 2, 7):
            assert np.allclose(hermite_values(order, x),
                               eval_hermite(order, x), rtol=1e-12)


class TestMeanPhotonNumber:
    def test_pacs_table_value(self):
        t = synthesize(QuantumState.photon_added_cs(math.sqrt(0.3)))
        assert mean_photon_number(t) == pytest.approx(1.531, rel=5e-3)

    def test_amplified_cs(self):
        t = synthesize(QuantumState.amplified_cs(1.5))
        assert mean_photon_number(t) == pytest.approx(3.84, rel=1e-2)

    def test_optimal_cs(self):
        t = synthesize(QuantumState.optimal_cs(1.5))
        assert mean_photon_number(t) == pytest.approx(4.0, rel=1e-2)

    @pytest.mark.parametrize("state", paper_states(), ids=lambda s: s.label())
    def test_oracle_equivalence(self, state, canonical_tomograms):
        t = canonical_tomograms[state.label()]
        theory = theory_observables(state).mean_n
        assert mean_photon_number(t) == pytest.approx(theory, abs=1e-3)


class TestReport:
    def test_clean_fock_two(self, canonical_tomograms):
        rep = report(canonical_tomograms["fock:2"])
        assert rep.mean_n == pytest.approx(2.0, abs=1e-3)
        for theta in CANONICAL_THETAS:
            assert rep.quad_var[theta] == pytest.approx(2.5, abs=1e-3)
        assert rep.flags == []

    def test_decoded_fock_two_within_4pct(self, canonical_tomograms):
        t = decode(encode(canonical_tomograms["fock:2"],
                          ColormapId.SEQUENTIAL_LINEAR))
        rep = report(t)
        assert abs(rep.mean_n - 2.0) / 2.0 < 0.04

    def test_vacuum_heisenberg_product(self, canonical_tomograms):
        t = decode(encode(canonical_tomograms["cs:0.0"],
                          ColormapId.SEQUENTIAL_LINEAR))
        rep = report(t)
        assert rep.var_x * rep.var_p == pytest.approx(0.25, rel=0.08)

    def test_spurious_flagging(self, canonical_tomograms):
        glossary = build_glossary(paper_states())
        rep = report(canonical_tomograms["fock:2"], glossary=glossary)
        assert FLAG_SPURIOUS not in rep.flags
        # a tomogram that matches no entry: photon-added CS at alpha = 0.9
        odd = synthesize(QuantumState.photon_added_cs(0.9))
        rep = report(odd, glossary=build_glossary(
            [QuantumState.fock(n) for n in range(2)]))
        assert FLAG_SPURIOUS in rep.flags

    def test_variance_symmetry_under_pi_shift(self):
        t = synthesize(QuantumState.photon_added_cs(1.0))
        rep = report(t, thetas=(-math.pi / 2, math.pi / 2))
        assert rep.quad_var[-math.pi / 2] == pytest.approx(
            rep.quad_var[math.pi / 2], abs=1e-10)

    def test_higher_moments_recorded(self, canonical_tomograms):
        rep = report(canonical_tomograms["cs:1.0"], thetas=(0.0,))
        assert (0.0, 3) in rep.higher and (0.0, 4) in rep.higher

    def test_regulated_report(self, canonical_tomograms):
        rep = report(canonical_tomograms["cs:0.0"], regulator=Regulator())
        # window bias on the true vacuum variance stays ~3%
        assert rep.quad_var[0.0] == pytest.approx(0.4842, abs=2e-3)

    def test_resolution_stability(self):
        # 128 vs 256 x-bins changes extracted numbers by < 1%
        state = QuantumState.photon_added_cs(1.0)
        t128 = synthesize(state)
        t256 = synthesize(state, TomogramGrid(n_x=256, n_theta=128))
        n128, n256 = mean_photon_number(t128), mean_photon_number(t256)
        assert abs(n128 - n256) / n256 < 0.01
        v128 = report(t128, thetas=(0.0,)).quad_var[0.0]
        v256 = report(t256, thetas=(0.0,)).quad_var[0.0]
        assert abs(v128 - v256) / v256 < 0.01


class TestSliceExtraction:
    def test_on_row_exact(self, canonical_tomograms):
        t = canonical_tomograms["cs:1.0"]
        theta = t.grid.theta_centers()[40]
        pdf = extract_slice(t, theta)
        assert np.array_equal(pdf.p, t.values[40])

    def test_midpoint_blend(self, canonical_tomograms):
        t = canonical_tomograms["cs:1.0"]
        centers = t.grid.theta_centers()
        theta = 0.5 * (centers[40] + centers[41])
        pdf = extract_slice(t, theta)
        assert np.allclose(pdf.p, 0.5 * (t.values[40] + t.values[41]), atol=1e-14)

    def test_out_of_range(self, canonical_tomograms):
        with pytest.raises(ValueError):
            extract_slice(canonical_tomograms["cs:1.0"], 4.0)
