import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emdecay.angular import (
    AharonovBohm,
    AngularModel,
    Fourier2D,
    Free,
    InverseSquare3D,
    as_fourier2d,
    build_model,
    gain_exponent,
    spec_from_dict,
    spec_to_dict,
    verify_form_bounds,
    verify_sup_norm_bound,
    verify_weyl_growth,
)
from emdecay.errors import DomainError, HardyRangeError, ModelRejectedError, ResolutionError
from emdecay.quadrature import sphere_rule

PRESET_FOURIER = Fourier2D.from_trig(a_cos=[1.0, 0.5], A_cos=[0.3, 0.0, 0.1], A_sin=[0.0, 0.2])


class TestSpecs:
    def test_fourier_hermitian_required(self):
        with pytest.raises(DomainError):
            Fourier2D(a_coeffs=(1j, 0.0, 0.5))

    def test_from_trig_values(self):
        spec = Fourier2D.from_trig(a_cos=[1.0, 0.5], a_sin=[0.0, 0.25])
        th = np.linspace(0, 2 * math.pi, 7)
        np.testing.assert_allclose(spec.a(th), 1.0 + 0.5 * np.cos(th) + 0.25 * np.sin(th), atol=1e-14)

    def test_sup_norms(self):
        A_inf, a_inf = Fourier2D.from_trig(a_cos=[0.0, 2.0], A_cos=[0.5]).sup_norms()
        assert A_inf == pytest.approx(0.5)
        assert a_inf == pytest.approx(2.0)

    @pytest.mark.parametrize("spec", [Free(), AharonovBohm(0.3), PRESET_FOURIER, InverseSquare3D(2.0)])
    def test_dict_roundtrip(self, spec):
        assert spec_from_dict(json.loads(json.dumps(spec_to_dict(spec)))) == spec

    def test_dimensions(self):
        assert Free().n == 2 and AharonovBohm(0.1).n == 2 and InverseSquare3D(1.0).n == 3


class TestBuildModel:
    def test_free_circle(self):
        np.testing.assert_array_equal(build_model(Free(), 5).mus, [0, 1, 1, 4, 4])

    def test_aharonov_bohm(self):
        np.testing.assert_allclose(build_model(AharonovBohm(0.3), 3).mus, [0.09, 0.49, 1.69], atol=1e-14)

    def test_inverse_square(self):
        np.testing.assert_array_equal(build_model(InverseSquare3D(2.0), 4).mus, [2, 4, 4, 4])

    def test_degenerate_labels_sorted(self):
        m = build_model(Free(), 5)
        assert [lab[0] for lab in m.labels] == [0, -1, 1, -2, 2]
        m3 = build_model(InverseSquare3D(0.0), 9)
        assert m3.labels[1:4] == ((1, -1), (1, 0), (1, 1))

    def test_orders(self):
        for spec in [Free(), AharonovBohm(0.3), InverseSquare3D(2.0), PRESET_FOURIER]:
            m = build_model(spec, 12)
            shift = (m.n - 2) / 2
            np.testing.assert_allclose(m.betas, np.sqrt(shift**2 + m.mus), atol=1e-15)
            np.testing.assert_allclose(m.alpha_orders, (m.n - 1) / 2 - m.betas, atol=1e-15)
            assert np.all(m.betas >= shift)
            assert abs(m.betas[0] - (m.g + shift)) < 1e-14
            assert np.all(np.diff(m.mus) >= -1e-12)

    def test_pairs_view(self):
        m = build_model(AharonovBohm(0.3), 4)
        pairs = m.pairs
        assert [p.index for p in pairs] == [1, 2, 3, 4]
        th = np.linspace(0, 6, 5)
        np.testing.assert_allclose(pairs[2].psi(th), m.eval_psi(th)[:, 2])

    def test_rejections(self):
        with pytest.raises(HardyRangeError):
            build_model(InverseSquare3D(-0.1), 3)
        with pytest.raises(ModelRejectedError) as info:
            build_model(InverseSquare3D(-1.0), 3)
        assert not isinstance(info.value, HardyRangeError)
        with pytest.raises(ModelRejectedError):
            build_model(Fourier2D.from_trig(a_cos=[0.0, 1.0]), 4)

    def test_resolution_error(self):
        # rough field: M too small and no doubling allowed
        spec = Fourier2D.from_trig(a_cos=[3.0] + [1.0] * 12)
        with pytest.raises(ResolutionError):
            build_model(spec, 8, M=13, tol=1e-14, max_doublings=0)

    def test_k_max_positive(self):
        with pytest.raises(DomainError):
            build_model(Free(), 0)

    def test_json_roundtrip(self):
        for spec in [PRESET_FOURIER, InverseSquare3D(2.0)]:
            m = build_model(spec, 10)
            m2 = AngularModel.from_dict(json.loads(json.dumps(m.to_dict())))
            pts = sphere_rule(m.n, 6)[0]
            np.testing.assert_allclose(m2.eval_psi(pts), m.eval_psi(pts), atol=1e-15)
            np.testing.assert_array_equal(m2.mus, m.mus)


class TestGain:
    @pytest.mark.parametrize(
        "spec, g",
        [(AharonovBohm(0.5), 0.5), (InverseSquare3D(0.0), 0.0), (InverseSquare3D(2.0), 1.0), (Free(), 0.0)],
    )
    def test_examples(self, spec, g):
        assert gain_exponent(build_model(spec, 4)) == pytest.approx(g, abs=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-3, 3))
    def test_ab_gain_is_distance_to_integers(self, alpha):
        assert build_model(AharonovBohm(alpha), 3).g == pytest.approx(abs(alpha - round(alpha)), abs=1e-12)

    def test_sup_exponent(self):
        assert build_model(Free(), 2).b_n == 0.0
        assert build_model(InverseSquare3D(1.0), 2).b_n == 0.5


class TestGalerkin:
    @pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5])
    def test_matches_analytic_aharonov_bohm(self, alpha):
        ana = build_model(AharonovBohm(alpha), 20)
        num = build_model(as_fourier2d(AharonovBohm(alpha)), 20)
        np.testing.assert_allclose(num.mus, ana.mus, atol=1e-10)
        th, w = sphere_rule(2, 128)
        overlap = (np.conj(num.eval_psi(th)) * w[:, None]).T @ ana.eval_psi(th)
        for k in range(20):
            block = np.isclose(ana.mus, ana.mus[k], atol=1e-9)
            if block.sum() == 1:
                assert abs(abs(overlap[k, k]) - 1.0) < 1e-8

    def test_gauge_shift(self):
        K = 21
        m0 = build_model(AharonovBohm(0.3), K).mus
        m1 = build_model(AharonovBohm(1.3), K).mus
        shared = min(m0.max(), m1.max())
        a = np.sort(m0[m0 < shared - 1e-9])
        b = np.sort(m1[m1 < shared - 1e-9])
        n = min(len(a), len(b))
        np.testing.assert_allclose(a[:n], b[:n], atol=1e-12)

    def test_preset_field(self):
        m = build_model(PRESET_FOURIER, 12)
        assert m.mus[0] > 0
        assert m.diagnostics["eigenvalue_shift"] < 1e-10


class TestOrthonormality:
    @pytest.mark.parametrize("spec", [Free(), AharonovBohm(0.3), PRESET_FOURIER, InverseSquare3D(2.0)])
    def test_gram(self, spec):
        m = build_model(spec, 12)
        pts, w = sphere_rule(m.n, 64)
        psi = m.eval_psi(pts)
        gram = (np.conj(psi) * w[:, None]).T @ psi
        np.testing.assert_allclose(gram, np.eye(12), atol=1e-8)

    def test_phase_convention(self):
        m = build_model(PRESET_FOURIER, 8)
        vals = m.eval_psi(np.array([0.0]))[0]
        assert np.all(np.abs(vals.imag) < 1e-12)
        assert np.all(vals.real >= -1e-12)


class TestChecks:
    def test_form_bounds_free(self):
        rep = verify_form_bounds(Free(), 16)
        assert rep["min_eig_upper_gap"] == pytest.approx(0.0, abs=1e-12)
        assert rep["min_eig_lower_gap"] == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize(
        "spec", [AharonovBohm(0.3), Fourier2D.from_trig(a_cos=[0.0, 1.0]), PRESET_FOURIER]
    )
    def test_form_bounds(self, spec):
        rep = verify_form_bounds(spec, 48)
        assert rep["min_eig_upper_gap"] >= -1e-10
        assert rep["min_eig_lower_gap"] >= -1e-10

    def test_form_bounds_three_dimensional_rejected(self):
        with pytest.raises(DomainError):
            verify_form_bounds(InverseSquare3D(1.0), 8)

    def test_weyl_free(self):
        rep = verify_weyl_growth(build_model(Free(), 40))
        assert 0.2 <= rep["ratio_min"] <= rep["ratio_max"] <= 1.1

    @pytest.mark.parametrize("spec", [AharonovBohm(0.5), InverseSquare3D(1.0), PRESET_FOURIER])
    def test_weyl_positive(self, spec):
        rep = verify_weyl_growth(build_model(spec, 40))
        assert 0 < rep["ratio_min"] <= rep["ratio_max"] < math.inf

    def test_weyl_needs_twenty(self):
        with pytest.raises(DomainError):
            verify_weyl_growth(build_model(Free(), 10))

    @pytest.mark.parametrize("spec", [Free(), AharonovBohm(0.3)])
    def test_sup_norm_fourier_modes(self, spec):
        rep = verify_sup_norm_bound(build_model(spec, 20), 128)
        np.testing.assert_allclose(rep["empirical_sups"], 1 / math.sqrt(2 * math.pi), rtol=1e-12)
        assert rep["C_best"] == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-12)

    def test_sup_norm_spherical_harmonics(self):
        rep = verify_sup_norm_bound(build_model(InverseSquare3D(0.0), 16), 64)
        assert rep["C_best"] <= 1.0

    def test_model_constant_bounds_sup_norms(self):
        for spec in [PRESET_FOURIER, InverseSquare3D(2.0)]:
            m = build_model(spec, 30)
            assert np.all(m.sup_norms <= m.sup_constant * np.maximum(1, m.mus) ** m.b_n * (1 + 1e-12))
