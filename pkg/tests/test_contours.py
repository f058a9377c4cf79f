import cmath
import math
from math import pi

import numpy as np
import pytest

import xxzchain.contours as contours
from xxzchain.contours import (
    Integrand20,
    Integrand300,
    Panel,
    Reduced001,
    Reduced01,
    Reduced110,
    TestFunctionJ,
    certify_clearance,
    contour_c1,
    contour_c2,
    contour_c3,
    correction_active,
    eval_identity_n2,
    eval_identity_n3,
    phi11,
    reduce_residue,
    standard_test_functions,
    tau_parameters,
    verify_multiple_integrals,
)
from xxzchain.errors import (
    DegenerateAnisotropyError,
    PoleProximityError,
    ReductionMismatchError,
    ValidationError,
)

RNG = np.random.default_rng(7)


def _random_points(n):
    return RNG.uniform(-1.5, 1.5, n) + 1j * RNG.uniform(-0.2, 0.2, n)


class TestTestFunction:
    def test_symmetry(self):
        J = TestFunctionJ(3, (2.0 + 1.5j,))
        a, b, c = _random_points(3)
        assert abs(J(a, b, c) - J(c, a, b)) < 1e-12 * abs(J(a, b, c))

    def test_periodicity(self):
        J = TestFunctionJ(2, (1.8 - 1.2j,))
        for p in _random_points(5):
            assert abs(J.g(p + 1j * pi) - J.g(p)) < 1e-12 * abs(J.g(p))

    def test_decay(self):
        for J in standard_test_functions(2):
            far = abs(J.g(10.0))
            assert far < 5.0 * math.exp(-2 * 10.0)

    def test_zero(self):
        J = TestFunctionJ.zero(2)
        assert J.is_zero
        assert J(0.3, 0.5) == 0.0

    def test_poles_are_actual_poles(self):
        J = TestFunctionJ(2, (2.0 + 1.5j,))
        for p in J.g_poles()[:4]:
            assert abs(J.g(p + 1e-7)) > 1e5

    @pytest.mark.parametrize("zeta", [0.35 * pi, 0.65 * pi])
    def test_family_clearance(self, zeta):
        # design margin: poles at least 0.05 from every base contour
        for J in standard_test_functions(2):
            for c in (contour_c1(zeta), contour_c2(zeta), contour_c3(zeta)):
                assert certify_clearance(c, J.g_poles(), 0.05) >= 0.05


class TestTau:
    def test_regimes(self):
        assert tau_parameters(1.5) == (1, 1)
        assert tau_parameters(-1.5) == (1, 1)
        assert tau_parameters(0.5) == (1, -1)
        assert tau_parameters(-0.5) == (-1, 1)

    def test_guards(self):
        for v in (0.0, 1.0, -1.0, 1.0 + 1e-9):
            with pytest.raises(ValidationError):
                tau_parameters(v)


class TestPhi11:
    def test_zero_at_origin(self):
        assert phi11(0.0, 0.35 * pi) == 0.0

    def test_periodicity(self):
        z = 0.4 - 0.1j
        assert abs(phi11(z + 1j * pi, 0.35 * pi) - phi11(z, 0.35 * pi)) < 1e-14

    def test_half_shift_value(self):
        zeta = 0.42 * pi
        assert abs(phi11(0.5j * zeta, zeta) + 1.0) < 1e-14

    def test_pole_guard(self):
        zeta = 0.35 * pi
        with pytest.raises(PoleProximityError):
            phi11(1j * zeta + 1e-10, zeta)


class TestReductions:
    @pytest.mark.parametrize("zeta", [0.35 * pi, 0.2 * pi])
    def test_cluster2_residue(self, zeta):
        J = TestFunctionJ(2, (2.0 + 1.5j,))
        j20 = Integrand20(J, zeta)
        red = Reduced01(J, zeta)
        for nu1 in _random_points(10):
            got = 1j * contours._circle_residue(
                lambda z: j20(nu1, z), nu1 - 1j * zeta
            )
            want = complex(red(nu1 - 0.5j * zeta))
            assert abs(got - want) < 1e-8 * max(1.0, abs(want))

    def test_mixed_residue(self):
        zeta = 0.2 * pi
        J = TestFunctionJ(3, (1.8 - 1.2j,))
        j300 = Integrand300(J, zeta)
        red = Reduced110(J, zeta)
        for nu1 in _random_points(5):
            nu2 = nu1 + 0.4 - 0.05j
            got = 1j * contours._circle_residue(
                lambda z: j300(nu1, nu2, z), nu2 - 1j * zeta
            )
            want = complex(red(nu1, nu2 - 0.5j * zeta))
            assert abs(got - want) < 1e-8 * max(1.0, abs(want))

    def test_cluster3_double_residue(self):
        zeta = 0.2 * pi
        J = TestFunctionJ(3, (2.0 + 1.5j,))
        # construction runs the nested double-residue cross-check
        red = reduce_residue(J, (0, 0, 1), zeta)
        assert isinstance(red, Reduced001)

    def test_mismatch_detected(self, monkeypatch):
        J = TestFunctionJ(2, (2.0 + 1.5j,))
        monkeypatch.setattr(contours, "_prefactor2", lambda z: 1.0)
        with pytest.raises(ReductionMismatchError):
            reduce_residue(J, (0, 1), 0.35 * pi)

    def test_unknown_target(self):
        with pytest.raises(ValidationError):
            reduce_residue(TestFunctionJ(2, (2.0 + 1.5j,)), (2, 0), 0.35 * pi)


class TestIdentityN2:
    @pytest.mark.parametrize("v", [1.5, 0.5, -0.5])
    @pytest.mark.parametrize("zeta", [0.35 * pi, 0.65 * pi])
    def test_regime_sweep(self, v, zeta):
        rep = eval_identity_n2(TestFunctionJ(2, (2.0 + 1.5j,), label="w1"), v, zeta)
        assert rep["rel_diff"] < 1e-6, rep
        assert rep["tail_bound"] <= math.exp(-2 * 12)

    @pytest.mark.parametrize("J", standard_test_functions(2)[1:], ids=lambda J: J.label)
    def test_other_functions(self, J):
        rep = eval_identity_n2(J, 0.5, 0.35 * pi)
        assert rep["rel_diff"] < 1e-6, rep

    def test_small_compactification(self):
        # at A=3.5 the residue rays and vertical closures carry weight
        # well above tolerance, so the deformation bookkeeping is live
        rep = eval_identity_n2(
            TestFunctionJ(2, (2.0 + 1.5j,)),
            1.5,
            0.35 * pi,
            A=3.5,
            levels=2,
            separation=0.02,
        )
        assert rep["rel_diff"] < 1e-6, rep

    def test_small_compactification_needs_rays(self, monkeypatch):
        orig = contours.ray_panels_c2a
        monkeypatch.setattr(
            contours,
            "ray_panels_c2a",
            lambda *a, **k: [Panel(p.a, p.b, 0.0, p.order) for p in orig(*a, **k)],
        )
        rep = eval_identity_n2(
            TestFunctionJ(2, (2.0 + 1.5j,)),
            1.5,
            0.35 * pi,
            A=3.5,
            levels=2,
            separation=0.02,
        )
        assert rep["rel_diff"] > 1e-6

    def test_zero_function(self):
        rep = eval_identity_n2(TestFunctionJ.zero(2), 1.5, 0.35 * pi)
        assert rep["lhs"] == 0 and rep["rhs"] == 0 and rep["rel_diff"] == 0.0

    def test_regime_guard(self):
        J = TestFunctionJ(2, (2.0 + 1.5j,))
        with pytest.raises(ValidationError):
            eval_identity_n2(J, 0.0, 0.35 * pi)
        with pytest.raises(ValidationError):
            eval_identity_n2(J, 1.0 + 1e-9, 0.35 * pi)

    def test_degenerate_anisotropy(self):
        with pytest.raises(DegenerateAnisotropyError):
            eval_identity_n2(TestFunctionJ(2, (2.0 + 1.5j,)), 1.5, pi / 2)

    def test_pole_on_contour_rejected(self):
        # poles at 0.5 + 1e-4j sit within 1e-3 of the real line
        w = cmath.cosh(2 * (0.5 + 1e-4j))
        with pytest.raises(PoleProximityError):
            eval_identity_n2(TestFunctionJ(2, (w,)), 1.5, 0.35 * pi)


@pytest.mark.slow
class TestIdentityN3:
    @pytest.mark.parametrize("v", [1.5, 0.5])
    def test_correction_absent(self, v):
        rep = eval_identity_n3(TestFunctionJ(3, (2.0 + 1.5j,)), v, 0.35 * pi)
        assert rep["rel_diff"] < 1e-4, rep
        assert not rep["correction_active"]

    def test_correction_branch(self):
        rep = eval_identity_n3(TestFunctionJ(3, (2.0 + 1.5j,)), 0.5, 0.2 * pi)
        assert rep["rel_diff"] < 1e-4, rep
        assert rep["correction_active"]

    def test_small_compactification(self):
        rep = eval_identity_n3(
            TestFunctionJ(3, (2.0 + 1.5j,)),
            1.5,
            0.35 * pi,
            A=3.5,
            levels=2,
            separation=0.02,
        )
        assert rep["rel_diff"] < 1e-4, rep

    def test_anisotropy_thirds_rejected(self):
        with pytest.raises(DegenerateAnisotropyError):
            eval_identity_n3(TestFunctionJ(3, (2.0 + 1.5j,)), 1.5, pi / 3)


class TestCorrectionWindow:
    def test_activation(self):
        assert correction_active(0.2 * pi)
        assert correction_active(0.8 * pi)
        assert not correction_active(0.35 * pi)
        assert not correction_active(0.65 * pi)


class TestReferenceIntegrals:
    def test_gaussian_closed_form(self):
        rows = [r for r in verify_multiple_integrals(4) if r["kind"] == "gaussian"]
        assert [r["n"] for r in rows] == [1, 2, 3, 4]
        for r in rows:
            assert r["rel_diff"] < 1e-8, r

    def test_exponential_matches_product(self):
        rows = [r for r in verify_multiple_integrals(4) if r["kind"] == "exponential"]
        for r in rows:
            assert r["matches_product"], r
        # the squared closed form disagrees beyond n=1
        assert not any(r["matches_square"] for r in rows if r["n"] >= 2)

    def test_n2_value(self):
        rows = verify_multiple_integrals(2)
        exp2 = [r for r in rows if r["kind"] == "exponential" and r["n"] == 2][0]
        assert abs(exp2["computed"] - 2.0) < 1e-10
