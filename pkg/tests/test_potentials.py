import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grad2 import potentials as P
from grad2.errors import ConstructionError, HypothesisViolation, InputError, PreconditionError

BUILTINS = [
    P.quadratic(1),
    P.quadratic(3),
    P.double_well(),
    P.quartic_symmetric(),
    P.ginzburg_landau(2),
    P.ginzburg_landau(3),
    P.exponential(1),
    P.exponential(2),
]


def _fd_grad(p, x, h=1e-5):
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (P.evaluate(p, x + e) - P.evaluate(p, x - e)) / (2 * h)
    return g


class TestClosedForms:
    def test_quadratic_value(self):
        assert P.evaluate(P.quadratic(), [2.0]) == 2.0

    def test_double_well_bottom(self):
        assert P.evaluate(P.double_well(), [1.0]) == 0.0

    def test_exponential_origin(self):
        assert P.evaluate(P.exponential(), [0.0]) == 0.0

    def test_double_well_gradient(self):
        assert P.gradient(P.double_well(), [0.5]) == pytest.approx([-0.375], abs=1e-15)

    def test_ginzburg_landau_gradient_on_sphere(self):
        np.testing.assert_array_equal(P.gradient(P.ginzburg_landau(2), [1.0, 0.0]), [0.0, 0.0])

    def test_exponential_gradient(self):
        assert P.gradient(P.exponential(), [1.0])[0] == pytest.approx(math.e, rel=1e-15)

    def test_quartic_symmetric(self):
        x = 0.7
        assert P.evaluate(P.quartic_symmetric(), [x]) == pytest.approx(x**2 * (x**2 - 1) ** 2)

    def test_quadratic_stiffness_param(self):
        p = P.quadratic(1, k=4.0)
        assert P.evaluate(p, [1.0]) == 2.0
        assert P.gradient(p, [1.0])[0] == 4.0


class TestValidation:
    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            P.evaluate(P.quadratic(2), [1.0])
        with pytest.raises(InputError):
            P.gradient(P.exponential(1), [1.0, 2.0])

    @pytest.mark.parametrize("kind", ["double_well", "quartic_symmetric"])
    def test_scalar_kinds_reject_higher_dimension(self, kind):
        with pytest.raises(ConstructionError):
            P.PotentialSpec(kind, dimension=2)

    def test_unknown_kind(self):
        with pytest.raises(InputError):
            P.from_config({"kind": "cubic"})

    def test_shift_length_checked(self):
        with pytest.raises(InputError):
            P.shifted(P.quadratic(2), [1.0])


class TestConfig:
    def test_round_trip(self):
        for p in BUILTINS + [P.shifted(P.double_well(), [0.5])]:
            assert P.from_config(p.to_config()) == p

    def test_shifted_from_config(self):
        p = P.from_config({"kind": "shifted", "inner": {"kind": "quadratic"}, "shift": [1.0]})
        assert P.evaluate(p, [1.0]) == 0.0
        assert P.evaluate(p, [3.0]) == 2.0

    def test_bare_kind_name(self):
        assert P.from_config("double_well") == P.double_well()

    def test_pickles(self):
        p = P.shifted(P.exponential(2), [0.1, -0.2])
        q = pickle.loads(pickle.dumps(p))
        assert q == p
        assert P.evaluate(q, [0.3, 0.3]) == P.evaluate(p, [0.3, 0.3])


class TestInvariants:
    @pytest.mark.parametrize("p", BUILTINS, ids=lambda p: f"{p.kind}{p.dimension}")
    def test_gradient_matches_finite_differences(self, p):
        rng = np.random.default_rng(7)
        for _ in range(100):
            x = rng.uniform(-3, 3, p.dimension)
            if p.kind == "exponential":
                # keep e^{|x|^2} within double range for the FD stencil to be meaningful
                x *= min(1.0, 2.5 / max(np.linalg.norm(x), 1e-300))
            g = P.gradient(p, x)
            err = np.linalg.norm(g - _fd_grad(p, x))
            assert err <= 1e-6 * (1 + np.linalg.norm(g))

    @pytest.mark.parametrize("p", BUILTINS, ids=lambda p: f"{p.kind}{p.dimension}")
    def test_even_value_odd_gradient(self, p):
        rng = np.random.default_rng(3)
        for x in rng.uniform(-2, 2, (50, p.dimension)):
            assert P.evaluate(p, -x) == P.evaluate(p, x)
            np.testing.assert_array_equal(P.gradient(p, -x), -P.gradient(p, x))

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.floats(-3, 3), min_size=2, max_size=2),
        st.lists(st.floats(-3, 3), min_size=2, max_size=2),
    )
    def test_shift_covariance(self, shift, x):
        for inner in (P.quadratic(2), P.ginzburg_landau(2), P.exponential(2)):
            p = P.shifted(inner, shift)
            d = np.asarray(x) - np.asarray(shift)
            assert P.evaluate(p, x) == P.evaluate(inner, d)
            np.testing.assert_array_equal(P.gradient(p, x), P.gradient(inner, d))

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-1e3, 1e3, allow_nan=False))
    def test_values_finite(self, x):
        for p in (P.quadratic(), P.double_well(), P.quartic_symmetric()):
            assert math.isfinite(P.evaluate(p, [x]))
            assert np.all(np.isfinite(P.gradient(p, [x])))


class TestLocalConstants:
    def test_quadratic(self):
        lc = P.estimate_local_constants(P.quadratic(), [0.0], 1.0)
        assert lc.alpha == pytest.approx(0.495)
        assert lc.beta == pytest.approx(0.505)
        assert lc.mu == pytest.approx(0.99)
        assert lc.radius == 1.0

    def test_double_well_near_minimum(self, oracle):
        ref = oracle["dw_local_constants_r01"]
        lc = P.estimate_local_constants(P.double_well(), [1.0], 0.1)
        # the outer shell reaches the extremes of the scan, so margins dominate
        assert lc.alpha == pytest.approx(0.99 * ref["alpha"], rel=1e-9)
        assert lc.beta == pytest.approx(1.01 * ref["beta"], rel=1e-9)
        assert lc.mu == pytest.approx(0.99 * ref["mu"], rel=1e-9)

    def test_double_well_at_maximum(self):
        with pytest.raises(HypothesisViolation):
            P.estimate_local_constants(P.double_well(), [0.0], 0.1)

    def test_noncritical_point(self):
        with pytest.raises(PreconditionError):
            P.estimate_local_constants(P.quadratic(), [0.5], 0.1)

    def test_deterministic(self):
        q = P.quadratic(2)
        assert P.estimate_local_constants(q, [0, 0], 0.5, seed=5) == P.estimate_local_constants(q, [0, 0], 0.5, seed=5)

    def test_continuum_of_minima_violates_quadratic_control(self):
        # along the unit circle W stays 0, so no positive alpha exists
        with pytest.raises(HypothesisViolation):
            P.estimate_local_constants(P.ginzburg_landau(2), [1.0, 0.0], 0.2)

    @pytest.mark.parametrize("p,u,r", [(P.quadratic(), [0.0], 1.0), (P.double_well(), [1.0], 0.3)])
    def test_recheck_with_fresh_samples(self, p, u, r):
        lc = P.estimate_local_constants(p, u, r, sample_count=400, seed=0)
        pts = P.shell_samples(np.asarray(u), r, 4000, seed=99)
        d = pts - np.asarray(u)
        d2 = np.sum(d * d, axis=1)
        keep = d2 > 0
        w = np.array([P.evaluate(p, x) for x in pts])[keep]
        g = np.array([P.gradient(p, x) @ dd for x, dd in zip(pts, d)])[keep]
        assert np.all(lc.alpha * d2[keep] <= w)
        assert np.all(w <= lc.beta * d2[keep])
        assert np.all(g >= lc.mu * d2[keep])
        assert lc.alpha <= lc.beta

    def test_invalid_radius(self):
        with pytest.raises(InputError):
            P.estimate_local_constants(P.quadratic(), [0.0], 0.0)


class TestCoercivity:
    def test_quadratic(self):
        rep = P.probe_coercivity(P.quadratic(), [1, 2, 4, 8])
        assert rep.minima == pytest.approx([0.5, 2, 8, 32])
        assert rep.verdict == "consistent with coercive"

    def test_exponential(self):
        rep = P.probe_coercivity(P.exponential(), [1, 2, 3])
        assert rep.minima == pytest.approx([0.5 * (math.e - 1), 0.5 * (math.e**4 - 1), 0.5 * (math.e**9 - 1)])
        assert rep.verdict == "consistent with coercive"

    def test_double_well(self):
        rep = P.probe_coercivity(P.double_well(), [1, 2, 3])
        assert rep.minima == pytest.approx([0, 2.25, 16])
        assert rep.verdict == "consistent with coercive"

    def test_inconclusive_when_growth_small(self):
        rep = P.probe_coercivity(P.quadratic(), [1.0, 1.1, 1.2])
        assert rep.verdict == "inconclusive"

    def test_radii_must_ascend(self):
        with pytest.raises(InputError):
            P.probe_coercivity(P.quadratic(), [2, 1])


class TestEquilibria:
    def test_double_well(self):
        eq = P.find_equilibria(P.double_well(), [(-2, 2)], grid_per_axis=41, tol=1e-10)
        assert [float(p[0]) for p in eq.points] == pytest.approx([-1, 0, 1], abs=1e-9)
        assert eq.classifications == ["minimum", "saddle-or-maximum", "minimum"]
        assert not eq.continuum_suspected

    def test_quadratic(self):
        eq = P.find_equilibria(P.quadratic(), [(-2, 2)])
        assert len(eq) == 1
        assert eq.classifications == ["minimum"]
        assert abs(eq.points[0][0]) < 1e-9

    def test_ginzburg_landau_continuum(self):
        eq = P.find_equilibria(P.ginzburg_landau(2), [(-2, 2), (-2, 2)], grid_per_axis=41)
        assert eq.continuum_suspected
        norms = sorted(float(np.linalg.norm(p)) for p in eq.points)
        assert norms[0] < 1e-8
        assert all(abs(r - 1) < 1e-6 for r in norms[1:])

    def test_invariants(self):
        tol = 1e-10
        for p, box in ((P.double_well(), [(-2, 2)]), (P.quartic_symmetric(), [(-1.5, 1.5)])):
            eq = P.find_equilibria(p, box, tol=tol)
            for q in eq.points:
                assert np.linalg.norm(P.gradient(p, q)) <= tol
            pts = np.array(eq.points)
            for i in range(len(pts)):
                for j in range(i):
                    assert np.linalg.norm(pts[i] - pts[j]) > 10 * tol

    def test_quartic_symmetric_classification(self):
        eq = P.find_equilibria(P.quartic_symmetric(), [(-1.5, 1.5)], grid_per_axis=61)
        got = {round(float(p[0]), 6): c for p, c in zip(eq.points, eq.classifications)}
        r = round(1 / math.sqrt(3), 6)
        assert got == {-1.0: "minimum", -r: "saddle-or-maximum", 0.0: "minimum", r: "saddle-or-maximum", 1.0: "minimum"}

    def test_bad_box(self):
        with pytest.raises(InputError):
            P.find_equilibria(P.quadratic(), [(1, 1)])
