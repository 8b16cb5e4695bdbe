"""Profile construction and flow family contracts."""

import numpy as np
import pytest

from stirlab.flows import (
    Cellular,
    Constant,
    CustomStream,
    FlowClass,
    Percolating,
    Shear,
    TimePeriodic,
    check_first_integral,
    classify_flow,
    flow_from_dict,
    flow_to_dict,
    point_velocity,
    speed_bound,
    stream_function,
    velocity,
)
from stirlab.profiles import (
    FourierProfile,
    Plateau,
    plateau_profile,
    profile_from_dict,
    profile_to_dict,
)
from stirlab.spectral import (
    ScalarField,
    VelocityField,
    divergence,
    lp_norm,
    make_grid,
)

SIN = FourierProfile(sin=(1.0,))  # g(y) = sin(2 pi y)


def quad_oracle(fn, n=200001):
    """Composite-Simpson integral of fn over [0, 1]."""
    xs = np.linspace(0.0, 1.0, n)
    return float(np.trapezoid(fn(xs), xs))


class TestFourierProfile:
    def test_value_and_derivative(self):
        ys = np.linspace(-1, 2, 301)
        assert np.allclose(SIN.value(ys), np.sin(2 * np.pi * ys), atol=1e-12)
        assert np.allclose(SIN.derivative(ys), 2 * np.pi * np.cos(2 * np.pi * ys), atol=1e-10)

    def test_antiderivative(self):
        ys = np.linspace(0, 1, 101)
        exact = (1 - np.cos(2 * np.pi * ys)) / (2 * np.pi)
        assert np.allclose(SIN.antiderivative(ys), exact, atol=1e-12)

    def test_integral(self):
        p = FourierProfile(const=0.3, cos=(0.1,), sin=(0.7, 0.2))
        assert p.integral == pytest.approx(quad_oracle(p.value), abs=1e-8)


class TestPlateauProfile:
    def test_plateau_exact(self):
        g = plateau_profile([(0.3, 0.4, 1.0)])
        ys = np.linspace(0.3, 0.4, 57)
        assert np.all(g.value(ys) == 1.0)
        assert np.all(g.derivative(ys) == 0.0)
        assert g.plateaus == (Plateau(0.3, 0.4, 1.0),)

    def test_mean_zero(self):
        g = plateau_profile([(0.3, 0.4, 1.0)])
        assert abs(g.integral) < 1e-12
        assert abs(quad_oracle(g.value)) < 1e-6

    def test_zero_plateau_with_wiggle(self):
        g = plateau_profile([(0.4, 0.6, 0.0)], wiggle=1.0)
        ys = np.linspace(0.4, 0.6, 33)
        assert np.all(g.value(ys) == 0.0)
        assert abs(g.integral) < 1e-12
        off = g.value(np.linspace(0.65, 1.35, 101))
        assert np.max(np.abs(off)) > 0.5  # the complement actually flows

    def test_c1_joins(self):
        g = plateau_profile([(0.15, 0.25, 0.0), (0.55, 0.65, 1.0)], wiggle=0.3)
        eps = 1e-7
        for b in (0.15, 0.25, 0.55, 0.65):
            assert abs(float(g.value(b - eps)) - float(g.value(b + eps))) < 1e-5
            assert abs(float(g.derivative(b - eps)) - float(g.derivative(b + eps))) < 1e-3

    def test_periodic_closure(self):
        g = plateau_profile([(0.3, 0.4, 1.0)], wiggle=0.5)
        assert float(g.value(0.0)) == pytest.approx(float(g.value(1.0)), abs=1e-10)

    def test_antiderivative_matches_quadrature(self):
        g = plateau_profile([(0.3, 0.4, 1.0)])
        for y in (0.2, 0.35, 0.7, 0.95):
            xs = np.linspace(0.0, y, 60001)
            ora = np.trapezoid(g.value(xs), xs)
            assert float(g.antiderivative(y)) == pytest.approx(ora, abs=1e-7)

    def test_validation(self):
        with pytest.raises(ValueError):
            plateau_profile([])
        with pytest.raises(ValueError):
            plateau_profile([(0.1, 0.3, 1.0), (0.2, 0.5, 0.0)])
        with pytest.raises(ValueError):
            plateau_profile([(0.0, 1.0, 1.0)])

    def test_round_trip_dict(self):
        g = plateau_profile([(0.3, 0.4, 1.0)], wiggle=0.25)
        d = profile_to_dict(g)
        g2 = profile_from_dict(d)
        ys = np.linspace(0, 1, 257)
        assert np.array_equal(np.asarray(g.value(ys)), np.asarray(g2.value(ys)))


class TestVelocity:
    def test_sin_shear_matches_closed_form(self):
        # g(w) = sin(2 pi w) at w = {-x2} gives u = (-sin(2 pi x2), 0)
        g = make_grid(16, 64)
        w = velocity(Shear(SIN), g)
        Y = g.meshgrid()[1]
        assert np.abs(w.u + np.sin(2 * np.pi * Y)).max() < 1e-12
        assert np.abs(w.v).max() == 0.0

    def test_percolating_components(self):
        p = FourierProfile(sin=(0.05,))
        spec = Percolating(SIN, p)
        g = make_grid(32, 32)
        w = velocity(spec, g)
        X, Y = g.meshgrid()
        lvl = p.value(X) - Y
        assert np.allclose(w.u, np.sin(2 * np.pi * lvl), atol=1e-12)
        assert np.allclose(w.v, p.derivative(X) * np.sin(2 * np.pi * lvl), atol=1e-12)

    def test_plateau_band_is_exactly_stationary(self):
        spec = Percolating(plateau_profile([(0.4, 0.6, 0.0)], wiggle=1.0), FourierProfile(sin=(0.03,)))
        g = make_grid(64, 64)
        w = velocity(spec, g)
        X, Y = g.meshgrid()
        lvl = spec.p.value(X) - Y
        band = (lvl - np.floor(lvl) >= 0.4) & (lvl - np.floor(lvl) <= 0.6)
        assert band.any()
        assert np.all(w.u[band] == 0.0)
        assert np.all(w.v[band] == 0.0)

    def test_spectral_stream_agreement_band_limited(self):
        # analytic velocity vs perpendicular spectral gradient of the stream
        g = make_grid(128, 128)
        spec = Shear(SIN)
        wa = velocity(spec, g)
        ws = VelocityField.from_stream(stream_function(spec, g))
        assert np.abs(wa.u - ws.u).max() < 1e-6
        assert np.abs(wa.v - ws.v).max() < 1e-6

    def test_divergence_free_band_limited(self):
        g = make_grid(64, 64)
        for spec in (Shear(SIN), Cellular(2.0), Constant(1.0, 0.5)):
            w = velocity(spec, g)
            assert lp_norm(divergence(w), np.inf) <= 1e-10 * max(1.0, w.max_speed)

    def test_divergence_refines_for_plateau_flow(self):
        # analytic samples of a non-band-limited profile alias; the spectral
        # divergence must still vanish under refinement at second order or better
        spec = Percolating(plateau_profile([(0.3, 0.4, 1.0)]), FourierProfile(sin=(0.03,)))
        resid = []
        for n in (64, 128, 256):
            w = velocity(spec, make_grid(n, n))
            resid.append(lp_norm(divergence(w), np.inf))
        assert resid[1] < resid[0] / 3.0
        assert resid[2] < resid[1] / 3.0

    def test_time_periodic_modulates(self):
        mod = FourierProfile(const=1.0, cos=(0.5,))
        spec = TimePeriodic(Shear(SIN), mod)
        g = make_grid(16, 32)
        w0 = velocity(spec, g, t=0.0)
        wq = velocity(spec, g, t=0.25)
        base = velocity(Shear(SIN), g)
        assert np.allclose(w0.u, 1.5 * base.u, atol=1e-12)
        assert np.allclose(wq.u, 1.0 * base.u, atol=1e-12)

    def test_point_velocity_matches_grid(self):
        for spec in (
            Shear(SIN),
            Percolating(SIN, FourierProfile(sin=(0.05,))),
            Cellular(1.5),
            Constant(0.3, -0.2),
        ):
            g = make_grid(16, 16)
            w = velocity(spec, g)
            pts = np.stack(g.meshgrid(), axis=-1).reshape(-1, 2)
            out = point_velocity(spec)(pts, 0.0)
            assert np.abs(out[:, 0] - w.u.ravel()).max() < 1e-12
            assert np.abs(out[:, 1] - w.v.ravel()).max() < 1e-12

    def test_custom_stream_point_velocity(self):
        g = make_grid(32, 32)
        U = ScalarField.from_function(g, lambda x, y: np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y) / (2 * np.pi))
        spec = CustomStream(U)
        pts = np.array([[0.13, 0.41], [0.77, 0.05]])
        out = point_velocity(spec)(pts, 0.0)
        exact = np.stack(
            [
                -np.sin(2 * np.pi * pts[:, 0]) * np.cos(2 * np.pi * pts[:, 1]),
                np.cos(2 * np.pi * pts[:, 0]) * np.sin(2 * np.pi * pts[:, 1]),
            ],
            axis=-1,
        )
        assert np.abs(out - exact).max() < 1e-10

    def test_tiling_to_larger_cell(self):
        g1 = make_grid(16, 16)
        U = ScalarField.from_function(g1, lambda x, y: np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y))
        g8 = make_grid(128, 16, lx=8.0)
        w = velocity(CustomStream(U), g8)
        assert np.allclose(w.u[:16, :], w.u[16:32, :], atol=1e-12)
        with pytest.raises(ValueError):
            velocity(CustomStream(U), make_grid(100, 16, lx=8.0))

    def test_speed_bound(self):
        assert speed_bound(Shear(SIN)) == pytest.approx(1.0, abs=1e-4)
        assert speed_bound(Constant(3.0, 4.0)) == pytest.approx(5.0)
        assert speed_bound(Cellular(2.5)) == pytest.approx(2.5)

    def test_mean_zero_profile_required(self):
        with pytest.raises(ValueError):
            Shear(FourierProfile(const=0.5, sin=(1.0,)))


class TestFirstIntegral:
    def test_band_limited_spectral(self):
        g = make_grid(128, 128)
        assert check_first_integral(Shear(SIN), g) <= 1e-8
        assert check_first_integral(Cellular(1.0), g) <= 1e-8

    def test_percolating_analytic(self):
        spec = Percolating(plateau_profile([(0.3, 0.4, 1.0)]), FourierProfile(sin=(0.05,)))
        assert check_first_integral(spec, make_grid(64, 64)) <= 1e-8

    def test_constant(self):
        assert check_first_integral(Constant(1.0, 0.0), make_grid(16, 16)) == 0.0


class TestStreamFunction:
    def test_shear_stream_value(self):
        # U(x) = int_0^{-x2 mod 1} sin(2 pi s) ds = (1 - cos(2 pi x2)) / (2 pi)
        g = make_grid(8, 64)
        U = stream_function(Shear(SIN), g)
        Y = g.meshgrid()[1]
        assert np.abs(U.values - (1 - np.cos(2 * np.pi * Y)) / (2 * np.pi)).max() < 1e-10

    def test_constant_stream_raises(self):
        with pytest.raises(ValueError):
            stream_function(Constant(1.0, 0.0), make_grid(8, 8))


class TestClassification:
    def test_enhancing(self):
        assert classify_flow(Percolating(SIN, FourierProfile())) is FlowClass.ENHANCING
        assert classify_flow(Shear(SIN)) is FlowClass.ENHANCING

    def test_invariant_set(self):
        g = plateau_profile([(0.4, 0.6, 0.0)], wiggle=1.0)
        assert classify_flow(Shear(g)) is FlowClass.INVARIANT_SET

    def test_nonzero_eigenfunction(self):
        g = plateau_profile([(0.3, 0.4, 1.0)])
        assert classify_flow(Percolating(g, FourierProfile(sin=(0.05,)))) is FlowClass.NONZERO_EIGENFUNCTION

    def test_both(self):
        g = plateau_profile([(0.15, 0.25, 0.0), (0.55, 0.65, 1.0)], wiggle=0.3)
        assert classify_flow(Shear(g)) is FlowClass.BOTH

    def test_scaling_invariance(self):
        # rescaling the flow must not change the verdict
        g = plateau_profile([(0.3, 0.4, 1.0)])
        scaled = plateau_profile([(0.3, 0.4, 2.0)], integral=0.0)
        assert classify_flow(Shear(g)) is classify_flow(Shear(scaled))

    def test_others(self):
        assert classify_flow(Cellular(1.0)) is FlowClass.INVARIANT_SET
        assert classify_flow(Constant(1.0, 0.0)) is FlowClass.NONZERO_EIGENFUNCTION
        assert classify_flow(Constant(0.0, 0.0)) is FlowClass.INVARIANT_SET
        g = make_grid(16, 16)
        U = ScalarField.from_function(g, lambda x, y: np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y))
        assert classify_flow(CustomStream(U)) is FlowClass.UNKNOWN


class TestSerialization:
    def test_round_trip(self):
        specs = [
            Shear(SIN),
            Percolating(plateau_profile([(0.3, 0.4, 1.0)], wiggle=0.2), FourierProfile(sin=(0.05,))),
            Cellular(2.0),
            Constant(1.0, -1.0),
            TimePeriodic(Shear(SIN), FourierProfile(const=1.0, cos=(0.5,))),
        ]
        g = make_grid(32, 32)
        for spec in specs:
            spec2 = flow_from_dict(flow_to_dict(spec))
            w1, w2 = velocity(spec, g, t=0.3), velocity(spec2, g, t=0.3)
            assert np.array_equal(w1.u, w2.u)
            assert np.array_equal(w1.v, w2.v)

    def test_custom_stream_via_file(self, tmp_path):
        from stirlab.spectral import save_field

        g = make_grid(16, 16)
        U = ScalarField.from_function(g, lambda x, y: np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y))
        save_field(U, tmp_path / "stream.bin")
        spec = flow_from_dict({"kind": "custom", "stream": "stream.bin"}, base_dir=tmp_path)
        assert isinstance(spec, CustomStream)
        assert np.allclose(spec.stream.values, U.values, atol=1e-15)
        d = flow_to_dict(spec)
        assert d == {"kind": "custom", "stream": "stream.bin"}
