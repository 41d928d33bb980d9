import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmap import geometry as geo
from cmap.geometry import DomainError, DomainSpec, PuncturedDomain

DISC = DomainSpec.disc()
SQUARE = geo.square()


def interior_points(domain, count, seed=0):
    rng = np.random.default_rng(seed)
    z = (rng.random(4 * count) * 2 - 1) * 0.8 + 1j * (rng.random(4 * count) * 2 - 1) * 0.8
    return z[geo.contains(domain, z)][:count]


class TestDistance:
    def test_disc_examples(self):
        assert geo.distance_to_boundary(DISC, 0j) == pytest.approx(0.6)
        assert geo.distance_to_boundary(DISC, 0.3) == pytest.approx(0.3)

    def test_square_edge(self):
        assert geo.distance_to_boundary(SQUARE, 0.5) == pytest.approx(0.05)

    def test_outside_is_zero(self):
        assert geo.distance_to_boundary(DISC, 0.7) == 0.0
        assert geo.distance_to_boundary(SQUARE, 1 + 1j) == 0.0

    @pytest.mark.parametrize("domain", [DISC, SQUARE], ids=["disc", "square"])
    def test_matches_dense_boundary_sampling(self, domain):
        # brute-force oracle: minimum over 10^4 boundary samples
        b = geo.sample_boundary(domain, 10_000)
        spacing = geo.boundary_length(domain) / 10_000
        z = interior_points(domain, 200)
        brute = np.abs(z[:, None] - b[None, :]).min(axis=1)
        d = geo.distance_to_boundary(domain, z)
        assert np.all(d <= brute + 1e-12)
        assert np.all(brute - d <= spacing)


class TestOracle:
    def test_exact(self):
        assert geo.oracle_F(DISC, 0j) == pytest.approx(0.6)
        assert geo.oracle_F(SQUARE, 0j) == pytest.approx(0.55)

    def test_noise_sandwich_example(self):
        noisy = DomainSpec.disc(oracle_noise=0.2)
        assert 0.48 < geo.oracle_F(noisy, 0j) < 0.72

    def test_outside_raises(self):
        with pytest.raises(DomainError):
            geo.oracle_F(DISC, 0.9)

    def test_deterministic(self):
        noisy = DomainSpec.disc(oracle_noise=0.2)
        z = interior_points(noisy, 50)
        assert np.array_equal(geo.oracle_F(noisy, z), geo.oracle_F(noisy, z.copy()))

    def test_radii_examples(self):
        assert geo.step_radius(DISC, 0j) == pytest.approx(0.3)
        assert geo.node_radius(DISC, 0j) == pytest.approx(0.15)

    def test_noise_bound_rejected(self):
        with pytest.raises(ValueError):
            DomainSpec.disc(oracle_noise=0.25)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(-0.79, 0.79), y=st.floats(-0.79, 0.79), noise=st.floats(0.0, 0.2499),
       shape=st.sampled_from(["disc", "square"]))
def test_sandwich_and_step_bound(x, y, noise, shape):
    domain = DomainSpec.disc(oracle_noise=noise) if shape == "disc" else geo.square(oracle_noise=noise)
    z = complex(x, y)
    if not geo.contains(domain, z):
        return
    d = float(geo.distance_to_boundary(domain, z))
    F = float(geo.oracle_F(domain, z))
    assert 0.75 * d < F < 1.25 * d
    R = float(geo.step_radius(domain, z))
    assert d / 3 < R < 2 * d / 3
    # node safety: 2 r(z) < d
    assert 2 * float(geo.node_radius(domain, z)) < d


@settings(max_examples=100, deadline=None)
@given(x=st.floats(-0.59, 0.59), y=st.floats(-0.59, 0.59))
def test_local_radius_property_exact_oracle(x, y):
    # d(x')/3 < R(z) < 2 d(x')/3 for x' in D_r(z); holds for the exact oracle
    z = complex(x, y)
    if not geo.contains(DISC, z):
        return
    r = float(geo.node_radius(DISC, z))
    R = float(geo.step_radius(DISC, z))
    pts = z + r * 0.999 * np.exp(2j * math.pi * np.arange(16) / 16)
    d = geo.distance_to_boundary(DISC, pts)
    assert np.all(d / 3 < R) and np.all(R < 2 * d / 3)


class TestNearest:
    def test_examples(self):
        assert geo.nearest_boundary_point(DISC, 0.3) == pytest.approx(0.6)
        assert geo.nearest_boundary_point(SQUARE, 0.5 + 0.1j) == pytest.approx(0.55 + 0.1j)
        assert geo.nearest_boundary_point(SQUARE, 0.55 + 0.2j) == pytest.approx(0.55 + 0.2j)

    @pytest.mark.parametrize("domain", [DISC, SQUARE], ids=["disc", "square"])
    def test_on_boundary(self, domain):
        z = interior_points(domain, 300, seed=3)
        p = geo.nearest_boundary_point(domain, z)
        assert np.allclose(np.abs(p - z), geo.distance_to_boundary(domain, z), atol=1e-12)
        if domain is DISC:
            assert np.allclose(np.abs(p), 0.6, atol=1e-12)
        else:
            assert np.allclose(np.maximum(np.abs(p.real), np.abs(p.imag)), 0.55, atol=1e-12)


class TestContains:
    def test_examples(self):
        assert geo.contains(DISC, 0j)
        assert not geo.contains(DISC, 0.7)
        assert not geo.contains(SQUARE, 0.55 + 0.55j)

    def test_boundary_excluded(self):
        assert not geo.contains(SQUARE, 0.55)
        assert not geo.contains(DISC, 0.6j)


class TestBoundaryParam:
    def test_polygon_arclength_roundtrip(self):
        s = np.linspace(0, geo.boundary_length(SQUARE), 37, endpoint=False)
        p = geo.boundary_point(SQUARE, s)
        assert np.allclose(geo.boundary_arclength(SQUARE, p), s, atol=1e-12)

    def test_disc_arclength_roundtrip(self):
        s = np.linspace(0, geo.boundary_length(DISC), 29, endpoint=False)
        assert np.allclose(geo.boundary_arclength(DISC, geo.boundary_point(DISC, s)), s, atol=1e-12)

    def test_polygon_is_ccw(self):
        cw = DomainSpec.polygon([0.55 + 0.55j, 0.55 - 0.55j, -0.55 - 0.55j, -0.55 + 0.55j])
        assert geo._signed_area(cw.shape.array) > 0


class TestValidate:
    def test_disc_ok(self):
        assert geo.validate_domain(DISC).ok

    def test_small_disc(self):
        report = geo.validate_domain(DomainSpec.disc(radius=0.5))
        assert not report.ok

    def test_big_square(self):
        report = geo.validate_domain(geo.square(0.7))
        assert not report.ok
        assert any("0.8" in v or "4/5" in v for v in report.violations)

    def test_octagon_ok(self):
        v = 0.75 * np.exp(2j * math.pi * (np.arange(8) + 0.5) / 8)
        assert geo.validate_domain(DomainSpec.polygon(v)).ok

    def test_self_intersecting(self):
        report = geo.validate_domain(DomainSpec.polygon([0.7 + 0.1j, -0.7 - 0.1j, -0.7 + 0.1j, 0.7 - 0.1j]))
        assert not report.ok
        assert "self-intersecting" in str(report)


class TestPunctured:
    def test_default_inner_radius(self):
        pd = PuncturedDomain(DISC, 0j, 3)
        assert pd.inner_radius == pytest.approx(math.exp(-6))
        assert pd.annulus_outer == pytest.approx(1 / 16)

    def test_too_close(self):
        with pytest.raises(DomainError):
            PuncturedDomain(DISC, 0.55, 4)

    def test_distance_is_min(self):
        pd = PuncturedDomain(DISC, 0j, 3)
        assert pd.distance(0.1) == pytest.approx(0.1 - math.exp(-6))
        assert pd.distance(0.5) == pytest.approx(0.1)
        assert not pd.contains(0.5 * math.exp(-6))
