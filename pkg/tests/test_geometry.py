import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from hullcap.geometry import (Ball, ConstantProfile, Empty, GaussianProfile,
                              HalfDisk, Hull, HullUnion, LorentzianProfile,
                              PiecewiseLinearProfile, Ridge, Scaled, Shifted,
                              Slit, SlitDomain, VerticalSlit, analyze_masks,
                              contains, dist_to_hull, hull_from_json,
                              hull_to_json, slit_domain_from_json, sup_im,
                              validate_hull)

CATALOG = [
    VerticalSlit(0.0, 1.0),
    HalfDisk(0.0, 1.0),
    Ridge(LorentzianProfile(1.0, 0.0, 1.0)),
    Ridge(GaussianProfile(0.7, 0.3, 1.2)),
    Ridge(PiecewiseLinearProfile(((-2, 0), (-1, 1.2), (0, 0.3), (1, 0.9), (2, 0)))),
    Ridge(ConstantProfile(1.0)),
    HullUnion((VerticalSlit(-1.0, 1.0), HalfDisk(1.5, 0.5))),
    Shifted(VerticalSlit(0.0, 1.0), 3.0),
    Scaled(HalfDisk(0.0, 1.0), 2.0),
]


class TestContains:
    def test_slit_point_on_slit(self):
        assert contains(VerticalSlit(0.0, 1.0), 0.5j)

    def test_halfdisk_outside_radius(self):
        assert not contains(HalfDisk(0.0, 1.0), 2j)

    def test_ridge_below_profile(self):
        # f(0.5) = 1 / (1 + 0.25) = 0.8 >= 0.5
        assert contains(Ridge(LorentzianProfile(1.0, 0.0, 1.0)), 0.5 + 0.5j)

    def test_empty_contains_nothing(self):
        assert not contains(Empty(), 1j)


class TestDist:
    def test_slit_horizontal_offset(self):
        assert dist_to_hull(VerticalSlit(0.0, 1.0), 1 + 0.5j) == pytest.approx(1.0)

    def test_halfdisk_radial(self):
        assert dist_to_hull(HalfDisk(0.0, 1.0), 3j) == pytest.approx(2.0)

    def test_ridge_apex(self):
        d = dist_to_hull(Ridge(LorentzianProfile(1.0, 0.0, 1.0)), 2j)
        assert d == pytest.approx(1.0, rel=1e-8)

    def test_ridge_matches_bracketed_minimization(self, rng):
        for hull in (Ridge(LorentzianProfile(1.0, 0.0, 1.0)),
                     Ridge(GaussianProfile(0.7, 0.3, 1.2))):
            prof = hull.profile
            for _ in range(60):
                z = complex(rng.uniform(-4, 4), rng.uniform(0.05, 5))
                if bool(hull.contains(z)):
                    assert float(hull.dist(z)) == 0.0
                    continue
                d = float(hull.dist(z))
                dref = _scan_graph_distance(prof, z)
                assert d == pytest.approx(dref, rel=5e-8)
                assert d <= dref + 1e-12

    def test_consistency_with_contains(self, rng):
        for hull in CATALOG:
            z = rng.uniform(-4, 4, 2000) + 1j * rng.uniform(1e-3, 4, 2000)
            d = hull.dist(z)
            inside = hull.contains(z)
            assert np.all(d[inside] == 0.0)
            assert not np.any(inside[d > 1e-12])

    def test_lipschitz_in_z(self, rng):
        for hull in CATALOG:
            z1 = rng.uniform(-5, 5, 10_000) + 1j * rng.uniform(1e-3, 5, 10_000)
            z2 = z1 + (rng.uniform(-1, 1, 10_000)
                       + 1j * rng.uniform(-0.5, 0.5, 10_000))
            z2 = z2.real + 1j * np.abs(z2.imag)
            lhs = np.abs(hull.dist(z1) - hull.dist(z2))
            assert np.all(lhs <= np.abs(z1 - z2) * (1 + 1e-9) + 1e-12)

    def test_wrappers_commute_with_distance(self, rng):
        base = HalfDisk(0.0, 1.0)
        z = rng.uniform(-5, 5, 500) + 1j * rng.uniform(1e-3, 5, 500)
        np.testing.assert_allclose(Shifted(base, 2.5).dist(z), base.dist(z - 2.5),
                                   rtol=1e-12)
        np.testing.assert_allclose(Scaled(base, 2.0).dist(z),
                                   2.0 * base.dist(z / 2.0), rtol=1e-12)


def _scan_graph_distance(prof, z):
    d0 = z.imag - float(prof.height_at(z.real))
    lo, hi = z.real - d0, z.real + d0
    ts = np.linspace(lo, hi, 40001)
    vals = np.hypot(z.real - ts, z.imag - np.asarray(prof.height_at(ts)))
    i = int(np.argmin(vals))
    g = lambda t: float(np.hypot(z.real - t, z.imag - float(prof.height_at(t))))
    res = minimize_scalar(g, bounds=(ts[max(0, i - 2)], ts[min(len(ts) - 1, i + 2)]),
                          method="bounded", options={"xatol": 1e-14})
    return min(res.fun, float(vals[i]))


class TestSupIm:
    def test_slit(self):
        assert sup_im(VerticalSlit(0.0, 1.0)) == 1.0

    def test_scaled_halfdisk(self):
        assert sup_im(Scaled(HalfDisk(0.0, 1.0), 2.0)) == 2.0

    def test_ridge_profile_max(self):
        assert sup_im(Ridge(LorentzianProfile(0.5, 0.0, 1.0))) == 0.5

    @given(st.floats(0.1, 4.0))
    @settings(max_examples=20, deadline=None)
    def test_scaling_law(self, r):
        for hull in (VerticalSlit(0.0, 1.0), HalfDisk(0.5, 0.7)):
            assert sup_im(Scaled(hull, r)) == pytest.approx(r * sup_im(hull))


class TestValidateHull:
    def test_slit_passes(self):
        assert validate_hull(VerticalSlit(0.0, 1.0), 0.01).passed

    def test_halfdisk_passes(self):
        assert validate_hull(HalfDisk(0.0, 1.0), 0.02).passed

    def test_two_separate_slits_flagged(self):
        diag = validate_hull(HullUnion((VerticalSlit(-1.0, 1.0),
                                        VerticalSlit(1.0, 1.0))), 0.02)
        assert not diag.passed
        assert diag.reason == "complement not simply connected"
        assert diag.witness is not None

    def test_overlapping_union_passes(self):
        hull = HullUnion((VerticalSlit(0.0, 1.0), HalfDisk(0.0, 0.5)))
        assert validate_hull(hull, 0.02).passed

    def test_constant_strip_passes_with_window_note(self):
        diag = validate_hull(Ridge(ConstantProfile(1.0)), 0.05)
        assert diag.passed
        assert any("window" in n for n in diag.notes)

    def test_floating_blob_mask_flagged(self):
        # the catalog cannot produce a floating hull, so exercise the
        # mask analyzer directly
        mask = np.zeros((20, 20), dtype=bool)
        mask[8:12, 8:12] = True
        ok, reason, witness = analyze_masks(mask)
        assert not ok and reason == "complement not simply connected"

    def test_sealed_pocket_mask_flagged(self):
        mask = np.zeros((20, 20), dtype=bool)
        mask[0:10, 5] = True
        mask[0:10, 10] = True
        mask[10, 5:11] = True
        ok, reason, witness = analyze_masks(mask)
        assert not ok and "disconnected" in reason
        assert witness is not None


class TestSerialization:
    def test_hull_roundtrip(self):
        for hull in CATALOG:
            blob = json.dumps(hull_to_json(hull))
            assert hull_from_json(json.loads(blob)) == hull

    def test_slit_domain_roundtrip(self):
        dom = SlitDomain((Slit(1.0, -1.0, 1.0), Slit(2.0, 3.0, 4.0)))
        assert slit_domain_from_json(json.loads(json.dumps(dom.to_json()))) == dom

    def test_documented_example_form(self):
        blob = {"kind": "vertical_slit", "base": 0.0, "height": 1.0}
        assert hull_from_json(blob) == VerticalSlit(0.0, 1.0)


class TestSlitDomain:
    def test_rejects_overlapping_slits(self):
        with pytest.raises(ValueError):
            SlitDomain((Slit(1.0, 0.0, 2.0), Slit(1.0, 1.0, 3.0)))

    def test_rejects_slit_on_axis(self):
        with pytest.raises(ValueError):
            Slit(0.0, 0.0, 1.0)

    def test_min_gap(self):
        dom = SlitDomain((Slit(1.0, 0.0, 1.0), Slit(2.0, 0.0, 1.0)))
        assert dom.min_gap() == pytest.approx(1.0)


class TestBall:
    def test_requires_positive_radius(self):
        with pytest.raises(ValueError):
            Ball(0j, 0.0)


class TestBoundaryPoints:
    def test_samples_lie_on_hull(self, rng):
        for hull in CATALOG:
            pts = hull.boundary_points(200, rng)
            if pts.size == 0:
                continue
            d = hull.dist(pts)
            assert np.all(d <= 1e-7)
