import math

import mpmath as mp
import numpy as np
import pytest

from hullcap.errors import PreconditionError
from hullcap.geometry import (Empty, HalfDisk, LorentzianProfile, Ridge,
                              Scaled, Shifted, VerticalSlit)
from hullcap.hcap import (HcapJob, check_monotone, default_eta, hcap_exact,
                          hcap_integral, hcap_vertical, make_job)
from hullcap.sampler import WalkConfig


class TestHcapExact:
    def test_values(self):
        assert hcap_exact(Empty()) == 0.0
        assert hcap_exact(VerticalSlit(0.0, 1.0)) == pytest.approx(0.5)
        assert hcap_exact(VerticalSlit(3.0, 0.8)) == pytest.approx(0.32)
        assert hcap_exact(HalfDisk(0.0, 1.0)) == pytest.approx(1.0)
        assert hcap_exact(Shifted(HalfDisk(0.0, 1.0), 7.0)) == pytest.approx(1.0)
        assert hcap_exact(Scaled(VerticalSlit(0.0, 1.0), 2.0)) == pytest.approx(2.0)
        assert hcap_exact(Ridge(LorentzianProfile(1.0, 0.0, 1.0))) is None

    def test_slit_series_coefficient_numerically(self):
        """The mapping-out function sqrt((z-x0)^2 + h^2) has 1/z
        coefficient h^2/2; verified to 1e-10 by high-precision expansion."""
        mp.mp.dps = 40
        for x0, h in ((0.0, 1.0), (2.0, 0.8)):
            z = mp.mpc(0, 1e8)
            g = mp.sqrt((z - x0) ** 2 + h ** 2)
            if mp.im(g) < 0:  # branch mapping onto the upper half-plane
                g = -g
            coeff = (g - (z - x0)) * (z - x0)
            assert abs(coeff - h * h / 2) < 1e-10

    def test_halfdisk_series_coefficient_numerically(self):
        """z + r^2/(z - c) maps the half-disk arc to the real axis and has
        1/z coefficient r^2."""
        mp.mp.dps = 40
        c, r = 0.5, 1.3
        z = mp.mpc(0, 1e8)
        coeff = (r * r / (z - c)) * (z - c)
        assert abs(coeff - r * r) < 1e-10
        # at finite z the 1/z coefficient appears at order x0/|z|
        assert abs((r * r / (z - c)) * z - r * r) < 1e-7
        for theta in (0.3, 1.1, 2.8):
            w = c + r * mp.exp(1j * theta)
            assert abs(mp.im(w + r * r / (w - c))) < 1e-15


class TestHcapIntegral:
    def test_slit_oracle(self, cfg):
        res = hcap_integral(make_job(VerticalSlit(0.0, 1.0), cfg,
                                     xi_nodes=48, n_per_node=1500),
                            stream=(120,))
        assert abs(res.estimate.mean - 0.5) <= 3 * res.estimate.stderr
        assert res.estimate.valid

    def test_empty_is_exact_zero(self, cfg):
        res = hcap_integral(make_job(Empty(), cfg))
        assert res.estimate.mean == 0.0 and res.estimate.stderr == 0.0

    def test_scale_invariance(self, cfg):
        """Brownian scaling: capacity of the doubled hull is 4x."""
        base = hcap_integral(make_job(VerticalSlit(0.0, 1.0), cfg,
                                      xi_nodes=48, n_per_node=1500),
                             stream=(121,))
        scaled = hcap_integral(make_job(Scaled(VerticalSlit(0.0, 1.0), 2.0),
                                        cfg, xi_nodes=48, n_per_node=1500),
                               stream=(122,))
        ratio = scaled.estimate.mean / base.estimate.mean
        rel = math.hypot(scaled.estimate.stderr / scaled.estimate.mean,
                         base.estimate.stderr / base.estimate.mean)
        assert abs(ratio - 4.0) <= 4.0 * 3 * rel

    def test_translation_invariance(self, cfg):
        for i, t in enumerate((-5.0, 7.0)):
            here = hcap_integral(make_job(VerticalSlit(0.0, 1.0), cfg,
                                          xi_nodes=48, n_per_node=1000),
                                 stream=(123, i))
            there = hcap_integral(make_job(Shifted(VerticalSlit(0.0, 1.0), t),
                                           cfg, xi_nodes=48, n_per_node=1000),
                                  stream=(124, i))
            se = math.hypot(here.estimate.stderr, there.estimate.stderr)
            assert abs(here.estimate.mean - there.estimate.mean) <= 3 * se

    def test_eta_below_hull_rejected(self, cfg):
        with pytest.raises(PreconditionError):
            hcap_integral(HcapJob(hull=VerticalSlit(0.0, 1.0), eta=0.5,
                                  cfg=cfg))

    def test_small_window_is_flagged(self, cfg):
        res = hcap_integral(make_job(VerticalSlit(0.0, 1.0), cfg, L=3.0,
                                     xi_nodes=16, n_per_node=200),
                            stream=(125,))
        assert any("increase L" in f for f in res.flags)

    def test_doubling_window_consistent(self, cfg):
        a = hcap_integral(make_job(VerticalSlit(0.0, 1.0), cfg, L=30.0,
                                   xi_nodes=48, n_per_node=1000),
                          stream=(126,))
        b = hcap_integral(make_job(VerticalSlit(0.0, 1.0), cfg, L=60.0,
                                   xi_nodes=96, n_per_node=1000),
                          stream=(127,))
        se = math.hypot(a.estimate.stderr, b.estimate.stderr)
        assert abs(a.estimate.mean - b.estimate.mean) <= 3 * se

    def test_nested_slits_ordered(self, cfg):
        """Capacity estimates respect hull inclusion along a slit family."""
        results = []
        for i, h in enumerate((0.25, 0.5, 0.75, 1.0)):
            results.append(hcap_integral(
                make_job(VerticalSlit(0.0, h), cfg, xi_nodes=32,
                         n_per_node=800), stream=(128, i)))
        for a, b in zip(results, results[1:]):
            se = math.hypot(a.estimate.stderr, b.estimate.stderr)
            assert a.estimate.mean <= b.estimate.mean + 3 * se


class TestHcapVertical:
    def test_slit_at_height_100(self, cfg):
        est = hcap_vertical(VerticalSlit(0.0, 1.0), [100.0], 40_000, cfg,
                            stream=(129,))[0]
        assert abs(est.mean - 0.5) <= 0.5 / 100.0 + 3 * est.stderr

    def test_empty_is_zero(self, cfg):
        for est in hcap_vertical(Empty(), [10.0, 20.0], 100, cfg):
            assert est.mean == 0.0

    def test_ridge_cross_estimator_consistency(self, cfg):
        """No closed form for the ridge: the vertical and line estimators
        must agree with each other."""
        hull = Ridge(LorentzianProfile(0.3, 0.0, 1.0))
        integral = hcap_integral(make_job(hull, cfg, xi_nodes=32,
                                          n_per_node=600), stream=(130,))
        for i, y in enumerate((20.0, 50.0)):
            v = hcap_vertical(hull, [y], 30_000, cfg, stream=(131, i))[0]
            se = math.hypot(integral.estimate.stderr, v.stderr)
            bias_budget = integral.estimate.mean / y
            assert abs(v.mean - integral.estimate.mean) <= 3 * se + bias_budget

    def test_height_below_hull_rejected(self, cfg):
        with pytest.raises(PreconditionError):
            hcap_vertical(VerticalSlit(0.0, 1.0), [0.5], 10, cfg)


class TestCheckMonotone:
    def test_nested_slits_separate(self, cfg):
        probes = [complex(x, 1.6) for x in (-1.0, 0.0, 1.5)]
        rep = check_monotone(VerticalSlit(0.0, 0.8), VerticalSlit(0.0, 1.0),
                             probes, n=4000, cfg=cfg, stream=(132,))
        assert rep.containment_ok and rep.pointwise_ok and rep.ordering_ok
        assert rep.oracle_gap == pytest.approx(0.18)
        assert rep.separation_required
        assert rep.separation_ok

    def test_equal_hulls_trivial_order(self, cfg):
        hull = HalfDisk(0.0, 0.5)
        rep = check_monotone(hull, hull, [2j], n=2000, cfg=cfg, stream=(133,))
        assert rep.ordering_ok
        assert not rep.separation_required

    def test_halfdisk_pair(self, cfg):
        rep = check_monotone(HalfDisk(0.0, 0.5), HalfDisk(0.0, 1.0),
                             [2.5j, 2 + 2j], n=3000, cfg=cfg, stream=(134,))
        assert rep.ordering_ok and rep.pointwise_ok
        assert rep.oracle_gap == pytest.approx(0.75)

    def test_containment_violation_rejected(self, cfg):
        with pytest.raises(PreconditionError):
            check_monotone(VerticalSlit(0.0, 1.0), VerticalSlit(0.0, 0.8),
                           [2j], n=100, cfg=cfg, stream=(135,))


def test_default_eta_balances_height():
    assert default_eta(VerticalSlit(0.0, 1.0)) == 2.0
    assert default_eta(VerticalSlit(0.0, 3.0)) == 6.0
    assert default_eta(Empty()) == 1.0
