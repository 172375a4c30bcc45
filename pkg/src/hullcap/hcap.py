"""Half-plane capacity estimators for hulls in the upper half-plane.

The primary estimator integrates the hull-hit height expectation along a
horizontal line above the hull:

    hcap(F) = (1/pi) * integral over xi of E_{xi + i eta}[Im Z at hull hit]

for any eta above the hull, which needs no limit extrapolation.  The
vertical estimator y * E_{iy}[Im Z at hull hit] is kept as an
independent cross-check of the same quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from hullcap.errors import PreconditionError
from hullcap.geometry import (Empty, HalfDisk, Hull, Scaled, Shifted,
                              VerticalSlit)
from hullcap.sampler import (Estimate, StreamId, WalkConfig,
                             expected_im_at_hit, _stream_tuple)

TAIL_FLAG_THRESHOLD = 0.10


def default_eta(hull: Hull) -> float:
    """Integration height balancing integrand mass against walk length."""
    m = hull.sup_im
    return m + max(1.0, m)


@dataclass(frozen=True)
class HcapJob:
    """Budget and placement for one capacity integral."""

    hull: Hull
    eta: float
    L: float = 30.0
    xi_nodes: int = 64
    n_per_node: int = 4000
    cfg: WalkConfig = field(default_factory=WalkConfig)
    center: float = 0.0

    def __post_init__(self):
        if self.L <= 0:
            raise PreconditionError("L must be positive")
        if self.xi_nodes < 16:
            raise PreconditionError("xi_nodes must be at least 16")
        if self.n_per_node < 1:
            raise PreconditionError("n_per_node must be positive")


def make_job(hull: Hull, cfg: WalkConfig = WalkConfig(), eta: Optional[float] = None,
             L: Optional[float] = None, xi_nodes: int = 64, n_per_node: int = 4000,
             center: Optional[float] = None) -> HcapJob:
    """Job with the default height and a window centered on the hull.

    The default window half-width scales with the hull so that node
    spacing resolves the integrand; at the defaults the deterministic
    quadrature-plus-tail error is a few 1e-3 relative for catalog
    shapes, well inside typical statistical error.
    """
    if center is None:
        ext = hull.extent(0.0)
        center = 0.0 if ext is None else 0.5 * (ext[0] + ext[1])
    if L is None:
        L = 30.0 * max(1.0, hull.sup_im)
    return HcapJob(hull=hull, eta=default_eta(hull) if eta is None else eta,
                   L=L, xi_nodes=xi_nodes, n_per_node=n_per_node, cfg=cfg,
                   center=center)


@dataclass(frozen=True)
class HcapResult:
    """Capacity estimate with its quadrature breakdown."""

    estimate: Estimate
    quadrature: Estimate
    tail_correction: float
    eta: float
    L: float
    center: float
    nodes: Tuple[float, ...]
    node_estimates: Tuple[Estimate, ...]
    flags: Tuple[str, ...]


def hcap_exact(h: Hull):
    """Closed-form capacity where one exists, else None.

    Vertical slit of height h has capacity h^2/2 (mapping-out function
    sqrt((z-x0)^2 + h^2)); half-disk of radius r has r^2 (mapping-out
    z + r^2/(z-c)).  Shifts keep capacity, homothety by r scales it by
    r^2 (Brownian scaling).
    """
    if isinstance(h, Empty):
        return 0.0
    if isinstance(h, VerticalSlit):
        return 0.5 * h.height ** 2
    if isinstance(h, HalfDisk):
        return h.radius ** 2
    if isinstance(h, Shifted):
        return hcap_exact(h.inner)
    if isinstance(h, Scaled):
        inner = hcap_exact(h.inner)
        return None if inner is None else h.factor ** 2 * inner
    return None


def _trapezoid_weights(nodes: int, spacing: float) -> np.ndarray:
    w = np.full(nodes, spacing)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def tail_correction(running: float, eta: float, L: float) -> float:
    """Mass of the integral beyond the window under the far-field model
    E(xi) ~ hcap * eta / (xi^2 + eta^2), i.e. (2/pi) * hcap * eta_eff / L
    with eta_eff = L * arctan(eta / L)."""
    return (2.0 / math.pi) * running * math.atan2(eta, L)


def hcap_integral(job: HcapJob, stream: StreamId = (1,),
                  workers: Optional[int] = None) -> HcapResult:
    """Estimate the capacity of ``job.hull`` by horizontal-line quadrature.

    Composite trapezoid over the window [center - L, center + L] at
    height eta, one independent walk budget per node, followed by one
    fixed-point application of the far-field tail model to the running
    estimate.  Standard errors propagate through the quadrature weights;
    the tail magnitude is reported separately and flagged when it
    exceeds 10% of the estimate.
    """
    hull = job.hull
    if hull.is_empty():
        zero = Estimate(mean=0.0, stderr=0.0, n=0,
                        bias_note="empty hull: capacity is exactly zero")
        return HcapResult(estimate=zero, quadrature=zero, tail_correction=0.0,
                          eta=job.eta, L=job.L, center=job.center, nodes=(),
                          node_estimates=(), flags=())
    top = hull.sup_im
    if job.eta <= top:
        raise PreconditionError(
            f"integration height eta={job.eta:g} must exceed the hull's "
            f"maximal imaginary part Im F = {top:g}")
    base = _stream_tuple(stream)
    xs = np.linspace(job.center - job.L, job.center + job.L, job.xi_nodes)
    w = _trapezoid_weights(job.xi_nodes, xs[1] - xs[0]) / math.pi
    node_estimates: List[Estimate] = []
    for i, xi in enumerate(xs):
        e = expected_im_at_hit(complex(xi, job.eta), hull, None,
                               n=job.n_per_node, cfg=job.cfg,
                               stream=base + (i,), workers=workers)
        node_estimates.append(e)
    quad_mean = float(sum(wi * e.mean for wi, e in zip(w, node_estimates)))
    quad_var = float(sum((wi * e.stderr) ** 2 for wi, e in zip(w, node_estimates)))
    trunc = max(e.truncated_fraction for e in node_estimates)
    quad = Estimate(mean=quad_mean, stderr=math.sqrt(quad_var),
                    n=job.xi_nodes * job.n_per_node, truncated_fraction=trunc,
                    bias_note=f"trapezoid over {job.xi_nodes} nodes, eta={job.eta:g}")
    tail = tail_correction(quad_mean, job.eta, job.L)
    scale = 1.0 + (2.0 / math.pi) * math.atan2(job.eta, job.L)
    flags: List[str] = []
    total_mean = quad_mean + tail
    if abs(tail) > TAIL_FLAG_THRESHOLD * max(abs(total_mean), 1e-300):
        flags.append("increase L: tail correction above 10% of the estimate")
    if trunc > 0:
        flags.append(f"truncated fraction {trunc:.2e}")
    total = Estimate(mean=total_mean, stderr=quad.stderr * scale,
                     n=quad.n, truncated_fraction=trunc,
                     bias_note=quad.bias_note + f"; tail model adds {tail:.3g}")
    return HcapResult(estimate=total, quadrature=quad, tail_correction=tail,
                      eta=job.eta, L=job.L, center=job.center,
                      nodes=tuple(float(v) for v in xs),
                      node_estimates=tuple(node_estimates), flags=tuple(flags))


def hcap_vertical(hull: Hull, y_list: Sequence[float], n: int,
                  cfg: WalkConfig = WalkConfig(), stream: StreamId = (2,),
                  workers: Optional[int] = None) -> List[Estimate]:
    """Estimates of y * E_{iy}[Im Z at hull hit] for each height.

    Converges to the capacity as y grows (bias O(1/y) for bounded
    hulls); used as a cross-check of ``hcap_integral`` and as the
    divergence witness for envelopes of infinite capacity.
    """
    top = hull.sup_im
    base = _stream_tuple(stream)
    out: List[Estimate] = []
    for i, y in enumerate(y_list):
        if y <= top:
            raise PreconditionError(f"height y={y:g} must exceed Im F = {top:g}")
        e = expected_im_at_hit(complex(0.0, y), hull, None, n=n, cfg=cfg,
                               stream=base + (i,), workers=workers)
        out.append(e.scaled(y))
    return out


@dataclass(frozen=True)
class ProbeComparison:
    z: complex
    small: Estimate
    big: Estimate
    ok: bool


@dataclass(frozen=True)
class MonotoneReport:
    """Evidence that capacity grows with the hull."""

    containment_checked: int
    containment_ok: bool
    probes: Tuple[ProbeComparison, ...]
    pointwise_ok: bool
    cap_small: HcapResult
    cap_big: HcapResult
    ordering_ok: bool
    oracle_gap: Optional[float]
    separation_required: bool
    separation_ok: Optional[bool]


def check_monotone(F: Hull, F_big: Hull, probes: Sequence[complex], n: int,
                   cfg: WalkConfig = WalkConfig(), stream: StreamId = (3,),
                   n_boundary: int = 512,
                   workers: Optional[int] = None) -> MonotoneReport:
    """Compare hull-hit expectations and capacities of nested hulls.

    Containment F inside F_big is checked by sampling F's boundary
    description; the pointwise ordering is verified at every probe
    within three combined standard errors, and capacity ordering with
    confidence intervals.  When both capacities have closed forms and
    the analytic gap exceeds six combined standard errors, strict
    separation of the intervals is asserted as well.
    """
    base = _stream_tuple(stream)
    rng = np.random.default_rng(np.random.SeedSequence(
        entropy=cfg.seed, spawn_key=base + (0,)))
    pts = F.boundary_points(n_boundary, rng)
    if pts.size:
        inside = F_big.contains(pts) | (F_big.dist(pts) <= 1e-12)
        containment_ok = bool(np.all(inside))
    else:
        containment_ok = True
    if not containment_ok:
        raise PreconditionError("F is not contained in F_big "
                                "(boundary sample escaped)")
    comparisons: List[ProbeComparison] = []
    for i, z in enumerate(probes):
        e_small = expected_im_at_hit(z, F, None, n=n, cfg=cfg,
                                     stream=base + (1, i), workers=workers)
        e_big = expected_im_at_hit(z, F_big, None, n=n, cfg=cfg,
                                   stream=base + (2, i), workers=workers)
        se = math.hypot(e_small.stderr, e_big.stderr)
        ok = e_small.mean <= e_big.mean + 3.0 * se
        comparisons.append(ProbeComparison(z=z, small=e_small, big=e_big, ok=ok))
    n_node = max(200, n // 16)
    cap_small = hcap_integral(make_job(F, cfg, n_per_node=n_node),
                              stream=base + (3,), workers=workers)
    cap_big = hcap_integral(make_job(F_big, cfg, n_per_node=n_node),
                            stream=base + (4,), workers=workers)
    se_cap = math.hypot(cap_small.estimate.stderr, cap_big.estimate.stderr)
    ordering_ok = cap_small.estimate.mean <= cap_big.estimate.mean + 3.0 * se_cap
    a_small, a_big = hcap_exact(F), hcap_exact(F_big)
    oracle_gap = None if (a_small is None or a_big is None) else a_big - a_small
    separation_required = oracle_gap is not None and oracle_gap > 6.0 * se_cap
    separation_ok = None
    if separation_required:
        separation_ok = (cap_small.estimate.mean + 3.0 * cap_small.estimate.stderr
                         < cap_big.estimate.mean - 3.0 * cap_big.estimate.stderr)
    return MonotoneReport(
        containment_checked=int(pts.size), containment_ok=containment_ok,
        probes=tuple(comparisons),
        pointwise_ok=all(c.ok for c in comparisons),
        cap_small=cap_small, cap_big=cap_big, ordering_ok=ordering_ok,
        oracle_gap=oracle_gap, separation_required=separation_required,
        separation_ok=separation_ok)
