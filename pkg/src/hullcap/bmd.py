"""Capacity relative to a parallel slit half-plane via darned Brownian motion.

Darning collapses each horizontal slit to a single state that the
diffusion leaves through an excursion; hitting expectations for the
darned process reduce to plain absorbed Brownian motion through a small
Markov chain on the slit states.  The reduction implemented here:

* ``sample_entrance_law`` draws points where the process, restarted at
  a darned slit, first crosses a surrounding rectangle contour;
* ``estimate_chain`` continues those walks to the next slit or to
  absorption, giving the chain's transition matrix and the entrance-law
  integrals of the slit-avoiding height expectation;
* ``expected_im_with_darning`` assembles

      V*(z) = V(z) + sum_j phi_j(z) * sum_k M_jk I_k / (1 - p_kk)

  where V is the slit-avoiding hull-hit height expectation, phi_j the
  probability of reaching slit j first, p the one-step chain matrix,
  M = (I - Q)^(-1) its conditioned resolvent, and I_k the entrance-law
  integral of V over the contour of slit k;
* ``bmd_hcap`` integrates V* along a horizontal line, mirroring the
  plain capacity integral.

Entrance-law sampling has no exact finite recipe: walks start uniformly
by arclength on a contour offset ``delta`` from the slit and are
rejected if they return to the slit before reaching the surrounding
rectangle.  The bias is O(delta) and is monitored by the delta-halving
and margin-robustness checks rather than assumed away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from hullcap.errors import NumericalFailure, PreconditionError
from hullcap.geometry import Hull, Slit, SlitDomain
from hullcap.hcap import (HcapJob, HcapResult, hcap_integral, make_job,
                          default_eta, tail_correction, TAIL_FLAG_THRESHOLD)
from hullcap.sampler import (DomainSpec, Estimate, StreamId, TAG_CURVE,
                             TAG_HULL, TAG_REAL, TAG_SLIT_BASE, TAG_TRUNCATED,
                             WalkConfig, combine_linear, estimate_from_batch,
                             expected_im_at_hit, run_walks, tag_fraction,
                             _stream_tuple, chunk_rng, MODE_BEFORE_K)

CONDITION_LIMIT = 1e8
MIN_ACCEPT_RATE = 1e-4


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle used as a contour around one slit."""

    x0: float
    x1: float
    y0: float
    y1: float

    def inner_dist(self, z: np.ndarray) -> np.ndarray:
        """Distance to the boundary for points inside the rectangle."""
        return np.minimum.reduce([z.real - self.x0, self.x1 - z.real,
                                  z.imag - self.y0, self.y1 - z.imag])

    @property
    def perimeter(self) -> float:
        return 2.0 * ((self.x1 - self.x0) + (self.y1 - self.y0))

    def at_arclength(self, u: np.ndarray) -> np.ndarray:
        """Point at arclength u from the lower-left corner, counterclockwise."""
        w = self.x1 - self.x0
        h = self.y1 - self.y0
        u = np.mod(u, self.perimeter)
        out = np.empty(u.shape, dtype=np.complex128)
        m = u < w
        out[m] = self.x0 + u[m] + 1j * self.y0
        m2 = (~m) & (u < w + h)
        out[m2] = self.x1 + 1j * (self.y0 + (u[m2] - w))
        m3 = (~m) & (~m2) & (u < 2 * w + h)
        out[m3] = self.x1 - (u[m3] - w - h) + 1j * self.y1
        m4 = (~m) & (~m2) & (~m3)
        out[m4] = self.x0 + 1j * (self.y1 - (u[m4] - 2 * w - h))
        return out


def slit_box(slit: Slit, margin: float) -> Rectangle:
    return Rectangle(slit.x_lo - margin, slit.x_hi + margin,
                     slit.y - margin, slit.y + margin)


def _min_hull_dist_on_slit(hull: Hull, slit: Slit, samples: int = 1024) -> float:
    pts = slit.sample_points(samples)
    return float(np.min(hull.dist(pts)))


@dataclass(frozen=True)
class ChainSetup:
    """Geometry of the darning chain: slit contours and entrance offset.

    Each contour is the rectangle at ``margins[j]`` around slit j; the
    margin must stay below half the distance from the slit to every
    other slit, to the envelope hull, and to the real axis, so that the
    contour encloses only its own slit inside the domain.  ``delta`` is
    the offset of the entrance contour and must stay below a quarter of
    the smallest margin.
    """

    slits: SlitDomain
    envelope: Hull
    margins: Tuple[float, ...]
    delta: float

    def __post_init__(self):
        if len(self.margins) != len(self.slits):
            raise PreconditionError("one margin per slit required")
        for j, (slit, m) in enumerate(zip(self.slits.slits, self.margins)):
            if m <= 0:
                raise PreconditionError("margins must be positive")
            limit = self.clearance(j) / 2.0
            if m >= limit:
                raise PreconditionError(
                    f"margin {m:g} for slit {j} must stay below half the "
                    f"clearance {self.clearance(j):g}")
        if self.margins and (self.delta <= 0
                             or self.delta >= min(self.margins) / 4.0):
            raise PreconditionError("delta must lie in (0, min margin / 4)")

    def clearance(self, j: int) -> float:
        """Distance from slit j to everything its contour must avoid."""
        slit = self.slits.slits[j]
        gaps = [slit.y]
        for i, other in enumerate(self.slits.slits):
            if i != j:
                gaps.append(float(np.min(other.dist(slit.sample_points(256)))))
        if not self.envelope.is_empty():
            gaps.append(_min_hull_dist_on_slit(self.envelope, slit))
        return min(gaps)

    def contour(self, j: int) -> Rectangle:
        return slit_box(self.slits.slits[j], self.margins[j])

    def with_margins(self, factor: float) -> "ChainSetup":
        return replace(self, margins=tuple(m * factor for m in self.margins))

    def with_delta(self, delta: float) -> "ChainSetup":
        return replace(self, delta=delta)


def make_setup(slits: SlitDomain, envelope: Hull, margin_frac: float = 0.4,
               delta_frac: Optional[float] = None) -> ChainSetup:
    """Setup with margins at a fraction of each slit's clearance."""
    probe = ChainSetup.__new__(ChainSetup)
    object.__setattr__(probe, "slits", slits)
    object.__setattr__(probe, "envelope", envelope)
    margins = []
    for j in range(len(slits)):
        margins.append(margin_frac * ChainSetup.clearance(probe, j))
    delta = (min(margins) * (delta_frac if delta_frac is not None else 0.1)
             if margins else 0.0)
    return ChainSetup(slits=slits, envelope=envelope, margins=tuple(margins),
                      delta=delta)


@dataclass
class EntranceSample:
    """Accepted contour hits approximating one slit's entrance law."""

    points: np.ndarray
    attempts: int
    accepted: int

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / max(self.attempts, 1)


def sample_entrance_law(j: int, setup: ChainSetup, n: int,
                        cfg: WalkConfig = WalkConfig(),
                        stream: StreamId = (7,)) -> EntranceSample:
    """Draw n points on the contour of slit j under the approximate
    entrance law.

    Starts are uniform by arclength on the rectangle offset ``delta``
    from the slit; each walk runs in the annulus between the slit and
    the contour and is accepted where it reaches the contour, rejected
    if it returns to the slit's absorption shell first.  Acceptance
    already reweights starts by their escape probability; the remaining
    bias is O(delta).
    """
    slit = setup.slits.slits[j]
    box = setup.contour(j)
    inner = slit_box(slit, setup.delta)
    if setup.delta <= 4.0 * cfg.eps_absorb:
        raise NumericalFailure("delta too small relative to eps_absorb")
    pieces = [(TAG_SLIT_BASE, slit.dist), (TAG_CURVE, box.inner_dist)]
    base = _stream_tuple(stream)
    chunks = (n + cfg.chunk_size - 1) // cfg.chunk_size
    out: List[np.ndarray] = []
    attempts = 0
    accepted_total = 0
    for k in range(chunks):
        quota = min(cfg.chunk_size, n - k * cfg.chunk_size)
        rng = chunk_rng(cfg.seed, base + (j,), k)
        got: List[np.ndarray] = []
        have = 0
        local_attempts = 0
        while have < quota:
            propose = max(quota - have, 64) * 4
            u = rng.uniform(0.0, inner.perimeter, size=propose)
            starts = inner.at_arclength(u)
            pts, tags, _ = _walk_pieces_chunk(starts, pieces, cfg, rng)
            ok = tags == TAG_CURVE
            local_attempts += propose
            sel = pts[ok]
            got.append(sel[:quota - have])
            have += min(sel.size, quota - have)
            if (local_attempts > max(50_000, 20 * quota)
                    and have < MIN_ACCEPT_RATE * local_attempts):
                raise NumericalFailure(
                    "delta too small relative to eps_absorb "
                    f"(acceptance {have}/{local_attempts})")
        attempts += local_attempts
        accepted_total += quota
        out.append(np.concatenate(got))
    return EntranceSample(points=np.concatenate(out) if out else
                          np.zeros(0, np.complex128),
                          attempts=attempts, accepted=accepted_total)


def _walk_pieces_chunk(starts, pieces, cfg, rng):
    from hullcap.sampler import _walk_chunk
    return _walk_chunk(np.asarray(starts, dtype=np.complex128), pieces, cfg, rng)


@dataclass
class ChainEstimates:
    """Estimated darning chain for one hull and slit configuration.

    ``counts[j, 0]`` is the number of continuations from slit j absorbed
    at the hull or the real axis (the cemetery), ``counts[j, k]`` for
    k >= 1 the number reaching slit k-1 first; integer rows sum to the
    walk budget exactly.  ``p`` is the row-stochastic float matrix with
    the cemetery as state 0.
    """

    counts: np.ndarray
    p: np.ndarray
    q: np.ndarray
    m: np.ndarray
    condition_number: float
    nu_integrals: np.ndarray
    nu_integral_se: np.ndarray
    n_per_slit: int
    acceptance_rates: Tuple[float, ...]
    entrance_points: Tuple[np.ndarray, ...]
    phi_at: Dict[complex, Tuple[Estimate, ...]] = field(default_factory=dict)

    @property
    def n_slits(self) -> int:
        return self.q.shape[0]

    def spectral_radius(self, iterations: int = 200) -> float:
        """Largest eigenvalue modulus of Q by power iteration."""
        n = self.n_slits
        if n == 0:
            return 0.0
        v = np.full(n, 1.0 / math.sqrt(n))
        lam = 0.0
        for _ in range(iterations):
            w = self.q @ v
            norm = float(np.linalg.norm(w))
            if norm == 0.0:
                return 0.0
            lam = norm
            v = w / norm
        return lam

    def neumann_sum(self, terms: int = 50) -> np.ndarray:
        out = np.eye(self.n_slits)
        power = np.eye(self.n_slits)
        for _ in range(terms):
            power = power @ self.q
            out = out + power
        return out

    def correction_coefficients(self) -> Tuple[np.ndarray, np.ndarray]:
        """Coefficients c_j = sum_k M_jk I_k / (1 - p_kk) and their
        delta-method standard errors (I_k treated as the noisy input)."""
        n = self.n_slits
        if n == 0:
            return np.zeros(0), np.zeros(0)
        diag = np.array([self.p[j + 1, j + 1] for j in range(n)])
        w = self.nu_integrals / (1.0 - diag)
        w_se = self.nu_integral_se / (1.0 - diag)
        c = self.m @ w
        c_var = (self.m ** 2) @ (w_se ** 2)
        return c, np.sqrt(c_var)


def estimate_chain(setup: ChainSetup, F: Hull, n_per_slit: int,
                   cfg: WalkConfig = WalkConfig(), stream: StreamId = (8,),
                   workers: Optional[int] = None) -> ChainEstimates:
    """Estimate the darning chain by continuing entrance-law walks.

    From each slit, entrance points are continued as absorbed Brownian
    motion among the hull, the real axis, and all slits; the first piece
    reached gives the transition counts (exact row normalization for
    free), and hull hits accumulate the entrance-law integral of the
    slit-avoiding height expectation.
    """
    N = len(setup.slits)
    base = _stream_tuple(stream)
    counts = np.zeros((N, N + 1), dtype=np.int64)
    nu_int = np.zeros(N)
    nu_se = np.zeros(N)
    rates: List[float] = []
    entrance: List[np.ndarray] = []
    domain = DomainSpec(hull=F, slits=setup.slits)
    for j in range(N):
        sample = sample_entrance_law(j, setup, n_per_slit, cfg,
                                     stream=base + (0, j))
        rates.append(sample.acceptance_rate)
        entrance.append(sample.points)
        batch = run_walks(sample.points, n_per_slit, domain, cfg,
                          stream=base + (1, j), workers=workers)
        if batch.truncated_fraction > 0:
            raise NumericalFailure("chain continuation walks truncated")
        for k in range(N):
            counts[j, k + 1] = int(np.sum(batch.tags == TAG_SLIT_BASE + k))
        counts[j, 0] = n_per_slit - int(counts[j, 1:].sum())
        vals = np.where(batch.tags == TAG_HULL, batch.points.imag, 0.0)
        nu_int[j] = float(vals.mean())
        nu_se[j] = float(vals.std(ddof=1)) / math.sqrt(n_per_slit)
    p = np.zeros((N + 1, N + 1))
    p[0, 0] = 1.0
    if N:
        p[1:, :] = counts / float(n_per_slit)
    q = np.zeros((N, N))
    for j in range(N):
        pjj = p[j + 1, j + 1]
        if pjj >= 1.0:
            raise NumericalFailure("chain not substochastic enough; "
                                   "check geometry")
        for k in range(N):
            if k != j:
                q[j, k] = p[j + 1, k + 1] / (1.0 - pjj)
    if N:
        eye_minus_q = np.eye(N) - q
        cond = float(np.linalg.cond(eye_minus_q))
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise NumericalFailure("chain not substochastic enough; "
                                   "check geometry")
        m = np.linalg.inv(eye_minus_q)
    else:
        cond = 1.0
        m = np.zeros((0, 0))
    return ChainEstimates(counts=counts, p=p, q=q, m=m, condition_number=cond,
                          nu_integrals=nu_int, nu_integral_se=nu_se,
                          n_per_slit=n_per_slit,
                          acceptance_rates=tuple(rates),
                          entrance_points=tuple(entrance))


@dataclass(frozen=True)
class DarnedValue:
    """V*(z) with its ingredients."""

    estimate: Estimate
    plain: Estimate             # V(z), slit-avoiding
    phi: Tuple[Estimate, ...]   # slit-first probabilities
    correction: float


def expected_im_with_darning(z: complex, F: Hull, setup: ChainSetup,
                             chain: ChainEstimates, n: int,
                             cfg: WalkConfig = WalkConfig(),
                             stream: StreamId = (9,),
                             workers: Optional[int] = None) -> DarnedValue:
    """Hull-hit height expectation for the darned process at z.

    Combines a fresh slit-avoiding estimate V(z), fresh slit-first
    probabilities phi_j(z) (separate stream, hence independent), and the
    chain's entrance-law integrals.  Errors are propagated by the delta
    method treating the three ingredient groups as independent.
    """
    N = len(setup.slits)
    base = _stream_tuple(stream)
    if F.is_empty():
        zero = Estimate(mean=0.0, stderr=0.0, n=n,
                        bias_note="empty hull: expectation is identically zero")
        return DarnedValue(estimate=zero, plain=zero, phi=(), correction=0.0)
    if N == 0:
        plain = expected_im_at_hit(z, F, None, n=n, cfg=cfg,
                                   stream=base + (0,), workers=workers)
        return DarnedValue(estimate=plain, plain=plain, phi=(), correction=0.0)
    if bool(F.contains(z)) or float(setup.slits.dist(z)) <= cfg.eps_absorb:
        raise PreconditionError("z must lie outside the hull and the slits")
    plain = expected_im_at_hit(z, F, setup.slits, mode=MODE_BEFORE_K, n=n,
                               cfg=cfg, stream=base + (0,), workers=workers)
    batch = run_walks(z, n, DomainSpec(hull=F, slits=setup.slits), cfg,
                      stream=base + (1,), workers=workers)
    phi = tuple(tag_fraction(batch, TAG_SLIT_BASE + j) for j in range(N))
    chain.phi_at[complex(z)] = phi
    c, c_se = chain.correction_coefficients()
    correction = float(sum(p.mean * cj for p, cj in zip(phi, c)))
    var = plain.stderr ** 2
    var += float(sum((cj * p.stderr) ** 2 + (p.mean * sj) ** 2
                     for p, cj, sj in zip(phi, c, c_se)))
    est = Estimate(mean=plain.mean + correction, stderr=math.sqrt(var),
                   n=plain.n,
                   truncated_fraction=max(plain.truncated_fraction,
                                          batch.truncated_fraction),
                   bias_note=plain.bias_note + "; darning correction "
                   f"{correction:.3g} (entrance-law bias O(delta), "
                   f"delta={setup.delta:g})")
    return DarnedValue(estimate=est, plain=plain, phi=phi,
                       correction=correction)


@dataclass(frozen=True)
class BmdHcapResult:
    """Darned capacity estimate with the chain used to compute it."""

    estimate: Estimate
    quadrature: Estimate
    tail_correction: float
    eta: float
    L: float
    center: float
    nodes: Tuple[float, ...]
    node_values: Tuple[DarnedValue, ...]
    chain: Optional[ChainEstimates]
    flags: Tuple[str, ...]


def bmd_default_eta(F: Hull, setup: ChainSetup) -> float:
    tops = [F.sup_im, setup.envelope.sup_im]
    tops += [s.y for s in setup.slits.slits]
    m = max(tops)
    return m + max(1.0, m)


def check_hull_inside(F: Hull, envelope: Hull, cfg: WalkConfig,
                      stream: StreamId, n: int = 512) -> None:
    if F.is_empty() or envelope.is_empty():
        return
    rng = np.random.default_rng(np.random.SeedSequence(
        entropy=cfg.seed, spawn_key=_stream_tuple(stream)))
    pts = F.boundary_points(n, rng)
    if pts.size and not bool(np.all(envelope.contains(pts)
                                    | (envelope.dist(pts) <= 1e-12))):
        raise PreconditionError("hull is not contained in the envelope")


def bmd_hcap(F: Hull, setup: ChainSetup, eta: Optional[float] = None,
             L: Optional[float] = None, xi_nodes: int = 64,
             n_per_node: int = 4000, n_per_slit: int = 4000,
             cfg: WalkConfig = WalkConfig(), stream: StreamId = (10,),
             chain: Optional[ChainEstimates] = None,
             center: float = 0.0,
             workers: Optional[int] = None) -> BmdHcapResult:
    """Capacity of F relative to the slit domain, by line quadrature of
    the darned height expectation plus the same far-field tail model as
    the plain estimator.  With no slits this reduces to the plain
    capacity integral."""
    base = _stream_tuple(stream)
    if eta is None:
        eta = bmd_default_eta(F, setup)
    if L is None:
        L = 30.0 * max(1.0, F.sup_im, setup.envelope.sup_im)
    tops = [setup.envelope.sup_im] + [s.y for s in setup.slits.slits]
    if eta <= max(tops + [F.sup_im]):
        raise PreconditionError(
            f"integration height eta={eta:g} must exceed the envelope top "
            "and every slit height")
    check_hull_inside(F, setup.envelope, cfg, base + (99,))
    if len(setup.slits) == 0:
        job = make_job(F, cfg, eta=eta, L=L, xi_nodes=xi_nodes,
                       n_per_node=n_per_node, center=center)
        plain = hcap_integral(job, stream=base + (0,), workers=workers)
        return BmdHcapResult(estimate=plain.estimate, quadrature=plain.quadrature,
                             tail_correction=plain.tail_correction, eta=eta, L=L,
                             center=center, nodes=plain.nodes,
                             node_values=(), chain=None, flags=plain.flags)
    if F.is_empty():
        zero = Estimate(mean=0.0, stderr=0.0, n=0,
                        bias_note="empty hull: capacity is exactly zero")
        return BmdHcapResult(estimate=zero, quadrature=zero, tail_correction=0.0,
                             eta=eta, L=L, center=center, nodes=(),
                             node_values=(), chain=None, flags=())
    if chain is None:
        chain = estimate_chain(setup, F, n_per_slit, cfg,
                               stream=base + (1,), workers=workers)
    xs = np.linspace(center - L, center + L, xi_nodes)
    spacing = xs[1] - xs[0]
    w = np.full(xi_nodes, spacing)
    w[0] *= 0.5
    w[-1] *= 0.5
    w /= math.pi
    values: List[DarnedValue] = []
    for i, xi in enumerate(xs):
        values.append(expected_im_with_darning(
            complex(xi, eta), F, setup, chain, n_per_node, cfg,
            stream=base + (2, i), workers=workers))
    quad_mean = float(sum(wi * v.estimate.mean for wi, v in zip(w, values)))
    quad_var = float(sum((wi * v.estimate.stderr) ** 2
                         for wi, v in zip(w, values)))
    trunc = max(v.estimate.truncated_fraction for v in values)
    quad = Estimate(mean=quad_mean, stderr=math.sqrt(quad_var),
                    n=xi_nodes * n_per_node, truncated_fraction=trunc,
                    bias_note=f"darned trapezoid over {xi_nodes} nodes, "
                    f"eta={eta:g}")
    tail = tail_correction(quad_mean, eta, L)
    scale = 1.0 + (2.0 / math.pi) * math.atan2(eta, L)
    flags: List[str] = []
    total_mean = quad_mean + tail
    if abs(tail) > TAIL_FLAG_THRESHOLD * max(abs(total_mean), 1e-300):
        flags.append("increase L: tail correction above 10% of the estimate")
    if trunc > 0:
        flags.append(f"truncated fraction {trunc:.2e}")
    total = Estimate(mean=total_mean, stderr=quad.stderr * scale, n=quad.n,
                     truncated_fraction=trunc,
                     bias_note=quad.bias_note + f"; tail model adds {tail:.3g}")
    return BmdHcapResult(estimate=total, quadrature=quad, tail_correction=tail,
                         eta=eta, L=L, center=center,
                         nodes=tuple(float(v) for v in xs),
                         node_values=tuple(values), chain=chain,
                         flags=tuple(flags))
