"""Weak-convergence surrogate metric and boundary-regularity probes.

The bounded-Lipschitz distance between probability measures takes a
supremum over all test functions with sup-norm plus Lipschitz constant
at most one.  The surrogate below maximizes over a finite dictionary of
rescaled hat functions instead, giving a certified lower bound of the
true distance; convergence to zero along a sequence is what the
experiments need, so a lower bound with a fixed dictionary is honest
and cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from hullcap.errors import PreconditionError
from hullcap.geometry import Ball, Hull, Slit, SlitDomain, EMPTY_SLITS
from hullcap.sampler import (EmpiricalMeasure, Estimate, StreamId, WalkConfig,
                             DomainSpec, PROBE_OUTSIDE, PROBE_INSIDE,
                             TAG_PROBE, TAG_SLIT_BASE, TAG_TRUNCATED,
                             run_walks, sample_harmonic_measure, tag_fraction,
                             _stream_tuple)


@dataclass(frozen=True)
class TestDictionary:
    """Hat functions f(z) = (s/(s+1)) * max(0, 1 - |z - a| / s).

    Each member has sup-norm s/(s+1) and Lipschitz constant 1/(s+1), so
    its bounded-Lipschitz norm is exactly one.
    """

    centers: Tuple[complex, ...]
    scales: Tuple[float, ...]

    def __post_init__(self):
        if not self.centers or not self.scales:
            raise ValueError("dictionary needs centers and scales")
        if any(s <= 0 for s in self.scales):
            raise ValueError("scales must be positive")

    @property
    def size(self) -> int:
        return len(self.centers) * len(self.scales)

    def member_norms(self) -> np.ndarray:
        """Bounded-Lipschitz norm of every member (analytically one)."""
        out = []
        for s in self.scales:
            sup = s / (s + 1.0)
            lip = 1.0 / (s + 1.0)
            out.extend([sup + lip] * len(self.centers))
        return np.asarray(out)

    def evaluate_means(self, points: np.ndarray, weights: np.ndarray
                       ) -> Tuple[np.ndarray, np.ndarray]:
        """Weighted mean and mean-square of every member over a sample.

        Returns arrays of length ``size`` ordered scale-major to match
        ``member_labels``.
        """
        means: List[np.ndarray] = []
        sqs: List[np.ndarray] = []
        centers = np.asarray(self.centers)
        block = 64
        for s in self.scales:
            amp = s / (s + 1.0)
            for i in range(0, centers.size, block):
                c = centers[i:i + block]
                vals = amp * np.clip(1.0 - np.abs(points[:, None] - c[None, :]) / s,
                                     0.0, None)
                means.append(weights @ vals)
                sqs.append(weights @ (vals * vals))
        return np.concatenate(means), np.concatenate(sqs)

    def member_labels(self) -> List[str]:
        return [f"s={s:g};a={a.real:g}+{a.imag:g}i"
                for s in self.scales for a in self.centers]

    @staticmethod
    def default(x_half_width: float = 5.0, y_top: float = 2.0,
                nx: int = 21, ny: int = 11,
                scales: Sequence[float] = (0.25, 1.0, 4.0)) -> "TestDictionary":
        """Grid of 21 x 11 centers over the window plus the real axis."""
        xs = np.linspace(-x_half_width, x_half_width, nx)
        ys = np.linspace(0.0, y_top, ny)
        centers = tuple(complex(x, y) for y in ys for x in xs)
        return TestDictionary(centers=centers, scales=tuple(float(s) for s in scales))


@dataclass(frozen=True)
class BLDistance:
    """Dictionary lower bound of the bounded-Lipschitz distance."""

    value: float
    confidence_radius: float
    best_member: str
    per_member_se_max: float


def bl_distance_surrogate(mu: EmpiricalMeasure, nu: EmpiricalMeasure,
                          dictionary: TestDictionary) -> BLDistance:
    """Max over dictionary members of the difference of sample means.

    Both measures are normalized to probability first.  The confidence
    radius is three times the largest standard error among member mean
    differences, an upper bound on the noise of every member.
    """
    mu = mu.normalized()
    nu = nu.normalized()
    m_mu, q_mu = dictionary.evaluate_means(mu.points, mu.weights)
    m_nu, q_nu = dictionary.evaluate_means(nu.points, nu.weights)
    n_mu = max(mu.n, 2)
    n_nu = max(nu.n, 2)
    var_mu = np.maximum(q_mu - m_mu ** 2, 0.0) / n_mu
    var_nu = np.maximum(q_nu - m_nu ** 2, 0.0) / n_nu
    se = np.sqrt(var_mu + var_nu)
    diff = np.abs(m_mu - m_nu)
    i = int(np.argmax(diff))
    return BLDistance(value=float(diff[i]),
                      confidence_radius=3.0 * float(se.max()),
                      best_member=dictionary.member_labels()[i],
                      per_member_se_max=float(se.max()))


def regularity_probe(F: Hull, K: Optional[SlitDomain], z: complex, eps: float,
                     n: int, cfg: WalkConfig = WalkConfig(),
                     stream: StreamId = (4,),
                     workers: Optional[int] = None) -> Estimate:
    """Harmonic measure of the eps-disk around z seen from z.

    Fraction of exits of the domain H minus (F, K) landing within eps
    of the start; values near one certify boundary regularity at z.
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    measure, batch = sample_harmonic_measure(z, F, K, n=n, cfg=cfg,
                                             stream=stream, workers=workers)
    ok = batch.tags != TAG_TRUNCATED
    n_ok = int(ok.sum())
    if n_ok == 0:
        return Estimate(mean=0.0, stderr=0.0, n=n, truncated_fraction=1.0)
    hits = np.abs(batch.points[ok] - z) <= eps
    p = float(hits.mean())
    return Estimate(mean=p, stderr=math.sqrt(max(p * (1 - p), 0.0) / n_ok),
                    n=n_ok, truncated_fraction=batch.truncated_fraction)


def beurling_bound(rho: float, eps: float) -> float:
    """Projection lower bound (2/pi) atan((sqrt(eps/rho) - sqrt(rho/eps)) / 2)
    for hitting a slit at distance rho before leaving the eps-disk."""
    if not 0 < rho <= eps:
        raise PreconditionError("bound needs 0 < rho <= eps")
    r = rho / eps
    return (2.0 / math.pi) * math.atan(0.5 * (1.0 / math.sqrt(r) - math.sqrt(r)))


@dataclass(frozen=True)
class BeurlingReport:
    rho: float
    eps: float
    bound: float
    estimate: Estimate
    passed: bool


def beurling_check(slit: Slit, z: complex, eps: float, n: int,
                   cfg: WalkConfig = WalkConfig(), stream: StreamId = (5,),
                   workers: Optional[int] = None) -> BeurlingReport:
    """Monte Carlo check of the projection bound near one slit.

    Walks start at z inside the eps-disk and stop on the slit or on the
    disk circle; the slit-hit fraction must not fall more than three
    standard errors below the analytic bound.
    """
    rho = float(slit.dist(z))
    if not rho < eps:
        raise PreconditionError("need dist(z, slit) < eps")
    if slit.length <= 2.0 * eps:
        raise PreconditionError("slit length must exceed 2 eps")
    if z.imag - eps < 0:
        raise PreconditionError("the eps-disk must stay inside H")
    if abs(z.imag - slit.y) >= eps and rho >= eps:
        raise PreconditionError("the eps-disk must meet the slit")
    domain = DomainSpec(slits=SlitDomain((slit,)), probe=Ball(z, eps),
                        probe_mode=PROBE_INSIDE, include_real_axis=False)
    batch = run_walks(z, n, domain, cfg, stream=stream, workers=workers)
    est = tag_fraction(batch, TAG_SLIT_BASE)
    bound = beurling_bound(rho, eps)
    passed = est.mean >= bound - 3.0 * est.stderr
    return BeurlingReport(rho=rho, eps=eps, bound=bound, estimate=est,
                          passed=passed)


@dataclass(frozen=True)
class HittingTable:
    """Worst-case small-ball hitting probabilities per ball radius."""

    eps_values: Tuple[float, ...]
    max_probability: Tuple[Estimate, ...]
    rows: Tuple[Tuple[float, complex, complex, Estimate], ...]  # (eps, z, w, est)


def hitting_probe(K: SlitDomain, S_grid: Sequence[complex],
                  eps_list: Sequence[float], n: int,
                  cfg: WalkConfig = WalkConfig(), stream: StreamId = (6,),
                  per_slit_points: int = 3,
                  workers: Optional[int] = None) -> HittingTable:
    """Probability of hitting a small disk before leaving H.

    For each radius eps, walks start at sample points of the slits and
    the table records, over all (target point, start), the largest
    probability of entering the eps-disk around the target before
    absorbing on the real axis.  Shrinking eps must shrink the whole
    table, which is the vanishing-hitting-probability statement probed
    here.
    """
    if len(K) == 0:
        raise PreconditionError("hitting probe needs at least one slit")
    starts = np.concatenate([s.sample_points(per_slit_points) for s in K.slits])
    targets = np.asarray(S_grid, dtype=complex)
    dist_sk = min(float(np.min(s.dist(targets))) for s in K.slits)
    eps_sorted = sorted(float(e) for e in eps_list)
    if eps_sorted[-1] >= dist_sk / 2.0:
        raise PreconditionError(
            f"every eps must stay below dist(S, K)/2 = {dist_sk / 2.0:g}")
    base = _stream_tuple(stream)
    rows: List[Tuple[float, complex, complex, Estimate]] = []
    max_per_eps: List[Estimate] = []
    for i, eps in enumerate(sorted(eps_sorted, reverse=True)):
        best: Optional[Estimate] = None
        for j, z in enumerate(targets):
            domain = DomainSpec(probe=Ball(complex(z), eps),
                                probe_mode=PROBE_OUTSIDE)
            for k, w in enumerate(starts):
                batch = run_walks(complex(w), n, domain, cfg,
                                  stream=base + (i, j, k), workers=workers)
                est = tag_fraction(batch, TAG_PROBE)
                rows.append((eps, complex(z), complex(w), est))
                if best is None or est.mean > best.mean:
                    best = est
        max_per_eps.append(best)
    eps_desc = tuple(sorted(eps_sorted, reverse=True))
    return HittingTable(eps_values=eps_desc,
                        max_probability=tuple(max_per_eps), rows=tuple(rows))
