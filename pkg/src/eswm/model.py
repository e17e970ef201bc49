"""Agent types and the valuation / punctuality math shared by every mechanism.

A requester's task keeps its full value until the deadline and then loses value
quadratically until it hits zero (or the expiry time passes).  A worker submits
at a random time drawn from a normal distribution centred on ``mu * deadline``
and truncated to ``[0, expiry]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class RequesterProfile:
    id: str
    task_size: float
    deadline: float
    expiry: float
    max_valuation: float
    alpha: float

    def __post_init__(self):
        if not self.deadline > 0:
            raise ValueError(f"requester {self.id}: deadline must be > 0, got {self.deadline}")
        if self.expiry < self.deadline:
            raise ValueError(f"requester {self.id}: expiry {self.expiry} precedes deadline {self.deadline}")
        if not self.max_valuation > 0:
            raise ValueError(f"requester {self.id}: max_valuation must be > 0")
        if self.task_size < 1:
            raise ValueError(f"requester {self.id}: task_size must be >= 1")
        if self.alpha < 0:
            raise ValueError(f"requester {self.id}: alpha must be >= 0")


@dataclass(frozen=True)
class WorkerProfile:
    """A worker's cost plus the platform's view of its punctuality.

    ``sigma`` defaults to ``2 * mu``; pass it explicitly to decouple the two.
    """

    id: str
    cost: float
    mu: float = 1.0
    sigma: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not self.cost > 0:
            raise ValueError(f"worker {self.id}: cost must be > 0, got {self.cost}")
        if not self.mu > 0:
            raise ValueError(f"worker {self.id}: mu must be > 0, got {self.mu}")
        if self.sigma is None:
            object.__setattr__(self, "sigma", 2.0 * self.mu)
        if not self.sigma > 0:
            raise ValueError(f"worker {self.id}: sigma must be > 0, got {self.sigma}")

    @property
    def lam(self) -> float:
        """Punctuality coefficient, the reciprocal of ``mu``."""
        return 1.0 / self.mu


def task_valuation(req: RequesterProfile, t):
    """Value of ``req``'s task if delivered at time ``t`` (scalar or array)."""
    return valuation_array(req.max_valuation, req.alpha, req.deadline, req.expiry, t)


def valuation_array(v_max, alpha, t_d, t_ex, t):
    t = np.asarray(t, dtype=float)
    late = np.maximum(t - t_d, 0.0)
    v = np.maximum(0.0, v_max - alpha * late * late)
    v = np.where(t > t_ex, 0.0, v)
    return float(v) if v.ndim == 0 else v


def _bounds(mu, sigma, t_d, t_ex):
    loc = mu * t_d
    return loc, (0.0 - loc) / sigma, (t_ex - loc) / sigma


def _mass(lo, hi):
    """Standard normal mass on [lo, hi], evaluated on whichever tail keeps precision."""
    lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
    upper = lo > 0
    return np.where(upper, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))


def submission_pdf(w: WorkerProfile, t, t_d: float, t_ex: float):
    """Density of ``w``'s submission time for a task with deadline ``t_d`` and expiry ``t_ex``.

    The distribution is normal with location ``w.mu * t_d`` and scale ``w.sigma``,
    renormalised over the support ``[0, t_ex]``.
    """
    if not 0 < t_d <= t_ex:
        raise ValueError(f"need 0 < t_d <= t_ex, got t_d={t_d}, t_ex={t_ex}")
    if not w.sigma > 0:
        raise ValueError("degenerate scale")
    loc, a, b = _bounds(w.mu, w.sigma, t_d, t_ex)
    t = np.asarray(t, dtype=float)
    z = (t - loc) / w.sigma
    dens = np.exp(-0.5 * z * z) / (_SQRT_2PI * w.sigma) / _mass(a, b)
    dens = np.where((t < 0) | (t > t_ex), 0.0, dens)
    return float(dens) if dens.ndim == 0 else dens


def submission_cdf(w: WorkerProfile, t, t_d: float, t_ex: float):
    loc, a, b = _bounds(w.mu, w.sigma, t_d, t_ex)
    t = np.clip(np.asarray(t, dtype=float), 0.0, t_ex)
    out = _mass(a, (t - loc) / w.sigma) / _mass(a, b)
    return float(out) if out.ndim == 0 else out


def truncnorm_ppf(u, a, b):
    """Inverse CDF of the standard normal truncated to [a, b].

    Intervals lying entirely in the upper tail are mirrored into the lower tail
    first, where ``ndtr`` does not lose digits to ``1 - small``.
    """
    u, a, b = np.broadcast_arrays(*(np.asarray(x, float) for x in (u, a, b)))
    flip = a > 0
    lo = np.where(flip, -b, a)
    hi = np.where(flip, -a, b)
    p_lo, p_hi = ndtr(lo), ndtr(hi)
    x = ndtri(p_lo + u * (p_hi - p_lo))
    x = np.clip(np.nan_to_num(x, nan=lo, neginf=lo, posinf=hi), lo, hi)
    return np.where(flip, -x, x)


def sample_submission_times(mu, sigma, t_d, t_ex, rng: np.random.Generator, size=None):
    """Vectorised draw of submission times; one uniform is consumed per output."""
    mu, sigma, t_d, t_ex = (np.asarray(x, float) for x in (mu, sigma, t_d, t_ex))
    loc = mu * t_d
    shape = size if size is not None else np.broadcast(mu, sigma, t_d, t_ex).shape
    u = rng.random(shape)
    x = truncnorm_ppf(u, -loc / sigma, (t_ex - loc) / sigma)
    return np.clip(loc + sigma * x, 0.0, t_ex)


def sample_submission_time(w: WorkerProfile, t_d: float, t_ex: float, rng: np.random.Generator) -> float:
    return float(sample_submission_times(w.mu, w.sigma, t_d, t_ex, rng))


def expected_valuation_array(v_max, alpha, t_d, t_ex, mu, sigma):
    """Closed-form expected task value under a truncated-normal submission time.

    Every argument broadcasts.  The valuation is constant up to the deadline and
    quadratic afterwards, so the expectation reduces to the first two partial
    moments of the normal distribution on ``[t_d, t_zero]``, where ``t_zero`` is
    the earlier of the expiry and the time the quadratic reaches zero.
    """
    v_max, alpha, t_d, t_ex, mu, sigma = np.broadcast_arrays(
        *(np.asarray(x, float) for x in (v_max, alpha, t_d, t_ex, mu, sigma)))
    loc = mu * t_d
    a = -loc / sigma
    b = (t_ex - loc) / sigma
    norm = _mass(a, b)

    with np.errstate(divide="ignore", over="ignore"):
        reach = np.where(alpha > 0, np.sqrt(v_max / np.where(alpha > 0, alpha, 1.0)), np.inf)
    t_zero = np.minimum(t_ex, t_d + reach)
    u_d = np.clip((t_d - loc) / sigma, a, b)
    u_z = np.clip((t_zero - loc) / sigma, a, b)

    p_pre = _mass(a, u_d)
    p_post = _mass(u_d, u_z)
    # int (t - t_d)^2 phi(u) du with t - t_d = sigma*u + shift
    shift = loc - t_d
    phi_d = np.exp(-0.5 * u_d * u_d) / _SQRT_2PI
    phi_z = np.exp(-0.5 * u_z * u_z) / _SQRT_2PI
    m1 = phi_d - phi_z
    m2 = p_post - (u_z * phi_z - u_d * phi_d)
    second = sigma * sigma * m2 + 2.0 * sigma * shift * m1 + shift * shift * p_post

    with np.errstate(invalid="ignore", divide="ignore"):
        ev = (v_max * (p_pre + p_post) - alpha * second) / norm
    # all mass numerically off the support: collapse onto the nearer endpoint
    degenerate = ~(norm > 0)
    if np.any(degenerate):
        endpoint = np.where(b < 0, t_ex, 0.0)
        ev = np.where(degenerate, valuation_array(v_max, alpha, t_d, t_ex, endpoint), ev)
    ev = np.clip(ev, 0.0, v_max)
    return float(ev) if ev.ndim == 0 else ev


def expected_valuation(req: RequesterProfile, w: WorkerProfile) -> float:
    """Expected value of ``req``'s task when ``w`` performs it."""
    return expected_valuation_array(req.max_valuation, req.alpha, req.deadline, req.expiry,
                                    w.mu, w.sigma)


def expected_valuation_quad(req: RequesterProfile, w: WorkerProfile, rtol: float = 1e-6) -> float:
    """Adaptive-quadrature route to the same expectation, used to cross-check the closed form.

    The integral is split at the deadline, at the zero of the depreciation curve
    and around the density's peak so that every piece is smooth.
    """
    t_d, t_ex = req.deadline, req.expiry
    loc = w.mu * t_d
    tol = rtol * req.max_valuation
    breaks = {0.0, t_d, t_ex}
    if req.alpha > 0:
        root = t_d + math.sqrt(req.max_valuation / req.alpha)
        if root < t_ex:
            breaks.add(root)
    for k in (-8, -2, 0, 2, 8):
        x = loc + k * w.sigma
        if 0 < x < t_ex:
            breaks.add(x)
    pts = sorted(breaks)

    def integrand(t):
        return task_valuation(req, t) * submission_pdf(w, t, t_d, t_ex)

    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi > lo:
            val, _ = integrate.quad(integrand, lo, hi, epsabs=tol / len(pts), epsrel=1e-10, limit=200)
            total += val
    return min(max(total, 0.0), req.max_valuation)
