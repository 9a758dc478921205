"""Posterior of the difference p_D = p_E - p_S of two independent beta variables.

The density on [-1, 1] is written through Appell's F1 function, which is
evaluated from its single-integral representation.  Moments, the CDF and
credible limits are obtained by composite Gauss-Legendre integration of
that density on each side of zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .betacore import BetaParams, integrate
from .errors import DomainError, NumericalIntegrityError

__all__ = [
    "DiffPosterior",
    "appell_f1",
    "diff_density",
    "diff_mean",
    "diff_cdf",
    "diff_credible_interval",
    "density_grid",
]


@dataclass(frozen=True)
class DiffPosterior:
    e: BetaParams
    s: BetaParams

    @property
    def log_norm(self) -> float:
        """ln A with A = B(alpha_E, beta_E) B(alpha_S, beta_S)."""
        return float(special.betaln(self.e.alpha, self.e.beta) + special.betaln(self.s.alpha, self.s.beta))

    @property
    def closed_form_mean(self) -> float:
        return self.e.mean - self.s.mean


_SQRT_HALF = math.sqrt(0.5)
_PROBE = np.geomspace(1e-9, _SQRT_HALF, 160)


_F1_RTOL = 1e-10
_GEOM = 2.0 ** np.arange(-12, 13)
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _fixed_rule(f, breakpoints) -> float:
    """Composite 16-point Gauss-Legendre over [0, sqrt(1/2)] split at ``breakpoints``."""
    inner = breakpoints[(breakpoints > 0) & (breakpoints < _SQRT_HALF)]
    edges = np.unique(np.concatenate([np.linspace(0.0, _SQRT_HALF, 17), inner]))
    half = 0.5 * np.diff(edges)
    nodes = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half[:, None] * _GL_X[None, :]
    return float(np.sum(half * (f(nodes.ravel()).reshape(nodes.shape) @ _GL_W)))


def _f1_log_integral(a, b1, b2, c, x1, x2, y1=None, y2=None) -> float:
    """ln of  int_0^1 u^(a-1) (1-u)^(c-a-1) (1-u x1)^(-b1) (1-u x2)^(-b2) du.

    ``y1``, ``y2`` are 1 - x1, 1 - x2 when known more precisely than by
    subtraction; they keep 1 - u x accurate as u and x both approach 1.
    """
    y1 = 1.0 - x1 if y1 is None else y1
    y2 = 1.0 - x2 if y2 is None else y2

    def log_lower(u):
        # u near 0
        with np.errstate(divide="ignore"):
            return (special.xlogy(a - 1.0, u) + special.xlog1py(c - a - 1.0, -u)
                    - special.xlog1py(b1, -u * x1) - special.xlog1py(b2, -u * x2))

    def log_upper(w):
        # w = 1 - u near 0
        with np.errstate(divide="ignore"):
            return (special.xlog1py(a - 1.0, -w) + special.xlogy(c - a - 1.0, w)
                    - special.xlogy(b1, y1 + w * x1) - special.xlogy(b2, y2 + w * x2))

    lo_probe, hi_probe = log_lower(_PROBE**2), log_upper(_PROBE**2)
    shift = float(max(lo_probe.max(), hi_probe.max()))

    # u = v**2 on the lower half and u = 1 - v**2 on the upper half tame endpoint powers
    def lower(v):
        return 2.0 * v * np.exp(log_lower(v * v) - shift)

    def upper(v):
        return 2.0 * v * np.exp(log_upper(v * v) - shift)

    # geometric breakpoints around each probed peak keep narrow spikes visible
    bp_lower = _PROBE[int(np.argmax(lo_probe))] * _GEOM
    bp_upper = _PROBE[int(np.argmax(hi_probe))] * _GEOM
    scale = _fixed_rule(lower, bp_lower) + _fixed_rule(upper, bp_upper)
    tol = _F1_RTOL * scale
    val = (integrate(lower, 0.0, _SQRT_HALF, tol=0.5 * tol, breakpoints=bp_lower)
           + integrate(upper, 0.0, _SQRT_HALF, tol=0.5 * tol, breakpoints=bp_upper))
    if not val > 0:
        raise DomainError("Appell F1 integral is not positive for these arguments")
    return shift + math.log(val)


def _check_f1(a, c, x1, x2):
    if not (a > 0 and c - a > 0):
        raise DomainError(f"F1 integral needs a > 0 and c - a > 0, got a={a!r}, c={c!r}")
    if not (x1 < 1 and x2 < 1):
        raise DomainError(f"F1 integral needs x1, x2 < 1, got ({x1!r}, {x2!r})")


def appell_f1(a: float, b1: float, b2: float, c: float, x1: float, x2: float) -> float:
    """Appell F1(a; b1, b2; c; x1, x2) via its Euler-type integral."""
    _check_f1(a, c, x1, x2)
    log_front = special.gammaln(c) - special.gammaln(a) - special.gammaln(c - a)
    return math.exp(log_front + _f1_log_integral(a, b1, b2, c, x1, x2))


def _density_scalar(pd: float, post: DiffPosterior) -> float:
    ae, be = post.e.alpha, post.e.beta
    as_, bs = post.s.alpha, post.s.beta
    total = ae + as_ + be + bs - 2.0
    if pd == 0.0:
        if not (ae + as_ > 1 and be + bs > 1):
            raise DomainError("density at 0 needs alpha_E + alpha_S > 1 and beta_E + beta_S > 1")
        return math.exp(special.betaln(ae + as_ - 1.0, be + bs - 1.0) - post.log_norm)
    if pd >= 1.0 or pd <= -1.0:
        edge = be + bs if pd > 0 else ae + as_
        if edge > 1:
            return 0.0
        raise DomainError("density diverges at the boundary for these shapes")
    if pd > 0:
        # the B(alpha_S, beta_E) factor cancels the F1 gamma prefactor
        log_poly = special.xlogy(be + bs - 1.0, pd) + special.xlog1py(as_ + be - 1.0, -pd)
        log_int = _f1_log_integral(be, total, 1.0 - ae, be + as_, 1.0 - pd, 1.0 - pd * pd, pd, pd * pd)
    else:
        log_poly = special.xlogy(be + bs - 1.0, -pd) + special.xlog1py(ae + bs - 1.0, pd)
        log_int = _f1_log_integral(bs, 1.0 - as_, total, ae + bs, 1.0 - pd * pd, 1.0 + pd, pd * pd, -pd)
    return math.exp(log_poly + log_int - post.log_norm)


def diff_density(pd, post: DiffPosterior):
    """Density of p_E - p_S at ``pd`` (scalar or array) on [-1, 1]."""
    arr = np.asarray(pd, dtype=float)
    if np.any(~(np.abs(arr) <= 1.0)):
        raise DomainError("pd must lie in [-1, 1]")
    if arr.ndim == 0:
        return _density_scalar(float(arr), post)
    return np.array([_density_scalar(float(x), post) for x in arr.ravel()]).reshape(arr.shape)


_PANELS = 128  # 2048 nodes per half-interval


def _panel_integrals(g, lo: float, hi: float, panels: int) -> np.ndarray:
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    return half * (g(nodes.ravel()).reshape(nodes.shape) @ _GL_W)


def _refined_panels(g, lo, hi, rtol=1e-9, atol=1e-13, max_panels=4096):
    """Per-panel integrals, doubling the panel count until the total settles."""
    panels = _PANELS
    coarse = _panel_integrals(g, lo, hi, panels // 2).sum()
    while True:
        parts = _panel_integrals(g, lo, hi, panels)
        total = parts.sum()
        if abs(total - coarse) <= max(rtol * abs(total), atol) or panels >= max_panels:
            return parts
        coarse = total
        panels *= 2


class _DiffCDF:
    """Piecewise CDF built from per-panel integrals on [-1, 0] and [0, 1]."""

    def __init__(self, post: DiffPosterior):
        self.post = post

        def g(x):
            return diff_density(x, post)

        self.neg = _refined_panels(g, -1.0, 0.0)
        self.pos = _refined_panels(g, 0.0, 1.0)
        self.edges_neg = np.linspace(-1.0, 0.0, self.neg.size + 1)
        self.edges_pos = np.linspace(0.0, 1.0, self.pos.size + 1)
        self.cum_neg = np.concatenate([[0.0], np.cumsum(self.neg)])
        self.cum_pos = self.cum_neg[-1] + np.concatenate([[0.0], np.cumsum(self.pos)])
        self.total = float(self.cum_pos[-1])

    def _partial(self, a, b):
        if b <= a:
            return 0.0
        half = 0.5 * (b - a)
        nodes = 0.5 * (a + b) + half * _GL_X
        return float(half * (diff_density(nodes, self.post) @ _GL_W))

    def __call__(self, x: float) -> float:
        if x <= -1.0:
            return 0.0
        if x >= 1.0:
            return self.total
        edges, cum = (self.edges_neg, self.cum_neg) if x < 0 else (self.edges_pos, self.cum_pos)
        k = min(int(np.searchsorted(edges, x, side="right")) - 1, edges.size - 2)
        return float(cum[k]) + self._partial(float(edges[k]), x)


def diff_mean(post: DiffPosterior) -> float:
    """Mean of p_E - p_S by numerical integration of the density."""
    def g(x):
        return x * diff_density(x, post)
    return float(_refined_panels(g, -1.0, 0.0).sum() + _refined_panels(g, 0.0, 1.0).sum())


def diff_cdf(x, post: DiffPosterior):
    """Pr(p_E - p_S <= x) for a scalar or an array of points."""
    cdf = _DiffCDF(post)
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return cdf(float(arr))
    return np.array([cdf(float(v)) for v in arr.ravel()]).reshape(arr.shape)


def _solve(cdf: _DiffCDF, target: float, tol: float = 1e-10) -> float:
    lo, hi = -1.0, 1.0
    f_lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = cdf(mid)
        if f_mid < f_lo - 1e-9:
            raise NumericalIntegrityError(f"CDF decreases near {mid:.6g}")
        if f_mid < target:
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def diff_credible_interval(post: DiffPosterior, level: float = 0.95) -> tuple[float, float]:
    """Equal-tail credible interval for p_E - p_S."""
    if not (0.0 < level < 1.0):
        raise DomainError(f"level={level!r} must lie in (0, 1)")
    cdf = _DiffCDF(post)
    if abs(cdf.total - 1.0) > 1e-6:
        raise NumericalIntegrityError(f"density integrates to {cdf.total!r}, not 1")
    tail = 0.5 * (1.0 - level)
    lower = _solve(cdf, tail * cdf.total)
    upper = _solve(cdf, (1.0 - tail) * cdf.total)
    if not lower < upper:
        raise NumericalIntegrityError("credible limits are not ordered")
    return lower, upper


def density_grid(post: DiffPosterior, points: int = 401) -> tuple[np.ndarray, np.ndarray]:
    """Equally spaced (pd, density) pairs over [-1, 1] for plotting."""
    if points < 2:
        raise DomainError("need at least two grid points")
    pd = np.linspace(-1.0, 1.0, points)
    return pd, diff_density(pd, post)
