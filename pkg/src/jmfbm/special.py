"""Normal distribution functions and a bracketing root solver.

``binorm_cdf`` follows Genz's double-precision BVND scheme (Gauss-Legendre
quadrature of the Plackett/Drezner-Wesolowsky single integral, with a
transformed integrand for ``|rho| >= 0.925``).  Higher dimensions (up to 4) are
reduced to the bivariate case by conditioning on the first variable and
integrating with a vectorised adaptive Gauss-Kronrod rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq
from scipy.special import ndtr

from .errors import (
    BracketError,
    EvaluationError,
    NotPositiveSemidefiniteError,
    UnsupportedDimensionError,
)

MAX_DIMENSION = 4
_TWO_PI = 2.0 * math.pi
_SQRT_TWO_PI = math.sqrt(_TWO_PI)
# |z| beyond this carries < 1e-23 standard normal mass
_Z_CLIP = 10.0


def norm_cdf(x):
    """Standard normal CDF; accepts scalars, arrays and +/-inf."""
    out = ndtr(x)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# bivariate
# ---------------------------------------------------------------------------

def _half_rule(n):
    # Genz stores the positive half of an n-point rule and uses 1 -/+ x on [0, 2]
    x, w = leggauss(n)
    x, w = x[n // 2:], w[n // 2:]
    return np.concatenate([1.0 - x, 1.0 + x]), np.concatenate([w, w])


_GL6 = _half_rule(6)
_GL12 = _half_rule(12)
_GL20 = _half_rule(20)


def _bvnu_moderate(h, k, r, rule):
    x, w = rule
    hk = h * k
    hs = 0.5 * (h * h + k * k)
    asr = 0.5 * np.arcsin(r)
    sn = np.sin(asr[:, None] * x[None, :])
    terms = np.exp((sn * hk[:, None] - hs[:, None]) / (1.0 - sn * sn))
    return (terms @ w) * asr / _TWO_PI + ndtr(-h) * ndtr(-k)


def _bvnu_strong(h, k, r):
    x, w = _GL20
    neg = r < 0
    k = np.where(neg, -k, k)
    hk = h * k
    bvn = np.zeros_like(h)
    inner = np.abs(r) < 1.0
    if np.any(inner):
        hi, ki, hki, ri = h[inner], k[inner], hk[inner], r[inner]
        as_ = (1.0 - ri) * (1.0 + ri)
        a = np.sqrt(as_)
        bs = (hi - ki) ** 2
        asr = -0.5 * (bs / as_ + hki)
        c = (4.0 - hki) / 8.0
        d = (12.0 - hki) / 80.0
        val = np.where(
            asr > -100.0,
            a * np.exp(np.maximum(asr, -100.0))
            * (1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_),
            0.0,
        )
        b = np.sqrt(bs)
        tail = np.exp(-0.5 * np.minimum(hki, 200.0)) * _SQRT_TWO_PI * ndtr(-b / a) * b \
            * (1.0 - c * bs * (1.0 - d * bs) / 3.0)
        val = val - np.where(hki > -100.0, tail, 0.0)
        a = 0.5 * a
        xs = (a[:, None] * x[None, :]) ** 2
        asr_n = -0.5 * (bs[:, None] / xs + hki[:, None])
        live = asr_n > -100.0
        sp = 1.0 + c[:, None] * xs * (1.0 + 5.0 * d[:, None] * xs)
        rs = np.sqrt(1.0 - xs)
        ep = np.exp(-0.5 * hki[:, None] * xs / (1.0 + rs) ** 2) / rs
        quad = np.where(live, np.exp(np.maximum(asr_n, -100.0)) * (sp - ep), 0.0) @ w
        bvn[inner] = (a * quad - val) / _TWO_PI
    pos = ~neg
    out = np.empty_like(h)
    out[pos] = bvn[pos] + ndtr(-np.maximum(h[pos], k[pos]))
    out[neg] = -bvn[neg] + np.maximum(0.0, ndtr(-h[neg]) - ndtr(-k[neg]))
    return out


def _bvnu(h, k, r):
    """Upper orthant probability P(X > h, Y > k) for corr(X, Y) = r."""
    h, k, r = np.broadcast_arrays(
        np.asarray(h, float), np.asarray(k, float), np.asarray(r, float)
    )
    shape = h.shape
    h, k, r = h.ravel(), k.ravel(), r.ravel()
    out = np.zeros(h.shape)

    done = (h == np.inf) | (k == np.inf)
    m = ~done & (h == -np.inf)
    out[m] = ndtr(-k[m])
    done |= m
    m = ~done & (k == -np.inf)
    out[m] = ndtr(-h[m])
    done |= m
    m = ~done & (r == 0.0)
    out[m] = ndtr(-h[m]) * ndtr(-k[m])
    done |= m

    ar = np.abs(r)
    for mask, rule in (
        (~done & (ar < 0.3), _GL6),
        (~done & (ar >= 0.3) & (ar < 0.75), _GL12),
        (~done & (ar >= 0.75) & (ar < 0.925), _GL20),
    ):
        if np.any(mask):
            out[mask] = _bvnu_moderate(h[mask], k[mask], r[mask], rule)
    m = ~done & (ar >= 0.925)
    if np.any(m):
        out[m] = _bvnu_strong(h[m], k[m], r[m])
    return np.clip(out, 0.0, 1.0).reshape(shape)


def binorm_cdf(x, y, rho):
    """P(X <= x, Y <= y) for standard normals with correlation ``rho``.

    Vectorised over all three arguments; +/-inf limits are allowed.
    """
    if np.any(np.abs(np.asarray(rho)) > 1.0):
        raise ValueError("|rho| must be <= 1")
    out = _bvnu(-np.asarray(x, float), -np.asarray(y, float), rho)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# multivariate (d <= 4)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Symmetric unit-diagonal PSD matrix of dimension 1..4."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError("correlation matrix must be square and non-empty")
        if a.shape[0] > MAX_DIMENSION:
            raise UnsupportedDimensionError(
                f"dimension {a.shape[0]} exceeds the supported maximum {MAX_DIMENSION}"
            )
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(a), 1.0, rtol=0.0, atol=1e-12):
            raise ValueError("correlation matrix must have a unit diagonal")
        try:
            np.linalg.cholesky(a + 1e-12 * np.eye(a.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise NotPositiveSemidefiniteError(str(exc)) from None
        a = 0.5 * (a + a.T)
        np.fill_diagonal(a, 1.0)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15)
_XK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_K15_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_K15_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
_G7_WEIGHTS = np.zeros(15)
_G7_WEIGHTS[[1, 3, 5]] = _WG[:3]
_G7_WEIGHTS[[13, 11, 9]] = _WG[:3]
_G7_WEIGHTS[7] = _WG[3]

_INITIAL_PANELS = 4
_MAX_PANELS = 4096


def _adaptive_unit_integral(f, batch, abs_tol):
    """Integrate ``f`` over t in [0, 1] for a batch of integrands on a shared mesh.

    ``f`` maps an array of nodes, shape (batch, n), to values of the same
    shape.  Panels are bisected while any batch member's Gauss/Kronrod gap
    exceeds its share ``abs_tol * width`` of the tolerance.
    """
    edges = np.linspace(0.0, 1.0, _INITIAL_PANELS + 1)
    lo, hi = edges[:-1], edges[1:]
    total = np.zeros(batch)
    n_panels = 0
    while lo.size:
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes = mid[:, None] + half[:, None] * _K15_NODES[None, :]
        vals = f(np.broadcast_to(nodes.ravel(), (batch, nodes.size)))
        vals = vals.reshape(batch, lo.size, 15)
        kron = (vals @ _K15_WEIGHTS) * half
        gauss = (vals @ _G7_WEIGHTS) * half
        err = np.max(np.abs(kron - gauss), axis=0)
        n_panels += lo.size
        ok = (err <= abs_tol * (hi - lo)) | (n_panels >= _MAX_PANELS) | (half < 1e-12)
        total += kron[:, ok].sum(axis=1)
        lo, hi, mid = lo[~ok], hi[~ok], mid[~ok]
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    return total


def _interval_prob(lo, hi):
    # upper tail via the complement keeps precision for lo > 0
    upper = lo > 0
    return np.where(upper, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))


def _rect(lo, hi, corr, abs_tol):
    """Batched P(lo <= Z <= hi); lo, hi have shape (batch, d)."""
    batch, d = lo.shape
    if d == 1:
        return np.maximum(_interval_prob(lo[:, 0], hi[:, 0]), 0.0)
    if d == 2:
        rho = corr[0, 1]
        p = (binorm_cdf(hi[:, 0], hi[:, 1], rho) - binorm_cdf(lo[:, 0], hi[:, 1], rho)
             - binorm_cdf(hi[:, 0], lo[:, 1], rho) + binorm_cdf(lo[:, 0], lo[:, 1], rho))
        p = np.atleast_1d(p)
        return np.where((lo[:, 0] >= hi[:, 0]) | (lo[:, 1] >= hi[:, 1]), 0.0,
                        np.maximum(p, 0.0))

    c = corr[1:, 0]
    cond_cov = corr[1:, 1:] - np.outer(c, c)
    cond_var = np.clip(np.diag(cond_cov), 0.0, None)
    z_lo = np.clip(lo[:, 0], -_Z_CLIP, _Z_CLIP)
    z_hi = np.clip(hi[:, 0], -_Z_CLIP, _Z_CLIP)

    # a variable perfectly tied to Z_0 becomes a bound on Z_0 itself
    keep = []
    for i in range(d - 1):
        if cond_var[i] > 1e-20:
            keep.append(i)
            continue
        s = math.copysign(1.0, c[i])
        a, b = lo[:, i + 1] * s, hi[:, i + 1] * s
        if s < 0:
            a, b = b, a
        z_lo, z_hi = np.maximum(z_lo, a), np.minimum(z_hi, b)
    if not keep:
        return np.maximum(_interval_prob(z_lo, np.maximum(z_lo, z_hi)), 0.0)

    keep = np.array(keep)
    c = c[keep]
    sd = np.sqrt(cond_var[keep])
    sub = cond_cov[np.ix_(keep, keep)] / np.outer(sd, sd)
    np.fill_diagonal(sub, 1.0)
    sub_lo, sub_hi = lo[:, keep + 1], hi[:, keep + 1]
    width = np.maximum(z_hi - z_lo, 0.0)
    live = width > 0
    out = np.zeros(batch)
    if not np.any(live):
        return out
    z_lo, width = z_lo[live], width[live]
    sub_lo, sub_hi = sub_lo[live], sub_hi[live]
    nb = z_lo.size

    def integrand(t):
        z = z_lo[:, None] + width[:, None] * t
        n = t.shape[1]
        shift = z[:, :, None] * c[None, None, :]
        clo = ((sub_lo[:, None, :] - shift) / sd).reshape(nb * n, -1)
        chi = ((sub_hi[:, None, :] - shift) / sd).reshape(nb * n, -1)
        inner = _rect(clo, chi, sub, abs_tol).reshape(nb, n)
        return width[:, None] * np.exp(-0.5 * z * z) / _SQRT_TWO_PI * inner

    out[live] = _adaptive_unit_integral(integrand, nb, abs_tol)
    return np.clip(out, 0.0, 1.0)


def _as_corr(corr) -> np.ndarray:
    if isinstance(corr, CorrelationMatrix):
        return corr.entries
    return CorrelationMatrix(np.asarray(corr, float)).entries


def mvn_rectangle(lower, upper, corr, abs_tol: float = 1e-11):
    """P(lower <= Z <= upper) for Z ~ N(0, corr), dimension <= 4.

    ``lower``/``upper`` may carry a leading batch axis; all members share
    ``corr``.  Infinite limits are allowed.
    """
    r = _as_corr(corr)
    lo = np.asarray(lower, float)
    hi = np.asarray(upper, float)
    lo, hi = np.broadcast_arrays(lo, hi)
    single = lo.ndim == 1
    lo2 = np.atleast_2d(lo).astype(float)
    hi2 = np.atleast_2d(hi).astype(float)
    if lo2.shape[1] != r.shape[0]:
        raise ValueError("limit vectors do not match the correlation dimension")
    out = _rect(lo2, hi2, r, abs_tol)
    return float(out[0]) if single else out


def multinorm_cdf(upper, corr, abs_tol: float = 1e-11):
    """P(Z <= upper) for Z ~ N(0, corr), dimension <= 4."""
    hi = np.asarray(upper, float)
    return mvn_rectangle(np.full_like(hi, -np.inf), hi, corr, abs_tol)


# ---------------------------------------------------------------------------
# root finding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise BracketError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")


class _Hit(Exception):
    def __init__(self, x):
        self.x = x


def _checked(f: Callable[[float], float]) -> Callable[[float], float]:
    def g(x):
        v = float(f(x))
        if not math.isfinite(v):
            raise EvaluationError(f"target function returned {v} at x={x!r}")
        return v
    return g


def find_root(
    f: Callable[[float], float],
    bracket: Bracket,
    x_tol: float = 1e-12,
    f_tol: float = 0.0,
) -> float:
    """Root of ``f`` on ``bracket`` by Brent's method.

    Stops as soon as ``|f(x)| <= f_tol`` or the bracket is narrower than
    ``x_tol``.
    """
    g = _checked(f)
    flo, fhi = g(bracket.lo), g(bracket.hi)
    if flo == 0.0:
        return bracket.lo
    if fhi == 0.0:
        return bracket.hi
    if (flo > 0) == (fhi > 0):
        raise BracketError(
            f"no sign change on [{bracket.lo}, {bracket.hi}]: f = {flo}, {fhi}"
        )

    def stopping(x):
        v = g(x)
        if abs(v) <= f_tol:
            raise _Hit(x)
        return v

    try:
        return brentq(stopping, bracket.lo, bracket.hi, xtol=x_tol, maxiter=500)
    except _Hit as hit:
        return hit.x


def expand_bracket(
    f: Callable[[float], float],
    start: float,
    *,
    increasing: bool = True,
    factor: float = 2.0,
    lower_limit: float = 0.0,
    upper_limit: float = math.inf,
) -> Bracket:
    """Grow a bracket geometrically from ``start`` (> 0) until monotone ``f`` changes sign.

    Raises :class:`BracketError` once the search would leave
    ``(lower_limit, upper_limit]``.
    """
    g = _checked(f)
    prev = float(start)
    v = g(prev)
    if v == 0.0:
        return Bracket(prev * (1 - 1e-12), prev * (1 + 1e-12))
    going_up = (v < 0) == increasing
    while True:
        nxt = prev * factor if going_up else prev / factor
        if nxt > upper_limit or nxt <= lower_limit:
            raise BracketError(
                f"no sign change found between {min(prev, start)} and {max(prev, start)}"
            )
        w = g(nxt)
        if (w > 0) != (v > 0) or w == 0.0:
            return Bracket(min(prev, nxt), max(prev, nxt))
        prev = nxt
