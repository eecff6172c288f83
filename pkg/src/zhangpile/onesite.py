"""Stationary law of the single-site chain with additions uniform on [0, b].

The chain adds a uniform amount each step and resets to zero whenever it
reaches 1. Its stationary distribution function has an atom f0 at zero and,
on (0, 1], the closed form

    F(h) = f0 * sum_{k=0}^{m_h} (-1)^k / (b^k k!) * (h - k b)^k * exp((h - k b)/b)

with m_h = ceil(h/b) - 1 and f0 fixed by F(1) = 1. The density jumps at
h = b. F also satisfies an averaging identity,

    F(h) = (1/b) * int_{max(0, h-b)}^{h} F(w) dw + f0,

which :meth:`OneSiteDistribution.delay_residual` checks by quadrature, and a
renewal representation

    F(h) = (E[N(h/b)] + 1) / (E[N(1/b)] + 1),

where N(s) counts partial sums of i.i.d. uniform(0, 1) variables not
exceeding s; :func:`renewal_oracle` estimates that ratio by Monte Carlo and
is the independent check on the closed form.

The alternating sum loses all float64 precision for small b (terms grow like
exp(1/b)), so evaluation switches to mpmath below b = 0.1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

__all__ = ["OneSiteDistribution", "RenewalEstimate", "renewal_oracle"]

_FLOAT_PATH_MIN_B = 0.1


def _adaptive_simpson(f, a, b, tol=1e-9, max_depth=40):
    """Adaptive composite Simpson quadrature for a smooth integrand."""
    if a == b:
        return 0.0

    def recurse(lo, hi, flo, fmid, fhi, whole, tol, depth):
        mid = 0.5 * (lo + hi)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm = f(lm)
        frm = f(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return recurse(lo, mid, flo, flm, fmid, left, 0.5 * tol, depth - 1) + recurse(
            mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth - 1
        )

    mid = 0.5 * (a + b)
    fa, fm, fb = f(a), f(mid), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return recurse(a, b, fa, fm, fb, whole, tol, max_depth)


class OneSiteDistribution:
    """Closed-form stationary distribution of the (1, [0, b]) chain."""

    def __init__(self, b: float):
        if not 0.0 < b <= 1.0:
            raise ValueError(f"b must lie in (0, 1], got {b}")
        self.b = float(b)
        self._use_mp = self.b < _FLOAT_PATH_MIN_B
        if self._use_mp:
            # Digits needed scale like the magnitude exp(1/b) of the largest term.
            self._dps = 40 + int(0.5 / self.b)
            with mpmath.workdps(self._dps):
                self._f0_mp = 1 / self._unnorm_mp(mpmath.mpf(1))
                self.f0 = float(self._f0_mp)
        else:
            self.f0 = 1.0 / self._unnorm_float(1.0)

    # -- closed-form evaluation -------------------------------------------

    def _unnorm_float(self, h: float) -> float:
        b = self.b
        terms = []
        k = 0
        while k * b < h:
            s = (h - k * b) / b
            terms.append((-1.0) ** k / math.factorial(k) * s**k * math.exp(s))
            k += 1
        return math.fsum(terms)

    def _unnorm_mp(self, h):
        b = mpmath.mpf(self.b)
        total = mpmath.mpf(0)
        k = 0
        while k * b < h:
            s = (h - k * b) / b
            total += (-1) ** k / mpmath.factorial(k) * s**k * mpmath.exp(s)
            k += 1
        return total

    def _unnorm_array(self, h: np.ndarray) -> np.ndarray:
        b = self.b
        out = np.zeros_like(h)
        k = 0
        while k * b < 1.0 or k == 0:
            mask = k * b < h
            if not mask.any():
                break
            s = np.where(mask, (h - k * b) / b, 0.0)
            out[mask] += ((-1.0) ** k / math.factorial(k) * s**k * np.exp(s))[mask]
            k += 1
        return out

    def cdf(self, h):
        """Distribution function; accepts scalars or arrays."""
        arr = np.asarray(h, dtype=float)
        scalar = arr.ndim == 0
        x = np.atleast_1d(arr).copy()
        out = np.empty_like(x)
        out[x < 0.0] = 0.0
        out[x == 0.0] = self.f0
        out[x > 1.0] = 1.0
        mid = (x > 0.0) & (x <= 1.0)
        if mid.any():
            if self._use_mp:
                with mpmath.workdps(self._dps):
                    out[mid] = [float(self._f0_mp * self._unnorm_mp(mpmath.mpf(v))) for v in x[mid]]
            else:
                out[mid] = self.f0 * self._unnorm_array(x[mid])
        return float(out[0]) if scalar else out

    def pdf(self, h, side: str = "+"):
        """Density of the continuous part on (0, 1).

        The density has a jump at each multiple of b (essentially at h = b);
        exactly on such a point ``side`` selects the one-sided value. The
        endpoints 0 and 1 return the obvious one-sided limits.
        """
        if side not in ("+", "-"):
            raise ValueError("side must be '+' or '-'")
        arr = np.asarray(h, dtype=float)
        scalar = arr.ndim == 0
        x = np.atleast_1d(arr)
        if np.any((x < 0.0) | (x > 1.0)):
            raise ValueError("the density is defined on [0, 1]")
        out = np.array([self._pdf_scalar(v, side) for v in x])
        return float(out[0]) if scalar else out

    def _pdf_scalar(self, h: float, side: str) -> float:
        b = self.b
        if h == 0.0:
            return self.f0 / b  # right limit of the exponential branch
        if self._use_mp:
            with mpmath.workdps(self._dps):
                bm = mpmath.mpf(self.b)
                total = mpmath.mpf(0)
                k = 0
                while k * bm < h or (side == "+" and k * bm == h):
                    s = (h - k * bm) / bm
                    poly = s**k + (k * s ** (k - 1) if k >= 1 else 0)
                    total += (-1) ** k / mpmath.factorial(k) * mpmath.exp(s) * poly
                    k += 1
                return float(self._f0_mp / bm * total)
        terms = []
        k = 0
        while k * b < h or (side == "+" and k * b == h):
            s = (h - k * b) / b
            poly = s**k + (k * s ** (k - 1) if k >= 1 else 0.0)
            terms.append((-1.0) ** k / math.factorial(k) * math.exp(s) * poly)
            k += 1
        return self.f0 / b * math.fsum(terms)

    # -- independent checks ------------------------------------------------

    def delay_residual(self, h: float, tol: float = 1e-9) -> float:
        """F(h) minus the averaging identity's right-hand side.

        Zero (up to quadrature error) exactly when the closed form solves the
        stationarity equation.
        """
        if not 0.0 <= h <= 1.0:
            raise ValueError("the identity holds on [0, 1]")
        if h == 0.0:
            return 0.0
        lo = max(0.0, h - self.b)
        # Split at the knots where the series gains a term.
        knots = [lo]
        k = int(math.floor(lo / self.b)) + 1
        while k * self.b < h:
            if k * self.b > lo:
                knots.append(k * self.b)
            k += 1
        knots.append(h)
        integral = sum(
            _adaptive_simpson(lambda w: self.cdf(w), a, c, tol=tol)
            for a, c in zip(knots[:-1], knots[1:])
        )
        return self.cdf(h) - integral / self.b - self.f0

    def delay_residual_density(self, h: float) -> float:
        """Density form of the identity on [b, 1]: f(h) - (F(h) - F(h-b))/b."""
        if not self.b <= h <= 1.0:
            raise ValueError("the density form holds on [b, 1]")
        return self.pdf(h, side="+") - (self.cdf(h) - self.cdf(h - self.b)) / self.b

    def sup_distance_to_samples(self, samples) -> float:
        """Kolmogorov distance between the empirical law of ``samples`` and
        this distribution (ties at the zero atom handled exactly)."""
        xs = np.asarray(samples, dtype=float)
        n = xs.size
        if n == 0:
            raise ValueError("need at least one sample")
        vals, counts = np.unique(xs, return_counts=True)
        cum = np.cumsum(counts)
        fv = self.cdf(vals)
        f_left = np.where(vals == 0.0, 0.0, fv)  # left limits: only 0 carries mass
        upper = np.abs(cum / n - fv).max()
        lower = np.abs((cum - counts) / n - f_left).max()
        return float(max(upper, lower))


@dataclass(frozen=True)
class RenewalEstimate:
    """Monte Carlo estimate of the stationary CDF via the renewal ratio."""

    h: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    samples: int


def renewal_oracle(b: float, h, samples: int, rng: np.random.Generator) -> RenewalEstimate:
    """Estimate F(h) as (mean N(h/b) + 1) / (mean N(1/b) + 1) over
    ``samples`` independent renewal paths with uniform(0, 1) increments.

    Standard errors come from the delta method with the empirical covariance
    between numerator and denominator counts (both read off the same paths).
    Accepts a scalar or a grid of h values in [0, 1].
    """
    if samples < 1:
        raise ValueError("need at least one sample path")
    if not 0.0 < b <= 1.0:
        raise ValueError(f"b must lie in (0, 1], got {b}")
    h_arr = np.atleast_1d(np.asarray(h, dtype=float))
    scalar = np.asarray(h).ndim == 0
    if np.any((h_arr < 0.0) | (h_arr > 1.0)):
        raise ValueError("h must lie in [0, 1]")

    s_max = 1.0 / b
    queries = np.append(h_arr / b, s_max)
    order = np.argsort(queries, kind="stable")
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    sorted_q = queries[order]
    g_last = int(inv[-1])
    n_q = sorted_q.size

    sum_n = np.zeros(n_q)
    sum_n2 = np.zeros(n_q)
    sum_cross = np.zeros(n_q)

    base_cols = int(2.2 * s_max) + 16
    rows_per_chunk = max(1, int(4_000_000 // base_cols))
    done = 0
    while done < samples:
        rows = min(rows_per_chunk, samples - done)
        partial = np.cumsum(rng.random((rows, base_cols)), axis=1)
        while partial[:, -1].min() <= s_max:
            extra = np.cumsum(rng.random((rows, 16)), axis=1)
            partial = np.concatenate([partial, partial[:, -1:] + extra], axis=1)
        slot = np.searchsorted(sorted_q, partial, side="left")
        offsets = np.arange(rows)[:, None] * (n_q + 1)
        per_row = np.bincount((slot + offsets).ravel(), minlength=rows * (n_q + 1))
        counts = np.cumsum(per_row.reshape(rows, n_q + 1)[:, :-1], axis=1)
        sum_n += counts.sum(axis=0)
        sum_n2 += (counts.astype(float) ** 2).sum(axis=0)
        sum_cross += (counts * counts[:, g_last : g_last + 1]).sum(axis=0)
        done += rows

    mean_n = sum_n / samples
    var_n = np.maximum(sum_n2 / samples - mean_n**2, 0.0)
    cov = sum_cross / samples - mean_n * mean_n[g_last]
    denom = mean_n[g_last] + 1.0
    ratio = (mean_n + 1.0) / denom
    var_ratio = (var_n + ratio**2 * var_n[g_last] - 2.0 * ratio * cov) / (samples * denom**2)
    stderr = np.sqrt(np.maximum(var_ratio, 0.0))

    est = ratio[inv[:-1]]
    se = stderr[inv[:-1]]
    if scalar:
        return RenewalEstimate(h=h_arr[0], estimate=float(est[0]), stderr=float(se[0]), samples=samples)
    return RenewalEstimate(h=h_arr, estimate=est, stderr=se, samples=samples)
