"""Pointwise decay-rate density of a radial absorbing layer.

For the radially scaled Helmholtz operator the layer absorbs an outgoing
mode at least like exp(-k * integral of phi), where the density phi at
radius r is an infimum over a real parameter t that tracks the worst
angular-momentum-to-frequency ratio.  This module evaluates phi through
the closed-form minimizer, integrates it adaptively, inverts the integral
for the threshold angle, and assembles predicted error exponents.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .scaling import THETA_EPS, PmlProfile, ScalingFn, eval_f, eval_f_prime

__all__ = [
    "PhiCondition",
    "QuadratureError",
    "RatePrediction",
    "RateQuery",
    "Theta0Result",
    "t_min",
    "phi",
    "phi_oracle_scan",
    "phi_condition_holds",
    "integral_phi",
    "theta0",
    "predicted_exponent",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RateQuery:
    """One evaluation request: profile, dimension, radius.

    Dimension 1 bypasses the minimization entirely; phi is then just the
    derivative of the scaled coordinate's imaginary part.
    """

    profile: PmlProfile
    d: int
    r: float

    def evaluate(self) -> float:
        return phi(self.profile, self.d, self.r)


@dataclass(frozen=True)
class PhiCondition:
    """Outcome of the closed-form test for phi = f_theta'.

    Truthiness is the test itself; ``degenerate`` marks radii where f or f'
    vanish and the comparison is vacuous (reported as not holding).
    """

    holds: bool
    degenerate: bool = False

    def __bool__(self) -> bool:
        return self.holds


class Theta0Result(float):
    """Threshold angle; ``saturated`` is set when clamped at pi/2 - eps."""

    def __new__(cls, value: float, saturated: bool = False):
        obj = super().__new__(cls, value)
        obj.saturated = saturated
        return obj


class QuadratureError(RuntimeError):
    """Adaptive quadrature ran out of subdivisions; carries the partial value."""

    def __init__(self, message: str, partial: float):
        super().__init__(f"{message} (partial estimate {partial!r})")
        self.partial = partial


@dataclass(frozen=True)
class RatePrediction:
    """Predicted error exponent k*((2-eta)*integral_phi - 3*Lambda)."""

    k: float
    integral_phi: float
    Lambda: float
    eta: float
    exponent: float
    bound: float
    no_decay: bool


def _sz(profile: PmlProfile, r: float) -> tuple[complex, complex]:
    # stretched coordinate z = r + i f_theta and its derivative 1 + i f_theta'
    return (
        complex(r, profile.f_theta(r)),
        complex(1.0, profile.f_theta_prime(r)),
    )


def t_min(profile: PmlProfile, r: float) -> float:
    """Minimizing t of the decay-rate infimum at radius r (dimension >= 2).

    Zero whenever Im((1 + i f_theta')(r - i f_theta)^2) <= 0; otherwise the
    ratio Im(s^2 zbar^4) / Im(s^2 zbar^2) clipped at zero.  The two branches
    meet continuously, and an exactly vanishing denominator is resolved by
    that continuity.
    """
    z, s = _sz(profile, float(r))
    zb = z.conjugate()
    if (s * zb * zb).imag <= 0.0:
        return 0.0
    s2zb2 = s * s * zb * zb
    den = s2zb2.imag
    if den == 0.0:
        return 0.0
    return max((s2zb2 * zb * zb).imag / den, 0.0)


def phi(profile: PmlProfile, d: int, r: float) -> float:
    """Decay-rate density at radius r in dimension d.

    d=1 returns f_theta'(r).  For d in {2, 3} the infimum over t >= 0 of
    |Im((1 + i f_theta') sqrt(1 - t/(r + i f_theta)^2))| is evaluated at the
    closed-form minimizer, with the principal square root.
    """
    if d == 1:
        return float(profile.f_theta_prime(float(r)))
    if d not in (2, 3):
        raise ValueError(f"dimension must be 1, 2, or 3, got {d}")
    r = float(r)
    if r <= 0.0:
        raise ValueError("phi needs r > 0 in dimension >= 2")
    z, s = _sz(profile, r)
    t = t_min(profile, r)
    return abs((s * cmath.sqrt(1.0 - t / (z * z))).imag)


def _phi_array(profile: PmlProfile, d: int, r) -> np.ndarray:
    """Vectorized phi over an array of radii (same branch logic as phi)."""
    r = np.asarray(r, dtype=float)
    if d == 1:
        return np.asarray(profile.f_theta_prime(r), dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("phi needs r > 0 in dimension >= 2")
    z = r + 1j * np.asarray(profile.f_theta(r))
    s = 1.0 + 1j * np.asarray(profile.f_theta_prime(r))
    zb = np.conj(z)
    active = (s * zb * zb).imag > 0.0
    s2zb2 = s * s * zb * zb
    num = (s2zb2 * zb * zb).imag
    den = s2zb2.imag
    ratio = np.zeros_like(num)
    ok = den != 0.0
    ratio[ok] = num[ok] / den[ok]
    tm = np.where(active, np.maximum(ratio, 0.0), 0.0)
    return np.abs((s * np.sqrt(1.0 - tm / (z * z))).imag)


def _scan_values(profile: PmlProfile, r: float):
    z, s = _sz(profile, float(r))
    z2 = z * z

    def g(t: float) -> float:
        return abs((s * cmath.sqrt(1.0 - t / z2)).imag)

    return z, s, g


def _golden_min(g, lo: float, hi: float, iters: int = 80) -> tuple[float, float]:
    # plain two-evaluation golden-section shrink; returns (argmin, min)
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = g(x1), g(x2)
    for _ in range(iters):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = g(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = g(x2)
    mid = 0.5 * (lo + hi)
    return mid, min(f1, f2, g(mid))


def phi_oracle_scan(profile: PmlProfile, d: int, r: float, n_scan: int = 10_000) -> float:
    """Brute-force evaluation of the decay-rate infimum, for cross-checks.

    Scans t over [0, 10 |r + i f_theta|^2] at n_scan points and refines the
    best bracket by golden section.  Independent of the closed-form
    minimizer; used as the test oracle.
    """
    if d not in (2, 3):
        raise ValueError("the scan oracle applies to dimension >= 2 only")
    r = float(r)
    if r <= 0.0:
        raise ValueError("the scan oracle needs r > 0")
    z, s, g = _scan_values(profile, r)
    tmax = 10.0 * abs(z) ** 2
    ts = np.linspace(0.0, tmax, n_scan)
    vals = np.abs((s * np.sqrt(1.0 - ts / (z * z))).imag)
    i = int(np.argmin(vals))
    lo = ts[i - 1] if i > 0 else ts[0]
    hi = ts[i + 1] if i + 1 < n_scan else ts[-1]
    _, refined = _golden_min(g, float(lo), float(hi))
    return min(float(vals[i]), refined)


def _scan_argmin(profile: PmlProfile, r: float, n_scan: int = 10_000) -> float:
    """Argmin counterpart of phi_oracle_scan (test oracle for t_min)."""
    z, s, g = _scan_values(profile, float(r))
    tmax = 10.0 * abs(z) ** 2
    ts = np.linspace(0.0, tmax, n_scan)
    vals = np.abs((s * np.sqrt(1.0 - ts / (z * z))).imag)
    i = int(np.argmin(vals))
    lo = ts[i - 1] if i > 0 else ts[0]
    hi = ts[i + 1] if i + 1 < n_scan else ts[-1]
    t_best, _ = _golden_min(g, float(lo), float(hi))
    return t_best


def _scan_min_array(profile: PmlProfile, r, n_scan: int = 2000, iters: int = 70) -> np.ndarray:
    """Vectorized scan oracle over an array of radii.

    Same algorithm as phi_oracle_scan (coarse scan plus golden-section
    refinement), run in lockstep across all radii so that quadrature-grade
    sweeps stay affordable.
    """
    r = np.asarray(r, dtype=float)
    fz = np.asarray(profile.f_theta(r))
    fp = np.asarray(profile.f_theta_prime(r))
    z = r + 1j * fz
    s = 1.0 + 1j * fp
    z2 = z * z
    tmax = 10.0 * np.abs(z) ** 2

    def val(t):
        return np.abs((s * np.sqrt(1.0 - t / z2)).imag)

    frac = np.linspace(0.0, 1.0, n_scan)
    vals = val(frac[:, None] * tmax[None, :])
    i = np.argmin(vals, axis=0)
    vmin = np.min(vals, axis=0)
    lo = frac[np.maximum(i - 1, 0)] * tmax
    hi = frac[np.minimum(i + 1, n_scan - 1)] * tmax
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = val(x1), val(x2)
    for _ in range(iters):
        shrink_hi = f1 <= f2
        hi = np.where(shrink_hi, x2, hi)
        lo = np.where(shrink_hi, lo, x1)
        x1 = hi - _INVPHI * (hi - lo)
        x2 = lo + _INVPHI * (hi - lo)
        f1, f2 = val(x1), val(x2)
    return np.minimum(vmin, np.minimum(f1, f2))


def phi_condition_holds(profile: PmlProfile, r: float) -> PhiCondition:
    """Closed-form test for whether phi(r) equals f_theta'(r) in d >= 2.

    Holds iff tan(theta)^2 >= r^2/f^2 - 2r/(f' f).  Radii where f or f'
    vanish make the right side infinite; those return (False, degenerate).
    """
    r = float(r)
    f = eval_f(profile.scaling, r)
    fp = eval_f_prime(profile.scaling, r)
    if f == 0.0 or fp == 0.0:
        return PhiCondition(False, degenerate=True)
    rhs = r * r / (f * f) - 2.0 * r / (fp * f)
    return PhiCondition(profile.tan_theta**2 >= rhs)


def _condition_cuts(profile: PmlProfile, a: float, b: float, n: int = 257) -> list[float]:
    # locate regime changes of phi_condition_holds inside (a, b) by bisection
    rs = np.linspace(a, b, n)
    flags = [bool(phi_condition_holds(profile, float(x))) for x in rs]
    cuts = []
    for i in range(n - 1):
        if flags[i] != flags[i + 1]:
            lo, hi = float(rs[i]), float(rs[i + 1])
            state = flags[i]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if bool(phi_condition_holds(profile, mid)) == state:
                    lo = mid
                else:
                    hi = mid
            cuts.append(0.5 * (lo + hi))
    return cuts


def _adaptive_simpson(g, a, b, fa, fm, fb, whole, tol, depth, budget) -> tuple[float, bool]:
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = g(lm), g(rm)
    budget[0] -= 2
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0, True
    if depth <= 0 or budget[0] <= 0:
        return left + right + delta / 15.0, False
    v1, ok1 = _adaptive_simpson(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, budget)
    v2, ok2 = _adaptive_simpson(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, budget)
    return v1 + v2, ok1 and ok2


def _integrate_piece(g, a, b, tol, budget, depth=40) -> tuple[float, bool]:
    if b <= a:
        return 0.0, True
    fa, fb = g(a), g(b)
    m = 0.5 * (a + b)
    fm = g(m)
    budget[0] -= 3
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _adaptive_simpson(g, a, b, fa, fm, fb, whole, tol, depth, budget)


def integral_phi(
    profile: PmlProfile,
    d: int,
    R_lo: float,
    R_hi: float,
    tol: float = 1e-10,
    max_evals: int = 500_000,
) -> float:
    """Integral of phi over [R_lo, R_hi] by adaptive Simpson quadrature.

    The interval is split at R2 and at regime-change points of
    phi_condition_holds, where the integrand has a kink.  Raises
    QuadratureError (carrying the partial estimate) if the subdivision
    budget runs out before reaching the absolute tolerance.
    """
    R_lo, R_hi = float(R_lo), float(R_hi)
    R1 = profile.scaling.R1
    if R_lo < R1 - 1e-12:
        raise ValueError(f"integration starts inside the layer: need R_lo >= R1={R1}")
    if R_hi < R_lo:
        raise ValueError("need R_lo <= R_hi")
    if R_hi == R_lo:
        return 0.0
    if tol <= 0.0:
        raise ValueError("tol must be positive")

    cut_points = {R_lo, R_hi}
    R2 = profile.scaling.R2
    if R_lo < R2 < R_hi:
        cut_points.add(R2)
    if d >= 2:
        for c in _condition_cuts(profile, R_lo, R_hi):
            if R_lo < c < R_hi:
                cut_points.add(c)
    pieces = sorted(cut_points)

    def g(r: float) -> float:
        return phi(profile, d, r)

    total = 0.0
    all_ok = True
    span = R_hi - R_lo
    budget = [max_evals]
    for a, b in zip(pieces[:-1], pieces[1:]):
        piece_tol = tol * max((b - a) / span, 1e-3)
        value, ok = _integrate_piece(g, a, b, piece_tol, budget)
        total += value
        all_ok = all_ok and ok
    if not all_ok:
        raise QuadratureError("adaptive quadrature did not converge", total)
    return total


def theta0(
    Lambda: float,
    scaling: ScalingFn,
    d: int,
    R_tr: float,
    tol: float = 1e-8,
) -> Theta0Result:
    """Largest angle whose decay-rate integral stays at or below Lambda.

    Bisection over theta in [eps, pi/2 - eps], using monotonicity of the
    integral in theta.  Lambda = 0 returns the eps clamp (the integral is
    positive for every positive angle).  If even the steepest angle cannot
    exceed Lambda, the top of the range is returned flagged ``saturated``.
    """
    if Lambda < 0.0:
        raise ValueError("Lambda must be nonnegative")
    if R_tr <= scaling.R1:
        raise ValueError(f"need R_tr > R1={scaling.R1}")
    lo = THETA_EPS
    hi = 0.5 * math.pi - THETA_EPS
    if Lambda == 0.0:
        return Theta0Result(lo)

    def integral(th: float) -> float:
        return integral_phi(PmlProfile(scaling, th), d, scaling.R1, R_tr, tol=1e-10)

    if integral(hi) <= Lambda:
        return Theta0Result(hi, saturated=True)
    if integral(lo) > Lambda:
        return Theta0Result(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if integral(mid) <= Lambda:
            lo = mid
        else:
            hi = mid
    return Theta0Result(0.5 * (lo + hi))


def predicted_exponent(
    k: float,
    profile: PmlProfile,
    d: int,
    R_tr: float,
    Lambda: float = 0.0,
    eta: float = 0.1,
) -> RatePrediction:
    """Predicted error exponent k*((2-eta)*I - 3*Lambda) with I the phi integral.

    eta = 0 is accepted as the recorded sharp limit (the factor 2 cannot be
    improved); the guaranteed estimates hold for every eta in (0, 2) once k
    is large enough.  A nonpositive exponent is returned flagged
    ``no_decay`` since the bound then guarantees no smallness.
    """
    if k <= 0.0:
        raise ValueError("k must be positive")
    if not 0.0 <= eta < 2.0:
        raise ValueError("eta must lie in [0, 2)")
    if Lambda < 0.0:
        raise ValueError("Lambda must be nonnegative")
    th0 = theta0(Lambda, profile.scaling, d, R_tr, tol=1e-6)
    if profile.theta <= th0 + THETA_EPS:
        warnings.warn(
            "profile angle is not above the threshold angle; the exponential "
            "estimate carries no guarantee here",
            UserWarning,
            stacklevel=2,
        )
    I = integral_phi(profile, d, profile.scaling.R1, R_tr)
    exponent = k * ((2.0 - eta) * I - 3.0 * Lambda)
    return RatePrediction(
        k=float(k),
        integral_phi=I,
        Lambda=float(Lambda),
        eta=float(eta),
        exponent=exponent,
        bound=math.exp(-exponent),
        no_decay=exponent <= 0.0,
    )
