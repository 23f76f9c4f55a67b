"""Radial scaling functions and absorption profiles.

The complex change of variables r -> r + i*f_theta(r) is driven by a scaling
function f that vanishes identically below R1 and ramps up smoothly.  Two
polynomial families are built in: a one-sided cubic (r - R1)^3, and a
normalized degree-eight polynomial that merges with the identity at R2 so
the stretched coordinate becomes r*(1 + i*tan(theta)) from R2 on.  A third,
experimental kind interpolates user-tabulated samples.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "THETA_EPS",
    "KINDS",
    "ScalingFn",
    "PmlProfile",
    "make_scaling",
    "parse_scaling",
    "eval_f",
    "eval_f_prime",
    "sigma_tilde",
]

# Angles are clamped this far inside (0, pi/2) before any tangent is taken.
THETA_EPS = 1.0e-3

KINDS = ("cubic", "poly8", "linear_tail_custom")


@dataclass(frozen=True)
class ScalingFn:
    """A radial scaling function f with its activation window [R1, R2].

    Instances are immutable; build them with :func:`make_scaling`.
    For kind "poly8", ``norm`` holds the exact normalization integral
    int_{R1}^{R2} (t-R1)^3 (R2-t)^3 dt = (R2-R1)^7 / 140.
    """

    kind: str
    R1: float
    R2: float
    norm: float = 0.0
    spline: object | None = field(default=None, repr=False, compare=False)
    spline_deriv: object | None = field(default=None, repr=False, compare=False)


def make_scaling(kind: str, R1: float, R2: float, samples=None) -> ScalingFn:
    """Construct a scaling function of the given kind on the window [R1, R2].

    Parameters
    ----------
    kind : str
        One of "cubic", "poly8", "linear_tail_custom".
    R1, R2 : float
        Activation radius and merge radius, 0 < R1 < R2.
    samples : tuple of arrays, optional
        Only for kind "linear_tail_custom": (r, f, fp) tables covering
        [R1, R2], interpolated by a cubic Hermite spline and extended
        linearly beyond R2.
    """
    R1 = float(R1)
    R2 = float(R2)
    if not R1 > 0.0:
        raise ValueError(f"scaling radii must satisfy 0 < R1, got R1={R1}")
    if not R2 > R1:
        raise ValueError(f"scaling radii must satisfy R1 < R2, got R1={R1}, R2={R2}")
    if kind == "cubic":
        return ScalingFn("cubic", R1, R2)
    if kind == "poly8":
        return ScalingFn("poly8", R1, R2, norm=(R2 - R1) ** 7 / 140.0)
    if kind == "linear_tail_custom":
        if samples is None:
            raise ValueError("linear_tail_custom requires (r, f, fp) sample tables")
        return _make_custom(R1, R2, samples)
    raise ValueError(f"unknown scaling kind {kind!r}, expected one of {KINDS}")


def _make_custom(R1: float, R2: float, samples) -> ScalingFn:
    # Tabulated profile: cubic Hermite interpolation honoring the supplied
    # slopes, constant zero below R1, linear continuation above R2.  The
    # interpolant is only as smooth as the table; the main error estimates
    # need C^3, which point samples cannot certify.
    from scipy.interpolate import CubicHermiteSpline

    r, f, fp = (np.asarray(a, dtype=float) for a in samples)
    if r.ndim != 1 or r.shape != f.shape or r.shape != fp.shape:
        raise ValueError("samples must be three equal-length 1D arrays (r, f, fp)")
    if r.size < 2 or np.any(np.diff(r) <= 0.0):
        raise ValueError("sample radii must be strictly increasing, length >= 2")
    if not (math.isclose(r[0], R1) and math.isclose(r[-1], R2)):
        raise ValueError("sample radii must span exactly [R1, R2]")
    if f[0] != 0.0 or fp[0] != 0.0:
        raise ValueError("samples must start with f(R1) = fp(R1) = 0")
    if np.any(fp < 0.0):
        raise ValueError("tabulated slopes must be nonnegative")
    warnings.warn(
        "linear_tail_custom is experimental: smoothness beyond the tabulated "
        "data is not guaranteed",
        UserWarning,
        stacklevel=3,
    )
    spline = CubicHermiteSpline(r, f, fp)
    return ScalingFn(
        "linear_tail_custom",
        float(r[0]),
        float(r[-1]),
        spline=spline,
        spline_deriv=spline.derivative(),
    )


def parse_scaling(text: str) -> ScalingFn:
    """Parse a "kind:R1:R2" spec string, e.g. "poly8:3:5"."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"scaling spec must look like kind:R1:R2, got {text!r}")
    kind = parts[0].strip()
    if kind == "linear_tail_custom":
        raise ValueError("linear_tail_custom needs sample tables; build it via make_scaling")
    try:
        R1, R2 = float(parts[1]), float(parts[2])
    except ValueError:
        raise ValueError(f"scaling radii in {text!r} are not numbers") from None
    return make_scaling(kind, R1, R2)


def _poly8_ramp(sf: ScalingFn, r):
    # Antiderivative of (t-R1)^3 (R2-t)^3 from R1 to min(r, R2), over norm.
    # With w = R2-R1 and s = clip(r-R1, 0, w):
    #   int_0^s u^3 (w-u)^3 du = s^4 (w^3/4 - (3/5) w^2 s + (w/2) s^2 - s^3/7)
    w = sf.R2 - sf.R1
    s = np.clip(r - sf.R1, 0.0, w)
    p = s**4 * (w**3 / 4.0 - 0.6 * w**2 * s + 0.5 * w * s**2 - s**3 / 7.0)
    return p / sf.norm


def eval_f(sf: ScalingFn, r):
    """Evaluate f at r (scalar or array, r >= 0)."""
    arr = np.asarray(r, dtype=float)
    if sf.kind == "cubic":
        out = np.where(arr > sf.R1, (arr - sf.R1) ** 3, 0.0)
    elif sf.kind == "poly8":
        # Return r itself beyond R2 so f(r) = r holds bit-exactly there.
        out = np.where(arr >= sf.R2, arr, arr * _poly8_ramp(sf, arr))
    else:
        inside = sf.spline(np.clip(arr, sf.R1, sf.R2))
        f_end = float(sf.spline(sf.R2))
        slope_end = float(sf.spline_deriv(sf.R2))
        out = np.where(arr >= sf.R2, f_end + slope_end * (arr - sf.R2), inside)
        out = np.where(arr <= sf.R1, 0.0, out)
    return out if out.ndim else float(out)


def eval_f_prime(sf: ScalingFn, r):
    """Evaluate the analytic derivative f' at r (scalar or array)."""
    arr = np.asarray(r, dtype=float)
    if sf.kind == "cubic":
        out = np.where(arr > sf.R1, 3.0 * (arr - sf.R1) ** 2, 0.0)
    elif sf.kind == "poly8":
        w = sf.R2 - sf.R1
        s = np.clip(arr - sf.R1, 0.0, w)
        bump = arr * s**3 * (w - s) ** 3 / sf.norm
        out = np.where(arr >= sf.R2, 1.0, _poly8_ramp(sf, arr) + bump)
        out = np.where(arr <= sf.R1, 0.0, out)
    else:
        out = np.asarray(sf.spline_deriv(np.clip(arr, sf.R1, sf.R2)), dtype=float)
        out = np.where(arr >= sf.R2, float(sf.spline_deriv(sf.R2)), out)
        out = np.where(arr <= sf.R1, 0.0, out)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PmlProfile:
    """A scaling function paired with a scaling angle theta.

    theta is clamped to [THETA_EPS, pi/2 - THETA_EPS] at construction, before
    any tangent is evaluated.
    """

    scaling: ScalingFn
    theta: float

    def __post_init__(self):
        th = min(max(float(self.theta), THETA_EPS), 0.5 * math.pi - THETA_EPS)
        object.__setattr__(self, "theta", th)

    @property
    def tan_theta(self) -> float:
        return math.tan(self.theta)

    def f_theta(self, r):
        """f_theta(r) = tan(theta) * f(r)."""
        return self.tan_theta * eval_f(self.scaling, r)

    def f_theta_prime(self, r):
        """f_theta'(r) = tan(theta) * f'(r)."""
        return self.tan_theta * eval_f_prime(self.scaling, r)


def sigma_tilde(profile: PmlProfile, r):
    """Absorption coefficient f_theta(r)/r used in the sigma-notation literature.

    Equals tan(theta) wherever f(r) = r, and 0 below R1.
    """
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("sigma_tilde needs r > 0")
    out = profile.f_theta(arr) / arr
    return out if np.ndim(out) else float(out)
