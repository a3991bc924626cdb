"""Hilbert-type singular integral operators.

Every operator comes in two flavours where that makes sense: an exact
closed-form path for step functions (antiderivative formulas, no numerical
principal values) and an independent discretized oracle (FFT multipliers,
quadrature).  Evaluation at a breakpoint of the input is an error: the
operators are defined a.e. and no principal choice of value is canonical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.special import gammaln

from .core import (
    SCALAR,
    Domain,
    DomainError,
    GridFunction,
    NormedSpace,
    PiecewiseFunction,
    _wrap_angle,
)

TWO_PI = 2.0 * math.pi


class SingularPointError(ValueError):
    """Evaluation point coincides with a breakpoint of the input."""


class SingularConfigurationError(ValueError):
    """A directional line is tangent to a box face."""


# ---------------------------------------------------------------------------
# operator kinds (used by the norm estimators and the CLI)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicHilbert:
    tag = "ht"


@dataclass(frozen=True)
class RealHilbert:
    tag = "hr"


@dataclass(frozen=True)
class DiscreteHilbert:
    tag = "hdis"


@dataclass(frozen=True)
class SemidiscreteHilbert:
    eps: float
    tag = "hsemi"

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("lattice spacing eps must be positive")


@dataclass(frozen=True)
class DirectionalHilbert:
    theta: tuple
    tag = "dir"

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        if abs(np.linalg.norm(th) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector (within 1e-12)")
        object.__setattr__(self, "theta", tuple(th))


@dataclass(frozen=True)
class HilbertOperatorTj:
    d: int
    j: int
    tag = "tj"

    def __post_init__(self):
        if not (1 <= self.j <= self.d):
            raise ValueError(f"need 1 <= j <= d, got j={self.j}, d={self.d}")


@dataclass(frozen=True)
class RieszRotations:
    d: int
    j: int
    nodes: int = 256
    tag = "riesz"

    def __post_init__(self):
        if not (1 <= self.j <= self.d):
            raise ValueError(f"need 1 <= j <= d, got j={self.j}, d={self.d}")


@dataclass(frozen=True)
class RieszMultiplier:
    d: int
    j: int
    tag = "rieszfft"

    def __post_init__(self):
        if not (1 <= self.j <= self.d):
            raise ValueError(f"need 1 <= j <= d, got j={self.j}, d={self.d}")


# ---------------------------------------------------------------------------
# periodic Hilbert transform
# ---------------------------------------------------------------------------

def _check_not_breakpoint(t: float, f: PiecewiseFunction, wrap: bool = False):
    tt = _wrap_angle(t) if wrap else t
    for bp in f.breakpoints():
        if tt == bp or (wrap and _wrap_angle(bp) == tt):
            raise SingularPointError(f"t={t} is a breakpoint of the input")


def periodic_hilbert_step(f: PiecewiseFunction, t: float) -> np.ndarray:
    """Conjugate-function transform of a torus step function at angle t.

    For f = sum x_k 1_[a_k, b_k) the value is
    (1/pi) sum x_k ln| sin((t-a_k)/2) / sin((t-b_k)/2) |,
    the antiderivative of the cotangent kernel; the principal-value
    cancellation is analytic.
    """
    if f.domain is not Domain.TORUS:
        raise DomainError("periodic transform needs a torus step function")
    _check_not_breakpoint(t, f, wrap=True)
    t = _wrap_angle(t)
    out = np.zeros(f.space.dim)
    for a, b, v in f.pieces:
        out += v * math.log(abs(math.sin((t - a) / 2.0) / math.sin((t - b) / 2.0)))
    return out / math.pi


def periodic_hilbert_fft(g: GridFunction) -> GridFunction:
    """Fourier-multiplier path: m(k) = -i sgn(k), m(0) = 0, Nyquist zeroed.

    Exact conjugate-function map on trigonometric polynomials below the
    Nyquist mode; requires a power-of-two sample count.
    """
    if g.domain is not Domain.TORUS:
        raise DomainError("FFT path needs a torus grid")
    m = len(g)
    if m & (m - 1) != 0:
        raise ValueError(f"sample count must be a power of two, got {m}")
    spec = np.fft.fft(g.samples, axis=0)
    k = np.fft.fftfreq(m, d=1.0 / m)
    mult = -1j * np.sign(k)
    mult[0] = 0.0
    if m % 2 == 0:
        mult[m // 2] = 0.0  # unpaired Nyquist mode
    out = np.fft.ifft(spec * mult[:, None], axis=0).real
    return GridFunction(Domain.TORUS, out, g.spacing)


# ---------------------------------------------------------------------------
# real-line, discrete, and semidiscrete transforms
# ---------------------------------------------------------------------------

def real_hilbert_step(f: PiecewiseFunction, t: float) -> np.ndarray:
    """(1/pi) p.v. integral of f(s)/(t-s): closed form
    (1/pi) sum x_k ln| (t-a_k)/(t-b_k) |."""
    if f.domain is not Domain.REAL_LINE:
        raise DomainError("real-line transform needs a real-line step function")
    _check_not_breakpoint(t, f)
    out = np.zeros(f.space.dim)
    for a, b, v in f.pieces:
        out += v * math.log(abs((t - a) / (t - b)))
    return out / math.pi


def discrete_hilbert(f: PiecewiseFunction, t: int) -> np.ndarray:
    """(1/pi) sum over s != t of f(s)/(t-s) on the integers."""
    if f.domain is not Domain.INTEGERS:
        raise DomainError("discrete transform needs an integer-supported function")
    t = int(t)
    out = np.zeros(f.space.dim)
    for k, v in f.pieces:
        if k != t:
            out += v / (t - k)
    return out / math.pi


def semidiscrete_hilbert(f: PiecewiseFunction, eps: float, t: float) -> np.ndarray:
    """Lattice Riemann-sum transform (1/pi) sum_{k != 0} eps f(t - eps k)/(eps k).

    f has bounded support, so only finitely many lattice points contribute and
    the sum is exact (no tail truncation needed).  Converges pointwise to the
    real-line transform as eps -> 0.
    """
    if f.domain is not Domain.REAL_LINE:
        raise DomainError("semidiscrete transform needs a real-line step function")
    if not eps > 0:
        raise ValueError("eps must be positive")
    bps = f.breakpoints()
    lo, hi = bps.min(), bps.max()
    # lattice indices k with t - eps*k inside [lo, hi]
    kmin = int(math.ceil((t - hi) / eps))
    kmax = int(math.floor((t - lo) / eps))
    out = np.zeros(f.space.dim)
    for k in range(kmin, kmax + 1):
        if k == 0:
            continue
        out += f.evaluate(t - eps * k) / k
    return out / math.pi


# ---------------------------------------------------------------------------
# Hilbert operators on the half-space
# ---------------------------------------------------------------------------

def hilbert_operator_T(f, x, d: int = 1, j: int = 1, tol: float = 1e-8):
    """Positive-kernel Hilbert operator.

    d = 1: T f(x) = (1/pi) int_{R_+} f(y)/(x+y) dy, closed form
    (1/pi) sum x_k ln((x+b_k)/(x+a_k)) for step input supported in (0, inf).
    d in {2, 3}: kernel c_d (x_j+y_j)/|x+y|^(d+1) with
    c_d = Gamma((d+1)/2)/pi^((d+1)/2), adaptive quadrature over the support
    boxes to absolute tolerance `tol`.
    """
    if d == 1:
        x = float(x)
        if x <= 0:
            raise DomainError("evaluation point must satisfy x > 0")
        if f.domain is not Domain.REAL_LINE:
            raise DomainError("needs a real-line step function on (0, inf)")
        out = np.zeros(f.space.dim)
        for a, b, v in f.pieces:
            if a < 0:
                raise DomainError("support must lie in (0, inf)")
            out += v * math.log((x + b) / (x + a))
        return out / math.pi
    if d not in (2, 3):
        raise ValueError("only d in {1, 2, 3} supported")
    x = np.asarray(x, dtype=float)
    if x.shape != (d,) or x[j - 1] <= 0:
        raise DomainError(f"evaluation point must lie in the half-space x_{j} > 0")
    if not isinstance(f, BoxFunction):
        raise DomainError("d > 1 input must be a BoxFunction")
    c_d = math.exp(gammaln((d + 1) / 2.0)) / math.pi ** ((d + 1) / 2.0)
    out = np.zeros(f.space.dim)
    for lo, hi, v in f.boxes:
        if lo[j - 1] < 0:
            raise DomainError(f"support must lie in the half-space y_{j} > 0")
        if d == 2:
            val, _ = integrate.dblquad(
                lambda y2, y1: (x[j - 1] + (y1, y2)[j - 1])
                / ((x[0] + y1) ** 2 + (x[1] + y2) ** 2) ** 1.5,
                lo[0], hi[0], lo[1], hi[1], epsabs=tol, epsrel=0.0)
        else:
            val, _ = integrate.tplquad(
                lambda y3, y2, y1: (x[j - 1] + (y1, y2, y3)[j - 1])
                / ((x[0] + y1) ** 2 + (x[1] + y2) ** 2 + (x[2] + y3) ** 2) ** 2,
                lo[0], hi[0], lo[1], hi[1], lo[2], hi[2], epsabs=tol, epsrel=0.0)
        out += c_d * val * v
    return out


# ---------------------------------------------------------------------------
# directional transforms and the method of rotations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxFunction:
    """Step function on R^d: disjoint axis-aligned boxes with vector values."""

    boxes: tuple  # of (lo array, hi array, value array)
    space: NormedSpace = SCALAR

    def __post_init__(self):
        cleaned = []
        for lo, hi, v in self.boxes:
            lo = np.asarray(lo, dtype=float)
            hi = np.asarray(hi, dtype=float)
            if lo.shape != hi.shape or np.any(hi <= lo):
                raise ValueError("box needs lo < hi componentwise")
            cleaned.append((lo, hi, self.space.check_vector(v)))
        d = cleaned[0][0].shape[0] if cleaned else 0
        for lo, hi, _ in cleaned:
            if lo.shape[0] != d:
                raise ValueError("all boxes must share a dimension")
        object.__setattr__(self, "boxes", tuple(cleaned))
        object.__setattr__(self, "dim", d)


def _line_segments(f: BoxFunction, x: np.ndarray, theta: np.ndarray):
    """Clip the line {x - t theta} against each box; returns (t0, t1, value) pieces."""
    segs = []
    for lo, hi, v in f.boxes:
        tmin, tmax = -math.inf, math.inf
        for i in range(len(lo)):
            di = -theta[i]
            if di == 0.0:
                if not (lo[i] < x[i] < hi[i]):
                    if x[i] == lo[i] or x[i] == hi[i]:
                        raise SingularConfigurationError(
                            f"line tangent to a box face in coordinate {i}")
                    tmin = math.inf  # misses the box
                    break
                continue
            t_a = (lo[i] - x[i]) / di
            t_b = (hi[i] - x[i]) / di
            if t_a > t_b:
                t_a, t_b = t_b, t_a
            tmin = max(tmin, t_a)
            tmax = min(tmax, t_b)
        if tmin < tmax:
            segs.append((tmin, tmax, v))
    return segs


def directional_hilbert(f, theta, x) -> np.ndarray:
    """H_theta f(x) = (1/pi) p.v. integral of f(x - t theta)/t dt.

    Step input (BoxFunction or 1-D PiecewiseFunction): the line restriction is
    a 1-D step function in t and the real-line closed form applies.  Smooth
    callable input: symmetric principal-value quadrature (see
    `_pv_line_quadrature`).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if abs(np.linalg.norm(theta) - 1.0) > 1e-12:
        raise ValueError("theta must be a unit vector")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(f, PiecewiseFunction):
        if f.domain is not Domain.REAL_LINE or len(theta) != 1:
            raise DomainError("1-D directional transform needs a real-line step function")
        # f(x - t*theta)/t with theta = +-1: reduces to the real-line closed form
        sgn = theta[0]
        val = real_hilbert_step(f, float(x[0]))
        return sgn * val
    if isinstance(f, BoxFunction):
        segs = _line_segments(f, x, theta)
        out = np.zeros(f.space.dim)
        for t0, t1, v in segs:
            if t0 == 0.0 or t1 == 0.0:
                raise SingularConfigurationError("evaluation point on a box face")
            # p.v. int_{t0}^{t1} dt/t = ln|t1/t0| (valid across 0)
            out += v * math.log(abs(t1 / t0))
        return out / math.pi
    if callable(f):
        return _pv_line_quadrature(f, theta, x)
    raise TypeError("f must be a BoxFunction, PiecewiseFunction, or callable")


_GL_PV_NODES, _GL_PV_WEIGHTS = leggauss(200)


def _pv_line_quadrature(f, theta, x, radius: float = 12.0) -> np.ndarray:
    """p.v. integral along a line through a smooth, rapidly decaying f.

    Uses the symmetrized form int_0^R [f(x-t theta) - f(x+t theta)]/t dt whose
    integrand extends smoothly to t = 0, with a 200-point Gauss-Legendre rule
    (spectrally accurate for analytic bumps that decay inside the radius).
    """
    t = 0.5 * radius * (_GL_PV_NODES + 1.0)
    w = 0.5 * radius * _GL_PV_WEIGHTS
    pts_m = x[None, :] - t[:, None] * theta[None, :]
    pts_p = x[None, :] + t[:, None] * theta[None, :]
    vals = (np.asarray(f(pts_m)) - np.asarray(f(pts_p))) / t
    return np.atleast_1d(np.sum(w * vals, axis=0)) / math.pi


def rotation_kernel(theta: np.ndarray, d: int, j: int) -> np.ndarray:
    """Odd sphere kernel whose rotation average is the j-th Riesz transform:
    Omega_{j,d}(theta) = pi Gamma((d+1)/2) / (2 pi^((d+1)/2)) * theta_j."""
    c = math.pi * math.exp(gammaln((d + 1) / 2.0)) / (2.0 * math.pi ** ((d + 1) / 2.0))
    return c * np.asarray(theta)[..., j - 1]


def riesz_rotations(f, j: int, x, nodes: int = 256, d: int | None = None,
                    with_error: bool = False):
    """Riesz transform via the method of rotations:
    R_j f(x) = int_{S^(d-1)} Omega_{j,d}(theta) H_theta f(x) dtheta.

    d = 2 uses equispaced angles (trapezoid, spectrally accurate for smooth
    integrands); d = 3 uses Gauss-Legendre in the polar cosine times a uniform
    azimuth grid.  `with_error=True` also returns a doubling-based error
    estimate.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if d is None:
        d = len(x)
    if d not in (2, 3):
        raise ValueError("method of rotations implemented for d in {2, 3}")
    if not (1 <= j <= d):
        raise ValueError(f"need 1 <= j <= d, got j={j}")

    def quadrature(n):
        if d == 2:
            phi = TWO_PI * np.arange(n) / n
            thetas = np.stack([np.cos(phi), np.sin(phi)], axis=1)
            weights = np.full(n, TWO_PI / n)
        else:
            n_az = max(4, int(round(math.sqrt(2.0 * n))))
            n_pol = max(2, n // n_az)
            u, wu = leggauss(n_pol)  # u = cos(polar angle)
            phi = TWO_PI * np.arange(n_az) / n_az
            su = np.sqrt(1.0 - u ** 2)
            thetas = np.stack([
                np.outer(su, np.cos(phi)).ravel(),
                np.outer(su, np.sin(phi)).ravel(),
                np.outer(u, np.ones(n_az)).ravel(),
            ], axis=1)
            weights = np.outer(wu, np.full(n_az, TWO_PI / n_az)).ravel()
        acc = None
        for th, w in zip(thetas, weights):
            val = w * rotation_kernel(th, d, j) * directional_hilbert(f, th, x)
            acc = val if acc is None else acc + val
        return acc

    coarse = quadrature(max(4, nodes // 2))
    fine = quadrature(nodes)
    err = float(np.max(np.abs(fine - coarse)))
    return (fine, err) if with_error else fine


def riesz_multiplier(g: np.ndarray, j: int) -> np.ndarray:
    """FFT oracle for the j-th Riesz transform on a periodic d-dim grid.

    Applies the multiplier -i xi_j / |xi| (zero at xi = 0 and on unpaired
    Nyquist planes).  The multiplier only depends on the direction of xi, so
    integer FFT indices serve as frequencies.  Grid sizes must be powers of 2.
    """
    g = np.asarray(g, dtype=float)
    d = g.ndim
    if d not in (2, 3):
        raise ValueError("multiplier oracle implemented for d in {2, 3}")
    for m in g.shape:
        if m & (m - 1) != 0:
            raise ValueError("grid sizes must be powers of two")
    freqs = np.meshgrid(*[np.fft.fftfreq(m, d=1.0 / m) for m in g.shape], indexing="ij")
    xi_j = freqs[j - 1]
    norm = np.sqrt(sum(fr ** 2 for fr in freqs))
    with np.errstate(divide="ignore", invalid="ignore"):
        mult = np.where(norm > 0, -1j * xi_j / np.where(norm > 0, norm, 1.0), 0.0)
    for axis, m in enumerate(g.shape):
        idx = [slice(None)] * d
        idx[axis] = m // 2
        mult[tuple(idx)] = 0.0  # unpaired Nyquist plane
    return np.fft.ifftn(np.fft.fftn(g) * mult).real


def riesz_power_constant(m: int, d: int) -> float:
    """Comparison constant 2 Gamma((m+d)/2) / (Gamma(d/2) Gamma(m/2)) relating
    an odd m-th Riesz power to the real-line transform; grows like m^(d/2)."""
    if m < 1 or m % 2 == 0:
        raise ValueError("the comparison constant is only claimed for odd powers m >= 1")
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return 2.0 * math.exp(gammaln((m + d) / 2.0) - gammaln(d / 2.0) - gammaln(m / 2.0))
