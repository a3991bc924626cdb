"""Value spaces, step/grid functions, and gauge arithmetic.

Everything downstream (transforms, norm estimators, Monte Carlo experiments)
consumes the types defined here.  Value spaces are R^n with an l_q norm;
functions are either step functions (exact piece arithmetic) or uniform grid
samples (FFT substrate).  All objects are immutable after construction and all
operations are pure.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """Input lives on the wrong domain or outside its window."""


class GaugeDivergenceError(ValueError):
    """A gauge integral over an infinite-measure domain diverges."""


class Domain(enum.Enum):
    TORUS = "torus"
    REAL_LINE = "real"
    INTEGERS = "integers"


# ---------------------------------------------------------------------------
# value space
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormedSpace:
    """R^dim equipped with the l_q norm (q >= 1 or q = inf)."""

    dim: int
    q: float = 2.0

    def __post_init__(self):
        if self.dim < 1 or int(self.dim) != self.dim:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        if not (self.q >= 1.0):
            raise ValueError(f"q must satisfy q >= 1 (or inf), got {self.q}")

    def norm(self, x) -> float:
        x = self.check_vector(x)
        return float(self.norms(x[None, :])[0])

    def norms(self, xs: np.ndarray) -> np.ndarray:
        """Row-wise norms of an (..., dim) array (max-scaled against under/overflow)."""
        xs = np.asarray(xs, dtype=float)
        if xs.shape[-1] != self.dim:
            raise DomainError(f"expected trailing dimension {self.dim}, got {xs.shape}")
        ab = np.abs(xs)
        if math.isinf(self.q):
            return np.max(ab, axis=-1)
        if self.q == 1.0:
            return np.sum(ab, axis=-1)
        peak = np.max(ab, axis=-1, keepdims=True)
        scaled = np.divide(ab, peak, out=np.zeros_like(ab), where=peak > 0)
        return peak[..., 0] * np.sum(scaled ** self.q, axis=-1) ** (1.0 / self.q)

    def norm_gradient(self, x) -> np.ndarray:
        """Subgradient of the l_q norm; canonical dual element at kinks."""
        x = self.check_vector(x)
        n = self.norm(x)
        if n == 0.0:
            return np.zeros(self.dim)
        if math.isinf(self.q):
            g = np.zeros(self.dim)
            i = int(np.argmax(np.abs(x)))
            g[i] = np.sign(x[i])
            return g
        if self.q == 1.0:
            return np.sign(x)
        return np.sign(x) * (np.abs(x) / n) ** (self.q - 1.0)

    def check_vector(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise DomainError(f"vector of shape {x.shape} does not live in R^{self.dim}")
        return x


SCALAR = NormedSpace(1, 2.0)


# ---------------------------------------------------------------------------
# gauges
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerGauge:
    """x -> ||x||^p, homogeneous of degree p."""

    p: float

    def __post_init__(self):
        if not self.p > 1.0:
            raise ValueError(f"power gauge needs p > 1, got {self.p}")

    def __call__(self, x, space: NormedSpace) -> float:
        return space.norm(x) ** self.p

    def of_norms(self, norms: np.ndarray) -> np.ndarray:
        return np.asarray(norms, dtype=float) ** self.p

    def gradient(self, x, space: NormedSpace) -> np.ndarray:
        n = space.norm(x)
        if n == 0.0:
            return np.zeros(space.dim)
        return self.p * n ** (self.p - 1.0) * space.norm_gradient(x)

    def label(self) -> str:
        return f"pow{self.p:g}"


@dataclass(frozen=True)
class LLogLGauge:
    """x -> (||x||+1) log(||x||+1); vanishes at 0."""

    def __call__(self, x, space: NormedSpace) -> float:
        n = space.norm(x)
        return (n + 1.0) * math.log(n + 1.0)

    def of_norms(self, norms: np.ndarray) -> np.ndarray:
        n = np.asarray(norms, dtype=float)
        return (n + 1.0) * np.log(n + 1.0)

    def gradient(self, x, space: NormedSpace) -> np.ndarray:
        n = space.norm(x)
        return (math.log(n + 1.0) + 1.0) * space.norm_gradient(x)

    def label(self) -> str:
        return "llogl"


@dataclass(frozen=True)
class NormGauge:
    """x -> ||x||."""

    def __call__(self, x, space: NormedSpace) -> float:
        return space.norm(x)

    def of_norms(self, norms: np.ndarray) -> np.ndarray:
        return np.asarray(norms, dtype=float)

    def gradient(self, x, space: NormedSpace) -> np.ndarray:
        return space.norm_gradient(x)

    def label(self) -> str:
        return "norm"


Gauge = PowerGauge | LLogLGauge | NormGauge


def parse_gauge(text: str) -> Gauge:
    """Parse 'pow3', 'power:3', 'llogl', or 'norm'."""
    t = text.strip().lower().replace("power:", "pow").replace("power", "pow")
    if t == "llogl":
        return LLogLGauge()
    if t == "norm":
        return NormGauge()
    if t.startswith("pow"):
        return PowerGauge(float(t[3:]))
    raise ValueError(f"cannot parse gauge descriptor {text!r}")


@dataclass(frozen=True)
class GaugePair:
    """(Phi, Psi) pair defining a Phi,Psi-norm: integral of Psi(Hf) against Phi(f)."""

    phi: Gauge
    psi: Gauge

    @staticmethod
    def power(p: float) -> "GaugePair":
        return GaugePair(PowerGauge(p), PowerGauge(p))


def evaluate_gauge(g: Gauge, x, space: NormedSpace) -> float:
    """Gauge value at a vector; exact norm-then-power for PowerGauge."""
    return g(x, space)


# ---------------------------------------------------------------------------
# step functions
# ---------------------------------------------------------------------------

def _wrap_angle(t: float) -> float:
    """Representative of t in [-pi, pi)."""
    w = (t + math.pi) % TWO_PI - math.pi
    return w


@dataclass(frozen=True)
class PiecewiseFunction:
    """Finitely supported step function on the torus, real line, or integers.

    Interval pieces are closed-left / open-right, so the value at a breakpoint
    is the right-limit.  Off the listed pieces the function is zero.  Torus
    pieces live inside [-pi, pi).
    """

    domain: Domain
    pieces: tuple
    space: NormedSpace

    def __post_init__(self):
        cleaned = []
        if self.domain is Domain.INTEGERS:
            seen = set()
            for k, v in self.pieces:
                k = int(k)
                if k in seen:
                    raise ValueError(f"duplicate integer point {k}")
                seen.add(k)
                cleaned.append((k, self.space.check_vector(v)))
            cleaned.sort(key=lambda kv: kv[0])
        else:
            for a, b, v in self.pieces:
                a, b = float(a), float(b)
                if not (a < b):
                    raise ValueError(f"empty or inverted interval [{a}, {b})")
                if not (math.isfinite(a) and math.isfinite(b)):
                    raise DomainError("pieces must have finite measure")
                if self.domain is Domain.TORUS and not (-math.pi <= a and b <= math.pi):
                    raise DomainError(f"torus piece [{a}, {b}) outside [-pi, pi)")
                cleaned.append((a, b, self.space.check_vector(v)))
            cleaned.sort(key=lambda ab: ab[0])
            for (a1, b1, _), (a2, _, _) in zip(cleaned, cleaned[1:]):
                if a2 < b1 - 1e-15 * max(1.0, abs(b1)):
                    raise ValueError(f"overlapping pieces near {a2}")
        object.__setattr__(self, "pieces", tuple(cleaned))

    # -- constructors -------------------------------------------------------

    @staticmethod
    def step(domain: Domain, intervals, space: NormedSpace | None = None) -> "PiecewiseFunction":
        """intervals: iterable of (a, b, value) or, for INTEGERS, (k, value)."""
        if space is None:
            space = SCALAR
        return PiecewiseFunction(domain, tuple(intervals), space)

    @staticmethod
    def indicator(domain: Domain, a: float, b: float, value=1.0,
                  space: NormedSpace | None = None) -> "PiecewiseFunction":
        if space is None:
            space = SCALAR
        v = np.atleast_1d(np.asarray(value, dtype=float))
        return PiecewiseFunction(domain, ((a, b, v),), space)

    @staticmethod
    def delta(k: int, value=1.0, space: NormedSpace | None = None) -> "PiecewiseFunction":
        if space is None:
            space = SCALAR
        v = np.atleast_1d(np.asarray(value, dtype=float))
        return PiecewiseFunction(Domain.INTEGERS, ((k, v),), space)

    # -- queries ------------------------------------------------------------

    def breakpoints(self) -> np.ndarray:
        if self.domain is Domain.INTEGERS:
            return np.array([k for k, _ in self.pieces], dtype=float)
        pts = []
        for a, b, _ in self.pieces:
            pts.extend((a, b))
        return np.unique(np.array(pts, dtype=float))

    def evaluate(self, t) -> np.ndarray:
        """Pointwise value (right-limit at breakpoints); zero off the support."""
        if self.domain is Domain.INTEGERS:
            k = int(t)
            for kk, v in self.pieces:
                if kk == k:
                    return v.copy()
            return np.zeros(self.space.dim)
        t = float(t)
        if self.domain is Domain.TORUS:
            t = _wrap_angle(t)
        for a, b, v in self.pieces:
            if a <= t < b:
                return v.copy()
        return np.zeros(self.space.dim)

    def integral(self) -> np.ndarray:
        """Vector-valued integral (counting measure on INTEGERS)."""
        out = np.zeros(self.space.dim)
        if self.domain is Domain.INTEGERS:
            for _, v in self.pieces:
                out += v
        else:
            for a, b, v in self.pieces:
                out += (b - a) * v
        return out

    def support_measure(self) -> float:
        if self.domain is Domain.INTEGERS:
            return float(len(self.pieces))
        return float(sum(b - a for a, b, _ in self.pieces))

    def scale(self, alpha: float) -> "PiecewiseFunction":
        if self.domain is Domain.INTEGERS:
            pieces = tuple((k, alpha * v) for k, v in self.pieces)
        else:
            pieces = tuple((a, b, alpha * v) for a, b, v in self.pieces)
        return PiecewiseFunction(self.domain, pieces, self.space)

    def dilate(self, eps: float) -> "PiecewiseFunction":
        """t -> f(eps * t); REAL_LINE only (the dilation used by the lattice operator)."""
        if self.domain is not Domain.REAL_LINE:
            raise DomainError("dilation only defined on the real line")
        if not eps > 0:
            raise ValueError("dilation factor must be positive")
        pieces = tuple((a / eps, b / eps, v) for a, b, v in self.pieces)
        return PiecewiseFunction(self.domain, pieces, self.space)


def project_zero_mean(f: PiecewiseFunction) -> PiecewiseFunction:
    """Subtract the mean (1/2pi) * integral from a torus step function.

    The complement of the support becomes an explicit piece, so the result
    covers all of [-pi, pi) and integrates to zero per coordinate.
    """
    if f.domain is not Domain.TORUS:
        raise DomainError("zero-mean projection is defined on the torus")
    mean = f.integral() / TWO_PI
    edges = [-math.pi]
    for a, b, _ in f.pieces:
        edges.extend((a, b))
    edges.append(math.pi)
    edges = np.unique(np.array(edges))
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 0:
            continue
        mid = 0.5 * (a + b)
        pieces.append((float(a), float(b), f.evaluate(mid) - mean))
    return PiecewiseFunction(Domain.TORUS, tuple(pieces), f.space)


def integrate_gauge(f: PiecewiseFunction, g: Gauge) -> float:
    """Exact integral of gauge(f) over the domain.

    On the torus the complement of the support contributes gauge(0) times its
    measure.  On infinite-measure domains a nonzero gauge(0) makes the
    integral diverge, which is reported as an error rather than inf.
    """
    zero = g(np.zeros(f.space.dim), f.space)
    total = 0.0
    if f.domain is Domain.INTEGERS:
        for _, v in f.pieces:
            total += g(v, f.space)
    else:
        for a, b, v in f.pieces:
            total += (b - a) * g(v, f.space)
    if f.domain is Domain.TORUS:
        total += zero * (TWO_PI - f.support_measure())
    elif zero != 0.0:
        raise GaugeDivergenceError(
            "gauge(0) != 0 makes the integral over an infinite-measure domain infinite")
    return total


# ---------------------------------------------------------------------------
# grid functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridFunction:
    """Uniform samples on the torus, a real window [-L, L], or integers [-N, N].

    Torus samples sit at theta_j = -pi + j * (2pi/m); spacing is 2pi/m.
    """

    domain: Domain
    samples: np.ndarray
    spacing: float
    window: float = 0.0  # L for REAL_LINE, N for INTEGERS; unused on TORUS

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if len(s) < 2:
            raise ValueError("a grid needs at least 2 samples")
        object.__setattr__(self, "samples", s)
        if self.domain is Domain.TORUS:
            object.__setattr__(self, "spacing", TWO_PI / len(s))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def nodes(self) -> np.ndarray:
        m = len(self.samples)
        if self.domain is Domain.TORUS:
            return -math.pi + self.spacing * np.arange(m)
        if self.domain is Domain.REAL_LINE:
            return -self.window + self.spacing * np.arange(m)
        return np.arange(-int(self.window), int(self.window) + 1, dtype=float)

    @staticmethod
    def sample(f: PiecewiseFunction, m: int, window: float = 0.0) -> "GridFunction":
        """Sample a step function at m uniform nodes."""
        if f.domain is Domain.TORUS:
            nodes = -math.pi + (TWO_PI / m) * np.arange(m)
            vals = np.array([f.evaluate(t) for t in nodes])
            return GridFunction(Domain.TORUS, vals, TWO_PI / m)
        if f.domain is Domain.REAL_LINE:
            if window <= 0:
                window = float(max(abs(f.breakpoints()).max(), 1.0)) * 2.0
            spacing = 2.0 * window / m
            nodes = -window + spacing * np.arange(m)
            vals = np.array([f.evaluate(t) for t in nodes])
            return GridFunction(Domain.REAL_LINE, vals, spacing, window)
        raise DomainError("sampling is defined for torus and real-line functions")

    def integrate_gauge(self, g: Gauge, space: NormedSpace) -> float:
        """Riemann-sum gauge integral; converges O(spacing) to the exact value."""
        norms = space.norms(self.samples)
        return float(np.sum(g.of_norms(norms)) * self.spacing)


# ---------------------------------------------------------------------------
# serialization (the CLI input format)
# ---------------------------------------------------------------------------

_DOMAIN_NAMES = {
    "torus": Domain.TORUS,
    "real": Domain.REAL_LINE,
    "realline": Domain.REAL_LINE,
    "integers": Domain.INTEGERS,
}


def format_piecewise(f: PiecewiseFunction) -> str:
    """Line format: 'domain; q; n;' then one line per piece 'a b v1 ... vn'
    ('k v1 ... vn' on the integers)."""
    q = "inf" if math.isinf(f.space.q) else f"{f.space.q:.17g}"
    lines = [f"{f.domain.value}; {q}; {f.space.dim};"]
    for piece in f.pieces:
        if f.domain is Domain.INTEGERS:
            k, v = piece
            lines.append(" ".join([str(int(k))] + [f"{x:.17g}" for x in v]))
        else:
            a, b, v = piece
            lines.append(" ".join([f"{a:.17g}", f"{b:.17g}"] + [f"{x:.17g}" for x in v]))
    return "\n".join(lines) + "\n"


def parse_piecewise(text: str) -> PiecewiseFunction:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty step-function description")
    head = [part.strip() for part in lines[0].split(";") if part.strip()]
    if len(head) != 3:
        raise ValueError(f"header must be 'domain; q; n;', got {lines[0]!r}")
    name = head[0].lower()
    if name not in _DOMAIN_NAMES:
        raise ValueError(f"unknown domain {head[0]!r}")
    domain = _DOMAIN_NAMES[name]
    q = math.inf if head[1].lower() in ("inf", "infinity") else float(head[1])
    dim = int(head[2])
    space = NormedSpace(dim, q)
    pieces = []
    for ln in lines[1:]:
        parts = ln.split()
        if domain is Domain.INTEGERS:
            if len(parts) != 1 + dim:
                raise ValueError(f"integer piece needs 1+{dim} fields: {ln!r}")
            pieces.append((int(parts[0]), np.array([float(x) for x in parts[1:]])))
        else:
            if len(parts) != 2 + dim:
                raise ValueError(f"interval piece needs 2+{dim} fields: {ln!r}")
            pieces.append((float(parts[0]), float(parts[1]),
                           np.array([float(x) for x in parts[2:]])))
    return PiecewiseFunction(domain, tuple(pieces), space)
