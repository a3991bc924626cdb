"""Finite compressions of the Hilbert transforms for norm estimation.

Each scheme produces a matrix B and a weight vector w such that B is exactly
the compression  E_h . H . (inclusion)  of the corresponding transform onto
step functions of the partition (conditional expectation onto the cells).
Compressions only under-approximate operator norms, so every Rayleigh ratio
computed from (B, w) is a certified lower bound for the infinite operator.

Two partition families:

* ``uniform``: contiguous windows (plain matrix truncation on the integers,
  uniform cells on a window / the torus).
* ``graded``: geometrically graded cells spanning a huge scale range with a
  fixed cell count.  The near-extremizers of the L^p problems are power-like
  functions spread over exponentially many scales, so plain windows converge
  only logarithmically while graded partitions converge in practice.

Graded families are generated by dyadic decimation of one master partition:
every coarse cell is a union of fine cells, hence the compressions are nested
and the exact truncated norms are nondecreasing in size.

Entry assembly is numerically delicate: naive antiderivative differences
cancel catastrophically for small-cell/far-cell pairs.  Far pairs therefore
use Gauss-Legendre quadrature of the pointwise closed form over the target
cell (continuous kernels) or Euler-Maclaurin summation with stabilized
digamma/log-gamma differences (integer blocks); near pairs use local
antiderivative differences whose arguments are a few cell widths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import toeplitz
from scipy.special import digamma, polygamma, zeta

TWO_PI = 2.0 * math.pi

_GL16_NODES, _GL16_WEIGHTS = leggauss(16)


# ---------------------------------------------------------------------------
# stable special-function differences
# ---------------------------------------------------------------------------

def digamma_diff(y, L):
    """psi(y + L) - psi(y) for y >= 1, L >= 0, avoiding large-argument
    cancellation (asymptotic series with log1p for y >= 64)."""
    y = np.asarray(y, dtype=float)
    L = np.broadcast_to(np.asarray(L, dtype=float), y.shape)
    out = np.empty_like(y)
    small = y < 64.0
    if np.any(small):
        out[small] = digamma(y[small] + L[small]) - digamma(y[small])
    big = ~small
    if np.any(big):
        x = y[big]
        h = L[big]
        xh = x + h
        d = np.log1p(h / x)
        d += 0.5 * h / (x * xh)                       # -(1/(2xh) - 1/(2x))
        d -= (1.0 / 12.0) * (1.0 / xh**2 - 1.0 / x**2)
        d += (1.0 / 120.0) * (1.0 / xh**4 - 1.0 / x**4)
        d -= (1.0 / 252.0) * (1.0 / xh**6 - 1.0 / x**6)
        out[big] = d
    return out


def lgamma_diff(x, h):
    """lnGamma(x + h) - lnGamma(x) for x >= 64, h >= 0, via a stabilized
    Stirling expansion (no large-minus-large)."""
    x = np.asarray(x, dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), x.shape)
    xh = x + h
    d = (x - 0.5) * np.log1p(h / x) + h * np.log(xh) - h
    d -= h / (12.0 * x * xh)                          # 1/(12xh) - 1/(12x)
    d -= (1.0 / 360.0) * (1.0 / xh**3 - 1.0 / x**3)
    d += (1.0 / 1260.0) * (1.0 / xh**5 - 1.0 / x**5)
    return d


_ZETA_M = np.arange(1, 60)
_ZETA_COEF = zeta(2 * _ZETA_M) / (_ZETA_M * (2 * _ZETA_M + 1))
_I_TOTAL = -TWO_PI * math.log(2.0)  # int_0^{2pi} ln|sin(v/2)| dv


def int_log_sin_half(x):
    """I(x) = int_0^x ln|sin(v/2)| dv on [-2pi, 2pi]; odd; series from the
    sine product formula, reflected about pi so the ratio (x/2pi) stays <= 1/2."""
    x = np.asarray(x, dtype=float)
    sgn = np.sign(x)
    u = np.abs(x)
    refl = u > math.pi
    u_eff = np.where(refl, TWO_PI - u, u)
    r2 = (u_eff / TWO_PI) ** 2
    s = np.zeros_like(u_eff)
    pw = np.ones_like(u_eff)
    for m in range(len(_ZETA_M)):
        pw = pw * r2
        s += _ZETA_COEF[m] * pw
    safe = np.where(u_eff > 0.0, u_eff, 1.0)
    base = np.where(u_eff > 0.0, u_eff * (np.log(safe / 2.0) - 1.0), 0.0)
    val = base - u_eff * s
    val = np.where(refl, _I_TOTAL - val, val)
    return sgn * val


def antideriv_log_abs(u):
    """F(u) = int_0^u ln|v| dv = u ln|u| - u, F(0) = 0."""
    u = np.asarray(u, dtype=float)
    safe = np.where(u != 0.0, np.abs(u), 1.0)
    return np.where(u != 0.0, u * (np.log(safe) - 1.0), 0.0)


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Compression:
    """Matrix compression of a transform onto a cell partition.

    ``matrix`` acts on cell-value vectors; ``weights`` are cell measures, so
    ||f||_p^p = sum w_j |x_j|^p.  ``label`` records operator and scheme.
    """

    matrix: np.ndarray
    weights: np.ndarray
    label: str
    size: int


def uniform_discrete_bounds(size: int) -> np.ndarray:
    half = size // 2
    return np.arange(-half, size - half + 1, dtype=np.int64)


def graded_discrete_master(max_size: int, reach: float = 2.0e17) -> np.ndarray:
    """Master integer-block boundaries: unit blocks in the center, wing block
    lengths growing geometrically out to ~reach (int64-exact throughout)."""
    n_center = max_size // 2            # unit blocks
    n_wing = max_size // 4              # per side
    half = n_center // 2
    g = (reach / half) ** (1.0 / n_wing)
    right = [half]
    x = float(half)
    for _ in range(n_wing):
        x *= g
        nxt = max(right[-1] + 1, int(round(x)))
        right.append(nxt)
    right = np.array(right[1:], dtype=np.int64)
    center = np.arange(-half, half + 1, dtype=np.int64)
    return np.concatenate([-right[::-1], center, right])


def graded_real_master(max_size: int, inner: float = 1e-18, outer: float = 1e18) -> np.ndarray:
    """Master real-line cell edges: symmetric geometric grading from +-inner
    to +-outer with two cells touching the origin."""
    m = max_size // 2 - 1               # geometric cells per side
    g = (outer / inner) ** (1.0 / m)
    pos = inner * g ** np.arange(m + 1)
    pos[-1] = outer
    return np.concatenate([-pos[::-1], [0.0], pos])


def graded_torus_master(max_size: int, inner: float = 1e-30) -> np.ndarray:
    """Master torus cell edges in [-pi, pi): geometric accumulation at 0."""
    m = max_size // 2 - 1
    g = (math.pi / inner) ** (1.0 / m)
    pos = inner * g ** np.arange(m + 1)
    pos[-1] = math.pi
    return np.concatenate([-pos[::-1], [0.0], pos])


def decimate(edges: np.ndarray, size: int) -> np.ndarray:
    """Every (len/size)-th edge of a master partition; cells must divide."""
    cells = len(edges) - 1
    if cells % size != 0:
        raise ValueError(f"size {size} does not divide master cell count {cells}")
    step = cells // size
    if step & (step - 1) != 0:
        raise ValueError("decimation factor must be a power of two")
    return edges[::step]


# ---------------------------------------------------------------------------
# continuous-kernel cell matrices (real line and torus)
# ---------------------------------------------------------------------------

def _point_dist_to_cell(c, d, s):
    """Distance from point(s) s to interval [c, d] (arrays broadcast)."""
    return np.maximum.reduce([c - s, s - d, np.zeros_like(s)])


def _cell_matrix_1d(edges: np.ndarray, torus: bool, label: str) -> Compression:
    edges = np.asarray(edges, dtype=float)
    a = edges[:-1]
    b = edges[1:]
    h = b - a
    n = len(h)
    if torus:
        A = int_log_sin_half

        def K_diff(t, aj, bj):
            # ln|sin((t-a)/2)| - ln|sin((t-b)/2)| without cancellation: in the
            # far regime both sines share a sign, so the ratio is 1 + delta
            delta = (2.0 * np.cos((2.0 * t - aj - bj) / 4.0)
                     * np.sin((bj - aj) / 4.0) / np.sin((t - bj) / 2.0))
            return np.log1p(delta)
    else:
        A = antideriv_log_abs

        def K_diff(t, aj, bj):
            # ln|t-a| - ln|t-b| = log1p((b-a)/(t-b)); (b-a)/(t-b) > -1 off-cell
            return np.log1p((bj - aj) / (t - bj))

    B = np.empty((n, n))
    half_nodes = 0.5 * _GL16_NODES
    for i in range(n):
        c, d, hi = a[i], b[i], h[i]
        # distance from the target cell to the two kernel singularities of
        # each source column (t = a_j and t = b_j, modulo 2pi on the torus)
        if torus:
            da = np.minimum.reduce([_point_dist_to_cell(c, d, a + s) for s in (-TWO_PI, 0.0, TWO_PI)])
            db = np.minimum.reduce([_point_dist_to_cell(c, d, b + s) for s in (-TWO_PI, 0.0, TWO_PI)])
        else:
            da = _point_dist_to_cell(c, d, a)
            db = _point_dist_to_cell(c, d, b)
        near = np.minimum(da, db) < 2.0 * hi
        far = ~near
        row = np.empty(n)
        if np.any(far):
            t = (c + d) / 2.0 + hi * half_nodes          # 16 GL nodes in the cell
            vals = K_diff(t[:, None], a[None, far], b[None, far])
            row[far] = (_GL16_WEIGHTS @ vals) / TWO_PI   # (1/(pi h)) * (h/2) sum w f
        if np.any(near):
            aj = a[near]
            bj = b[near]
            row[near] = (A(d - aj) - A(c - aj) - A(d - bj) + A(c - bj)) / (math.pi * hi)
        B[i] = row
    return Compression(B, h, label, n)


def torus_cell_compression(edges: np.ndarray, label: str = "torus-graded") -> Compression:
    """Cell-averaged periodic Hilbert transform on a torus partition."""
    return _cell_matrix_1d(edges, torus=True, label=label)


def real_cell_compression(edges: np.ndarray, label: str = "real-graded") -> Compression:
    """Cell-averaged real-line Hilbert transform on a window partition."""
    return _cell_matrix_1d(edges, torus=False, label=label)


# ---------------------------------------------------------------------------
# integer-block matrices (discrete Hilbert transform)
# ---------------------------------------------------------------------------

_DIRECT_LEN = 256      # blocks up to this length are summed term by term
_EM_CLEARANCE = 256    # Euler-Maclaurin needs this much distance from the source


def _phi_sum_right(c, d, a, b):
    """T = sum_{t=c..d} sum_{s=a..b} 1/(t-s) for a target block [c, d] strictly
    to the right of the source block [a, b] (c > b).  Vectorized over source
    blocks: a, b are arrays; c, d scalars.  Dispatches between direct
    summation and Euler-Maclaurin with stabilized differences."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    # per target point t: sum_s 1/(t-s) = psi(t-a+1) - psi(t-b) = digamma_diff(t-b, Lj)
    Lj = (b - a + 1).astype(float)
    Li = int(d - c + 1)

    if Li <= _DIRECT_LEN:
        ts = np.arange(c, d + 1, dtype=np.int64)
        y = (ts[:, None] - b[None, :]).astype(float)
        return digamma_diff(y, np.broadcast_to(Lj, y.shape)).sum(axis=0)

    # near end must clear the source for Euler-Maclaurin: split off a direct head
    head = 0
    if c - b.max() < _EM_CLEARANCE:
        head = min(Li - 2, 2 * _EM_CLEARANCE)
    total = np.zeros(len(a))
    c_em = c + head
    if head:
        ts = np.arange(c, c_em, dtype=np.int64)
        y = (ts[:, None] - b[None, :]).astype(float)
        total += digamma_diff(y, np.broadcast_to(Lj, y.shape)).sum(axis=0)
    if d - c_em + 1 <= _DIRECT_LEN:
        ts = np.arange(c_em, d + 1, dtype=np.int64)
        y = (ts[:, None] - b[None, :]).astype(float)
        return total + digamma_diff(y, np.broadcast_to(Lj, y.shape)).sum(axis=0)

    # Euler-Maclaurin over t in [c_em, d] with K = 2 correction terms
    y_lo = (c_em - b).astype(float)       # >= clearance
    y_hi = (d - b).astype(float)
    hspan = float(d - c_em)
    ya_lo = (c_em - a + 1).astype(float)
    integral = lgamma_diff(ya_lo, hspan) - lgamma_diff(y_lo, hspan)
    endpoint = 0.5 * (digamma_diff(y_lo, Lj) + digamma_diff(y_hi, Lj))
    pg1 = polygamma(1, y_hi + Lj) - polygamma(1, y_hi) \
        - (polygamma(1, y_lo + Lj) - polygamma(1, y_lo))
    pg3 = polygamma(3, y_hi + Lj) - polygamma(3, y_hi) \
        - (polygamma(3, y_lo + Lj) - polygamma(3, y_lo))
    total += integral + endpoint + pg1 / 12.0 - pg3 / 720.0
    return total


def discrete_block_compression(bounds: np.ndarray) -> Compression:
    """Block-averaged discrete Hilbert transform: block j = [bounds_j, bounds_{j+1}).

    Entries B[i, j] = (1/(pi L_i)) sum_{t in blk_i, s in blk_j} 1/(t - s).
    The double sum is always expressed over the smaller block (antisymmetry),
    which keeps every stabilized difference well conditioned.
    """
    bounds = np.asarray(bounds, dtype=np.int64)
    a = bounds[:-1]
    b = bounds[1:] - 1
    L = (b - a + 1).astype(float)
    n = len(L)
    T = np.zeros((n, n))
    order = np.argsort(L, kind="stable")   # fill smaller-target rows first
    done = np.zeros((n, n), dtype=bool)
    for i in order:
        todo = ~done[i]
        todo[i] = False
        if not np.any(todo):
            continue
        js = np.nonzero(todo)[0]
        right = js[a[js] > b[i]]           # sources right of target: target left
        left = js[b[js] < a[i]]
        if len(left):
            T[i, left] = _phi_sum_right(int(a[i]), int(b[i]), a[left], b[left])
        if len(right):
            # reflect: sum over target left of source == -(mirrored right case)
            T[i, right] = -_phi_sum_right(int(-b[i]), int(-a[i]), -b[right], -a[right])
        done[i, js] = True
        T[js, i] = -T[i, js]
        done[js, i] = True
    B = T / (math.pi * L[:, None])
    return Compression(B, L, "discrete-graded", n)


def uniform_discrete_compression(size: int) -> Compression:
    """Plain contiguous truncation of the discrete Hilbert transform."""
    k = np.arange(size)
    col = np.zeros(size)
    col[1:] = 1.0 / (math.pi * k[1:])
    return Compression(toeplitz(col, -col), np.ones(size), "discrete-uniform", size)


# ---------------------------------------------------------------------------
# scheme dispatch
# ---------------------------------------------------------------------------

_MASTER_CACHE: dict = {}


def build_compression(operator: str, size: int, scheme: str = "graded",
                      max_size: int | None = None) -> Compression:
    """Compression matrix for operator tag 'ht' | 'hr' | 'hdis'.

    scheme='uniform' gives plain windows; scheme='graded' gives the nested
    geometric family (decimated from a master of max_size cells, default
    4096, so different sizes give nested partitions).
    """
    if max_size is None:
        max_size = max(4096, size)
    if size & (size - 1) != 0 or max_size % size != 0:
        raise ValueError("graded sizes must be powers of two dividing the master size")
    if operator == "hdis":
        if scheme == "uniform":
            return uniform_discrete_compression(size)
        key = ("hdis", max_size)
        if key not in _MASTER_CACHE:
            _MASTER_CACHE[key] = graded_discrete_master(max_size)
        bounds = decimate(_MASTER_CACHE[key], size)
        return discrete_block_compression(bounds)
    if operator == "hr":
        if scheme == "uniform":
            edges = np.arange(size + 1, dtype=float) - size / 2.0
            return real_cell_compression(edges, "real-uniform")
        key = ("hr", max_size)
        if key not in _MASTER_CACHE:
            _MASTER_CACHE[key] = graded_real_master(max_size)
        edges = decimate(_MASTER_CACHE[key], size)
        return real_cell_compression(edges)
    if operator == "ht":
        if scheme == "uniform":
            edges = -math.pi + TWO_PI * np.arange(size + 1) / size
            return torus_cell_compression(edges, "torus-uniform")
        key = ("ht", max_size)
        if key not in _MASTER_CACHE:
            _MASTER_CACHE[key] = graded_torus_master(max_size)
        edges = decimate(_MASTER_CACHE[key], size)
        return torus_cell_compression(edges)
    raise ValueError(f"no compression scheme for operator {operator!r}")
