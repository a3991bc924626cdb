import math

import numpy as np
import pytest
from scipy import integrate

from hilbertlab.core import (
    Domain,
    DomainError,
    GridFunction,
    NormedSpace,
    PiecewiseFunction,
    SCALAR,
)
from hilbertlab.transforms import (
    BoxFunction,
    DirectionalHilbert,
    RieszRotations,
    SemidiscreteHilbert,
    SingularConfigurationError,
    SingularPointError,
    directional_hilbert,
    discrete_hilbert,
    hilbert_operator_T,
    periodic_hilbert_fft,
    periodic_hilbert_step,
    real_hilbert_step,
    riesz_multiplier,
    riesz_power_constant,
    riesz_rotations,
    semidiscrete_hilbert,
)

RNG = np.random.default_rng(7)


def torus_ind(a, b, v=1.0):
    return PiecewiseFunction.indicator(Domain.TORUS, a, b, v)


def real_ind(a, b, v=1.0):
    return PiecewiseFunction.indicator(Domain.REAL_LINE, a, b, v)


# ---------------------------------------------------------------------------
# periodic transform, closed form
# ---------------------------------------------------------------------------

def test_periodic_step_symmetric_zero():
    val = periodic_hilbert_step(torus_ind(0.0, math.pi), -math.pi / 2)
    assert abs(val[0]) <= 1e-15


def test_periodic_step_constant_annihilated():
    f = torus_ind(-math.pi, math.pi, 5.0)
    for t in (-2.0, 0.3, 1.5, 3.0):
        assert abs(periodic_hilbert_step(f, t)[0]) <= 1e-12


def test_periodic_step_quarter_arc():
    val = periodic_hilbert_step(torus_ind(0.0, math.pi / 2), math.pi)
    assert val[0] == pytest.approx(math.log(math.sqrt(2.0)) / math.pi, rel=1e-14)


def test_periodic_step_matches_pv_quadrature():
    # independent oracle: symmetric principal-value quadrature of the cot kernel
    f = PiecewiseFunction(Domain.TORUS,
                          ((-1.0, 0.2, np.array([1.5])), (0.9, 2.1, np.array([-0.7]))),
                          SCALAR)
    for t in (-2.5, 0.5, 2.5):
        expected = periodic_hilbert_step(f, t)[0]

        def integrand(s):
            return f.evaluate(s)[0] / math.tan((t - s) / 2.0)

        val = 0.0
        eps = 1e-7
        pieces = sorted({-math.pi, math.pi, t - eps, t + eps}
                        | set(f.breakpoints().tolist()))
        for a, b in zip(pieces[:-1], pieces[1:]):
            if b <= a or (a >= t - eps and b <= t + eps):
                continue
            val += integrate.quad(integrand, a, b, limit=300)[0]
        # the symmetric eps-window around t removes the pv singularity up to O(eps)
        assert val / (2 * math.pi) == pytest.approx(expected, abs=5e-6)


def test_periodic_step_breakpoint_error():
    with pytest.raises(SingularPointError):
        periodic_hilbert_step(torus_ind(0.0, 1.0), 1.0)


def test_periodic_step_needs_torus():
    with pytest.raises(DomainError):
        periodic_hilbert_step(real_ind(0.0, 1.0), 0.5)


# ---------------------------------------------------------------------------
# periodic transform, FFT path
# ---------------------------------------------------------------------------

def grid_of(fn, m=256):
    theta = -math.pi + 2 * math.pi * np.arange(m) / m
    return GridFunction(Domain.TORUS, fn(theta), 2 * math.pi / m), theta


def test_fft_conjugate_of_cos_is_sin():
    g, theta = grid_of(np.cos)
    out = periodic_hilbert_fft(g)
    assert np.max(np.abs(out.samples[:, 0] - np.sin(theta))) <= 1e-12


def test_fft_conjugate_of_sin3_is_minus_cos3():
    g, theta = grid_of(lambda t: np.sin(3 * t))
    out = periodic_hilbert_fft(g)
    assert np.max(np.abs(out.samples[:, 0] + np.cos(3 * theta))) <= 1e-12


def test_fft_constant_to_zero():
    g, _ = grid_of(lambda t: np.ones_like(t))
    assert np.max(np.abs(periodic_hilbert_fft(g).samples)) == 0.0


def test_fft_requires_power_of_two():
    theta = np.linspace(-math.pi, math.pi, 100, endpoint=False)
    g = GridFunction(Domain.TORUS, np.cos(theta), 0.0)
    with pytest.raises(ValueError):
        periodic_hilbert_fft(g)


def test_fft_double_transform_and_parseval():
    m = 512
    samples = RNG.standard_normal(m)
    g = GridFunction(Domain.TORUS, samples, 2 * math.pi / m)
    # strip the Nyquist mode so the multiplier path is an exact involution off mode 0
    spec = np.fft.fft(samples)
    spec[m // 2] = 0.0
    samples = np.fft.ifft(spec).real
    g = GridFunction(Domain.TORUS, samples, 2 * math.pi / m)
    once = periodic_hilbert_fft(g)
    twice = periodic_hilbert_fft(once)
    centered = samples - samples.mean()
    assert np.max(np.abs(twice.samples[:, 0] + centered)) <= 1e-10
    assert np.linalg.norm(once.samples) == pytest.approx(np.linalg.norm(centered), abs=1e-10)


def max_step_fft_gap(f, m, radius):
    """Max |closed form - FFT path| over nodes farther than `radius` from a jump."""
    g = GridFunction.sample(f, m)
    fft_out = periodic_hilbert_fft(g).samples[:, 0]
    bps = f.breakpoints()
    gaps = []
    for i, t in enumerate(g.nodes):
        wrapped = np.abs((bps - t + math.pi) % (2 * math.pi) - math.pi)
        if np.min(wrapped) > radius:
            gaps.append(abs(periodic_hilbert_step(f, t)[0] - fft_out[i]))
    return max(gaps)


def oracle_pair_function():
    # unit jump placed off-node for both grids (sampling a jump exactly on a
    # node carries the right-limit value and inflates the interpolant error)
    h = 2 * math.pi / 1024
    a = -math.pi + 100.35 * h
    return torus_ind(a, a + math.pi)


def test_step_vs_fft_oracle_agreement():
    f = oracle_pair_function()
    radius = 4 * (2 * math.pi / 1024)  # fixed exclusion radius: 4 cells of the coarse grid
    coarse = max_step_fft_gap(f, 1024, radius)
    fine = max_step_fft_gap(f, 2048, radius)
    assert coarse <= 5e-2
    assert fine < coarse


# ---------------------------------------------------------------------------
# real-line transform
# ---------------------------------------------------------------------------

def test_real_step_examples():
    assert real_hilbert_step(real_ind(0.0, 1.0), 2.0)[0] == pytest.approx(
        math.log(2.0) / math.pi, rel=1e-14)
    assert abs(real_hilbert_step(real_ind(-1.0, 1.0), 0.0)[0]) <= 1e-15
    f = PiecewiseFunction(Domain.REAL_LINE,
                          ((0.0, 1.0, np.array([1.0])), (-1.0, 0.0, np.array([-1.0]))),
                          SCALAR)
    expected = (math.log(2.0) - math.log(1.5)) / math.pi
    assert real_hilbert_step(f, 2.0)[0] == pytest.approx(expected, rel=1e-13)


def test_real_dilation_covariance_exact():
    # transform of f(eps .) at t equals (H f)(eps t), exactly via the closed form
    f = PiecewiseFunction(Domain.REAL_LINE,
                          ((-2.0, -0.3, np.array([1.2])), (0.7, 3.1, np.array([-0.4]))),
                          SCALAR)
    for eps in (0.25, 1.0, 3.0):
        fd = f.dilate(eps)
        for t in (-4.0, 0.1, 5.3):
            lhs = real_hilbert_step(fd, t)[0]
            rhs = real_hilbert_step(f, eps * t)[0]
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)


def test_real_translation_equivariance():
    f = real_ind(0.0, 2.0, 1.5)
    shifted = PiecewiseFunction(Domain.REAL_LINE, ((1.0, 3.0, np.array([1.5])),), SCALAR)
    for t in (-1.0, 4.0, 7.5):
        assert real_hilbert_step(shifted, t + 1.0)[0] == pytest.approx(
            real_hilbert_step(f, t)[0], rel=1e-13, abs=1e-15)


def test_real_breakpoint_error():
    with pytest.raises(SingularPointError):
        real_hilbert_step(real_ind(0.0, 1.0), 0.0)


# ---------------------------------------------------------------------------
# discrete transform
# ---------------------------------------------------------------------------

def test_discrete_examples():
    delta0 = PiecewiseFunction.delta(0)
    assert discrete_hilbert(delta0, 3)[0] == pytest.approx(1.0 / (3 * math.pi))
    assert discrete_hilbert(delta0, 0)[0] == 0.0
    two = PiecewiseFunction(Domain.INTEGERS,
                            ((0, np.array([1.0])), (1, np.array([1.0]))), SCALAR)
    assert discrete_hilbert(two, 2)[0] == pytest.approx((0.5 + 1.0) / math.pi)


def test_discrete_translation_equivariance():
    f = PiecewiseFunction(Domain.INTEGERS,
                          ((0, np.array([2.0])), (3, np.array([-1.0]))), SCALAR)
    g = PiecewiseFunction(Domain.INTEGERS,
                          ((5, np.array([2.0])), (8, np.array([-1.0]))), SCALAR)
    for t in (-2, 1, 7, 11):
        assert discrete_hilbert(g, t + 5)[0] == pytest.approx(discrete_hilbert(f, t)[0])


# ---------------------------------------------------------------------------
# semidiscrete transform
# ---------------------------------------------------------------------------

def test_semidiscrete_lattice_enumeration():
    # independent oracle: enumerate lattice points hitting the support
    f = real_ind(0.0, 1.0)
    for eps, t in ((1.0, 2.5), (0.5, 2.2), (0.3, -1.7)):
        val = semidiscrete_hilbert(f, eps, t)[0]
        acc = 0.0
        for k in range(-10000, 10001):
            if k == 0:
                continue
            s = t - eps * k
            if 0.0 <= s < 1.0:
                acc += 1.0 / k
        assert val == pytest.approx(acc / math.pi, rel=1e-13, abs=1e-15)


def test_semidiscrete_linearity():
    f = real_ind(0.0, 1.0, 2.0)
    g = real_ind(0.25, 0.75, 1.0)
    fg = PiecewiseFunction(Domain.REAL_LINE,
                           ((0.0, 0.25, np.array([2.0])), (0.25, 0.75, np.array([3.0])),
                            (0.75, 1.0, np.array([2.0]))), SCALAR)
    t, eps = 2.43, 0.37
    lhs = semidiscrete_hilbert(fg, eps, t)[0]
    rhs = semidiscrete_hilbert(f, eps, t)[0] + semidiscrete_hilbert(g, eps, t)[0]
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_semidiscrete_converges_to_real_transform():
    f = real_ind(0.0, 1.0)
    target = real_hilbert_step(f, 2.0)[0]
    errs = [abs(semidiscrete_hilbert(f, eps, 2.0)[0] - target)
            for eps in (1e-2, 1e-3)]
    assert errs[1] <= 0.01
    assert errs[1] <= errs[0]  # first-order-ish decay


def test_semidiscrete_kind_validation():
    with pytest.raises(ValueError):
        SemidiscreteHilbert(eps=0.0)


# ---------------------------------------------------------------------------
# half-space Hilbert operators
# ---------------------------------------------------------------------------

def test_hilbert_operator_examples():
    f = real_ind(0.0, 1.0)
    assert hilbert_operator_T(f, 1.0)[0] == pytest.approx(math.log(2.0) / math.pi)
    zero = PiecewiseFunction(Domain.REAL_LINE, (), SCALAR)
    assert hilbert_operator_T(zero, 2.0)[0] == 0.0
    f2 = real_ind(1.0, 2.0)
    assert hilbert_operator_T(f2, 2.0)[0] == pytest.approx(math.log(4.0 / 3.0) / math.pi)


def test_hilbert_operator_domain_error():
    with pytest.raises(DomainError):
        hilbert_operator_T(real_ind(0.0, 1.0), -1.0)


def test_hilbert_operator_d2_reduces_to_product_kernel():
    # oracle: direct 2-d quadrature of the kernel over the box
    box = BoxFunction(((np.array([0.5, 0.0]), np.array([1.5, 1.0]), np.array([1.0])),))
    x = np.array([1.0, 0.5])
    val = hilbert_operator_T(box, x, d=2, j=1)[0]
    c2 = math.gamma(1.5) / math.pi ** 1.5
    ref, _ = integrate.dblquad(
        lambda y2, y1: (x[0] + y1) / ((x[0] + y1) ** 2 + (x[1] + y2) ** 2) ** 1.5,
        0.5, 1.5, 0.0, 1.0, epsabs=1e-11)
    assert val == pytest.approx(c2 * ref, abs=1e-8)


# ---------------------------------------------------------------------------
# directional transforms
# ---------------------------------------------------------------------------

def test_directional_1d_matches_real_transform():
    f = PiecewiseFunction(Domain.REAL_LINE,
                          ((-1.0, 0.5, np.array([2.0])), (1.0, 2.0, np.array([-1.0]))),
                          SCALAR)
    for t in (-3.0, 0.7, 4.0):
        assert directional_hilbert(f, [1.0], [t])[0] == pytest.approx(
            real_hilbert_step(f, t)[0])
        assert directional_hilbert(f, [-1.0], [t])[0] == pytest.approx(
            -real_hilbert_step(f, t)[0])


def test_directional_box_example():
    square = BoxFunction(((np.array([0.0, 0.0]), np.array([1.0, 1.0]), np.array([1.0])),))
    val = directional_hilbert(square, [1.0, 0.0], [2.0, 0.5])
    assert val[0] == pytest.approx(math.log(2.0) / math.pi, rel=1e-13)


def test_directional_odd_in_theta():
    square = BoxFunction(((np.array([-0.2, 0.1]), np.array([0.9, 1.3]), np.array([1.5])),))
    th = np.array([0.6, 0.8])
    x = np.array([2.0, -0.7])
    assert directional_hilbert(square, -th, x)[0] == pytest.approx(
        -directional_hilbert(square, th, x)[0], rel=1e-13)


def test_directional_rotation_equivariance():
    # H_{A theta} f(x) = H_theta (f o A)(A^{-1} x) for a rotation A aligned with axes
    square = BoxFunction(((np.array([0.0, 0.0]), np.array([1.0, 2.0]), np.array([1.0])),))
    # A = rotation by +pi/2: A(y1, y2) = (-y2, y1); y in box(f o A) iff Ay in box(f)
    rotated = BoxFunction(((np.array([0.0, -1.0]), np.array([2.0, 0.0]), np.array([1.0])),))
    th = np.array([0.6, 0.8])
    a_th = np.array([-0.8, 0.6])
    x = np.array([3.0, 0.4])
    a_inv_x = np.array([0.4, -3.0])
    lhs = directional_hilbert(square, a_th, x)[0]
    rhs = directional_hilbert(rotated, th, a_inv_x)[0]
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_directional_tangent_error():
    square = BoxFunction(((np.array([0.0, 0.0]), np.array([1.0, 1.0]), np.array([1.0])),))
    with pytest.raises(SingularConfigurationError):
        directional_hilbert(square, [1.0, 0.0], [2.0, 1.0])


def test_directional_kind_validation():
    with pytest.raises(ValueError):
        DirectionalHilbert(theta=(0.5, 0.5))


# ---------------------------------------------------------------------------
# Riesz transforms
# ---------------------------------------------------------------------------

def gaussian_bump(pts):
    pts = np.atleast_2d(pts)
    return np.exp(-0.5 * np.sum(pts ** 2, axis=1))


def test_riesz_rotations_odd_symmetry_zero():
    # f even in coordinate j about x: contributions cancel
    val = riesz_rotations(gaussian_bump, 1, [0.0, 0.7], nodes=64)
    assert abs(val[0]) <= 1e-14


def test_riesz_rotations_vs_multiplier_oracle():
    L, n = 20.0, 256
    axis = -L + (2 * L / n) * np.arange(n)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    R1 = riesz_multiplier(np.exp(-0.5 * (X ** 2 + Y ** 2)), 1)
    for (i, j) in ((n // 2 + 3, n // 2 + 2), (n // 2 + 8, n // 2 - 5)):
        x = np.array([axis[i], axis[j]])
        rot = riesz_rotations(gaussian_bump, 1, x, nodes=256)
        assert abs(rot[0] - R1[i, j]) <= 1e-3


def test_riesz_rotations_linearity():
    box1 = BoxFunction(((np.array([0.0, 0.0]), np.array([1.0, 1.0]), np.array([1.0])),))
    box2 = BoxFunction(((np.array([0.0, 0.0]), np.array([1.0, 1.0]), np.array([3.0])),))
    x = np.array([2.0, 0.3])
    v1 = riesz_rotations(box1, 1, x, nodes=64)[0]
    v2 = riesz_rotations(box2, 1, x, nodes=64)[0]
    assert v2 == pytest.approx(3.0 * v1, rel=1e-12)


def test_riesz_rotations_error_estimate_shrinks():
    x = np.array([0.9, 0.4])
    _, err_co = riesz_rotations(gaussian_bump, 1, x, nodes=32, with_error=True)
    val, err_fi = riesz_rotations(gaussian_bump, 1, x, nodes=128, with_error=True)
    assert err_fi <= max(err_co, 1e-12)


def test_riesz_rotations_d3_runs():
    def bump3(pts):
        pts = np.atleast_2d(pts)
        return np.exp(-0.5 * np.sum(pts ** 2, axis=1))

    val, err = riesz_rotations(bump3, 3, np.array([0.3, 0.1, 0.8]), nodes=200,
                               with_error=True)
    assert math.isfinite(val[0]) and err <= 1e-4


def test_riesz_multiplier_l2_nonexpansive():
    g = RNG.standard_normal((64, 64))
    assert np.linalg.norm(riesz_multiplier(g, 1)) <= np.linalg.norm(g) * (1 + 1e-12)
    g3 = RNG.standard_normal((16, 16, 16))
    assert np.linalg.norm(riesz_multiplier(g3, 3)) <= np.linalg.norm(g3) * (1 + 1e-12)


def test_riesz_multiplier_single_mode():
    # Re e^{i<xi0, x>} with xi0 = (k, 0) maps to sin(<xi0, x>)
    n = 64
    x = 2 * math.pi * np.arange(n) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    k = 3
    f = np.cos(k * X)
    out = riesz_multiplier(f, 1)
    assert np.max(np.abs(out - np.sin(k * X))) <= 1e-12


def test_riesz_sum_of_squares_bound():
    g = RNG.standard_normal((64, 64))
    r1 = riesz_multiplier(g, 1)
    r2 = riesz_multiplier(g, 2)
    assert np.linalg.norm(r1 + r2) <= math.sqrt(2.0) * np.linalg.norm(g) * (1 + 1e-12)


def test_riesz_power_constant_values():
    assert riesz_power_constant(1, 2) == pytest.approx(1.0, rel=1e-12)
    assert riesz_power_constant(1, 1) == pytest.approx(2.0 / math.pi, rel=1e-12)
    # growth like m^{d/2} at fixed d
    for d in (1, 2, 3):
        ratios = [riesz_power_constant(m, d) / m ** (d / 2.0)
                  for m in (101, 201, 401, 801)]
        assert max(ratios) / min(ratios) <= 1.02


def test_riesz_power_constant_rejects_even():
    with pytest.raises(ValueError):
        riesz_power_constant(2, 2)
    with pytest.raises(ValueError):
        RieszRotations(d=2, j=3)
