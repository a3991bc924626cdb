import math

import numpy as np
import pytest

from hilbertlab.core import GaugePair, NormGauge, PowerGauge
from hilbertlab.discretize import build_compression
from hilbertlab.norms import (
    IterationError,
    cross_domain_consistency,
    default_seed,
    extrapolation_constant,
    phi_psi_ratio_ascent,
    pichorides_constant,
    p_norm_power_iteration,
    rayleigh_ratio,
    reference_constants,
)

RNG = np.random.default_rng(5)


# ---------------------------------------------------------------------------
# closed-form constants
# ---------------------------------------------------------------------------

def test_pichorides_values():
    assert pichorides_constant(2.0) == pytest.approx(1.0, rel=1e-15)
    assert pichorides_constant(4.0) == pytest.approx(1.0 + math.sqrt(2.0), rel=1e-12)
    assert pichorides_constant(4.0 / 3.0) == pytest.approx(pichorides_constant(4.0),
                                                           rel=1e-12)
    with pytest.raises(ValueError):
        pichorides_constant(1.0)


def test_reference_constants_p2():
    ref = reference_constants(2.0)
    assert ref["p_star"] == 2.0
    assert ref["beta_hilbert"] == 1.0
    assert ref["pichorides"] == pytest.approx(1.0)
    assert ref["wds_bound_hilbert"] == pytest.approx(2.0)


def test_reference_constants_sandwich_sweep():
    for p in np.geomspace(1.01, 100.0, 200):
        ref = reference_constants(float(p))  # raises if the sandwich fails
        lo = (2.0 / math.pi) * ref["beta_hilbert"]
        assert lo <= ref["pichorides"] * (1 + 1e-12)
        assert ref["pichorides"] <= ref["beta_hilbert"] * (1 + 1e-12)


def test_reference_constants_duality():
    for p in (1.3, 2.7, 6.0):
        a = reference_constants(p)
        b = reference_constants(p / (p - 1.0))
        for key in a:
            assert a[key] == pytest.approx(b[key], rel=1e-12)


def test_extrapolation_constant():
    # beta^p 2 delta C/(beta-1) = (1+1/p)^p / 5 <= e/5 < 1: always valid
    for p in (1.5, 2.0, 10.0, 100.0):
        for C in (0.5, 1.0, 20.0):
            beta = 1.0 + 1.0 / p
            assert beta ** p * 2.0 * (1.0 / (10.0 * C * p)) * C / (beta - 1.0) < math.e / 5
            val = extrapolation_constant(p, C)
            assert math.isfinite(val) and val > 0
    # at most linear growth in p at fixed C
    ps = np.linspace(2.0, 100.0, 50)
    vals = np.array([extrapolation_constant(float(p), 1.0) for p in ps])
    slopes = np.diff(vals) / np.diff(ps)
    assert np.max(slopes) <= 1.05 * (vals[-1] / ps[-1]) + 20.0
    assert vals[-1] <= vals[0] * (ps[-1] / ps[0]) * 1.5
    with pytest.raises(ValueError):
        extrapolation_constant(0.9, 1.0)
    with pytest.raises(ValueError):
        extrapolation_constant(2.0, -1.0)


# ---------------------------------------------------------------------------
# power iteration
# ---------------------------------------------------------------------------

def test_identity_matrix_norm_is_one():
    for p in (1.5, 2.0, 3.0):
        est = p_norm_power_iteration(np.eye(16), p, tol=1e-12)
        assert est.lower_bound == pytest.approx(1.0, rel=1e-12)
        assert est.iterations <= 2


def test_witness_reproduces_lower_bound():
    comp = build_compression("hdis", 256, "uniform")
    est = p_norm_power_iteration(comp, 3.0, tol=1e-10)
    again = rayleigh_ratio(comp.matrix, comp.weights, 3.0, est.witness)
    assert again == pytest.approx(est.lower_bound, abs=1e-9)


def test_p2_uniform_truncation_window():
    est = p_norm_power_iteration("hdis", 2.0, size=1024, scheme="uniform")
    assert 0.995 <= est.lower_bound <= 1.0 + 1e-9


def test_estimates_never_exceed_ceiling():
    for p in (2.0, 3.0, 4.0):
        ceiling = pichorides_constant(p)
        for op in ("ht", "hr", "hdis"):
            est = p_norm_power_iteration(op, p, size=128, scheme="graded",
                                         tol=1e-9, max_iter=1500)
            assert est.lower_bound <= ceiling + 1e-6


def test_duality_on_discrete_truncation():
    # the kernel is antisymmetric, so p->p and p'->p' truncated norms coincide
    a = p_norm_power_iteration("hdis", 3.0, size=2048, scheme="uniform", tol=1e-10)
    b = p_norm_power_iteration("hdis", 1.5, size=2048, scheme="uniform", tol=1e-10)
    assert abs(a.lower_bound - b.lower_bound) <= 0.01 * a.lower_bound


def test_zero_seed_rejected():
    with pytest.raises(ValueError):
        p_norm_power_iteration(np.eye(4), 2.0, f0=np.zeros(4))


def test_unconverged_flagged():
    est = p_norm_power_iteration("hdis", 2.0, size=256, scheme="uniform",
                                 tol=1e-14, max_iter=3)
    assert not est.converged
    assert est.lower_bound > 0.9  # still a valid certified bound


def test_monotone_rayleigh_assertion_has_teeth():
    comp = build_compression("hdis", 64, "uniform")
    est = p_norm_power_iteration(comp, 2.5, tol=1e-11)
    # ratchet holds along the run by construction; the witness check seals it
    assert rayleigh_ratio(comp.matrix, comp.weights, 2.5, est.witness) <= \
        est.lower_bound + 1e-9


# ---------------------------------------------------------------------------
# ratio ascent on the FFT grid
# ---------------------------------------------------------------------------

def test_parseval_equality_case():
    est = phi_psi_ratio_ascent(GaugePair.power(2.0), 256, constraint="zero-mean")
    assert est.lower_bound == pytest.approx(1.0, abs=1e-6)


def test_scale_invariance_of_power_ratio():
    pair = GaugePair.power(3.0)
    rng = np.random.default_rng(0)
    f0 = rng.standard_normal((128, 1))
    e1 = phi_psi_ratio_ascent(pair, 128, f0=f0, max_iter=0)
    e2 = phi_psi_ratio_ascent(pair, 128, f0=5.0 * f0, max_iter=0)
    assert e1.lower_bound == pytest.approx(e2.lower_bound, rel=1e-12)


def test_constraint_agreement_power3():
    pair = GaugePair.power(3.0)
    n = phi_psi_ratio_ascent(pair, 256, constraint="none")
    z = phi_psi_ratio_ascent(pair, 256, constraint="zero-mean")
    gap = abs(n.lower_bound - z.lower_bound) / max(n.lower_bound, z.lower_bound)
    assert gap <= 0.02


def test_ascent_matches_power_iteration_on_same_grid():
    # Power(p)/Power(p) ascent is the p-th power of the multiplier-matrix norm
    m, p = 128, 3.0
    eye = np.eye(m)
    spec = np.fft.fft(eye, axis=0)
    k = np.fft.fftfreq(m, d=1.0 / m)
    mult = -1j * np.sign(k)
    mult[0] = 0.0
    mult[m // 2] = 0.0
    G = np.fft.ifft(spec * mult[:, None], axis=0).real.T
    boyd = p_norm_power_iteration(G, p, tol=1e-12, max_iter=4000)
    ascent = phi_psi_ratio_ascent(GaugePair.power(p), m, tol=1e-12, max_iter=3000)
    assert ascent.lower_bound == pytest.approx(boyd.lower_bound ** p, rel=0.01)


def test_ascent_rejects_bad_input():
    with pytest.raises(ValueError):
        phi_psi_ratio_ascent(GaugePair.power(2.0), 100)
    with pytest.raises(ValueError):
        phi_psi_ratio_ascent(GaugePair.power(2.0), 64, f0=np.zeros((64, 1)))


def test_ascent_norm_psi_runs():
    pair = GaugePair(PowerGauge(2.0), NormGauge())
    est = phi_psi_ratio_ascent(pair, 64, max_iter=60)
    assert math.isfinite(est.lower_bound) and est.lower_bound > 0


# ---------------------------------------------------------------------------
# cross-domain consistency
# ---------------------------------------------------------------------------

def test_cross_domain_p2_band():
    rep = cross_domain_consistency(2.0, [128, 256], band=0.02, max_iter=4000)
    for op, seq in rep.estimates.items():
        assert rep.monotone[op]
        assert seq[-1] >= 0.98
        assert seq[-1] <= 1.0 + 1e-6
    assert rep.within_band


def test_cross_domain_p3_approaches_sqrt3():
    rep = cross_domain_consistency(3.0, [256, 512], band=0.03)
    ceiling = math.sqrt(3.0)
    assert rep.ceiling == pytest.approx(ceiling, rel=1e-12)
    for op, val in rep.final_values.items():
        assert val <= ceiling + 1e-6
        assert val >= 0.95 * ceiling
    assert "final spread" in rep.summary()
