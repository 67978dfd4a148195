import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apkin.collision import (
    DEFAULT_SIGMA,
    BgkOperator,
    SpectralBoltzmann,
    bgk_apply,
    boltzmann_apply,
    default_radius,
    estimate_mu,
    penalize,
    project_conservative,
    radial_integral,
    spectral_init,
)
from apkin.oracle import SeparableInterpolant, gaussian_factors, projected_oracle
from apkin.phase_space import MomentState, VelocityGrid, maxwellian, moment_array, moments

from conftest import DATA

TWO_MAXWELLIANS = [(0.5, 1.0, 0.0, 1.0), (0.5, -1.0, 0.5, 1.0)]


@pytest.fixture(scope="module")
def op16():
    return spectral_init(16, 8.0)


@pytest.fixture(scope="module")
def op32():
    return spectral_init(32, 8.0)


def two_maxwellians(grid):
    return sum(maxwellian(MomentState.from_primitive(r, [ux, uy], T), grid)
               for r, ux, uy, T in TWO_MAXWELLIANS)


# --------------------------------------------------------------------------
# BGK

def test_bgk_annihilates_equilibrium(vgrid16):
    M = maxwellian(MomentState.from_primitive(1.3, [0.2, -0.1], 0.9), vgrid16)
    assert np.max(np.abs(BgkOperator(2.0).apply(M, vgrid16))) <= 1e-14


@given(st.integers(0, 2**32 - 1))
def test_bgk_conserves(seed):
    g = VelocityGrid(16, 8.0)
    f = np.random.default_rng(seed).random(g.shape) * np.exp(-(g.vx**2 + g.vy**2) / 6)
    Q = bgk_apply(f, moments(f, g), 1.0, g)
    assert np.max(np.abs(moment_array(Q, g))) <= 1e-12


def test_bgk_pushes_bimodal_towards_equilibrium(vgrid32):
    f = two_maxwellians(vgrid32)
    M = maxwellian(moments(f, vgrid32), vgrid32)
    Q = bgk_apply(f, moments(f, vgrid32), 1.0, vgrid32)
    assert np.all(np.sign(Q) * np.sign(M - f) >= 0)
    assert Q[16, 16] > 0        # near v = 0 the bimodal state is underpopulated


def test_bgk_rejects_bad_mu():
    with pytest.raises(ValueError):
        BgkOperator(0.0)


# --------------------------------------------------------------------------
# spectral weights

def test_radial_integral_against_quadrature():
    from scipy.integrate import quad
    from scipy.special import j0
    for a, b in [(0.0, 0.0), (0.3, 0.3), (0.2, 1.1), (0.0, 2.5), (1.7, 0.4)]:
        ref, _ = quad(lambda r: r * j0(a * r) * j0(b * r), 0.0, 5.0, limit=200, epsabs=1e-13)
        assert radial_integral(np.array(a), np.array(b), 5.0) == pytest.approx(ref, abs=1e-11)


def test_default_radius():
    assert default_radius(8.0) == pytest.approx(16 / (3 + math.sqrt(2)))


def test_dense_table(op16):
    t = op16.dense_table()
    assert t.shape == (16,) * 4
    assert np.all(np.isfinite(t))


@given(st.lists(st.integers(-7, 7), min_size=4, max_size=4))
@settings(max_examples=60)
def test_weight_symmetry(k):
    op = SpectralBoltzmann(16, 8.0)
    l, m = np.array(k[:2]), np.array(k[2:])
    assert op.weight(l, m) == pytest.approx(op.weight(-l, -m), abs=1e-14)
    # mass mode: beta(l, -l) = 0
    assert op.weight(l, -l) == 0.0


@pytest.mark.parametrize("nv", [6, 7, 15])
def test_rejects_bad_nv(nv):
    with pytest.raises(ValueError):
        SpectralBoltzmann(nv, 8.0)


def test_kernel_cache_roundtrip(tmp_path):
    a = spectral_init(8, 8.0, cache_dir=tmp_path)
    files = list(tmp_path.iterdir())
    assert len(files) == 1
    header = files[0].read_bytes()[:24]
    assert int.from_bytes(header[:8], "little") == len(a.beta)
    b = spectral_init(8, 8.0, cache_dir=tmp_path)
    np.testing.assert_array_equal(a.beta, b.beta)
    c = spectral_init(8, 8.0, sigma=2 * DEFAULT_SIGMA, cache_dir=tmp_path)
    assert len(list(tmp_path.iterdir())) == 2
    np.testing.assert_allclose(c.beta, 2 * a.beta, rtol=1e-14)


# --------------------------------------------------------------------------
# spectral operator

def test_zero_in_zero_out(op16):
    assert np.all(boltzmann_apply(op16, np.zeros((16, 16))) == 0.0)


def test_shape_mismatch(op16):
    with pytest.raises(ValueError):
        op16.apply(np.zeros((32, 32)))


@given(st.integers(0, 2**32 - 1), st.floats(-3.0, 3.0))
@settings(max_examples=20)
def test_bilinear_scaling_and_mass(seed, a):
    g = VelocityGrid(16, 8.0)
    op = spectral_init(16, 8.0)
    f = np.random.default_rng(seed).random(g.shape) * np.exp(-(g.vx**2 + g.vy**2) / 4)
    Q = op.apply(f)
    np.testing.assert_allclose(op.apply(a * f), a * a * Q, atol=1e-13 * max(1.0, a * a))
    assert abs(moment_array(Q, g)[0]) <= 1e-10


def test_batched_apply_matches_single(op16, vgrid16, rng):
    f = rng.random((5, 16, 16)) * np.exp(-(vgrid16.vx**2 + vgrid16.vy**2) / 4)
    Q = op16.apply(f, chunk=2)
    for i in range(5):
        np.testing.assert_allclose(Q[i], op16.apply(f[i]), atol=1e-15)


def test_equilibrium_residual_nv32(op32, vgrid32):
    M = maxwellian(MomentState.from_primitive(1.0, [0.3, -0.2], 1.0), vgrid32)
    Q = op32.apply(M)
    assert np.sum(np.abs(Q)) <= 1e-5 * np.sum(np.abs(M))


def test_conservation_defects_shrink_with_nv(op16, op32):
    defects = []
    for op in (op16, op32):
        g = VelocityGrid(op.nv, op.vmax)
        f = two_maxwellians(g)
        defects.append(np.abs(moment_array(op.apply(f), g)[1:]).max())
    assert defects[1] < 1e-2 * defects[0]


def test_matches_precomputed_quadrature(op16, vgrid16):
    data = np.load(DATA / "collision_oracle_nv16.npz")
    assert int(data["nv"]) == 16 and float(data["radius"]) == op16.radius
    fN = SeparableInterpolant(vgrid16, gaussian_factors(vgrid16, data["params"]))
    Q = op16.apply(fN(vgrid16.vx, vgrid16.vy))
    ref = data["q"]
    assert np.sum(np.abs(Q - ref)) <= 1e-6 * np.sum(np.abs(ref))


def test_matches_live_quadrature_nv8():
    g = VelocityGrid(8, 8.0)
    op = spectral_init(8, 8.0)
    ref = projected_oracle(g, TWO_MAXWELLIANS, op.sigma, op.radius, n_r=32, n_theta=32, n_omega=32)
    fN = SeparableInterpolant(g, gaussian_factors(g, TWO_MAXWELLIANS))
    Q = op.apply(fN(g.vx, g.vy))
    assert np.sum(np.abs(Q - ref)) <= 1e-6 * np.sum(np.abs(ref))


# --------------------------------------------------------------------------
# penalization

def test_estimate_mu(vgrid32):
    M = maxwellian(MomentState.from_primitive(1.0, [0, 0], 1.0), vgrid32)
    assert estimate_mu(M, vgrid32) == pytest.approx(1.0, rel=1e-14)
    assert estimate_mu(2 * M, vgrid32) == pytest.approx(2.0, rel=1e-14)
    assert estimate_mu(np.zeros(vgrid32.shape), vgrid32) == 0.0
    with pytest.raises(ValueError):
        estimate_mu(-M, vgrid32)


def test_split_identity(op32, vgrid32):
    f = two_maxwellians(vgrid32)
    Q = op32.apply(f)
    mu = estimate_mu(f, vgrid32)
    s = penalize(Q, f, moments(f, vgrid32), mu, vgrid32)
    assert np.max(np.abs(s.g_part + s.q_part - Q)) <= 1e-15 * np.max(np.abs(Q))
    # gain term is nonnegative on resolved data
    assert np.min(Q + mu * f) >= -1e-8
    # G_P has the conservation defect of the spectral operator only
    assert np.max(np.abs(moment_array(s.g_part, vgrid32))) <= 1e-5


def test_split_vanishes_at_equilibrium(op32, vgrid32):
    M = maxwellian(MomentState.from_primitive(1.0, [0.1, 0.0], 1.0), vgrid32)
    s = penalize(op32.apply(M), M, moments(M, vgrid32), 1.0, vgrid32)
    assert np.max(np.abs(s.q_part)) <= 1e-14
    assert np.max(np.abs(s.g_part)) <= 1e-5


def test_penalize_rejects_mu():
    g = VelocityGrid(8, 8.0)
    with pytest.raises(ValueError):
        penalize(np.zeros(g.shape), np.ones(g.shape), moments(np.ones(g.shape), g), 0.0, g)


@given(st.integers(0, 2**32 - 1))
def test_projection_removes_moments(seed):
    g = VelocityGrid(16, 8.0)
    rng = np.random.default_rng(seed)
    M = maxwellian(MomentState.from_primitive(1.0, rng.uniform(-0.5, 0.5, 2), rng.uniform(0.5, 1.5)), g)
    r = rng.normal(size=g.shape) * M
    p = project_conservative(r, M, g)
    assert np.max(np.abs(moment_array(p, g))) <= 1e-12 * max(1.0, np.abs(r).max())
    # idempotent
    np.testing.assert_allclose(project_conservative(p, M, g), p, atol=1e-14)
