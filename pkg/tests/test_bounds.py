# -*- coding: utf-8 -*-
"""
界的计算模块测试
"""

import numpy as np
import pytest

from bounds import (
    DecayBound, GapBound, assumption1_mu, benzi_bound, bound_report, check_decay_bound,
    check_matrix_envelope, entropy_correlation_bound, example3_exact_gap,
    example3_gap_lower_bound, fitted_prefactor, inv_sqrt_decay_bound, polylog, riemann_zeta,
    theorem1_bound, theorem2_gap_bound, theorem3_gap_bound, theorem4_bound, theorem5_area_bound
)
from config import Config
from conftest import nearest_neighbour
from coupling import (
    algebraic_kernel, build_algebraic, build_disordered_chain, build_disordered_lattice,
    build_exponential_decay, make_coupling
)
from exception_handler import BoundException, ErrorCode
from gaussian import entropy, ground_state, thermal_state
from lattice import cubic, cubic_block, fit_dimension, make_region, ring, verify_assumption1
from spectral import INV_SQRT, matrix_function, mode_spectrum, spectral_interval, thermal_g


def zeta_partial_sum(s, terms=10000):
    """Σ_{k<N} k^{−s} 加 Euler–Maclaurin 尾项"""
    k = np.arange(1, terms, dtype=float)
    N = float(terms)
    tail = N ** (1.0 - s) / (s - 1.0) + 0.5 * N ** -s + s / 12.0 * N ** (-s - 1.0)
    return float(np.sum(k ** -s) + tail)


def polylog_sum(s, x, terms=2000):
    k = np.arange(1, terms + 1, dtype=float)
    return float(np.sum(x ** k / k ** s))


def random_local_coupling(lat, seed, strength, momentum="identity"):
    """dist ≤ 2 处随机耦合，Gershgorin 保证正定"""
    rng = np.random.default_rng(seed)
    n = lat.vertex_count
    mask = np.triu((lat.dist >= 1) & (lat.dist <= 2) & lat.reachable)
    vx = np.eye(n)
    upper = np.where(mask, rng.uniform(-strength, strength, size=(n, n)), 0.0)
    vx = vx + upper + upper.T
    if momentum == "identity":
        vp = np.eye(n)
    else:
        vp = np.diag(rng.uniform(0.8, 1.2, size=n))
    return make_coupling(lat, vx, vp)


# ==================== 特殊函数 ====================

@pytest.mark.parametrize("s", [1.5, 2.0, 3.0, 6.0])
def test_zeta_against_partial_sums(s):
    assert riemann_zeta(s) == pytest.approx(zeta_partial_sum(s), rel=1e-10)


def test_zeta_closed_forms_and_limit():
    assert riemann_zeta(2.0) == pytest.approx(np.pi ** 2 / 6.0, rel=1e-12)
    assert riemann_zeta(4.0) == pytest.approx(np.pi ** 4 / 90.0, rel=1e-12)
    assert 0.0 < riemann_zeta(30.0) - 1.0 < 1e-9
    with pytest.raises(BoundException) as info:
        riemann_zeta(1.0)
    assert info.value.error_code == ErrorCode.BOUND_DOMAIN_ERROR


def test_polylog_values():
    assert polylog(0.0, 0.5) == pytest.approx(1.0, rel=1e-12)
    assert polylog(-1.0, 0.5) == pytest.approx(2.0, rel=1e-12)
    assert polylog(-1.5, 0.3) == pytest.approx(polylog_sum(-1.5, 0.3), rel=1e-10)
    # Li_{−3}(x) = x(1 + 4x + x²)/(1 − x)⁴
    assert polylog(-3.0, 0.9) == pytest.approx(0.9 * (1 + 3.6 + 0.81) / 0.1 ** 4, rel=1e-10)
    assert polylog(-3.0, 0.9) == pytest.approx(polylog_sum(-3.0, 0.9), rel=1e-10)
    assert polylog(2.0, 0.0) == 0.0
    with pytest.raises(BoundException):
        polylog(-1.0, 1.0)
    with pytest.raises(BoundException):
        polylog(-1.0, -0.1)


# ==================== Theorem 1 ====================

def test_theorem1_on_ring(ring_coupling, ring40):
    xx, pp = theorem1_bound(ring_coupling)
    # a = 0.4, b = 1.6, m = 2
    assert xx.xi == pytest.approx(4.0 / np.log(4.0 / 3.0))
    assert xx.K == pytest.approx(np.sqrt(1.6) * 3 / 0.4)
    assert pp.K == pytest.approx(xx.K * 1.6)
    assert xx.min_dist == 2

    state = ground_state(ring_coupling)
    for bound, block in ((xx, "xx"), (pp, "pp")):
        report = check_decay_bound(state, bound, block, ring40)
        assert report.satisfied
        assert report.pairs_checked > 0


@pytest.mark.parametrize("seed", range(10))
def test_theorem1_random_rings(seed):
    lat = ring(30 + 7 * seed)
    momentum = "identity" if seed % 2 == 0 else "diagonal"
    c = random_local_coupling(lat, seed, 0.15, momentum)
    state = ground_state(c)
    xx, pp = theorem1_bound(c)
    assert check_decay_bound(state, xx, "xx", lat).satisfied
    assert check_decay_bound(state, pp, "pp", lat).satisfied


@pytest.mark.parametrize("seed", range(5))
def test_theorem1_random_tori(seed):
    lat = cubic([6 + seed, 6], periodic=True)
    c = random_local_coupling(lat, 100 + seed, 0.05)
    state = ground_state(c)
    xx, pp = theorem1_bound(c)
    assert check_decay_bound(state, xx, "xx", lat).satisfied
    assert check_decay_bound(state, pp, "pp", lat).satisfied


@pytest.mark.parametrize("seed", range(5))
def test_theorem1_disordered_builders(seed):
    for c in (build_disordered_chain(40, seed), build_disordered_lattice(cubic([6, 6]), seed)):
        state = ground_state(c)
        xx, pp = theorem1_bound(c)
        assert check_decay_bound(state, xx, "xx", c.lattice).satisfied
        assert check_decay_bound(state, pp, "pp", c.lattice).satisfied


def test_theorem1_product_coupling(ring40):
    c = make_coupling(ring40, 2.0 * np.eye(40), np.eye(40))
    xx, _ = theorem1_bound(c)
    assert xx.xi == 0.0
    report = check_decay_bound(ground_state(c), xx, "xx", ring40)
    assert report.satisfied
    assert report.max_ratio <= 1.0 + 1e-9


def test_theorem1_rejects_non_local(ring40):
    with pytest.raises(BoundException) as info:
        theorem1_bound(build_algebraic(ring40, 2.0))
    assert info.value.error_code == ErrorCode.BOUND_NOT_APPLICABLE


def test_theorem1_length_decreases_with_relative_gap(ring40):
    points = []
    for strength in (0.05, 0.1, 0.2, 0.3, 0.4, 0.45):
        c = nearest_neighbour(ring40, strength)
        a, b = spectral_interval(c.vx)
        points.append((b / (b - a), theorem1_bound(c)[0].xi))
    points.sort()
    ratios = [ratio for ratio, _ in points]
    lengths = [xi for _, xi in points]
    assert len(set(ratios)) == len(ratios)
    assert all(longer > shorter for longer, shorter in zip(lengths, lengths[1:]))


def test_shrunk_prefactor_is_reported(ring_coupling, ring40):
    state = ground_state(ring_coupling)
    xx, _ = theorem1_bound(ring_coupling)
    report = check_decay_bound(state, xx, "xx", ring40)
    tight = DecayBound(K=xx.K * report.max_ratio, xi=xx.xi, min_dist=xx.min_dist)
    tight_report = check_decay_bound(state, tight, "xx", ring40)
    assert tight_report.satisfied
    assert tight_report.max_ratio == pytest.approx(1.0, rel=1e-12)

    halved = DecayBound(K=tight.K / 2.0, xi=xx.xi, min_dist=xx.min_dist)
    halved_report = check_decay_bound(state, halved, "xx", ring40)
    assert not halved_report.satisfied
    assert halved_report.max_ratio == pytest.approx(2.0, rel=1e-9)
    i, j = halved_report.worst_pair
    k, l = tight_report.worst_pair
    assert ring40.dist[i, j] == ring40.dist[k, l]


def test_check_rejects_wrong_lattice(ring_coupling):
    xx, _ = theorem1_bound(ring_coupling)
    with pytest.raises(BoundException) as info:
        check_decay_bound(ground_state(ring_coupling), xx, "xx", ring(41))
    assert info.value.error_code == ErrorCode.BOUND_DIMENSION_MISMATCH


def test_zero_envelope_against_nonzero_entry(ring40):
    matrix = np.eye(40)
    matrix[0, 5] = matrix[5, 0] = 1e-3
    report = check_matrix_envelope(matrix, DecayBound(K=1.0, xi=0.0, min_dist=0), ring40)
    assert not report.satisfied
    assert report.max_ratio == np.inf
    assert report.worst_pair in ((0, 5), (5, 0))


def test_noise_floor_is_reported(ring40):
    matrix = np.eye(40)
    matrix[0, 20] = matrix[20, 0] = 1e-13
    report = check_matrix_envelope(matrix, DecayBound(K=1.0, xi=0.0, min_dist=0), ring40)
    assert report.satisfied
    assert report.noise_floor == pytest.approx(1e-12)
    assert report.floored_pairs == 2
    assert report.to_dict()['floored_pairs'] == 2

    clean = check_matrix_envelope(np.eye(40), DecayBound(K=1.0, xi=0.0, min_dist=0), ring40)
    assert clean.floored_pairs == 0


def test_noise_floor_follows_tolerance(ring40, monkeypatch):
    monkeypatch.setattr(Config, "CORRELATION_NOISE_TOL", 1e-15)
    matrix = np.eye(40)
    matrix[0, 20] = matrix[20, 0] = 1e-13
    report = check_matrix_envelope(matrix, DecayBound(K=1.0, xi=0.0, min_dist=0), ring40)
    assert not report.satisfied
    assert report.max_ratio == np.inf
    assert report.floored_pairs == 0


def test_empty_check_passes():
    lat = ring(4)
    report = check_matrix_envelope(np.eye(4), DecayBound(K=1.0, xi=1.0, min_dist=10), lat)
    assert report.pairs_checked == 0
    assert report.worst_pair == (-1, -1)
    assert report.satisfied


# ==================== Theorems 2 与 3 ====================

def test_theorem2_examples():
    assert theorem2_gap_bound(1.0, 0.0, 3.0, 1.0, 2.0).value == pytest.approx(2.0)
    expected = 2.0 / (1.0 + 2.0 * riemann_zeta(3.0))
    assert theorem2_gap_bound(1.0, 1.0, 3.0, 1.0, 2.0).value == pytest.approx(expected)
    with pytest.raises(BoundException) as info:
        theorem2_gap_bound(1.0, 1.0, 1.0, 1.0, 2.0)
    assert info.value.error_code == ErrorCode.BOUND_DOMAIN_ERROR


@pytest.mark.parametrize("eta", [2.0, 3.0])
def test_theorem2_on_algebraic_coupling(ring40, eta):
    c = build_algebraic(ring40, eta)
    W = algebraic_kernel(ring40, eta)
    dims = fit_dimension(ring40)
    K0 = float(np.max(np.diag(W)))
    bound = theorem2_gap_bound(K0, 1.0, eta, dims.d, dims.c)
    assert mode_spectrum(c).gap >= bound.value * (1.0 - 1e-12)


def test_theorem3_examples():
    assert theorem3_gap_bound(2.0, 0.0, 1.0, 2.0).value == pytest.approx(1.0)
    q = np.exp(-1.0)
    expected = 2.0 / (1.0 + 2.0 * q / (1.0 - q))
    assert theorem3_gap_bound(1.0, 1.0, 1.0, 2.0).value == pytest.approx(expected)
    with pytest.raises(BoundException):
        theorem3_gap_bound(0.0, 1.0, 1.0, 2.0)


@pytest.mark.parametrize("K,xi", [(1.0, 1.0), (0.5, 2.0), (2.0, 3.0)])
def test_example3_exact_gaps(K, xi):
    xx = build_exponential_decay(40, K, xi, "xx")
    pp = build_exponential_decay(40, K, xi, "pp")
    gap_xx = mode_spectrum(xx).gap
    gap_pp = mode_spectrum(pp).gap
    assert gap_xx == pytest.approx(example3_exact_gap(K, xi, "xx"), rel=1e-9)
    assert gap_pp == pytest.approx(example3_exact_gap(K, xi, "pp"), rel=1e-9)

    lower = example3_gap_lower_bound(K, xi)
    assert min(gap_xx, gap_pp) >= lower * (1.0 - 1e-12)
    # 精确 K 时 Theorem 3 取等号
    assert theorem3_gap_bound(K, xi, 1.0, 2.0).value == pytest.approx(example3_exact_gap(K, xi, "xx"))


@pytest.mark.parametrize("K,xi", [(1.0, 1.0), (2.0, 3.0)])
def test_theorem3_with_fitted_prefactor(K, xi):
    c = build_exponential_decay(40, K, xi, "xx")
    K_eff = fitted_prefactor(ground_state(c), "xx", c.lattice, xi)
    assert K_eff >= K * (1.0 - 1e-12)
    assert mode_spectrum(c).gap >= theorem3_gap_bound(K_eff, xi, 1.0, 2.0).value * (1.0 - 1e-12)


def test_example3_rejects_unknown_block():
    with pytest.raises(BoundException):
        example3_exact_gap(1.0, 1.0, "xp")


# ==================== Theorem 4 ====================

@pytest.mark.parametrize("factor", [0.1, 1.0, 10.0])
def test_theorem4_on_ring(ring_coupling, ring40, factor):
    mu = assumption1_mu(ring_coupling)
    cert = verify_assumption1(ring40, mu, mu / 2.0)
    T = factor * mode_spectrum(ring_coupling).gap
    xx, pp = theorem4_bound(ring_coupling, T, cert)
    state = thermal_state(ring_coupling, T)
    assert check_decay_bound(state, xx, "xx", ring40).satisfied
    assert check_decay_bound(state, pp, "pp", ring40).satisfied


def test_theorem4_on_square():
    lat = cubic([8, 8])
    c = nearest_neighbour(lat, 0.2)
    mu = assumption1_mu(c)
    cert = verify_assumption1(lat, mu, mu / 2.0)
    xx, pp = theorem4_bound(c, 1.0, cert)
    state = thermal_state(c, 1.0)
    assert check_decay_bound(state, xx, "xx", lat).satisfied
    assert check_decay_bound(state, pp, "pp", lat).satisfied


def test_theorem4_prefactor_monotone_in_temperature(ring_coupling, ring40):
    mu = assumption1_mu(ring_coupling)
    cert = verify_assumption1(ring40, mu, mu / 2.0)
    prefactors = [theorem4_bound(ring_coupling, T, cert)[0].K for T in (10.0, 1.0, 0.1, 1e-3)]
    assert prefactors == sorted(prefactors, reverse=True)
    # T → 0 时回到 Theorem 1 的前因子
    assert prefactors[-1] == pytest.approx(theorem1_bound(ring_coupling)[0].K)


def _seeded_instances():
    """Theorem 1 测试所用的随机环与随机环面，动量矩阵取 I"""
    rings = [(ring(30 + 7 * seed), seed, 0.15) for seed in range(10)]
    tori = [(cubic([6 + seed, 6], periodic=True), 100 + seed, 0.05) for seed in range(5)]
    return rings + tori


@pytest.mark.parametrize("factor", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("instance", range(15))
def test_theorem4_on_seeded_instances(instance, factor):
    lat, seed, strength = _seeded_instances()[instance]
    c = random_local_coupling(lat, seed, strength)
    mu = assumption1_mu(c)
    cert = verify_assumption1(lat, mu, mu / 2.0)
    T = factor * mode_spectrum(c).gap
    xx, pp = theorem4_bound(c, T, cert)
    state = thermal_state(c, T)
    assert check_decay_bound(state, xx, "xx", lat).satisfied
    assert check_decay_bound(state, pp, "pp", lat).satisfied


def test_theorem4_rejects_wrong_certificate(ring_coupling, ring40):
    mu = assumption1_mu(ring_coupling)
    cert = verify_assumption1(ring40, 2.0 * mu, mu)
    with pytest.raises(BoundException) as info:
        theorem4_bound(ring_coupling, 1.0, cert)
    assert info.value.error_code == ErrorCode.BOUND_NOT_APPLICABLE


def test_theorem4_rejects_non_commuting():
    lat = ring(10)
    vx = np.eye(10) - 0.3 * lat.adjacency
    vp = np.diag(np.linspace(0.5, 2.0, 10))
    c = make_coupling(lat, vx, vp)
    cert = verify_assumption1(lat, 0.5, 0.25)
    with pytest.raises(BoundException) as info:
        theorem4_bound(c, 1.0, cert)
    assert info.value.error_code == ErrorCode.BOUND_NOT_APPLICABLE
    with pytest.raises(BoundException) as info:
        theorem4_bound(c, 0.0, cert)
    assert info.value.error_code == ErrorCode.BOUND_DOMAIN_ERROR


# ==================== Theorem 5 ====================

def _ring_regions(lat):
    members = [range(20), range(5, 8), range(0, 40, 4), [1, 2, 17, 30], [0], range(10),
               range(0, 40, 2), [3, 4, 5, 20, 21, 22], range(35, 40), range(1, 39)]
    return [make_region(lat, m) for m in members]


def _square_regions(lat):
    blocks = [([4, 4], [4, 4]), ([0, 0], [2, 5]), ([0, 0], [1, 1]), ([2, 3], [6, 6]),
              ([0, 0], [12, 3]), ([8, 1], [3, 9])]
    scattered = [[0, 13, 26, 100, 143], range(0, 144, 7), range(72), [5, 6, 7, 60, 61]]
    return ([cubic_block(lat, corner, size) for corner, size in blocks]
            + [make_region(lat, m) for m in scattered])


@pytest.mark.parametrize("case", ["ring", "square"])
def test_area_law_sandwich(case, ring_coupling, ring40, square_coupling, square12):
    if case == "ring":
        c, lat, regions = ring_coupling, ring40, _ring_regions(ring40)
    else:
        c, lat, regions = square_coupling, square12, _square_regions(square12)
    state = ground_state(c)
    dims = fit_dimension(lat)
    for region in regions:
        measured = entropy(state, region).entropy_bits
        intermediate = entropy_correlation_bound(state, c, region)
        area = theorem5_area_bound(c, region, dims)
        assert measured <= intermediate + 1e-9
        assert intermediate <= area + 1e-9


def test_area_law_product_coupling(ring40):
    c = make_coupling(ring40, np.eye(40), np.eye(40))
    region = make_region(ring40, range(10))
    state = ground_state(c)
    assert theorem5_area_bound(c, region, fit_dimension(ring40)) == 0.0
    assert entropy_correlation_bound(state, c, region) == pytest.approx(0.0, abs=1e-12)


def test_area_law_requires_identity_momentum(ring40):
    c = make_coupling(ring40, np.eye(40) - 0.3 * ring40.adjacency, 2.0 * np.eye(40))
    with pytest.raises(BoundException) as info:
        theorem5_area_bound(c, make_region(ring40, range(10)), fit_dimension(ring40))
    assert info.value.error_code == ErrorCode.BOUND_NOT_APPLICABLE


def test_correlation_bound_on_non_local_coupling(ring40):
    c = build_algebraic(ring40, 2.0)
    value = entropy_correlation_bound(ground_state(c), c, make_region(ring40, range(10)))
    assert np.isfinite(value) and value > 0.0


# ==================== 矩阵函数的衰减 ====================

@pytest.mark.parametrize("strength", [0.0, 0.3, 0.49])
def test_inv_sqrt_decay_bound(strength):
    lat = ring(30)
    V = np.eye(30) - strength * lat.adjacency
    bound = inv_sqrt_decay_bound(V, lat)
    report = check_matrix_envelope(matrix_function(V, INV_SQRT), bound, lat)
    assert report.satisfied
    if strength == 0.0:
        assert bound.xi == 0.0


def test_inv_sqrt_decay_bound_rejects_singular():
    lat = ring(10)
    with pytest.raises(BoundException):
        inv_sqrt_decay_bound(np.eye(10) - 0.6 * lat.adjacency, lat)


@pytest.mark.parametrize("f", [INV_SQRT, thermal_g(1.0)], ids=["inv_sqrt", "thermal_g"])
def test_benzi_envelope_holds(ring_coupling, ring40, f):
    V = ring_coupling.vx
    a, b = spectral_interval(V)
    chi = b / (b - a)
    envelope = benzi_bound(a, b, 2, f, chi)
    assert envelope.q == pytest.approx(1.0 / chi)
    bound = DecayBound(K=envelope.K, xi=float(-1.0 / np.log(envelope.q)), min_dist=0)
    assert check_matrix_envelope(matrix_function(V, f), bound, ring40).satisfied


@pytest.mark.parametrize("f", [INV_SQRT, thermal_g(1.0)], ids=["inv_sqrt", "thermal_g"])
@pytest.mark.parametrize("seed", range(10))
def test_benzi_envelope_on_random_rings(seed, f):
    lat = ring(30 + 7 * seed)
    c = random_local_coupling(lat, seed, 0.15)
    V = c.vx
    a, b = spectral_interval(V)
    chi = b / (b - a)
    envelope = benzi_bound(a, b, c.range_m, f, chi)
    assert envelope.q == pytest.approx(chi ** (-2.0 / c.range_m))
    bound = DecayBound(K=envelope.K, xi=float(-1.0 / np.log(envelope.q)), min_dist=0)
    assert check_matrix_envelope(matrix_function(V, f), bound, lat).satisfied


def test_benzi_rejects_non_analytic_ellipse():
    with pytest.raises(BoundException) as info:
        benzi_bound(0.4, 1.6, 2, INV_SQRT, 4.0)
    assert info.value.error_code == ErrorCode.BOUND_NOT_ANALYTIC
    with pytest.raises(BoundException) as info:
        benzi_bound(0.4, 1.6, 2, thermal_g(1.0), 1.5)
    assert info.value.error_code == ErrorCode.BOUND_NOT_ANALYTIC
    with pytest.raises(BoundException) as info:
        benzi_bound(0.4, 1.6, 2, INV_SQRT, 1.0)
    assert info.value.error_code == ErrorCode.BOUND_DOMAIN_ERROR


# ==================== 报告 ====================

def test_gap_bound_must_be_positive():
    with pytest.raises(BoundException):
        GapBound(value=0.0)
    assert GapBound(value=0.5).value == 0.5


def test_bound_report_keys(ring_coupling, ring40):
    xx, _ = theorem1_bound(ring_coupling)
    report = check_decay_bound(ground_state(ring_coupling), xx, "xx", ring40)
    payload = bound_report("theorem1", {'block': 'xx'}, xx, report)
    assert set(payload) == {"theorem", "params", "K", "xi", "satisfied", "max_ratio", "worst_pair"}
    assert payload['satisfied'] is True
    empty = bound_report("theorem2", {}, None, None)
    assert empty['K'] is None and empty['worst_pair'] is None
