#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
界的计算模块
各定理的闭式界、特殊函数、Bernstein 型衰减包络与经验违背检查
"""

from dataclasses import dataclass
from typing import Any, Dict, NamedTuple, Optional, Tuple

import mpmath
import numpy as np
import scipy.linalg
import scipy.special

from config import Config
from coupling import Coupling, matrix_range
from exception_handler import BoundException, ErrorCode
from gaussian import GaussianState
from lattice import (
    DimensionEstimate, Lattice, Region, UNREACHABLE, Assumption1Certificate,
    ball_volume, complement, surface_area
)
from logger import get_logger
from spectral import ScalarFunction, affine_map, mode_spectrum, operator_norm

log = get_logger("bounds")


@dataclass(frozen=True)
class DecayBound:
    """包络 K·e^{−r/ξ}，在 r ≥ min_dist 时有效；ξ = 0 表示 r > 0 处为 0"""
    K: float
    xi: float
    min_dist: int

    def envelope(self, dist) -> np.ndarray:
        dist = np.asarray(dist)
        reachable = dist != UNREACHABLE
        r = np.where(reachable, dist, 0).astype(float)
        if self.xi > 0:
            values = self.K * np.exp(-r / self.xi)
        else:
            values = np.where(r == 0, self.K, 0.0)
        return np.where(reachable, values, 0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {'K': self.K, 'xi': self.xi, 'min_dist': self.min_dist}


@dataclass(frozen=True)
class GapBound:
    """ΔE 的正下界"""
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise BoundException(
                f"能隙下界必须为正: {self.value}",
                ErrorCode.BOUND_DOMAIN_ERROR,
                details={'value': self.value}
            )


@dataclass(frozen=True)
class BoundCheckReport:
    """|corr|/包络 的最大比值"""
    pairs_checked: int
    max_ratio: float
    worst_pair: Tuple[int, int]
    satisfied: bool
    noise_floor: float = 0.0
    floored_pairs: int = 0  # 被噪声阈值置零、否则会超出包络的顶点对

    def to_dict(self) -> Dict[str, Any]:
        return {
            'pairs_checked': self.pairs_checked,
            'max_ratio': self.max_ratio,
            'worst_pair': list(self.worst_pair),
            'satisfied': self.satisfied,
            'noise_floor': self.noise_floor,
            'floored_pairs': self.floored_pairs
        }


class BenziEnvelope(NamedTuple):
    """|f(V)_ij| ≤ K·q^{dist(i,j)}"""
    K: float
    q: float


# ==================== 特殊函数 ====================

def riemann_zeta(s: float) -> float:
    """ζ(s)，s > 1"""
    if not s > 1:
        raise BoundException(
            f"ζ(s) 要求 s > 1: {s}",
            ErrorCode.BOUND_DOMAIN_ERROR,
            details={'s': s}
        )
    return float(scipy.special.zeta(s, 1))


def polylog(s: float, x: float) -> float:
    """Li_s(x)，0 ≤ x < 1"""
    if not 0.0 <= x < 1.0:
        raise BoundException(
            f"Li_s(x) 要求 0 ≤ x < 1: {x}",
            ErrorCode.BOUND_DOMAIN_ERROR,
            details={'s': s, 'x': x}
        )
    if x == 0.0:
        return 0.0
    return float(mpmath.polylog(s, x))


# ==================== 共用量 ====================

def _not_applicable(message: str, **details) -> BoundException:
    log.warning(message)
    return BoundException(message, ErrorCode.BOUND_NOT_APPLICABLE, details=details)


def _local_range(c: Coupling) -> int:
    if not c.is_local:
        raise _not_applicable(f"耦合 {c.label} 非局域，界不适用", label=c.label)
    return int(c.range_m)


def _gap_constants(c: Coupling) -> Tuple[float, float, float]:
    """返回 (ΔE, a = (ΔE/2)², b = ‖V_xV_p‖)"""
    spectrum = mode_spectrum(c)
    a = float(spectrum.d[0])
    b = operator_norm(c.vx @ c.vp)
    return spectrum.gap, a, b


def _degenerate(a: float, b: float, m: int) -> bool:
    return m == 0 or b - a <= Config.SYMMETRY_TOL * b


def _log_ratio(a: float, b: float) -> float:
    """log(b/(b−a))"""
    return float(np.log(b / (b - a)))


# ==================== Theorem 1 ====================

def theorem1_bound(c: Coupling) -> Tuple[DecayBound, DecayBound]:
    """基态关联的指数衰减包络 (xx, pp)"""
    m = _local_range(c)
    gap, a, b = _gap_constants(c)
    K = np.sqrt(b) * ball_volume(c.lattice, m // 2) / a
    xi = 0.0 if _degenerate(a, b, m) else 2.0 * m / _log_ratio(a, b)

    xx = DecayBound(K=float(K * operator_norm(c.vp)), xi=float(xi), min_dist=m)
    pp = DecayBound(K=float(K * operator_norm(c.vx)), xi=float(xi), min_dist=m)
    log.debug(f"Theorem 1 {c.label}: K={K:.6g}, xi={xi:.6g}, m={m}")
    return xx, pp


def check_matrix_envelope(matrix: np.ndarray, bound: DecayBound, lat: Lattice,
                          label: str = "matrix") -> BoundCheckReport:
    """在 dist ≥ min_dist 的所有顶点对上比较 |A_ij| 与包络"""
    matrix = np.asarray(matrix)
    if matrix.shape != (lat.vertex_count, lat.vertex_count):
        raise BoundException(
            f"晶格大小 {lat.vertex_count} 与矩阵形状 {matrix.shape} 不一致",
            ErrorCode.BOUND_DIMENSION_MISMATCH,
            details={'vertex_count': lat.vertex_count, 'shape': list(matrix.shape)}
        )
    raw = np.abs(matrix)
    # 相对对角元的舍入噪声视为零
    floor = Config.CORRELATION_NOISE_TOL * float(np.max(np.abs(np.diag(matrix))))
    corr = np.where(raw <= floor, 0.0, raw)

    envelope = bound.envelope(lat.dist)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(envelope > 0, corr / envelope, np.where(corr > 0, np.inf, 0.0))

    mask = ~lat.reachable | (lat.dist >= bound.min_dist)
    pairs = int(mask.sum())
    if pairs == 0:
        return BoundCheckReport(pairs_checked=0, max_ratio=0.0, worst_pair=(-1, -1), satisfied=True,
                                noise_floor=floor)

    masked = np.where(mask, ratio, -np.inf)
    flat = int(np.argmax(masked))
    worst = tuple(int(x) for x in np.unravel_index(flat, masked.shape))
    max_ratio = float(masked.flat[flat])
    satisfied = max_ratio <= 1.0 + Config.BOUND_RATIO_TOL
    if not satisfied:
        log.warning(f"衰减界被违背: {label}, ratio={max_ratio:.6g}, pair={worst}")

    hidden = mask & (raw > 0) & (corr == 0) & (raw > envelope * (1.0 + Config.BOUND_RATIO_TOL))
    floored = int(hidden.sum())
    if floored:
        log.warning(f"{label}: {floored} 个顶点对低于噪声阈值 {floor:.3e} 但超出包络，未计入比值")
    return BoundCheckReport(pairs_checked=pairs, max_ratio=max_ratio, worst_pair=worst, satisfied=satisfied,
                            noise_floor=floor, floored_pairs=floored)


def check_decay_bound(state: GaussianState, bound: DecayBound, block: str,
                      lat: Lattice) -> BoundCheckReport:
    """对态的 xx 或 pp 块做包络检查"""
    if lat.vertex_count != state.size:
        raise BoundException(
            f"晶格大小 {lat.vertex_count} 与态的维数 {state.size} 不一致",
            ErrorCode.BOUND_DIMENSION_MISMATCH,
            details={'vertex_count': lat.vertex_count, 'size': state.size}
        )
    return check_matrix_envelope(state.block(block), bound, lat, label=f"block={block}")


def fitted_prefactor(state: GaussianState, block: str, lat: Lattice, xi: float) -> float:
    """满足 |corr| ≤ K·e^{−dist/ξ} 的最小 K"""
    if not xi > 0:
        raise BoundException(
            f"ξ 必须为正: {xi}",
            ErrorCode.BOUND_DOMAIN_ERROR,
            details={'xi': xi}
        )
    corr = np.abs(state.block(block))
    reachable = lat.reachable
    dist = np.where(reachable, lat.dist, 0).astype(float)
    with np.errstate(divide="ignore"):
        log_scaled = np.where(reachable, np.log(corr) + dist / xi, -np.inf)
    return float(np.exp(np.max(log_scaled)))


# ==================== Theorems 2 与 3 ====================

def theorem2_gap_bound(K0: float, K: float, eta: float, d: float, c: float) -> GapBound:
    """ΔE ≥ 2/(K0 + cKζ(1+η−d))"""
    if not eta > d:
        raise BoundException(
            f"需要 η > d: eta={eta}, d={d}",
            ErrorCode.BOUND_DOMAIN_ERROR,
            details={'eta': eta, 'd': d}
        )
    if K0 < 0 or K < 0 or not c > 0 or not K0 + c * K > 0:
        raise BoundException(
            f"参数无效: K0={K0}, K={K}, c={c}",
            ErrorCode.BOUND_DOMAIN_ERROR,
            details={'K0': K0, 'K': K, 'c': c}
        )
    zeta = riemann_zeta(1.0 + eta - d) if K > 0 else 0.0
    return GapBound(value=2.0 / (K0 + c * K * zeta))


def theorem3_gap_bound(K: float, xi: float, d: float, c: float) -> GapBound:
    """ΔE ≥ 2/(K(1 + c·Li_{1−d}(e^{−1/ξ})))"""
    if not K > 0 or xi < 0:
        raise BoundException(
            f"需要 K > 0 且 ξ ≥ 0: K={K}, xi={xi}",
            ErrorCode.BOUND_DOMAIN_ERROR,
            details={'K': K, 'xi': xi}
        )
    x = float(np.exp(-1.0 / xi)) if xi > 0 else 0.0
    return GapBound(value=2.0 / (K * (1.0 + c * polylog(1.0 - d, x))))


def example3_gap_lower_bound(K: float, xi: float) -> float:
    """2(1−e^{−1/ξ})²/(1−e^{−2/ξ})·min{K, 1/K}"""
    q = np.exp(-1.0 / xi)
    return float(2.0 * (1.0 - q) ** 2 / (1.0 - q * q) * min(K, 1.0 / K))


def example3_exact_gap(K: float, xi: float, block: str) -> float:
    """xx: 2(1−q)²/(K(1−q²))；pp（n 为偶数）: 2K(1−q²)/(1+q)²"""
    q = np.exp(-1.0 / xi)
    if block == "xx":
        return float(2.0 * (1.0 - q) ** 2 / (K * (1.0 - q * q)))
    if block == "pp":
        return float(2.0 * K * (1.0 - q * q) / (1.0 + q) ** 2)
    raise BoundException(
        f"block 必须为 xx 或 pp: {block}",
        ErrorCode.BOUND_DOMAIN_ERROR,
        details={'block': block}
    )


# ==================== Theorem 4 ====================

def assumption1_mu(c: Coupling) -> float:
    """μ = log(‖V_xV_p‖/(‖V_xV_p‖ − (ΔE/2)²))/m"""
    m = _local_range(c)
    _, a, b = _gap_constants(c)
    if _degenerate(a, b, m):
        raise _not_applicable("退化耦合 (m = 0 或 (ΔE/2)² = ‖V_xV_p‖)，μ 无定义", m=m)
    return _log_ratio(a, b) / m


def theorem4_bound(c: Coupling, temperature: float,
                   cert: Assumption1Certificate) -> Tuple[DecayBound, DecayBound]:
    """有限温度关联的指数衰减包络 (xx, pp)"""
    if not temperature > 0:
        raise BoundException(
            f"温度必须为正: {temperature}",
            ErrorCode.BOUND_DOMAIN_ERROR,
            details={'temperature': temperature}
        )
    commutator = c.commutator_norm()
    if commutator > Config.COMMUTATOR_TOL:
        raise _not_applicable(f"V_x 与 V_p 不对易 ({commutator:.3e})", commutator=commutator)
    m = _local_range(c)
    mu = assumption1_mu(c)
    if not cert.holds or abs(cert.mu - mu) > 1e-9 * mu:
        raise _not_applicable(
            f"Assumption-1 证书的 μ={cert.mu:.12g} 与所需 μ={mu:.12g} 不符",
            certificate_mu=cert.mu, required_mu=mu
        )

    gap, a, b = _gap_constants(c)
    K = np.sqrt(b) * ball_volume(c.lattice, m // 2) / a
    exponent = gap / temperature * np.sqrt(1.0 - a / (4.0 * b))
    thermal = 0.0
    if exponent <= Config.THERMAL_EXP_CUTOFF:
        thermal = 4.0 * cert.l0 * (b / a) / np.expm1(exponent)
    K_T = K * (1.0 + thermal)
    xi = max(2.0 / cert.nu, 2.0 * m / _log_ratio(a, b))

    xx = DecayBound(K=float(K_T * operator_norm(c.vp)), xi=float(xi), min_dist=m)
    pp = DecayBound(K=float(K_T * operator_norm(c.vx)), xi=float(xi), min_dist=m)
    log.debug(f"Theorem 4 {c.label}: T={temperature:g}, K(T)={K_T:.6g}, xi={xi:.6g}")
    return xx, pp


# ==================== Theorem 5 ====================

def _require_identity_vp(c: Coupling):
    if not c.vp_is_identity:
        raise _not_applicable("面积律界要求 V_p = I", label=c.label)


def theorem5_area_bound(c: Coupling, region: Region, dims: DimensionEstimate) -> float:
    """E_S^I ≤ 4‖V‖c²Li_{1−2d}(e^{−1/ξ})/(ln2·λ_min(V))·s(I)"""
    _require_identity_vp(c)
    m = _local_range(c)
    s = surface_area(c.lattice, region)
    values = scipy.linalg.eigvalsh(c.vx)
    a, b = float(values[0]), float(values[-1])

    if _degenerate(a, b, m):
        off_diagonal = c.vx - np.diag(np.diag(c.vx))
        if np.any(off_diagonal != 0):
            raise _not_applicable("ξ = 0 但关联非零", label=c.label)
        return 0.0

    xi = m / _log_ratio(a, b)
    li = polylog(1.0 - 2.0 * dims.d, float(np.exp(-1.0 / xi)))
    bound = 4.0 * b * dims.c ** 2 * li * s / (np.log(2.0) * a)
    log.debug(f"Theorem 5 {c.label}: s(I)={s}, xi={xi:.6g}, bound={bound:.6g}")
    return float(bound)


def entropy_correlation_bound(state: GaussianState, c: Coupling, region: Region) -> float:
    """4‖V‖^{1/2}/ln2 · Σ_{i∈I, j∉I} |⟨x_i x_j⟩|"""
    _require_identity_vp(c)
    inside = region.indices
    outside = complement(c.lattice, region).indices
    total = float(np.abs(state.gamma_x[np.ix_(inside, outside)]).sum())
    return float(4.0 * np.sqrt(operator_norm(c.vx)) / np.log(2.0) * total)


# ==================== 矩阵函数的衰减 ====================

def inv_sqrt_decay_bound(V: np.ndarray, lat: Lattice) -> DecayBound:
    """|(V^{−1/2})_ij| ≤ √b/a·(1 − a/b)^{dist/(m/2)}"""
    V = np.asarray(V, dtype=float)
    values = scipy.linalg.eigvalsh(V)
    a, b = float(values[0]), float(values[-1])
    if not a > 0:
        raise BoundException(
            f"矩阵非正定: λ_min = {a:.3e}",
            ErrorCode.BOUND_DOMAIN_ERROR,
            details={'lambda_min': a}
        )
    m = matrix_range(V, lat)
    if m is None:
        raise _not_applicable("矩阵非局域")
    xi = 0.0 if _degenerate(a, b, m) else (m / 2.0) / _log_ratio(a, b)
    return DecayBound(K=float(np.sqrt(b) / a), xi=float(xi), min_dist=0)


def _ellipse_axes(chi: float) -> Tuple[float, float]:
    return 0.5 * (chi + 1.0 / chi), 0.5 * (chi - 1.0 / chi)


def ellipse_maximum(f: ScalarFunction, a: float, b: float, chi: float) -> float:
    """在焦点为 ±1 的椭圆 ε_χ 边界上采样 max|f∘ψ|，包含 z = −α"""
    alpha, beta = _ellipse_axes(chi)
    theta = 2.0 * np.pi * np.arange(Config.ELLIPSE_SAMPLES) / Config.ELLIPSE_SAMPLES
    z = alpha * np.cos(theta) + 1j * beta * np.sin(theta)
    z = np.append(z, -alpha + 0j)
    values = np.abs(f(affine_map(z, a, b)))
    return float(np.max(values))


def bernstein_envelope(f: ScalarFunction, a: float, b: float, chi: float, k: int) -> float:
    """2/(χ^k(χ−1))·max_{ε_χ}|f∘ψ|"""
    return float(2.0 / (chi ** k * (chi - 1.0)) * ellipse_maximum(f, a, b, chi))


def benzi_bound(a: float, b: float, m: int, f: ScalarFunction, chi: float) -> BenziEnvelope:
    """|f(V)_ij| ≤ K·q^{dist}，K = max{‖f(V)‖, 2χ/(χ−1)·max|f∘ψ|}，q = χ^{−2/m}"""
    if not (a > 0 and b >= a and chi > 1 and m >= 0):
        raise BoundException(
            f"参数无效: a={a}, b={b}, m={m}, chi={chi}",
            ErrorCode.BOUND_DOMAIN_ERROR,
            details={'a': a, 'b': b, 'm': m, 'chi': chi}
        )
    if b == a:
        return BenziEnvelope(K=float(abs(f(np.asarray(a)))), q=0.0)

    alpha, _ = _ellipse_axes(chi)
    if f.singular_at_origin and not alpha < (a + b) / (b - a):
        raise BoundException(
            f"χ = {chi} 时椭圆包含 f∘ψ 的奇点",
            ErrorCode.BOUND_NOT_ANALYTIC,
            details={'chi': chi, 'alpha': alpha, 'limit': (a + b) / (b - a)}
        )
    if f.kind == "thermal_g" and chi > b / (b - a) * (1.0 + 1e-12):
        raise BoundException(
            f"thermal_G 要求 χ ≤ b/(b−a) = {b / (b - a):.12g}",
            ErrorCode.BOUND_NOT_ANALYTIC,
            details={'chi': chi, 'limit': b / (b - a)}
        )

    maximum = ellipse_maximum(f, a, b, chi)
    spectrum = np.linspace(a, b, Config.ELLIPSE_SAMPLES)
    norm = float(np.max(np.abs(f(spectrum))))
    K = max(norm, 2.0 * chi / (chi - 1.0) * maximum)
    q = chi ** (-2.0 / m) if m > 0 else 0.0
    log.debug(f"Benzi 包络 {f.label}: a={a:.6g}, b={b:.6g}, chi={chi:.6g}, K={K:.6g}, q={q:.6g}")
    return BenziEnvelope(K=float(K), q=float(q))


# ==================== 报告 ====================

def bound_report(theorem: str, params: Dict[str, Any], bound: Optional[DecayBound],
                 report: Optional[BoundCheckReport]) -> Dict[str, Any]:
    """{"theorem", "params", "K", "xi", "satisfied", "max_ratio", "worst_pair"}"""
    return {
        'theorem': theorem,
        'params': params,
        'K': bound.K if bound else None,
        'xi': bound.xi if bound else None,
        'satisfied': report.satisfied if report else None,
        'max_ratio': report.max_ratio if report else None,
        'worst_pair': list(report.worst_pair) if report else None
    }
