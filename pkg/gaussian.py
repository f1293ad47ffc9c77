#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
高斯态模块
基态与热态协方差矩阵、两点关联、约化态、辛本征值和纠缠熵
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.special import xlogy

from config import Config
from coupling import Coupling
from exception_handler import ErrorCode, LatticeException, StateException
from lattice import Lattice, Region, UNREACHABLE
from logger import get_logger
from spectral import (
    INV_SQRT, SQRT, eigh, matrix_function, mode_decomposition, symmetrize, thermal_g
)

log = get_logger("gaussian")

THERMAL_METHODS = ("auto", "general", "commuting")
BLOCKS = ("xx", "pp")


@dataclass(frozen=True, eq=False)
class GaussianState:
    """x⊕p 分块协方差矩阵，一阶矩恒为零"""
    gamma_x: np.ndarray
    gamma_p: np.ndarray
    temperature: float = 0.0
    coupling_ref: str = ""

    @property
    def size(self) -> int:
        return self.gamma_x.shape[0]

    def block(self, name: str) -> np.ndarray:
        if name == "xx":
            return self.gamma_x
        if name == "pp":
            return self.gamma_p
        raise StateException(
            f"未知的关联块: {name}",
            ErrorCode.STATE_INVALID_METHOD,
            details={'block': name}
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'temperature': self.temperature,
            'gamma_x': self.gamma_x.tolist(),
            'gamma_p': self.gamma_p.tolist()
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GaussianState":
        """读取 to_dict 导出的态"""
        try:
            gamma_x = np.asarray(data['gamma_x'], dtype=float)
            gamma_p = np.asarray(data['gamma_p'], dtype=float)
            temperature = float(data.get('temperature', 0.0))
        except (KeyError, TypeError, ValueError) as e:
            raise StateException(
                f"态描述无效: {e}",
                ErrorCode.STATE_INVALID_FORMAT,
                cause=e
            )
        n = gamma_x.shape[0] if gamma_x.ndim == 2 else -1
        if gamma_x.shape != (n, n) or gamma_p.shape != (n, n) or n < 1:
            raise StateException(
                f"协方差块须为同阶方阵: {gamma_x.shape}, {gamma_p.shape}",
                ErrorCode.STATE_INVALID_FORMAT,
                details={'gamma_x': list(gamma_x.shape), 'gamma_p': list(gamma_p.shape)}
            )
        if temperature < 0:
            raise StateException(
                f"温度不能为负: {temperature}",
                ErrorCode.STATE_INVALID_FORMAT,
                details={'temperature': temperature}
            )
        return cls(gamma_x=gamma_x, gamma_p=gamma_p, temperature=temperature)


@dataclass(frozen=True, eq=False)
class EntropyReport:
    """区域的辛本征值与以比特计的熵"""
    region: Region
    symplectic_eigenvalues: np.ndarray
    entropy_bits: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'region': list(self.region.members),
            'symplectic_eigenvalues': self.symplectic_eigenvalues.tolist(),
            'entropy_bits': self.entropy_bits
        }


@dataclass(frozen=True)
class DecayFit:
    """log|corr| 对 dist 的线性拟合"""
    K: float
    xi: float
    residual: float
    pairs: int


@dataclass(frozen=True)
class AlgebraicFit:
    """log|corr| 对 log dist 的线性拟合"""
    K: float
    eta: float
    residual: float
    pairs: int


# ==================== 态的构造 ====================

def _finish(gamma_x: np.ndarray, gamma_p: np.ndarray, temperature: float, c: Coupling) -> GaussianState:
    state = GaussianState(
        gamma_x=symmetrize(gamma_x),
        gamma_p=symmetrize(gamma_p),
        temperature=float(temperature),
        coupling_ref=c.label
    )
    validate_state(state)
    return state


def ground_state(c: Coupling) -> GaussianState:
    """γ_x = V_x^{−1/2}M^{1/2}V_x^{−1/2}，γ_p = V_x^{1/2}M^{−1/2}V_x^{1/2}"""
    decomposition = mode_decomposition(c)
    root_m = decomposition.modes.apply(SQRT)
    inv_root_m = decomposition.modes.apply(INV_SQRT)
    gamma_x = decomposition.inv_sqrt_vx @ root_m @ decomposition.inv_sqrt_vx
    gamma_p = decomposition.sqrt_vx @ inv_root_m @ decomposition.sqrt_vx
    log.debug(f"基态 {c.label}: |L|={c.size}")
    return _finish(gamma_x, gamma_p, 0.0, c)


def position_correlations_dual(c: Coupling) -> np.ndarray:
    """V_p^{1/2}(V_p^{1/2}V_xV_p^{1/2})^{−1/2}V_p^{1/2}"""
    root_vp = matrix_function(c.vp, SQRT)
    inner = matrix_function(symmetrize(root_vp @ c.vx @ root_vp), INV_SQRT)
    return symmetrize(root_vp @ inner @ root_vp)


def thermal_state(c: Coupling, temperature: float, method: str = "auto") -> GaussianState:
    """Gibbs 态协方差矩阵 γ(T) = γ(0) + 热修正"""
    if not temperature > 0:
        raise StateException(
            f"温度必须为正: {temperature}",
            ErrorCode.STATE_INVALID_TEMPERATURE,
            details={'temperature': temperature}
        )
    if method not in THERMAL_METHODS:
        raise StateException(
            f"未知的热态算法: {method}",
            ErrorCode.STATE_INVALID_METHOD,
            details={'method': method, 'known': list(THERMAL_METHODS)}
        )

    commuting = c.commutator_norm() <= Config.COMMUTATOR_TOL
    if method == "commuting" and not commuting:
        raise StateException(
            "V_x 与 V_p 不对易，不能使用对易公式",
            ErrorCode.STATE_INVALID_METHOD,
            details={'commutator': c.commutator_norm()}
        )
    if method == "auto":
        method = "commuting" if commuting else "general"

    ground = ground_state(c)
    G_function = thermal_g(temperature)

    if method == "commuting":
        G = matrix_function(symmetrize(c.vx @ c.vp), G_function)
        root = eigh(c.vx)
        root_p = eigh(c.vp)
        inv_sqrt_vx, sqrt_vx = root.apply(INV_SQRT), root.apply(SQRT)
        sqrt_vp, inv_sqrt_vp = root_p.apply(SQRT), root_p.apply(INV_SQRT)
        gamma_x = ground.gamma_x + inv_sqrt_vx @ sqrt_vp @ G
        gamma_p = ground.gamma_p + sqrt_vx @ inv_sqrt_vp @ G
    else:
        decomposition = mode_decomposition(c)
        modes = decomposition.modes
        G = modes.apply(G_function)
        root_m = modes.apply(SQRT)
        inv_root_m = modes.apply(INV_SQRT)
        gamma_x = ground.gamma_x + decomposition.inv_sqrt_vx @ G @ root_m @ decomposition.inv_sqrt_vx
        gamma_p = ground.gamma_p + decomposition.sqrt_vx @ inv_root_m @ G @ decomposition.sqrt_vx

    log.debug(f"热态 {c.label}: T={temperature:g}, method={method}")
    return _finish(gamma_x, gamma_p, temperature, c)


def rotating_wave_thermal_closed_form(n: int, c: float, temperature: float) -> np.ndarray:
    """旋波耦合热态 ⟨x_i x_j⟩ 的 Fourier 求和 δ_ij + (2/n)Σ_k cos(2πk(i−j)/n)/(e^{2λ_k/T}−1)"""
    if not temperature > 0:
        raise StateException(
            f"温度必须为正: {temperature}",
            ErrorCode.STATE_INVALID_TEMPERATURE,
            details={'temperature': temperature}
        )
    k = np.arange(n)
    frequencies = 1.0 - 2.0 * c * np.cos(2.0 * np.pi * k / n)
    occupation = 1.0 / np.expm1(2.0 * frequencies / temperature)
    offset = np.subtract.outer(np.arange(n), np.arange(n))
    phases = np.cos(2.0 * np.pi * np.multiply.outer(offset, k) / n)
    return np.eye(n) + (2.0 / n) * phases @ occupation


# ==================== 查询 ====================

def _check_index(state: GaussianState, i: int, j: int):
    for v in (i, j):
        if not 0 <= int(v) < state.size:
            raise StateException(
                f"顶点编号越界: {v}",
                ErrorCode.STATE_INDEX_OUT_OF_RANGE,
                details={'index': int(v), 'size': state.size}
            )


def corr_xx(state: GaussianState, i: int, j: int) -> float:
    _check_index(state, i, j)
    return float(state.gamma_x[i, j])


def corr_pp(state: GaussianState, i: int, j: int) -> float:
    _check_index(state, i, j)
    return float(state.gamma_p[i, j])


def reduced_state(state: GaussianState, region: Region) -> GaussianState:
    """取区域上的主子矩阵"""
    if len(region) == 0:
        raise LatticeException(
            "约化区域不能为空",
            ErrorCode.LATTICE_INVALID_REGION
        )
    idx = region.indices
    if idx.max() >= state.size:
        raise StateException(
            f"区域顶点越界: {int(idx.max())}",
            ErrorCode.STATE_INDEX_OUT_OF_RANGE,
            details={'index': int(idx.max()), 'size': state.size}
        )
    block = np.ix_(idx, idx)
    return GaussianState(
        gamma_x=state.gamma_x[block].copy(),
        gamma_p=state.gamma_p[block].copy(),
        temperature=state.temperature,
        coupling_ref=state.coupling_ref
    )


def symplectic_eigenvalues(state: GaussianState) -> np.ndarray:
    """√eig(γ_x^{1/2} γ_p γ_x^{1/2})，升序"""
    root = matrix_function(state.gamma_x, SQRT)
    values = scipy.linalg.eigvalsh(symmetrize(root @ state.gamma_p @ root))
    return np.sqrt(np.clip(values, 0.0, None))


def validate_state(state: GaussianState) -> np.ndarray:
    """检查不确定性关系 μ_k ≥ 1 − tol"""
    mu = symplectic_eigenvalues(state)
    if mu[0] < 1.0 - Config.UNCERTAINTY_TOL:
        log.warning(f"辛本征值违反不确定性关系: μ_min={mu[0]:.12g}")
        raise StateException(
            f"辛本征值 {mu[0]:.12g} < 1",
            ErrorCode.STATE_UNCERTAINTY_VIOLATED,
            details={'mu_min': float(mu[0])}
        )
    return mu


def _entropy_bits(mu: np.ndarray) -> float:
    plus = 0.5 * (mu + 1.0)
    minus = 0.5 * (mu - 1.0)
    return float(np.sum(xlogy(plus, plus) - xlogy(minus, minus)) / np.log(2.0))


def entropy(state: GaussianState, region: Region) -> EntropyReport:
    """约化态的 von Neumann 熵（比特）"""
    reduced = reduced_state(state, region)
    mu = symplectic_eigenvalues(reduced)
    if mu.size and mu[0] < 1.0 - Config.UNCERTAINTY_TOL:
        raise StateException(
            f"约化态辛本征值 {mu[0]:.12g} < 1",
            ErrorCode.STATE_UNCERTAINTY_VIOLATED,
            details={'mu_min': float(mu[0])}
        )
    mu = np.maximum(mu, 1.0)
    return EntropyReport(region=region, symplectic_eigenvalues=mu, entropy_bits=_entropy_bits(mu))


# ==================== 衰减拟合 ====================

def _decay_samples(state: GaussianState, block: str, lat: Lattice,
                   cutoff: float) -> Tuple[np.ndarray, np.ndarray]:
    if lat.vertex_count != state.size:
        raise StateException(
            f"晶格大小 {lat.vertex_count} 与态的维数 {state.size} 不一致",
            ErrorCode.STATE_INDEX_OUT_OF_RANGE,
            details={'vertex_count': lat.vertex_count, 'size': state.size}
        )
    gamma = state.block(block)
    upper = np.triu(np.ones_like(gamma, dtype=bool), k=1) & lat.reachable
    values = np.abs(gamma[upper])
    dist = lat.dist[upper].astype(float)
    keep = values > cutoff
    dist, values = dist[keep], values[keep]
    if np.unique(dist).size < 3:
        raise StateException(
            "非零关联的不同距离少于 3 个，无法拟合",
            ErrorCode.STATE_INSUFFICIENT_DATA,
            details={'block': block, 'distinct_distances': int(np.unique(dist).size)}
        )
    return dist, values


def fit_decay(state: GaussianState, block: str, lat: Lattice,
              cutoff: Optional[float] = None) -> DecayFit:
    """最小二乘拟合 |corr| ≈ K·e^{−dist/ξ}"""
    cutoff = Config.DECAY_FIT_CUTOFF if cutoff is None else cutoff
    dist, values = _decay_samples(state, block, lat, cutoff)
    logs = np.log(values)
    slope, intercept = np.polyfit(dist, logs, 1)
    residual = float(np.sqrt(np.mean((logs - (slope * dist + intercept)) ** 2)))
    xi = float(-1.0 / slope) if slope < 0 else float("inf")
    return DecayFit(K=float(np.exp(intercept)), xi=xi, residual=residual, pairs=int(dist.size))


def fit_algebraic_decay(state: GaussianState, block: str, lat: Lattice,
                        cutoff: Optional[float] = None) -> AlgebraicFit:
    """最小二乘拟合 |corr| ≈ K·dist^{−η}"""
    cutoff = Config.DECAY_FIT_CUTOFF if cutoff is None else cutoff
    dist, values = _decay_samples(state, block, lat, cutoff)
    logs = np.log(values)
    log_dist = np.log(dist)
    slope, intercept = np.polyfit(log_dist, logs, 1)
    residual = float(np.sqrt(np.mean((logs - (slope * log_dist + intercept)) ** 2)))
    return AlgebraicFit(K=float(np.exp(intercept)), eta=float(-slope), residual=residual,
                        pairs=int(dist.size))


def correlation_sweep(state: GaussianState, lat: Lattice) -> List[Tuple[int, int, Optional[int], float, float]]:
    """i ≤ j 的行主序关联表 (i, j, dist, corr_xx, corr_pp)"""
    rows = []
    for i in range(state.size):
        for j in range(i, state.size):
            d = lat.dist[i, j]
            rows.append((
                i, j,
                None if d == UNREACHABLE else int(d),
                float(state.gamma_x[i, j]),
                float(state.gamma_p[i, j])
            ))
    return rows
