#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
耦合模块
构造并校验耦合 C = (G, V_x, V_p)，包括四类示例族和相互作用范围
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional

import numpy as np
import scipy.linalg

from config import Config
from exception_handler import CouplingException, ErrorCode
from lattice import (
    Lattice, build_lattice, fit_dimension, ring
)
from logger import get_logger

log = get_logger("coupling")

BUILDERS = ("disordered_chain", "disordered_lattice", "rotating_wave", "algebraic", "exponential_decay")


@dataclass(frozen=True, eq=False)
class Coupling:
    """耦合元组，range_m 为 None 表示非局域"""
    lattice: Lattice
    vx: np.ndarray
    vp: np.ndarray
    range_m: Optional[int]
    label: str = "explicit"
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def is_local(self) -> bool:
        return self.range_m is not None

    @property
    def size(self) -> int:
        return self.lattice.vertex_count

    @property
    def vp_is_identity(self) -> bool:
        return bool(np.max(np.abs(self.vp - np.eye(self.size))) <= Config.SYMMETRY_TOL)

    def commutator_norm(self) -> float:
        """‖[V_x, V_p]‖_max"""
        return float(np.max(np.abs(self.vx @ self.vp - self.vp @ self.vx)))

    def to_dict(self) -> Dict[str, Any]:
        if self.label != "explicit":
            data = {"builder": self.label}
            data.update(self.params)
            return data
        return {
            "lattice": self.lattice.to_dict(),
            "vx": self.vx.tolist(),
            "vp": self.vp.tolist(),
            "non_local": not self.is_local
        }


@dataclass(frozen=True)
class SpectralBoundsEstimate:
    """Gershgorin 下界与行和上界"""
    lower: float
    upper: float


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _checked_matrix(name: str, matrix: Any, n: int) -> np.ndarray:
    V = np.array(matrix, dtype=float)
    if V.shape != (n, n):
        raise CouplingException(
            f"{name} 维数 {V.shape} 与晶格大小 {n} 不一致",
            ErrorCode.COUPLING_DIMENSION_MISMATCH,
            details={'matrix': name, 'shape': list(V.shape), 'vertex_count': n}
        )
    if not np.all(np.isfinite(V)):
        raise CouplingException(
            f"{name} 含有非有限值",
            ErrorCode.COUPLING_INVALID_PARAMETER,
            details={'matrix': name}
        )
    asymmetry = float(np.max(np.abs(V - V.T)))
    if asymmetry > Config.SYMMETRY_TOL * max(1.0, float(np.max(np.abs(V)))):
        log.warning(f"{name} 不对称: {asymmetry:.3e}")
        raise CouplingException(
            f"{name} 不对称 (偏差 {asymmetry:.3e})",
            ErrorCode.COUPLING_NOT_SYMMETRIC,
            details={'matrix': name, 'asymmetry': asymmetry}
        )
    V = 0.5 * (V + V.T)

    eigenvalues = scipy.linalg.eigvalsh(V)
    lowest, largest = float(eigenvalues[0]), float(np.max(np.abs(eigenvalues)))
    if not lowest > Config.POSITIVITY_REL_TOL * largest:
        log.warning(f"{name} 非正定: λ_min={lowest:.3e}")
        raise CouplingException(
            f"{name} 非正定 (λ_min = {lowest:.3e})",
            ErrorCode.COUPLING_NOT_POSITIVE,
            details={'matrix': name, 'lambda_min': lowest, 'norm': largest}
        )
    return V


def matrix_range(V: np.ndarray, lat: Lattice) -> Optional[int]:
    """2·max{dist(i,j) : V_ij ≠ 0}，非零元跨越不连通顶点对时返回 None"""
    support = np.asarray(V) != 0
    if np.any(support & ~lat.reachable):
        return None
    if not support.any():
        return 0
    return 2 * int(lat.dist[support].max())


def make_coupling(lat: Lattice, vx: Any, vp: Any, non_local: bool = False,
                  label: str = "explicit", params: Optional[Dict[str, Any]] = None) -> Coupling:
    """校验对称性与正定性并计算相互作用范围"""
    n = lat.vertex_count
    vx = _checked_matrix("vx", vx, n)
    vp = _checked_matrix("vp", vp, n)

    range_m: Optional[int] = None
    if not non_local:
        range_m = matrix_range((vx != 0) | (vp != 0), lat)

    log.debug(f"构造耦合 {label}: |L|={n}, m={range_m}")
    return Coupling(
        lattice=lat,
        vx=_readonly(vx),
        vp=_readonly(vp),
        range_m=range_m,
        label=label,
        params=dict(params or {})
    )


def interaction_range(c: Coupling) -> Optional[int]:
    """返回 range_m，非局域耦合返回 None"""
    if not c.is_local:
        log.info(f"耦合 {c.label} 为非局域")
    return c.range_m


def require_range(c: Coupling) -> int:
    """局域耦合的 m，非局域时报错"""
    if not c.is_local:
        raise CouplingException(
            f"耦合 {c.label} 不是有限范围的",
            ErrorCode.COUPLING_NON_LOCAL,
            details={'label': c.label}
        )
    return int(c.range_m)


def gershgorin_bounds(V: np.ndarray) -> SpectralBoundsEstimate:
    V = np.asarray(V, dtype=float)
    diagonal = np.diag(V)
    off = np.abs(V).sum(axis=1) - np.abs(diagonal)
    return SpectralBoundsEstimate(
        lower=float(np.min(diagonal - off)),
        upper=float(np.max(np.abs(V).sum(axis=1)))
    )


def verify_range_of_power(V: np.ndarray, lat: Lattice, n: int, m: int) -> bool:
    """(V^n)_ij = 0 对所有 dist(i,j) > n·m/2 成立"""
    if n < 1:
        raise CouplingException(
            f"幂次必须 ≥ 1: {n}",
            ErrorCode.COUPLING_INVALID_PARAMETER,
            details={'n': n}
        )
    V = np.asarray(V, dtype=float)
    actual = matrix_range(V, lat)
    if actual is None or actual > m:
        raise CouplingException(
            f"矩阵范围 {actual} 超过声明的 m={m}",
            ErrorCode.COUPLING_RANGE_VIOLATION,
            details={'declared': m, 'actual': actual}
        )
    power = V.copy()
    for _ in range(n - 1):
        power = power @ V
    beyond = lat.reachable & (2 * lat.dist > n * m)
    return bool(np.all(power[beyond] == 0.0))


# ==================== 示例族 ====================

def build_disordered_chain(n: int, seed: int) -> Coupling:
    """对角元 3、最近邻 r_i ~ U[0,1] 的无序环，PCG64 生成器"""
    if n < 3:
        raise CouplingException(
            f"无序链需要 n ≥ 3: {n}",
            ErrorCode.COUPLING_INVALID_PARAMETER,
            details={'n': n}
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    r = rng.uniform(0.0, 1.0, size=n)

    V = 3.0 * np.eye(n)
    i = np.arange(n - 1)
    V[i, i + 1] = r[:-1]
    V[i + 1, i] = r[:-1]
    V[0, n - 1] = V[n - 1, 0] = r[n - 1]
    return make_coupling(ring(n), V, np.eye(n), label="disordered_chain",
                         params={'n': n, 'seed': seed})


def build_disordered_lattice(lat: Lattice, seed: int) -> Coupling:
    """任意图上的无序耦合，对角元 1 + 最大度数"""
    n = lat.vertex_count
    rows, cols = np.nonzero(np.triu(lat.adjacency))
    rng = np.random.Generator(np.random.PCG64(seed))
    r = rng.uniform(0.0, 1.0, size=rows.size)

    V = (1.0 + lat.max_degree) * np.eye(n)
    V[rows, cols] = r
    V[cols, rows] = r
    return make_coupling(lat, V, np.eye(n), label="disordered_lattice",
                         params={'lattice': lat.to_dict(), 'seed': seed})


def _ring_circulant(n: int, c: float) -> np.ndarray:
    return np.eye(n) - c * ring(n).adjacency.astype(float)


def build_rotating_wave(n: int, c: float) -> Coupling:
    """V_x = V_p = I − cE，0 < c < 1/2"""
    if not 0.0 < c < 0.5:
        raise CouplingException(
            f"旋波耦合需要 0 < c < 1/2: {c}",
            ErrorCode.COUPLING_INVALID_PARAMETER,
            details={'c': c}
        )
    if n < 3:
        raise CouplingException(
            f"旋波耦合需要 n ≥ 3: {n}",
            ErrorCode.COUPLING_INVALID_PARAMETER,
            details={'n': n}
        )
    V = _ring_circulant(n, c)
    return make_coupling(ring(n), V, V, label="rotating_wave", params={'n': n, 'c': c})


def circulant_eigenvalues(n: int, c: float) -> np.ndarray:
    """I − cE 在 ring(n) 上的本征值 1 − 2c·cos(2πk/n)，升序"""
    k = np.arange(n)
    return np.sort(1.0 - 2.0 * c * np.cos(2.0 * np.pi * k / n))


def circulant_inverse_closed_form(n: int, c: float) -> np.ndarray:
    """(I − cE)^{-1} 的闭式表达"""
    if not 0.0 < c < 0.5:
        raise CouplingException(
            f"闭式逆需要 0 < c < 1/2: {c}",
            ErrorCode.COUPLING_INVALID_PARAMETER,
            details={'c': c}
        )
    q = (1.0 - np.sqrt(1.0 - 4.0 * c * c)) / (2.0 * c)
    k = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    prefactor = (1.0 + q * q) / ((q ** n - 1.0) * (q * q - 1.0))
    return prefactor * (q ** (n - k) + q ** k)


def algebraic_kernel(lat: Lattice, eta: float) -> np.ndarray:
    """W_ij = dist^{−η}（i≠j），W_ii = 1 + Σ_j dist^{−η}"""
    reachable = lat.reachable & ~np.eye(lat.vertex_count, dtype=bool)
    dist = np.where(reachable, lat.dist, 1).astype(float)
    W = np.where(reachable, dist ** (-eta), 0.0)
    W[np.diag_indices_from(W)] = 1.0 + W.sum(axis=1)
    return W


def build_algebraic(lat: Lattice, eta: float) -> Coupling:
    """V^{−1/2} = W 的代数衰减非局域耦合"""
    dims = fit_dimension(lat)
    if not eta > dims.d:
        raise CouplingException(
            f"η = {eta} 必须大于晶格维数 d = {dims.d:.4f}",
            ErrorCode.COUPLING_INVALID_PARAMETER,
            details={'eta': eta, 'd': dims.d}
        )
    W = algebraic_kernel(lat, eta)
    values, basis = scipy.linalg.eigh(W)
    vx = (basis * values ** -2.0) @ basis.T
    return make_coupling(lat, vx, np.eye(lat.vertex_count), non_local=True,
                         label="algebraic", params={'lattice': lat.to_dict(), 'eta': eta})


def build_exponential_decay(n: int, K: float, xi: float, block: str) -> Coupling:
    """关联恰为 K·(1−q²)/(1+q²)·(I − cE)^{-1} 的环上耦合，q = e^{−1/ξ}"""
    if block not in ("xx", "pp"):
        raise CouplingException(
            f"block 必须为 xx 或 pp: {block}",
            ErrorCode.COUPLING_INVALID_PARAMETER,
            details={'block': block}
        )
    if not (K > 0 and xi > 0):
        raise CouplingException(
            f"需要 K > 0 且 ξ > 0: K={K}, xi={xi}",
            ErrorCode.COUPLING_INVALID_PARAMETER,
            details={'K': K, 'xi': xi}
        )
    if n < 3:
        raise CouplingException(
            f"需要 n ≥ 3: {n}",
            ErrorCode.COUPLING_INVALID_PARAMETER,
            details={'n': n}
        )
    q = np.exp(-1.0 / xi)
    c = q / (1.0 + q * q)
    kappa = K * (1.0 - q * q) / (1.0 + q * q)
    A = _ring_circulant(n, c)
    params = {'n': n, 'K': K, 'xi': xi, 'block': block}
    if block == "xx":
        # V^{−1/2} = κA^{−1}
        V = (A @ A) / kappa ** 2
        return make_coupling(ring(n), V, np.eye(n), label="exponential_decay", params=params)
    # V^{1/2} = κA^{−1}
    values, basis = scipy.linalg.eigh(A)
    V = (basis * (kappa / values) ** 2) @ basis.T
    return make_coupling(ring(n), V, np.eye(n), non_local=True,
                         label="exponential_decay", params=params)


# ==================== 文件格式 ====================

def coupling_from_dict(data: Mapping[str, Any]) -> Coupling:
    """由耦合文件内容构造（显式矩阵或 builder 简写）"""
    if "builder" in data:
        builder = data["builder"]
        try:
            if builder == "disordered_chain":
                return build_disordered_chain(int(data["n"]), int(data.get("seed", Config.DEFAULT_SEED)))
            if builder == "disordered_lattice":
                return build_disordered_lattice(build_lattice(data["lattice"]),
                                                int(data.get("seed", Config.DEFAULT_SEED)))
            if builder == "rotating_wave":
                return build_rotating_wave(int(data["n"]), float(data["c"]))
            if builder == "algebraic":
                return build_algebraic(build_lattice(data["lattice"]), float(data["eta"]))
            if builder == "exponential_decay":
                return build_exponential_decay(int(data["n"]), float(data["K"]),
                                               float(data["xi"]), str(data.get("block", "xx")))
        except KeyError as e:
            raise CouplingException(
                f"builder {builder} 缺少参数 {e}",
                ErrorCode.COUPLING_INVALID_PARAMETER,
                details={'builder': builder, 'missing': str(e)},
                cause=e
            )
        raise CouplingException(
            f"未知的 builder: {builder}",
            ErrorCode.COUPLING_INVALID_PARAMETER,
            details={'builder': builder, 'known': list(BUILDERS)}
        )

    for key in ("lattice", "vx", "vp"):
        if key not in data:
            raise CouplingException(
                f"耦合文件缺少字段 {key}",
                ErrorCode.COUPLING_INVALID_PARAMETER,
                details={'missing': key}
            )
    lat = build_lattice(data["lattice"])
    return make_coupling(lat, data["vx"], data["vp"], non_local=bool(data.get("non_local", False)))
