#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
谱计算模块
对称本征分解、矩阵函数、简正模谱、辛变换与 Chebyshev 多项式逼近
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
from numpy.polynomial import chebyshev

from config import Config
from coupling import Coupling
from exception_handler import ErrorCode, SpectralException
from logger import get_logger

log = get_logger("spectral")

FUNCTION_KINDS = ("identity", "sqrt", "inv_sqrt", "inverse", "thermal_g")


@dataclass(frozen=True)
class ScalarFunction:
    """矩阵函数使用的标量函数，实数与复数输入都取主值分支"""
    kind: str
    temperature: Optional[float] = None

    @property
    def singular_at_origin(self) -> bool:
        return self.kind != "identity"

    @property
    def label(self) -> str:
        if self.kind == "thermal_g":
            return f"thermal_g(T={self.temperature:g})"
        return self.kind

    def __call__(self, z):
        z = np.asarray(z)
        if self.kind == "identity":
            return z.copy()
        if self.kind == "sqrt":
            return np.sqrt(z)
        if self.kind == "inv_sqrt":
            return 1.0 / np.sqrt(z)
        if self.kind == "inverse":
            return 1.0 / z
        return self._thermal(z)

    def _thermal(self, z: np.ndarray) -> np.ndarray:
        # 2/(e^{2√z/T} − 1)，指数实部超过截断值时取 0
        x = 2.0 * np.sqrt(z) / self.temperature
        out = np.zeros_like(x)
        small = x.real <= Config.THERMAL_EXP_CUTOFF
        if np.iscomplexobj(x):
            out[small] = 2.0 / (np.exp(x[small]) - 1.0)
        else:
            out[small] = 2.0 / np.expm1(x[small])
        return out


IDENTITY = ScalarFunction("identity")
SQRT = ScalarFunction("sqrt")
INV_SQRT = ScalarFunction("inv_sqrt")
INVERSE = ScalarFunction("inverse")


def thermal_g(temperature: float) -> ScalarFunction:
    """G(z) = 2/(e^{2√z/T} − 1)"""
    if not temperature > 0:
        raise SpectralException(
            f"thermal_G 要求 T > 0: {temperature}",
            ErrorCode.SPECTRAL_FUNCTION_UNDEFINED,
            details={'temperature': temperature}
        )
    return ScalarFunction("thermal_g", float(temperature))


def function_from_name(name: str, temperature: Optional[float] = None) -> ScalarFunction:
    if name == "thermal_g":
        if temperature is None:
            raise SpectralException(
                "thermal_g 需要温度参数",
                ErrorCode.SPECTRAL_FUNCTION_UNDEFINED
            )
        return thermal_g(temperature)
    if name not in FUNCTION_KINDS:
        raise SpectralException(
            f"未知的函数: {name}",
            ErrorCode.SPECTRAL_FUNCTION_UNDEFINED,
            details={'name': name, 'known': list(FUNCTION_KINDS)}
        )
    return ScalarFunction(name)


# ==================== 本征分解 ====================

@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """A = O·diag(λ)·O^T，本征值升序"""
    eigenvalues: np.ndarray
    basis: np.ndarray

    def compose(self, values: np.ndarray) -> np.ndarray:
        """O·diag(values)·O^T，结果对称化"""
        M = (self.basis * values) @ self.basis.T
        return 0.5 * (M + M.T)

    def apply(self, f: ScalarFunction) -> np.ndarray:
        if f.singular_at_origin and not self.eigenvalues[0] > 0:
            raise SpectralException(
                f"{f.label} 在非正谱上无定义 (λ_min = {self.eigenvalues[0]:.3e})",
                ErrorCode.SPECTRAL_FUNCTION_UNDEFINED,
                details={'function': f.label, 'lambda_min': float(self.eigenvalues[0])}
            )
        values = f(self.eigenvalues)
        if not np.all(np.isfinite(values)):
            raise SpectralException(
                f"{f.label} 在谱上取到非有限值",
                ErrorCode.SPECTRAL_FUNCTION_UNDEFINED,
                details={'function': f.label}
            )
        return self.compose(values)


def symmetrize(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return 0.5 * (A + A.T)


def eigh(A: np.ndarray) -> EigenDecomposition:
    """对称本征分解并校验正交性与重构误差"""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SpectralException(
            f"需要方阵: {A.shape}",
            ErrorCode.SPECTRAL_NOT_SYMMETRIC,
            details={'shape': list(A.shape)}
        )
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    asymmetry = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if asymmetry > Config.SYMMETRY_TOL * scale:
        raise SpectralException(
            f"矩阵不对称 (偏差 {asymmetry:.3e})",
            ErrorCode.SPECTRAL_NOT_SYMMETRIC,
            details={'asymmetry': asymmetry}
        )
    try:
        values, basis = scipy.linalg.eigh(A)
    except np.linalg.LinAlgError as e:
        raise SpectralException(
            f"本征分解未收敛: {e}",
            ErrorCode.SPECTRAL_NO_CONVERGENCE,
            cause=e
        )

    n = A.shape[0]
    orthogonality = float(np.max(np.abs(basis.T @ basis - np.eye(n))))
    norm = max(float(np.max(np.abs(values))), np.finfo(float).tiny)
    reconstruction = float(np.max(np.abs((basis * values) @ basis.T - A)))
    if orthogonality > Config.ORTHOGONALITY_TOL or reconstruction > Config.RECONSTRUCTION_REL_TOL * norm:
        raise SpectralException(
            "本征分解不满足正交性或重构精度",
            ErrorCode.SPECTRAL_INVARIANT_BROKEN,
            details={'orthogonality': orthogonality, 'reconstruction': reconstruction}
        )
    return EigenDecomposition(eigenvalues=values, basis=basis)


def matrix_function(A: np.ndarray, f: ScalarFunction) -> np.ndarray:
    """O·f(diag)·O^T"""
    return eigh(A).apply(f)


def operator_norm(A: np.ndarray) -> float:
    """最大奇异值"""
    return float(np.linalg.norm(np.asarray(A, dtype=float), 2))


# ==================== 简正模 ====================

@dataclass(frozen=True, eq=False)
class ModeDecomposition:
    """V_x^{±1/2} 与 M = V_x^{1/2}V_pV_x^{1/2} 的本征分解"""
    sqrt_vx: np.ndarray
    inv_sqrt_vx: np.ndarray
    modes: EigenDecomposition


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
    """d_i、基态能量 E_0 与能隙 ΔE"""
    d: np.ndarray
    e0: float
    gap: float

    def to_dict(self):
        return {'E0': self.e0, 'gap': self.gap, 'd': self.d.tolist()}


def mode_decomposition(c: Coupling) -> ModeDecomposition:
    root = eigh(c.vx)
    sqrt_vx = root.apply(SQRT)
    inv_sqrt_vx = root.apply(INV_SQRT)
    modes = eigh(symmetrize(sqrt_vx @ c.vp @ sqrt_vx))
    if not modes.eigenvalues[0] > 0:
        raise SpectralException(
            f"模频率平方非正: {modes.eigenvalues[0]:.3e}",
            ErrorCode.SPECTRAL_INVARIANT_BROKEN,
            details={'d_min': float(modes.eigenvalues[0])}
        )
    return ModeDecomposition(sqrt_vx=sqrt_vx, inv_sqrt_vx=inv_sqrt_vx, modes=modes)


def mode_spectrum(c: Coupling) -> ModeSpectrum:
    d = mode_decomposition(c).modes.eigenvalues
    spectrum = ModeSpectrum(
        d=d,
        e0=float(np.sum(np.sqrt(d))),
        gap=float(2.0 * np.sqrt(d[0]))
    )
    log.debug(f"模谱 {c.label}: E0={spectrum.e0:.12g}, ΔE={spectrum.gap:.12g}")
    return spectrum


def ground_energy_trace(c: Coupling) -> float:
    """tr[(V_xV_p)^{1/2}]，取非对称乘积的主平方根"""
    root = scipy.linalg.sqrtm(c.vx @ c.vp)
    return float(np.real(np.trace(root)))


# ==================== 辛变换 ====================

@dataclass(frozen=True, eq=False)
class SymplecticTransform:
    """S = (V_x^{−1/2}O) ⊕ (V_x^{1/2}O)"""
    s: np.ndarray


def symplectic_form(n: int) -> np.ndarray:
    """Σ = [[0, I], [−I, 0]]"""
    identity = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, identity], [-identity, zero]])


def symplectic_transform(c: Coupling) -> SymplecticTransform:
    decomposition = mode_decomposition(c)
    O = decomposition.modes.basis
    s = scipy.linalg.block_diag(decomposition.inv_sqrt_vx @ O, decomposition.sqrt_vx @ O)

    n = c.size
    sigma = symplectic_form(n)
    defect = float(np.max(np.abs(s.T @ sigma @ s - sigma)))
    if defect > Config.RECONSTRUCTION_REL_TOL:
        raise SpectralException(
            f"辛条件不成立 (偏差 {defect:.3e})",
            ErrorCode.SPECTRAL_INVARIANT_BROKEN,
            details={'defect': defect}
        )
    return SymplecticTransform(s=s)


def normal_form(c: Coupling) -> np.ndarray:
    """S^T (V_x ⊕ V_p) S = I ⊕ D"""
    s = symplectic_transform(c).s
    return s.T @ scipy.linalg.block_diag(c.vx, c.vp) @ s


# ==================== Chebyshev 逼近 ====================

@dataclass(frozen=True, eq=False)
class ChebyshevApproximation:
    """p(ψ^{−1}(A)) 及其在 [−1,1] 网格上测得的最大偏差"""
    matrix: np.ndarray
    sup_error: float
    coefficients: np.ndarray
    interval: Tuple[float, float]


def spectral_interval(A: np.ndarray) -> Tuple[float, float]:
    values = scipy.linalg.eigvalsh(symmetrize(A))
    return float(values[0]), float(values[-1])


def affine_map(z, a: float, b: float):
    """ψ(z) = ((b−a)z + a + b)/2"""
    return 0.5 * ((b - a) * np.asarray(z) + a + b)


def chebyshev_matrix_function(A: np.ndarray, f: ScalarFunction, k: int,
                              spectrum: Optional[Tuple[float, float]] = None) -> ChebyshevApproximation:
    """k 次 Chebyshev 插值 p ≈ f∘ψ，返回 p(ψ^{−1}(A))"""
    if k < 1:
        raise SpectralException(
            f"多项式次数必须 ≥ 1: {k}",
            ErrorCode.SPECTRAL_FUNCTION_UNDEFINED,
            details={'k': k}
        )
    A = symmetrize(A)
    a, b = spectrum if spectrum is not None else spectral_interval(A)
    if b <= a:
        # 退化谱，稍微展宽区间
        width = 1e-8 * max(abs(a), 1.0)
        a, b = a - width, b + width

    grid = np.linspace(-1.0, 1.0, Config.CHEBYSHEV_GRID)
    exact = f(affine_map(grid, a, b))
    if not np.all(np.isfinite(exact)):
        raise SpectralException(
            f"{f.label} 在 [{a:g}, {b:g}] 上非有限",
            ErrorCode.SPECTRAL_FUNCTION_UNDEFINED,
            details={'function': f.label, 'interval': [a, b]}
        )

    nodes = chebyshev.chebpts2(k + 1)
    coefficients = chebyshev.chebfit(nodes, f(affine_map(nodes, a, b)), k)
    sup_error = float(np.max(np.abs(chebyshev.chebval(grid, coefficients) - exact)))

    # T_{j+1} = 2X·T_j − T_{j−1}
    n = A.shape[0]
    X = (2.0 * A - (a + b) * np.eye(n)) / (b - a)
    previous, current = np.eye(n), X
    result = coefficients[0] * previous + coefficients[1] * current
    for coefficient in coefficients[2:]:
        previous, current = current, 2.0 * X @ current - previous
        result = result + coefficient * current

    log.debug(f"Chebyshev 逼近 {f.label}: k={k}, 区间=[{a:.6g}, {b:.6g}], 偏差={sup_error:.3e}")
    return ChebyshevApproximation(
        matrix=result,
        sup_error=sup_error,
        coefficients=coefficients,
        interval=(a, b)
    )
