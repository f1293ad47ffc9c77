#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
harmolat 命令行主程序
构造谐振晶格实例，计算基态/热态关联，验证各衰减、能隙与面积律界
"""

import argparse
import dataclasses
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

# 添加当前目录到Python路径
sys.path.insert(0, str(Path(__file__).parent))

import numpy as np
import scipy.linalg

from config import Config, ERROR_MESSAGES, SUCCESS_MESSAGES
from logger import logger, set_console_level
from data_manager import DataManager
from exception_handler import (
    BoundException, ConfigException, ErrorCode, ExceptionHandler, FileSystemException,
    HarmolatException, StateException, VerificationException, EXIT_OK, safe_execute
)
from lattice import (
    Lattice, Region, build_lattice, complement, cubic_assumption1_constant, cubic_block,
    fit_dimension, make_region, ring, surface_area, verify_assumption1
)
from coupling import (
    Coupling, algebraic_kernel, build_algebraic, build_disordered_chain,
    build_exponential_decay, build_rotating_wave, circulant_inverse_closed_form,
    coupling_from_dict, gershgorin_bounds, interaction_range, matrix_range
)
from spectral import (
    INVERSE, INV_SQRT, chebyshev_matrix_function, function_from_name, ground_energy_trace,
    matrix_function, mode_spectrum, symmetrize
)
from gaussian import (
    GaussianState, correlation_sweep, entropy, fit_algebraic_decay, fit_decay,
    ground_state, rotating_wave_thermal_closed_form, thermal_state
)
from bounds import (
    DecayBound, assumption1_mu, benzi_bound, bernstein_envelope, bound_report,
    check_decay_bound, check_matrix_envelope, entropy_correlation_bound,
    example3_exact_gap, example3_gap_lower_bound, fitted_prefactor, riemann_zeta,
    theorem1_bound, theorem2_gap_bound, theorem3_gap_bound, theorem4_bound,
    theorem5_area_bound
)

COMMANDS = ("spectrum", "correlations", "area-law", "example", "assumption1", "benzi", "equivalence")
FORMATS = ("csv", "json")

# 各命令的默认输出格式
DEFAULT_FORMATS = {
    "correlations": "csv",
    "area-law": "csv",
    "equivalence": "csv",
}

# equivalence 只支持以 n 为规模参数的 builder
SIZED_BUILDERS = ("disordered_chain", "rotating_wave", "exponential_decay")

SLACK = 1e-9
GAP_SLACK = 1e-10


@dataclass
class RunConfig:
    """一次命令行运行的参数"""
    command: str
    coupling_path: Optional[str] = None
    lattice_path: Optional[str] = None
    region_path: Optional[str] = None
    out_path: Optional[str] = None
    export_state_path: Optional[str] = None
    output_format: Optional[str] = None
    temperature: Optional[float] = None
    seed: int = Config.DEFAULT_SEED
    tolerances_path: Optional[str] = None
    mu: Optional[float] = None
    nu: Optional[float] = None
    chi: Optional[float] = None
    function: str = "inv_sqrt"
    sizes: Tuple[int, ...] = ()
    square_sweep: Optional[int] = None
    example: Optional[int] = None
    verbose: int = 0

    @property
    def fmt(self) -> str:
        return self.output_format or DEFAULT_FORMATS.get(self.command, "json")

    def validate(self):
        """检查命令、格式与所引用的文件"""
        if self.command not in COMMANDS:
            raise ConfigException(
                f"未知命令: {self.command}",
                ErrorCode.CONFIG_INVALID,
                details={'command': self.command, 'known': list(COMMANDS)}
            )
        if self.output_format is not None and self.output_format not in FORMATS:
            raise ConfigException(
                f"未知输出格式: {self.output_format}",
                ErrorCode.CONFIG_INVALID,
                details={'format': self.output_format}
            )
        if self.temperature is not None and not self.temperature > 0:
            raise StateException(
                f"温度必须为正: {self.temperature}",
                ErrorCode.STATE_INVALID_TEMPERATURE,
                details={'temperature': self.temperature}
            )

        required = {
            "spectrum": ("coupling_path",),
            "correlations": ("coupling_path",),
            "area-law": ("coupling_path",),
            "benzi": ("coupling_path",),
            "equivalence": ("coupling_path", "sizes"),
            "assumption1": ("lattice_path", "mu"),
            "example": ("example",),
        }[self.command]
        for name in required:
            if not getattr(self, name):
                raise ConfigException(
                    f"命令 {self.command} 缺少参数 {name}",
                    ErrorCode.CONFIG_MISSING,
                    details={'command': self.command, 'missing': name}
                )
        if self.command == "area-law" and not (self.region_path or self.square_sweep):
            raise ConfigException(
                "area-law 需要 --region 或 --square-sweep",
                ErrorCode.CONFIG_MISSING,
                details={'command': self.command}
            )
        if self.command == "example" and self.example not in (1, 2, 3, 4):
            raise ConfigException(
                f"示例编号必须为 1..4: {self.example}",
                ErrorCode.CONFIG_INVALID,
                details={'example': self.example}
            )
        if self.command == "benzi" and self.function == "thermal_g" and self.temperature is None:
            raise ConfigException(
                "thermal_g 需要 --temperature",
                ErrorCode.CONFIG_MISSING,
                details={'function': self.function}
            )
        if any(n < 1 for n in self.sizes):
            raise ConfigException(
                f"--sizes 必须为正整数: {list(self.sizes)}",
                ErrorCode.CONFIG_INVALID,
                details={'sizes': list(self.sizes)}
            )

        for name in ("coupling_path", "lattice_path", "region_path", "tolerances_path"):
            path = getattr(self, name)
            if path and not os.path.isfile(path):
                raise FileSystemException(
                    f"文件不存在: {path}",
                    ErrorCode.FILE_NOT_FOUND,
                    details={'file_path': path}
                )


def _check(name: str, passed: bool, **detail) -> Dict[str, Any]:
    if not passed:
        logger.warning(f"检查未通过: {name} {detail}")
    return {'name': name, 'passed': bool(passed), **detail}


def _max_abs(A: np.ndarray) -> float:
    return float(np.max(np.abs(A)))


# 错误代码前缀到提示信息
_MESSAGE_KEYS = {
    "LAT": "invalid_lattice",
    "CPL": "invalid_coupling",
    "SPC": "numerical_error",
    "GSS": "numerical_error",
    "BND": "bound_not_applicable",
    "FILE": "file_error",
    "CFG": "config_error",
    "CHK": "verification_failed",
}


def _user_message(exception: HarmolatException) -> str:
    if exception.error_code == ErrorCode.LATTICE_INVALID_REGION:
        return ERROR_MESSAGES["invalid_region"]
    prefix = exception.error_code.split("_")[0]
    return ERROR_MESSAGES[_MESSAGE_KEYS.get(prefix, "unknown_error")]


class HarmolatApp:
    """命令行应用主类"""

    def __init__(self, run_config: RunConfig):
        self.run_config = run_config
        self.data_manager = DataManager()
        self.exception_handler = ExceptionHandler()
        self.exception_handler.register_error_callback(self._on_error)
        self._failed_checks: List[str] = []
        self.commands: Dict[str, Callable[[], Tuple[str, bool]]] = {
            "spectrum": self.cmd_spectrum,
            "correlations": self.cmd_correlations,
            "area-law": self.cmd_area_law,
            "example": self.cmd_example,
            "assumption1": self.cmd_assumption1,
            "benzi": self.cmd_benzi,
            "equivalence": self.cmd_equivalence,
        }

    def _on_error(self, exception: HarmolatException, context: str):
        """错误回调处理"""
        if isinstance(exception, VerificationException):
            failed = exception.details.get('failed', [])
            for name in failed:
                logger.info(f"未通过的检查项: {name}")
        sys.stderr.write(f"{_user_message(exception)}: {exception}\n")

    def run(self) -> int:
        """执行命令，返回退出码"""
        config = self.run_config
        previous: Dict[str, float] = {}
        try:
            config.validate()
            previous = self.data_manager.apply_tolerances(config.tolerances_path)
            logger.info(f"执行命令 {config.command}")
            text, ok = self.commands[config.command]()
            self._emit(text)
            if not ok:
                raise VerificationException(
                    f"命令 {config.command} 的验证未通过",
                    ErrorCode.CHECK_FAILED,
                    details={'command': config.command, 'failed': self._failed_checks}
                )
            logger.info(SUCCESS_MESSAGES["verification_passed"])
            return EXIT_OK
        except Exception as e:
            return self.exception_handler.handle_exception(e, f"命令 {config.command}")
        finally:
            Config.restore(previous)

    # ==================== 输入与输出 ====================

    def _emit(self, text: str):
        path = self.run_config.out_path
        if path:
            self.data_manager.write_text(path, text)
        else:
            sys.stdout.write(text)

    def _render(self, payload: Dict[str, Any], header: Sequence[str],
                rows: Sequence[Sequence[Any]]) -> str:
        """csv 输出表格；json 输出 payload"""
        if self.run_config.fmt == "csv":
            return self.data_manager.render_csv(header, rows)
        return self.data_manager.save_json(payload)

    def _load_coupling(self, path: Optional[str] = None) -> Coupling:
        data = self.data_manager.load_coupling_spec(path or self.run_config.coupling_path)
        return coupling_from_dict(data)

    def _state(self, c: Coupling) -> GaussianState:
        T = self.run_config.temperature
        return ground_state(c) if T is None else thermal_state(c, T)

    def _finish_checks(self, checks: List[Dict[str, Any]]) -> bool:
        self._failed_checks = [check['name'] for check in checks if not check['passed']]
        return not self._failed_checks

    # ==================== spectrum ====================

    def cmd_spectrum(self) -> Tuple[str, bool]:
        """E_0、ΔE 与模谱"""
        c = self._load_coupling()
        spectrum = mode_spectrum(c)
        payload = {
            'label': c.label,
            'size': c.size,
            'E0': spectrum.e0,
            'E0_trace': ground_energy_trace(c),
            'gap': spectrum.gap,
            'range': c.range_m,
            'gershgorin_vx': dataclasses.asdict(gershgorin_bounds(c.vx)),
            'd': spectrum.d.tolist()
        }
        rows = [(k, d, float(np.sqrt(d))) for k, d in enumerate(spectrum.d)]
        return self._render(payload, ("k", "d", "omega"), rows), True

    # ==================== correlations ====================

    def _decay_envelopes(self, c: Coupling) -> Tuple[Optional[Tuple[DecayBound, DecayBound]], Optional[str]]:
        """T = 0 用 Theorem 1，T > 0 用 Theorem 4；返回 (包络, 不适用原因)

        显式给出 --mu/--nu 时证书属于被请求的检查，失败直接上抛。
        """
        T = self.run_config.temperature
        requested = self.run_config.mu is not None or self.run_config.nu is not None
        try:
            if T is None:
                return theorem1_bound(c), None
            mu = self.run_config.mu or assumption1_mu(c)
            nu = self.run_config.nu or mu / 2.0
            cert = verify_assumption1(c.lattice, mu, nu)
            return theorem4_bound(c, T, cert), None
        except BoundException as e:
            if requested:
                raise
            logger.info(f"{c.label}: 衰减包络不适用: {e}")
            return None, str(e)

    def cmd_correlations(self) -> Tuple[str, bool]:
        """关联扫描、衰减拟合与包络检查"""
        c = self._load_coupling()
        lat = c.lattice
        state = self._state(c)
        if self.run_config.export_state_path:
            self.data_manager.save_json(state.to_dict(), self.run_config.export_state_path)
        rows = correlation_sweep(state, lat)

        exponential = safe_execute(fit_decay, state, "xx", lat, context="指数拟合")
        algebraic = safe_execute(fit_algebraic_decay, state, "xx", lat, context="幂律拟合")
        algebraic_decay = bool(exponential and algebraic and algebraic.residual < exponential.residual)

        theorem = "theorem1" if self.run_config.temperature is None else "theorem4"
        envelopes, reason = self._decay_envelopes(c)
        header = ["i", "j", "dist", "corr_xx", "corr_pp"]
        reports = []
        satisfied = True
        if envelopes is not None:
            header += ["envelope_xx", "envelope_pp"]
            columns = []
            for block, bound in zip(("xx", "pp"), envelopes):
                report = check_decay_bound(state, bound, block, lat)
                satisfied = satisfied and report.satisfied
                reports.append(bound_report(theorem, {'block': block, 'label': c.label,
                                                      'temperature': self.run_config.temperature},
                                            bound, report))
                active = ~lat.reachable | (lat.dist >= bound.min_dist)
                columns.append((bound.envelope(lat.dist), active))
            rows = [
                row + tuple(float(env[row[0], row[1]]) if active[row[0], row[1]] else None
                            for env, active in columns)
                for row in rows
            ]
        else:
            reports.append({'theorem': theorem, 'applicable': False, 'reason': reason})

        summary = {
            'label': c.label,
            'temperature': self.run_config.temperature,
            'fit_exponential': dataclasses.asdict(exponential) if exponential else None,
            'fit_algebraic': dataclasses.asdict(algebraic) if algebraic else None,
            'algebraic_decay': algebraic_decay,
            'bounds': reports,
            'satisfied': satisfied
        }
        if algebraic_decay:
            logger.info(f"{c.label}: 关联呈幂律衰减 (η≈{algebraic.eta:.4g})")
        self._failed_checks = [] if satisfied else ["decay_envelope"]

        if self.run_config.fmt == "json":
            payload = dict(summary, rows=[dict(zip(header, row)) for row in rows])
            return self.data_manager.save_json(payload), satisfied

        if self.run_config.out_path:
            self.data_manager.save_json(summary, self.run_config.out_path + ".summary.json")
        else:
            logger.info(f"关联摘要: {summary}")
        return self.data_manager.render_csv(header, rows), satisfied

    # ==================== area-law ====================

    def _sweep_regions(self, lat: Lattice) -> List[Region]:
        """cubic 晶格中心处边长 1..K 的超立方区域"""
        if lat.descriptor.get("kind") != "cubic":
            raise ConfigException(
                "--square-sweep 只适用于 cubic 晶格",
                ErrorCode.CONFIG_INVALID,
                details={'kind': lat.descriptor.get("kind")}
            )
        dims = list(lat.descriptor["dims"])
        regions = []
        for k in range(1, self.run_config.square_sweep + 1):
            corner = [(extent - k) // 2 for extent in dims]
            regions.append(cubic_block(lat, corner, [k] * len(dims)))
        return regions

    def cmd_area_law(self) -> Tuple[str, bool]:
        """熵、关联求和界与 Theorem 5 面积律界"""
        c = self._load_coupling()
        lat = c.lattice
        if self.run_config.region_path:
            regions = [make_region(lat, self.data_manager.load_region(self.run_config.region_path))]
        else:
            regions = self._sweep_regions(lat)

        state = ground_state(c)
        dims = fit_dimension(lat)
        header = ("size", "surface_area", "entropy_bits", "entropy_complement_bits",
                  "correlation_bound", "theorem5_bound", "satisfied")
        rows, records = [], []
        for region in regions:
            inner = entropy(state, region).entropy_bits
            outer = entropy(state, complement(lat, region)).entropy_bits
            corr = entropy_correlation_bound(state, c, region)
            area = theorem5_area_bound(c, region, dims)
            ok = (inner <= corr + SLACK and corr <= area + SLACK
                  and abs(inner - outer) <= Config.UNCERTAINTY_TOL)
            s = surface_area(lat, region)
            rows.append((len(region), s, inner, outer, corr, area, ok))
            records.append({
                'region': list(region.members),
                'surface_area': s,
                'entropy_bits': inner,
                'entropy_complement_bits': outer,
                'correlation_bound': corr,
                'theorem5_bound': area,
                'satisfied': ok
            })
            if not ok:
                logger.warning(f"面积律检查未通过: |I|={len(region)}, S={inner:.6g}, "
                               f"corr={corr:.6g}, thm5={area:.6g}")

        satisfied = all(record['satisfied'] for record in records)
        payload = {'label': c.label, 'dimension': dims.to_dict(), 'regions': records,
                   'satisfied': satisfied}
        self._failed_checks = [] if satisfied else ["area_law"]
        return self._render(payload, header, rows), satisfied

    # ==================== assumption1 ====================

    def cmd_assumption1(self) -> Tuple[str, bool]:
        """计算 l0 并在开边界 cubic 晶格上对比闭式常数"""
        lat = build_lattice(self.data_manager.load_lattice_descriptor(self.run_config.lattice_path))
        mu = self.run_config.mu
        nu = self.run_config.nu or mu / 2.0
        cert = verify_assumption1(lat, mu, nu)
        payload = {'lattice': lat.to_dict(), 'certificate': cert.to_dict()}
        checks = [_check("certificate_holds", cert.holds, l0=cert.l0)]

        descriptor = lat.descriptor
        if descriptor.get("kind") == "cubic" and not descriptor.get("periodic") \
                and abs(nu - mu / 2.0) <= 1e-15 * mu:
            constant = cubic_assumption1_constant(mu, len(descriptor["dims"]))
            payload['cubic_constant'] = constant
            checks.append(_check("within_cubic_constant", cert.l0 <= constant * (1.0 + 1e-12),
                                 l0=cert.l0, constant=constant))
        payload['checks'] = checks
        ok = self._finish_checks(checks)
        payload['passed'] = ok
        return self.data_manager.save_json(payload), ok

    # ==================== benzi ====================

    def _benzi_matrix(self, c: Coupling) -> np.ndarray:
        if c.vp_is_identity:
            return c.vx
        if c.commutator_norm() > Config.COMMUTATOR_TOL:
            raise BoundException(
                "V_x 与 V_p 不对易，无法构造 V_xV_p 的矩阵函数",
                ErrorCode.BOUND_NOT_APPLICABLE,
                details={'commutator': c.commutator_norm()}
            )
        return symmetrize(c.vx @ c.vp)

    def cmd_benzi(self) -> Tuple[str, bool]:
        """矩阵函数的指数衰减包络与 Chebyshev 逼近误差"""
        c = self._load_coupling()
        lat = c.lattice
        V = self._benzi_matrix(c)
        f = function_from_name(self.run_config.function, self.run_config.temperature)
        values = scipy.linalg.eigvalsh(V)
        a, b = float(values[0]), float(values[-1])
        m = matrix_range(V, lat)
        if m is None:
            raise BoundException(
                "矩阵非局域，Benzi 包络不适用",
                ErrorCode.BOUND_NOT_APPLICABLE,
                details={'label': c.label}
            )
        chi = self.run_config.chi or (b / (b - a) if b > a else 2.0)

        envelope = benzi_bound(a, b, m, f, chi)
        xi = float(-1.0 / np.log(envelope.q)) if 0.0 < envelope.q < 1.0 else 0.0
        bound = DecayBound(K=envelope.K, xi=xi, min_dist=0)
        exact = matrix_function(V, f)
        report = check_matrix_envelope(exact, bound, lat, label=f.label)
        checks = [_check("benzi_envelope", report.satisfied, max_ratio=report.max_ratio)]

        approximations = []
        for k in self.run_config.sizes or (5, 10, 20, 40):
            approx = chebyshev_matrix_function(V, f, k, spectrum=(a, b) if b > a else None)
            error = _max_abs(approx.matrix - exact)
            # 插值误差不超过最佳逼近界的两倍
            limit = 2.0 * bernstein_envelope(f, a, b, chi, k) if b > a else float("inf")
            approximations.append({'k': k, 'max_entry_error': error, 'sup_error': approx.sup_error,
                                   'bernstein_envelope': limit / 2.0})
            checks.append(_check(f"chebyshev_k{k}", error <= limit + 1e-12, error=error))

        ok = self._finish_checks(checks)
        payload = {
            'function': f.label,
            'a': a,
            'b': b,
            'm': m,
            'chi': chi,
            'q': envelope.q,
            'report': bound_report("benzi", {'function': f.label, 'chi': chi}, bound, report),
            'chebyshev': approximations,
            'checks': checks,
            'passed': ok
        }
        return self.data_manager.save_json(payload), ok

    # ==================== equivalence ====================

    def cmd_equivalence(self) -> Tuple[str, bool]:
        """逐个规模比较 (i) 指数衰减 与 (ii) 能隙下界"""
        template = self.data_manager.load_coupling_spec(self.run_config.coupling_path)
        if template.get("builder") not in SIZED_BUILDERS:
            raise ConfigException(
                f"equivalence 需要以 n 为参数的 builder: {list(SIZED_BUILDERS)}",
                ErrorCode.CONFIG_INVALID,
                details={'builder': template.get("builder")}
            )

        header = ("n", "gap", "K_xx", "xi", "fitted_xi", "theorem3_bound",
                  "decay_satisfied", "gap_bound_satisfied", "agree")
        rows, records = [], []
        for n in self.run_config.sizes:
            c = coupling_from_dict(dict(template, n=n))
            record = self._equivalence_row(c)
            records.append(record)
            rows.append(tuple(record[key] for key in header))

        ok = all(record['decay_satisfied'] is not False and record['gap_bound_satisfied'] is not False
                 for record in records)
        self._failed_checks = [] if ok else ["equivalence"]
        payload = {'builder': template["builder"], 'rows': records, 'passed': ok}
        return self._render(payload, header, rows), ok

    def _equivalence_row(self, c: Coupling) -> Dict[str, Any]:
        lat = c.lattice
        gap = mode_spectrum(c).gap
        state = ground_state(c)
        try:
            envelopes = theorem1_bound(c)
        except BoundException as e:
            logger.info(f"{c.label}: Theorem 1 不适用: {e}")
            envelopes = None
        fit = safe_execute(fit_decay, state, "xx", lat, context="指数拟合")

        decay_ok = None
        K_xx = xi = bound3 = None
        if envelopes is not None:
            xx, pp = envelopes
            K_xx, xi = xx.K, xx.xi
            decay_ok = (check_decay_bound(state, xx, "xx", lat).satisfied
                        and check_decay_bound(state, pp, "pp", lat).satisfied)

        gap_ok = None
        if envelopes is not None and c.vp_is_identity:
            if xi > 0:
                K_eff = fitted_prefactor(state, "xx", lat, xi)
            else:
                K_eff = float(np.max(np.abs(np.diag(state.gamma_x))))
            dims = fit_dimension(lat)
            bound3 = theorem3_gap_bound(K_eff, xi, dims.d, dims.c).value
            gap_ok = gap >= bound3 - GAP_SLACK

        return {
            'n': c.size,
            'gap': gap,
            'K_xx': K_xx,
            'xi': xi,
            'fitted_xi': fit.xi if fit else None,
            'theorem3_bound': bound3,
            'decay_satisfied': decay_ok,
            'gap_bound_satisfied': gap_ok,
            'agree': None if decay_ok is None or gap_ok is None else decay_ok == gap_ok
        }

    # ==================== example ====================

    def cmd_example(self) -> Tuple[str, bool]:
        """复现四个示例并断言其结论"""
        number = self.run_config.example
        checks = {
            1: self._example_disordered_chain,
            2: self._example_rotating_wave,
            3: self._example_exponential_decay,
            4: self._example_algebraic,
        }[number]()
        ok = self._finish_checks(checks)
        payload = {'example': number, 'checks': checks, 'passed': ok}
        return self.data_manager.save_json(payload), ok

    def _example_disordered_chain(self) -> List[Dict[str, Any]]:
        """无序链：Gershgorin 保证 ΔE ≥ 2，基态满足 Theorem 1"""
        n = self.run_config.sizes[0] if self.run_config.sizes else 40
        checks = []
        for seed in range(self.run_config.seed, self.run_config.seed + 5):
            c = build_disordered_chain(n, seed)
            state = ground_state(c)
            gap = mode_spectrum(c).gap
            disc = gershgorin_bounds(c.vx)
            checks.append(_check(f"seed{seed}_gap", gap >= 2.0 - GAP_SLACK, gap=gap))
            checks.append(_check(f"seed{seed}_gershgorin", disc.lower >= 1.0 - 1e-12 and disc.upper <= 5.0 + 1e-12,
                                 lower=disc.lower, upper=disc.upper))
            xx, pp = theorem1_bound(c)
            for block, bound in (("xx", xx), ("pp", pp)):
                report = check_decay_bound(state, bound, block, c.lattice)
                checks.append(_check(f"seed{seed}_theorem1_{block}", report.satisfied,
                                     max_ratio=report.max_ratio, K=bound.K, xi=bound.xi))
        return checks

    def _example_rotating_wave(self) -> List[Dict[str, Any]]:
        """旋波耦合：循环逆闭式、能隙、热态闭式与高温极限"""
        checks = []
        for n in (11, 51, 101):
            for coupling_c in (0.1, 0.3, 0.45):
                A = build_rotating_wave(n, coupling_c).vx
                error = _max_abs(matrix_function(A, INVERSE) - circulant_inverse_closed_form(n, coupling_c))
                checks.append(_check(f"inverse_n{n}_c{coupling_c}", error <= 1e-9, error=error))

        # V_x = V_p = A，M = V_x^{1/2}V_pV_x^{1/2} = A²，故 ΔE = 2λ_min(A) = 2(1−2c)；
        # 2√(1−2c) 是 (A, I) 耦合的能隙
        for n in (10, 40, 200):
            c = build_rotating_wave(n, 0.3)
            gap = mode_spectrum(c).gap
            checks.append(_check(f"gap_n{n}", abs(gap - 2.0 * (1.0 - 2.0 * 0.3)) <= 1e-10, gap=gap))

        c = build_rotating_wave(40, 0.3)
        ground = ground_state(c)
        error = max(_max_abs(ground.gamma_x - np.eye(40)), _max_abs(ground.gamma_p - np.eye(40)))
        checks.append(_check("ground_state_vacuum", error <= 1e-10, error=error))

        for T in (0.5, 5.0):
            state = thermal_state(c, T)
            closed = rotating_wave_thermal_closed_form(40, 0.3, T)
            error = _max_abs(state.gamma_x - closed)
            checks.append(_check(f"thermal_closed_form_T{T:g}", error <= 1e-9 * max(1.0, _max_abs(closed)),
                                 error=error))

        gap = mode_spectrum(c).gap
        mu = assumption1_mu(c)
        cert = verify_assumption1(c.lattice, mu, mu / 2.0)
        for factor in (0.1, 1.0, 10.0):
            T = factor * gap
            state = thermal_state(c, T)
            xx, pp = theorem4_bound(c, T, cert)
            satisfied = all(check_decay_bound(state, bound, block, c.lattice).satisfied
                            for block, bound in (("xx", xx), ("pp", pp)))
            checks.append(_check(f"theorem4_T{factor:g}gap", satisfied, K=xx.K, xi=xx.xi))

        inverse = circulant_inverse_closed_form(51, 0.3)
        errors = []
        for T in (10.0, 100.0, 1000.0):
            gamma = thermal_state(build_rotating_wave(51, 0.3), T).gamma_x
            errors.append(_max_abs(gamma - np.eye(51) - T * inverse) / (T * _max_abs(inverse)))
        checks.append(_check("high_temperature_convergence",
                             errors[0] > errors[1] > errors[2], relative_errors=errors))

        c = build_rotating_wave(101, 0.3)
        fit = fit_decay(thermal_state(c, 1000.0), "xx", c.lattice, cutoff=1e-8)
        q = (1.0 - np.sqrt(1.0 - 4.0 * 0.3 ** 2)) / (2.0 * 0.3)
        expected = float(-1.0 / np.log(q))
        checks.append(_check("high_temperature_xi", abs(fit.xi - expected) <= 1e-2 * expected,
                             fitted=fit.xi, expected=expected))
        return checks

    def _example_exponential_decay(self) -> List[Dict[str, Any]]:
        """给定指数衰减关联的耦合：精确能隙、下界与 Theorem 3"""
        n = 40
        checks = []
        dims = fit_dimension(ring(n))
        for xi in (0.5, 1.0, 2.0):
            for K in (0.5, 2.0):
                for block in ("xx", "pp"):
                    c = build_exponential_decay(n, K, xi, block)
                    gap = mode_spectrum(c).gap
                    exact = example3_exact_gap(K, xi, block)
                    lower = example3_gap_lower_bound(K, xi)
                    tag = f"xi{xi:g}_K{K:g}_{block}"
                    checks.append(_check(f"{tag}_exact", abs(gap - exact) <= 1e-8, gap=gap, exact=exact))
                    checks.append(_check(f"{tag}_lower", gap >= lower - GAP_SLACK, gap=gap, lower=lower))
                    if block == "xx":
                        state = ground_state(c)
                        K_eff = fitted_prefactor(state, "xx", c.lattice, xi)
                        bound = theorem3_gap_bound(K_eff, xi, dims.d, dims.c).value
                        checks.append(_check(f"{tag}_theorem3", gap >= bound - GAP_SLACK,
                                             gap=gap, bound=bound, K_fit=K_eff))
        return checks

    def _example_algebraic(self) -> List[Dict[str, Any]]:
        """幂律衰减的非局域耦合：有能隙但关联按 dist^{−η} 衰减"""
        lat = ring(self.run_config.sizes[0] if self.run_config.sizes else 40)
        dims = fit_dimension(lat)
        checks = []
        for eta in (dims.d + 1.0, dims.d + 2.0):
            tag = f"eta{eta:g}"
            c = build_algebraic(lat, eta)
            W = algebraic_kernel(lat, eta)
            state = ground_state(c)

            checks.append(_check(f"{tag}_inv_sqrt", _max_abs(matrix_function(c.vx, INV_SQRT) - W) <= 1e-10))
            off = ~np.eye(lat.vertex_count, dtype=bool)
            power = np.where(off, lat.dist, 1).astype(float) ** -eta
            error = _max_abs((state.gamma_x - power)[off])
            checks.append(_check(f"{tag}_power_law", error <= 1e-10, error=error))

            values = scipy.linalg.eigvalsh(W)
            limit = 1.0 + 2.0 * dims.c * riemann_zeta(1.0 - dims.d + eta)
            checks.append(_check(f"{tag}_spectrum", values[0] >= 1.0 - 1e-12 and values[-1] <= limit + 1e-10,
                                 lambda_min=float(values[0]), norm=float(values[-1]), limit=limit))

            gap = mode_spectrum(c).gap
            bound = theorem2_gap_bound(float(np.max(np.diag(W))), 1.0, eta, dims.d, dims.c).value
            checks.append(_check(f"{tag}_theorem2", gap >= bound - GAP_SLACK, gap=gap, bound=bound))
            checks.append(_check(f"{tag}_non_local", interaction_range(c) is None))

            exponential = fit_decay(state, "xx", lat)
            algebraic = fit_algebraic_decay(state, "xx", lat)
            checks.append(_check(f"{tag}_algebraic_fit", algebraic.residual < exponential.residual,
                                 eta_fit=algebraic.eta))
        return checks


# ==================== 参数解析 ====================

def _sizes(text: str) -> Tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"无效的规模列表: {text}")


def build_parser() -> argparse.ArgumentParser:
    """构造命令行解析器"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", dest="out_path", help="输出文件，缺省写到标准输出")
    common.add_argument("--format", dest="output_format", choices=FORMATS, help="输出格式")
    common.add_argument("--tolerances", dest="tolerances_path", help="INI 容差覆盖文件")
    common.add_argument("--temperature", type=float, help="温度 T > 0")
    common.add_argument("--seed", type=int, default=Config.DEFAULT_SEED, help="随机种子")
    common.add_argument("--sizes", type=_sizes, default=(), help="逗号分隔的规模或多项式次数")
    common.add_argument("-v", "--verbose", action="count", default=0, help="提高控制台日志级别")

    parser = argparse.ArgumentParser(prog=Config.APP_NAME, description="谐振晶格系统的关联、能隙与面积律工具")
    parser.add_argument("--version", action="version", version=f"{Config.APP_NAME} {Config.VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("spectrum", "correlations", "area-law", "benzi", "equivalence"):
        command = sub.add_parser(name, parents=[common])
        command.add_argument("--coupling", dest="coupling_path", help="耦合 JSON 文件")
        if name == "correlations":
            command.add_argument("--mu", type=float, help="Assumption 1 的 μ（缺省取耦合的 μ）")
            command.add_argument("--nu", type=float, help="Assumption 1 的 ν（缺省 μ/2）")
            command.add_argument("--export-state", dest="export_state_path", help="把协方差矩阵导出为 JSON")
        if name == "area-law":
            command.add_argument("--region", dest="region_path", help="区域 JSON 文件")
            command.add_argument("--square-sweep", type=int, help="中心超立方区域边长 1..K")
        if name == "benzi":
            command.add_argument("--function", default="inv_sqrt", help="矩阵函数名")
            command.add_argument("--chi", type=float, help="椭圆参数 χ > 1")

    example = sub.add_parser("example", parents=[common])
    example.add_argument("example", type=int, choices=(1, 2, 3, 4), help="示例编号")

    assumption = sub.add_parser("assumption1", parents=[common])
    assumption.add_argument("--lattice", dest="lattice_path", help="晶格 JSON 文件")
    assumption.add_argument("--mu", type=float, help="μ > 0")
    assumption.add_argument("--nu", type=float, help="ν > 0（缺省 μ/2）")
    return parser


def parse_run_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    return RunConfig(**{key: value for key, value in args.items() if key in fields})


def main(argv: Optional[Sequence[str]] = None) -> int:
    """主函数"""
    try:
        run_config = parse_run_config(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if run_config.verbose:
        set_console_level("DEBUG" if run_config.verbose > 1 else "INFO")
    logger.info(f"启动 {Config.APP_NAME} v{Config.VERSION}")
    try:
        app = HarmolatApp(run_config)
        app.exception_handler.install_global_hook()
        return app.run()
    except KeyboardInterrupt:
        logger.info("用户中断程序")
        return 130


if __name__ == "__main__":
    sys.exit(main())
