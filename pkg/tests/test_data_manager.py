# -*- coding: utf-8 -*-
"""
数据管理器与容差配置测试
"""

import logging

import numpy as np
import pytest

import data_manager
from config import Config, SUCCESS_MESSAGES
from data_manager import DataManager, format_float
from exception_handler import ConfigException, ErrorCode, FileSystemException


@pytest.fixture
def manager():
    return DataManager()


def test_load_json_strips_bom(tmp_path, manager):
    path = tmp_path / "lattice.json"
    path.write_bytes('\ufeff{"kind": "ring", "n": 5}'.encode("utf-8"))
    assert manager.load_lattice_descriptor(str(path)) == {"kind": "ring", "n": 5}


def test_corrupted_json(tmp_path, manager):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(FileSystemException) as info:
        manager.load_json(str(path))
    assert info.value.error_code == ErrorCode.FILE_CORRUPTED


def test_missing_json(tmp_path, manager):
    with pytest.raises(FileSystemException) as info:
        manager.load_json(str(tmp_path / "missing.json"))
    assert info.value.error_code == ErrorCode.FILE_NOT_FOUND


def test_descriptor_validation(tmp_path, manager):
    path = tmp_path / "x.json"
    path.write_text('{"n": 5}', encoding="utf-8")
    with pytest.raises(FileSystemException):
        manager.load_lattice_descriptor(str(path))
    with pytest.raises(FileSystemException):
        manager.load_coupling_spec(str(path))
    with pytest.raises(FileSystemException):
        manager.load_region(str(path))

    path.write_text('{"members": [1, "x"]}', encoding="utf-8")
    with pytest.raises(FileSystemException) as info:
        manager.load_region(str(path))
    assert info.value.error_code == ErrorCode.FILE_CORRUPTED

    path.write_text('{"members": [3, 1]}', encoding="utf-8")
    assert manager.load_region(str(path)) == [3, 1]


def test_format_float():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(np.float64(2.0)) == "2"
    assert format_float(3) == "3"
    assert format_float(np.int64(7)) == "7"
    assert format_float(True) == "true"
    assert format_float(np.bool_(False)) == "false"
    assert format_float(None) == ""


def test_render_csv(manager):
    text = manager.render_csv(("i", "j", "dist", "corr"), [(0, 1, 1, 0.25), (0, 2, None, 0.0)])
    assert text == "i,j,dist,corr\n0,1,1,0.25\n0,2,,0\n"


def test_save_json_converts_numpy(tmp_path, manager):
    out = tmp_path / "nested" / "report.json"
    text = manager.save_json({'d': np.array([1.0, 2.0]), 'n': np.int64(3)}, str(out))
    assert out.read_text(encoding="utf-8") == text
    assert '"n": 3' in text


def test_tolerances_applied_and_restored(tmp_path, manager):
    ini = tmp_path / "tol.ini"
    ini.write_text("[tolerances]\nBOUND_RATIO_TOL = 1e-6\nsymmetry_tol = 1e-10\n", encoding="utf-8")
    before = (Config.BOUND_RATIO_TOL, Config.SYMMETRY_TOL)
    previous = manager.apply_tolerances(str(ini))
    try:
        assert Config.BOUND_RATIO_TOL == 1e-6
        assert Config.SYMMETRY_TOL == 1e-10
    finally:
        Config.restore(previous)
    assert (Config.BOUND_RATIO_TOL, Config.SYMMETRY_TOL) == before


@pytest.mark.parametrize("overrides", [
    {"SYMMETRY_TOL": "0.001", "BOGUS": "1"},
    {"SYMMETRY_TOL": "0.001", "BOUND_RATIO_TOL": "abc"},
    {"SYMMETRY_TOL": "0.001", "UNCERTAINTY_TOL": "0"},
])
def test_invalid_override_leaves_config_untouched(overrides):
    before = (Config.SYMMETRY_TOL, Config.BOUND_RATIO_TOL, Config.UNCERTAINTY_TOL)
    with pytest.raises(ConfigException):
        Config.apply_overrides(overrides)
    assert (Config.SYMMETRY_TOL, Config.BOUND_RATIO_TOL, Config.UNCERTAINTY_TOL) == before


def test_report_written_message(tmp_path, manager):
    records = []
    handler = logging.Handler()
    handler.emit = records.append
    data_manager.log.addHandler(handler)
    path = tmp_path / "out" / "report.json"
    try:
        manager.save_json({'a': 1}, str(path))
    finally:
        data_manager.log.removeHandler(handler)
    assert path.read_text(encoding="utf-8") == '{\n  "a": 1\n}\n'
    assert any(SUCCESS_MESSAGES["report_written"] in record.getMessage() for record in records)


def test_absent_default_tolerance_file(manager):
    assert manager.load_tolerances() == {}
    assert manager.apply_tolerances() == {}


def test_tolerance_errors(tmp_path, manager):
    unknown = tmp_path / "unknown.ini"
    unknown.write_text("[tolerances]\nFOO_TOL = 1\n", encoding="utf-8")
    with pytest.raises(ConfigException) as info:
        manager.apply_tolerances(str(unknown))
    assert info.value.error_code == ErrorCode.CONFIG_UNKNOWN_KEY

    no_section = tmp_path / "nosection.ini"
    no_section.write_text("[other]\nBOUND_RATIO_TOL = 1\n", encoding="utf-8")
    with pytest.raises(ConfigException) as info:
        manager.load_tolerances(str(no_section))
    assert info.value.error_code == ErrorCode.CONFIG_MISSING

    negative = tmp_path / "negative.ini"
    negative.write_text("[tolerances]\nBOUND_RATIO_TOL = -1\n", encoding="utf-8")
    with pytest.raises(ConfigException) as info:
        manager.apply_tolerances(str(negative))
    assert info.value.error_code == ErrorCode.CONFIG_INVALID

    with pytest.raises(FileSystemException) as info:
        manager.load_tolerances(str(tmp_path / "missing.ini"))
    assert info.value.error_code == ErrorCode.FILE_NOT_FOUND


def test_thread_count(monkeypatch):
    monkeypatch.delenv(Config.THREADS_ENV, raising=False)
    assert Config.get_thread_count() == Config.DEFAULT_THREADS
    monkeypatch.setenv(Config.THREADS_ENV, "2")
    assert Config.get_thread_count() == 2
    monkeypatch.setenv(Config.THREADS_ENV, "zero")
    assert Config.get_thread_count() == Config.DEFAULT_THREADS
