# -*- coding: utf-8 -*-
"""
测试公共夹具
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.special import comb

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from config import Config
from coupling import make_coupling
from lattice import cubic, ring


@pytest.fixture(autouse=True)
def isolated_tolerances(tmp_path, monkeypatch):
    """不读取用户目录下的容差文件"""
    monkeypatch.setattr(Config, "USER_CONFIG_FILE", str(tmp_path / "absent.ini"))


def nearest_neighbour(lat, strength):
    """V_x = I − strength·E，V_p = I"""
    n = lat.vertex_count
    vx = np.eye(n) - strength * lat.adjacency.astype(float)
    return make_coupling(lat, vx, np.eye(n))


def inv_sqrt_series(V, terms=200):
    """(I − X)^{−1/2} = Σ_k C(2k,k)/4^k·X^k，X = I − V，要求 ‖X‖ < 1"""
    n = V.shape[0]
    X = np.eye(n) - V
    result = np.zeros_like(V)
    power = np.eye(n)
    for k in range(terms):
        result = result + comb(2 * k, k, exact=False) / 4.0 ** k * power
        power = power @ X
    return result


@pytest.fixture(scope="session")
def ring40():
    return ring(40)


@pytest.fixture(scope="session")
def square12():
    return cubic([12, 12])


@pytest.fixture(scope="session")
def ring_coupling(ring40):
    return nearest_neighbour(ring40, 0.3)


@pytest.fixture(scope="session")
def square_coupling(square12):
    return nearest_neighbour(square12, 0.2)
