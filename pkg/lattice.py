#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
晶格模块
有限图、图距离、维数常数、区域与 Assumption-1 卷积检查
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple

import networkx as nx
import numpy as np

from config import Config
from exception_handler import ErrorCode, LatticeException
from logger import get_logger

log = get_logger("lattice")

# 不连通顶点对的距离哨兵值
UNREACHABLE = np.iinfo(np.int64).max

LATTICE_KINDS = ("ring", "path", "cubic", "explicit")


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Lattice:
    """有限简单图及其全点对距离"""
    vertex_count: int
    adjacency: np.ndarray
    dist: np.ndarray
    descriptor: Dict[str, Any] = field(default_factory=dict)

    @property
    def reachable(self) -> np.ndarray:
        return self.dist != UNREACHABLE

    @property
    def connected(self) -> bool:
        return bool(self.reachable.all())

    @property
    def diameter(self) -> int:
        """连通分量内的最大距离"""
        return int(self.dist[self.reachable].max())

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.sum() // 2)

    @property
    def max_degree(self) -> int:
        return int(self.adjacency.sum(axis=1).max())

    def check_vertex(self, i: int) -> int:
        if not 0 <= int(i) < self.vertex_count:
            raise LatticeException(
                f"顶点编号越界: {i}",
                ErrorCode.LATTICE_VERTEX_OUT_OF_RANGE,
                details={'vertex': int(i), 'vertex_count': self.vertex_count}
            )
        return int(i)

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.descriptor)


@dataclass(frozen=True)
class DimensionEstimate:
    """|S_r(i)| ≤ c·r^{d−1} 的常数对"""
    d: float
    c: float

    def to_dict(self) -> Dict[str, float]:
        return {'d': self.d, 'c': self.c}


@dataclass(frozen=True)
class Region:
    """顶点子集，升序且无重复"""
    members: Tuple[int, ...]

    @property
    def indices(self) -> np.ndarray:
        return np.asarray(self.members, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, vertex: int) -> bool:
        return vertex in self.members

    def to_dict(self) -> Dict[str, List[int]]:
        return {'members': list(self.members)}


@dataclass(frozen=True)
class Assumption1Certificate:
    """卷积不等式 Σ_k e^{−μd(i,k)}e^{−μd(k,j)} ≤ l0·e^{−νd(i,j)} 的证书"""
    mu: float
    nu: float
    l0: float
    holds: bool
    worst_pair: Tuple[int, int]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'mu': self.mu,
            'nu': self.nu,
            'l0': self.l0,
            'holds': self.holds,
            'worst_pair': list(self.worst_pair)
        }


# ==================== 构造 ====================

def _invalid(message: str, **details) -> LatticeException:
    log.warning(message)
    return LatticeException(message, ErrorCode.LATTICE_INVALID_DESCRIPTOR, details=details)


def _int_field(descriptor: Mapping[str, Any], key: str) -> int:
    value = descriptor.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise _invalid(f"字段 {key} 必须为整数", key=key, value=value)
    return int(value)


def _cubic_graph(dims: Sequence[int], periodic: bool) -> nx.Graph:
    """超立方格点，行主序编号"""
    index = np.arange(int(np.prod(dims))).reshape(dims)
    sources: List[np.ndarray] = []
    targets: List[np.ndarray] = []
    for axis, size in enumerate(dims):
        if size < 2:
            continue
        if periodic:
            shifted = np.roll(index, -1, axis=axis)
            sources.append(index.ravel())
            targets.append(shifted.ravel())
        else:
            head = np.take(index, np.arange(size - 1), axis=axis)
            tail = np.take(index, np.arange(1, size), axis=axis)
            sources.append(head.ravel())
            targets.append(tail.ravel())

    graph = nx.Graph()
    graph.add_nodes_from(range(index.size))
    if sources:
        u = np.concatenate(sources)
        v = np.concatenate(targets)
        keep = u != v
        graph.add_edges_from(zip(u[keep].tolist(), v[keep].tolist()))
    return graph


def _graph_from_descriptor(descriptor: Mapping[str, Any]) -> nx.Graph:
    if not isinstance(descriptor, Mapping):
        raise _invalid("晶格描述必须为字典")
    kind = descriptor.get("kind")
    if kind not in LATTICE_KINDS:
        raise _invalid(f"未知的晶格类型: {kind}", kind=kind)

    if kind in ("ring", "path"):
        n = _int_field(descriptor, "n")
        if n < 2:
            raise _invalid(f"{kind} 需要 n ≥ 2", n=n)
        return nx.cycle_graph(n) if kind == "ring" else nx.path_graph(n)

    if kind == "cubic":
        dims = descriptor.get("dims")
        if not isinstance(dims, (list, tuple)) or not dims:
            raise _invalid("cubic 需要非空 dims 列表", dims=dims)
        if any(isinstance(s, bool) or not isinstance(s, (int, np.integer)) or s < 1 for s in dims):
            raise _invalid("dims 的每一项必须为正整数", dims=list(dims))
        if int(np.prod(dims)) < 2:
            raise _invalid("cubic 晶格至少需要 2 个顶点", dims=list(dims))
        periodic = descriptor.get("periodic", False)
        if not isinstance(periodic, bool):
            raise _invalid("periodic 必须为布尔值", periodic=periodic)
        return _cubic_graph([int(s) for s in dims], periodic)

    # explicit
    n = _int_field(descriptor, "n")
    if n < 1:
        raise _invalid("explicit 需要 n ≥ 1", n=n)
    edges = descriptor.get("edges", [])
    if not isinstance(edges, (list, tuple)):
        raise _invalid("edges 必须为列表")
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    for edge in edges:
        if not isinstance(edge, (list, tuple)) or len(edge) != 2:
            raise _invalid(f"无效的边: {edge}", edge=edge)
        u, v = (int(x) for x in edge)
        for x in (u, v):
            if not 0 <= x < n:
                raise LatticeException(
                    f"边 {edge} 引用了越界顶点 {x}",
                    ErrorCode.LATTICE_VERTEX_OUT_OF_RANGE,
                    details={'edge': [u, v], 'vertex_count': n}
                )
        if u == v:
            raise _invalid(f"不允许自环: {edge}", edge=[u, v])
        graph.add_edge(u, v)
    return graph


def _all_pairs_distance(graph: nx.Graph, n: int) -> np.ndarray:
    """逐源点 BFS，线程池并行，结果与线程数无关"""
    def bfs_row(source: int) -> np.ndarray:
        row = np.full(n, UNREACHABLE, dtype=np.int64)
        lengths = nx.single_source_shortest_path_length(graph, source)
        row[list(lengths.keys())] = list(lengths.values())
        return row

    workers = min(Config.get_thread_count(), n)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        rows = list(executor.map(bfs_row, range(n)))
    return np.vstack(rows)


def build_lattice(descriptor: Mapping[str, Any]) -> Lattice:
    """由描述字典构造晶格"""
    graph = _graph_from_descriptor(descriptor)
    n = graph.number_of_nodes()

    adjacency = np.zeros((n, n), dtype=bool)
    if graph.number_of_edges():
        u, v = np.asarray(list(graph.edges()), dtype=np.int64).T
        adjacency[u, v] = True
        adjacency[v, u] = True

    dist = _all_pairs_distance(graph, n)
    log.debug(f"构造晶格 {descriptor.get('kind')}: |L|={n}, |E|={graph.number_of_edges()}")
    return Lattice(
        vertex_count=n,
        adjacency=_readonly(adjacency),
        dist=_readonly(dist),
        descriptor=dict(descriptor)
    )


def ring(n: int) -> Lattice:
    return build_lattice({"kind": "ring", "n": n})


def path(n: int) -> Lattice:
    return build_lattice({"kind": "path", "n": n})


def cubic(dims: Sequence[int], periodic: bool = False) -> Lattice:
    return build_lattice({"kind": "cubic", "dims": list(dims), "periodic": periodic})


# ==================== 球与维数 ====================

def sphere_size(lat: Lattice, i: int, r: int) -> int:
    """|S_r(i)|"""
    i = lat.check_vertex(i)
    return int(np.count_nonzero(lat.dist[i] == r))


def sphere_profile(lat: Lattice) -> np.ndarray:
    """|L|×(diameter+1) 的球面大小表"""
    width = lat.diameter + 1
    profile = np.zeros((lat.vertex_count, width), dtype=np.int64)
    for i in range(lat.vertex_count):
        row = lat.dist[i]
        profile[i] = np.bincount(row[row != UNREACHABLE], minlength=width)
    return profile


def ball_volume(lat: Lattice, r: int) -> int:
    """v_{d,r} = max_i |B_r(i)|"""
    if r < 0:
        raise LatticeException(
            f"半径必须非负: {r}",
            ErrorCode.LATTICE_INVALID_PARAMETER,
            details={'r': r}
        )
    return int((lat.dist <= r).sum(axis=1).max())


def fit_dimension(lat: Lattice) -> DimensionEstimate:
    """二分搜索满足 |S_r(i)| ≤ c·r^{d−1} 的最小 d"""
    if not lat.connected:
        raise LatticeException(
            "晶格不连通，无法拟合维数",
            ErrorCode.LATTICE_DISCONNECTED
        )
    if lat.vertex_count == 1:
        return DimensionEstimate(d=1.0, c=1.0)

    profile = sphere_profile(lat)[:, 1:]
    radii = np.arange(1, profile.shape[1] + 1, dtype=float)
    largest = profile.max(axis=0).astype(float)
    # d → ∞ 时 c(d) 收敛到最大度数
    c = float(largest[0])

    def dominated(d: float) -> bool:
        return bool(np.all(largest <= c * radii ** (d - 1.0)))

    lo, hi = 1.0, 2.0
    if not dominated(lo):
        while not dominated(hi):
            lo, hi = hi, 2.0 * hi
        while hi - lo > Config.DIMENSION_PRECISION:
            mid = 0.5 * (lo + hi)
            if dominated(mid):
                hi = mid
            else:
                lo = mid
        d = hi
    else:
        d = lo

    if not np.all(profile <= c * radii ** (d - 1.0)):
        raise LatticeException(
            "维数证书复核失败",
            ErrorCode.LATTICE_INVALID_PARAMETER,
            details={'d': d, 'c': c}
        )
    log.debug(f"维数拟合: d={d:.4f}, c={c:g}")
    return DimensionEstimate(d=float(d), c=c)


def ball_volume_bound(dims: DimensionEstimate, r: int) -> float:
    """1 + c·Σ_{j=1}^{r} j^{d−1}，对 ball_volume 的上界"""
    if r < 0:
        raise LatticeException(
            f"半径必须非负: {r}",
            ErrorCode.LATTICE_INVALID_PARAMETER,
            details={'r': r}
        )
    j = np.arange(1, r + 1, dtype=float)
    return float(1.0 + dims.c * np.sum(j ** (dims.d - 1.0)))


# ==================== 区域 ====================

def make_region(lat: Lattice, members: Iterable[int]) -> Region:
    """校验并规范化顶点子集"""
    values = [int(v) for v in members]
    for v in values:
        lat.check_vertex(v)
    return Region(members=tuple(sorted(set(values))))


def complement(lat: Lattice, region: Region) -> Region:
    mask = np.ones(lat.vertex_count, dtype=bool)
    mask[region.indices] = False
    return Region(members=tuple(np.flatnonzero(mask).tolist()))


def cubic_index(dims: Sequence[int], coord: Sequence[int]) -> int:
    """行主序顶点编号"""
    return int(np.ravel_multi_index(tuple(coord), tuple(dims)))


def cubic_block(lat: Lattice, corner: Sequence[int], size: Sequence[int]) -> Region:
    """cubic 晶格上的超矩形区域"""
    if lat.descriptor.get("kind") != "cubic":
        raise _invalid("cubic_block 只适用于 cubic 晶格")
    dims = lat.descriptor["dims"]
    if len(corner) != len(dims) or len(size) != len(dims):
        raise LatticeException(
            "区块维数与晶格不一致",
            ErrorCode.LATTICE_INVALID_REGION,
            details={'dims': list(dims), 'corner': list(corner), 'size': list(size)}
        )
    axes = []
    for start, width, extent in zip(corner, size, dims):
        if width < 1 or start < 0 or start + width > extent:
            raise LatticeException(
                "区块超出晶格范围",
                ErrorCode.LATTICE_INVALID_REGION,
                details={'corner': list(corner), 'size': list(size), 'dims': list(dims)}
            )
        axes.append(np.arange(start, start + width))
    grid = np.meshgrid(*axes, indexing="ij")
    flat = np.ravel_multi_index(tuple(g.ravel() for g in grid), tuple(dims))
    return make_region(lat, flat.tolist())


def _split(lat: Lattice, region: Region) -> Tuple[np.ndarray, np.ndarray]:
    """返回 (区域内, 区域外) 的顶点编号"""
    if len(region) == 0 or len(region) == lat.vertex_count:
        raise LatticeException(
            "区域不能为空或等于整个晶格",
            ErrorCode.LATTICE_INVALID_REGION,
            details={'size': len(region), 'vertex_count': lat.vertex_count}
        )
    inside = region.indices
    if inside.max() >= lat.vertex_count:
        lat.check_vertex(int(inside.max()))
    return inside, complement(lat, region).indices


def surface_area(lat: Lattice, region: Region) -> int:
    """s(I)：跨越区域边界的有序边对数"""
    inside, outside = _split(lat, region)
    return int(lat.adjacency[np.ix_(outside, inside)].sum())


def outer_boundary(lat: Lattice, region: Region) -> Region:
    """∂I：与 I 相邻的外部顶点"""
    inside, outside = _split(lat, region)
    touching = lat.adjacency[np.ix_(outside, inside)].any(axis=1)
    return Region(members=tuple(outside[touching].tolist()))


def boundary_pair_count(lat: Lattice, region: Region, r: int) -> int:
    """N_r：距离恰为 r 的 (外部, 内部) 顶点对数"""
    if r < 1:
        raise LatticeException(
            f"N_r 需要 r ≥ 1: {r}",
            ErrorCode.LATTICE_INVALID_PARAMETER,
            details={'r': r}
        )
    inside, outside = _split(lat, region)
    return int(np.count_nonzero(lat.dist[np.ix_(outside, inside)] == r))


# ==================== Assumption 1 ====================

def exponential_kernel(lat: Lattice, rate: float) -> np.ndarray:
    """e^{−rate·dist}，不连通对取 0"""
    dist = np.where(lat.reachable, lat.dist, 0).astype(float)
    return np.where(lat.reachable, np.exp(-rate * dist), 0.0)


def verify_assumption1(lat: Lattice, mu: float, nu: float) -> Assumption1Certificate:
    """计算最小的 l0 并复核"""
    if not (mu > 0 and nu > 0):
        raise LatticeException(
            f"μ 与 ν 必须为正: mu={mu}, nu={nu}",
            ErrorCode.LATTICE_INVALID_PARAMETER,
            details={'mu': mu, 'nu': nu}
        )
    kernel = exponential_kernel(lat, mu)
    convolution = kernel @ kernel
    reachable = lat.reachable
    dist = np.where(reachable, lat.dist, 0).astype(float)

    # 对数域比较，避免 e^{ν·dist} 溢出
    with np.errstate(divide="ignore"):
        log_ratio = np.where(reachable, np.log(convolution) + nu * dist, -np.inf)
    flat = int(np.argmax(log_ratio))
    worst = tuple(int(x) for x in np.unravel_index(flat, log_ratio.shape))
    l0 = float(np.exp(log_ratio.flat[flat]))

    envelope = l0 * np.exp(-nu * dist)
    excess = np.where(reachable, convolution - envelope, 0.0)
    holds = bool(np.all(excess <= Config.ASSUMPTION1_REL_TOL * envelope))
    log.debug(f"Assumption 1: mu={mu}, nu={nu}, l0={l0:.6g}, worst={worst}")
    return Assumption1Certificate(mu=float(mu), nu=float(nu), l0=l0, holds=holds, worst_pair=worst)


def cubic_assumption1_constant(mu: float, d: int) -> float:
    """开边界 cubic 晶格在 ν = μ/2 下的 l0 上界"""
    if mu <= 0:
        raise LatticeException(
            f"μ 必须为正: {mu}",
            ErrorCode.LATTICE_INVALID_PARAMETER,
            details={'mu': mu}
        )
    return float((2.0 / (mu * np.e) + 1.0 / np.tanh(mu)) ** d)
