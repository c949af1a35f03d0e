"""
求积公式
区间 [A,B] 上的 Gauss-Chebyshev（第一类、第二类）与复合 Gauss-Legendre 节点
"""
from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.polynomial import chebyshev, legendre


@lru_cache(maxsize=64)
def _chebyshev_t(n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = chebyshev.chebgauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=64)
def _chebyshev_u(n: int) -> Tuple[np.ndarray, np.ndarray]:
    j = np.arange(1, n + 1)
    theta = j * np.pi / (n + 1)
    x = np.cos(theta)
    w = np.pi / (n + 1) * np.sin(theta) ** 2
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=64)
def _legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def chebyshev_first_kind(a: float, b: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    第一类 Gauss-Chebyshev 节点

    ∫_a^b g(t) / τ(t) dt ≈ Σ w_j g(t_j)，τ(t) = √((t-a)(b-t))，
    对次数不超过 2n-1 的多项式 g 精确

    Args:
        a: 左端点
        b: 右端点
        n: 节点数

    Returns:
        (节点, 权重)
    """
    x, w = _chebyshev_t(n)
    c, d = 0.5 * (a + b), 0.5 * (b - a)
    return c + d * x, w.copy()


def chebyshev_second_kind(a: float, b: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    第二类 Gauss-Chebyshev 节点

    ∫_a^b g(t) τ(t) dt ≈ Σ w_j g(t_j)，对次数不超过 2n-1 的多项式 g 精确

    Args:
        a: 左端点
        b: 右端点
        n: 节点数

    Returns:
        (节点, 权重)
    """
    x, w = _chebyshev_u(n)
    c, d = 0.5 * (a + b), 0.5 * (b - a)
    return c + d * x, d * d * w


def gauss_legendre(a: float, b: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """[a,b] 上的 n 点 Gauss-Legendre 节点与权重"""
    x, w = _legendre(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def composite_gauss_legendre(
    a: float, b: float, points: int, order: int = 8
) -> Tuple[np.ndarray, np.ndarray]:
    """
    复合 Gauss-Legendre：把 [a,b] 等分成 points // order 段，每段 order 个节点

    Args:
        a: 左端点
        b: 右端点
        points: 总节点数（向下取整到 order 的倍数，至少一段）
        order: 每段节点数

    Returns:
        (节点, 权重)
    """
    panels = max(1, points // order)
    edges = np.linspace(a, b, panels + 1)
    x, w = _legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
