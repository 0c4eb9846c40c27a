"""Overflow-safe matrix products: a product is carried as ``(M, s)`` with
``max|M| = 1`` and the true value ``exp(s) * M``."""

from __future__ import annotations

from typing import Iterable

import numpy as np


def renormalize(m: np.ndarray, log_scale: float = 0.0) -> tuple[np.ndarray, float]:
    peak = np.max(np.abs(m))
    if not np.isfinite(peak) or peak == 0.0:
        raise FloatingPointError("matrix product degenerated (zero or non-finite entries)")
    return m / peak, log_scale + float(np.log(peak))


def scaled_product(factors: Iterable[np.ndarray], size: int | None = None) -> tuple[np.ndarray, float]:
    """Left-to-right product of ``factors``, renormalized after every step."""
    acc = None
    log_scale = 0.0
    for f in factors:
        acc = np.array(f, dtype=float) if acc is None else acc @ f
        acc, log_scale = renormalize(acc, log_scale)
    if acc is None:
        if size is None:
            raise ValueError("empty product needs an explicit size")
        return np.eye(size), 0.0
    return acc, log_scale


def scaled_power(g: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    """``g**k`` for ``k >= 0`` by repeated squaring with renormalization."""
    g = np.asarray(g, dtype=float)
    if k < 0:
        return scaled_power(np.linalg.inv(g), -k)
    result, res_scale = np.eye(g.shape[0]), 0.0
    base, base_scale = renormalize(g)
    while k:
        if k & 1:
            result, res_scale = renormalize(result @ base, res_scale + base_scale)
        k >>= 1
        if k:
            base, base_scale = renormalize(base @ base, 2 * base_scale)
    return result, res_scale
