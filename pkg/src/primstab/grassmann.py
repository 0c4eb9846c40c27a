"""Compound matrices, Pluecker coordinates and the dynamics of matrix
sequences on Grassmannians.

Index sets are ``r``-subsets of ``range(n)`` in lexicographic order, the
order produced by :func:`itertools.combinations`.  ``compound(A, r)`` is the
matrix of all ``r x r`` minors of ``A``; by Cauchy-Binet it represents the
action of ``A`` on the ``r``-th exterior power.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from ._scaled import renormalize, scaled_power

__all__ = [
    "DegenerateSpan", "PluckerPoint", "SequenceRankReport",
    "subsets", "compound", "cauchy_binet_check", "plucker_embed",
    "plucker_relation_residual", "plucker_to_subspace", "grassmann_act",
    "projective_angle", "sequence_rank_classify", "frame_spreads",
    "frame_convergence_regularity", "is_totally_positive",
]

MatrixSequence = Union[np.ndarray, Callable[[int], np.ndarray]]

# decay exponent separating "tends to 0" from "bounded below": powers of a
# fixed matrix have singular value ratios decaying at least like 1/k or not
# at all
_DECAY_EXPONENT = 0.5


class DegenerateSpan(ValueError):
    """Vectors expected to be independent (or in general position) are not."""


@functools.lru_cache(maxsize=None)
def subsets(n: int, r: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations(range(n), r))


@functools.lru_cache(maxsize=None)
def _row_tables(n: int, s: int) -> tuple[np.ndarray, np.ndarray]:
    index = {I: i for i, I in enumerate(subsets(n, s - 1))}
    rows = subsets(n, s)
    first = np.array([I[0] for I in rows])
    rest = np.array([index[I[1:]] for I in rows])
    return first, rest


@functools.lru_cache(maxsize=None)
def _col_tables(m: int, s: int) -> tuple[np.ndarray, np.ndarray]:
    index = {J: j for j, J in enumerate(subsets(m, s - 1))}
    cols = subsets(m, s)
    elem = np.array([J for J in cols]).reshape(len(cols), s)
    drop = np.array([[index[J[:k] + J[k + 1:]] for k in range(s)] for J in cols])
    return elem, drop.reshape(len(cols), s)


def compound(A, r: int) -> np.ndarray:
    """The ``r``-th compound matrix of an ``n x m`` matrix.

    Minors are built up by Laplace expansion along the first row, reusing
    the minors of size ``r - 1``.  Integer (or object) input is handled in
    exact integer arithmetic; anything else in float64.

    >>> compound(np.array([[1, 2], [3, 4]]), 2)
    array([[-2]], dtype=object)
    """
    A = np.asarray(A)
    exact = A.dtype.kind in "iub" or A.dtype == object
    A = A.astype(object) if exact else A.astype(float)
    if A.ndim != 2:
        raise ValueError("compound needs a 2-d matrix")
    n, m = A.shape
    if not 1 <= r <= min(n, m):
        raise ValueError(f"degree r={r} out of range for a {n}x{m} matrix")
    prev = np.ones((1, 1), dtype=A.dtype)
    for s in range(1, r + 1):
        first, rest = _row_tables(n, s)
        elem, drop = _col_tables(m, s)
        acc = None
        for k in range(s):
            term = A[first[:, None], elem[None, :, k]] * prev[rest[:, None], drop[None, :, k]]
            if acc is None:
                acc = term
            elif k % 2:
                acc = acc - term
            else:
                acc = acc + term
        prev = acc
    return prev


def cauchy_binet_check(A, B, r: int) -> float:
    """Max entrywise ``|C_r(AB) - C_r(A) C_r(B)|`` relative to the magnitude
    of the product ``|C_r(A)| |C_r(B)|``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    CA, CB = compound(A, r), compound(B, r)
    diff = np.abs(compound(A @ B, r) - CA @ CB)
    scale = np.max(np.abs(CA) @ np.abs(CB))
    return float(np.max(diff) / scale) if scale > 0 else float(np.max(diff))


def _normalize_projective(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0 or not np.isfinite(norm):
        raise DegenerateSpan("zero vector has no projective class")
    v = v / norm
    lead = np.flatnonzero(np.abs(v) > 1e-12)[0]
    return -v if v[lead] < 0 else v


@dataclass(frozen=True)
class PluckerPoint:
    n: int
    r: int
    coords: np.ndarray = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, PluckerPoint):
            return NotImplemented
        return (self.n, self.r) == (other.n, other.r) and projective_angle(self.coords, other.coords) < 1e-9

    __hash__ = None


def plucker_embed(vectors: Sequence[Sequence[float]]) -> PluckerPoint:
    """Pluecker point of the span of ``r`` vectors (rows of ``vectors``)."""
    M = np.atleast_2d(np.asarray(vectors, dtype=float)).T
    n, r = M.shape
    if r > n or np.linalg.matrix_rank(M) < r:
        raise DegenerateSpan(f"{r} vectors in R^{n} do not span an {r}-plane")
    return PluckerPoint(n, r, _normalize_projective(compound(M, r)[:, 0]))


def plucker_relation_residual(p: PluckerPoint) -> float:
    """The single quadratic relation ``p01 p23 - p02 p13 + p03 p12`` on
    ``G(4, 2)``."""
    if (p.n, p.r) != (4, 2):
        raise ValueError("only the (4, 2) relation is implemented")
    p01, p02, p03, p12, p13, p23 = p.coords
    return float(p01 * p23 - p02 * p13 + p03 * p12)


def plucker_to_subspace(coords: np.ndarray, n: int, r: int) -> np.ndarray:
    """Orthonormal ``n x r`` basis of the plane with Pluecker vector ``coords``.

    Contracting a decomposable ``r``-vector with every ``(r-1)``-subset of
    dual basis vectors yields vectors spanning the plane.
    """
    coords = np.asarray(coords, dtype=float)
    if r == n:
        return np.eye(n)
    if r == 1:
        return (coords / np.linalg.norm(coords)).reshape(n, 1)
    index = {I: i for i, I in enumerate(subsets(n, r))}
    rows = []
    for J in subsets(n, r - 1):
        v = np.zeros(n)
        for i in range(n):
            if i in J:
                continue
            I = tuple(sorted(J + (i,)))
            pos = I.index(i)
            v[i] = (-1) ** (r - 1 - pos) * coords[index[I]]
        rows.append(v)
    _, _, vt = np.linalg.svd(np.array(rows))
    return vt[:r].T


def grassmann_act(A, p: PluckerPoint) -> PluckerPoint:
    A = np.asarray(A, dtype=float)
    if A.shape != (p.n, p.n):
        raise ValueError(f"matrix shape {A.shape} does not act on G({p.n}, {p.r})")
    return PluckerPoint(p.n, p.r, _normalize_projective(compound(A, p.r) @ p.coords))


def projective_angle(u, v) -> float:
    """Angle metric ``arccos(|<u,v>| / |u||v|)`` on projective space, evaluated
    in a cancellation-free form."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    if u @ v < 0:
        v = -v
    return float(2.0 * np.arctan2(np.linalg.norm(u - v), np.linalg.norm(u + v)))


def _term(g: MatrixSequence) -> Callable[[int], np.ndarray]:
    if callable(g):
        return lambda k: renormalize(np.asarray(g(k), dtype=float))[0]
    g = np.asarray(g, dtype=float)
    return lambda k: scaled_power(g, k)[0]


@dataclass
class SequenceRankReport:
    """Normalized singular profile ``sigma_i(g_k) / sigma_1(g_k)`` and the
    limit-rank verdict read off from it."""
    profile: np.ndarray
    limit_rank: int
    regular: bool
    cutoff: int
    eps: float
    decay_exponents: np.ndarray

    def as_dict(self) -> dict:
        return {
            "cutoff": self.cutoff,
            "eps": self.eps,
            "limit_rank": self.limit_rank,
            "regular": self.regular,
            "final_profile": self.profile[-1].tolist(),
            "decay_exponents": self.decay_exponents.tolist(),
        }


def _persists(ratios: np.ndarray, eps: float) -> tuple[bool, float]:
    """Whether a ratio sequence stays bounded below by ``eps``.

    A ratio counts as tending to zero if it is below ``eps`` at the cutoff
    or decays between ``K/2`` and ``K`` at least like ``k**-0.5``.
    """
    K = len(ratios)
    last = ratios[-1]
    if K < 2:
        return bool(last >= eps), 0.0
    half = ratios[K // 2 - 1]
    if last <= 0 or half <= 0:
        return False, np.inf
    exponent = float(np.log(half / last) / np.log(K / (K // 2)))
    return bool(last >= eps and exponent < _DECAY_EXPONENT), exponent


def sequence_rank_classify(g: MatrixSequence, K: int = 40, eps: float = 1e-6) -> SequenceRankReport:
    """Estimate the rank of the limit of ``g_k`` in ``P(End R^n)``.

    ``g`` is either a matrix, standing for the powers ``g**k``, or a callable
    ``k -> g_k``.  The limit rank counts the indices whose ratio
    ``sigma_i / sigma_1`` stays bounded below (see :func:`_persists`).  The
    sequence is reported regular when every consecutive ratio
    ``sigma_{i+1} / sigma_i`` tends to zero.
    """
    if K < 1 or not 0 < eps < 1:
        raise ValueError("need K >= 1 and 0 < eps < 1")
    term = _term(g)
    profile = []
    for k in range(1, K + 1):
        s = np.linalg.svd(term(k), compute_uv=False)
        profile.append(s / s[0])
    profile = np.array(profile)
    n = profile.shape[1]
    decays = np.zeros(n)
    rank = 1
    for i in range(1, n):
        keep, decays[i] = _persists(profile[:, i], eps)
        rank += keep
    consecutive = profile[:, 1:] / np.maximum(profile[:, :-1], np.finfo(float).tiny)
    regular = not any(_persists(consecutive[:, i], eps)[0] for i in range(n - 1))
    return SequenceRankReport(profile, rank, regular, K, eps, decays)


def _wedge_frame(points: np.ndarray, r: int) -> list[np.ndarray]:
    return [compound(points[list(idx)].T, r)[:, 0] for idx in subsets(len(points), r)]


def frame_spreads(g: MatrixSequence, frame_points, K: int = 40) -> dict[int, float]:
    """For each ``0 < r < n``, the largest pairwise projective angle among the
    images under ``g_K`` of the wedges of ``r``-subsets of ``frame_points``."""
    points = np.atleast_2d(np.asarray(frame_points, dtype=float))
    m, n = points.shape
    if m < n:
        raise DegenerateSpan(f"need at least {n} frame points in R^{n}")
    for idx in subsets(m, n):
        sub = points[list(idx)]
        if abs(np.linalg.det(sub)) <= 1e-12 * np.prod(np.linalg.norm(sub, axis=1)):
            raise DegenerateSpan(f"frame points {idx} are not in general position")
    gK = _term(g)(K)
    spreads = {}
    for r in range(1, n):
        C = renormalize(compound(gK, r))[0]
        images = [C @ v for v in _wedge_frame(points, r)]
        spreads[r] = max((projective_angle(a, b) for a, b in itertools.combinations(images, 2)),
                         default=0.0)
    return spreads


def frame_convergence_regularity(g: MatrixSequence, frame_points, K: int = 40,
                                 eps: float = 1e-6) -> bool:
    """Sampled frame-collapse criterion for regularity.

    True when, for every ``0 < r < n``, the induced frame of the ``r``-th
    exterior power is squeezed by ``g_K`` into an ``eps``-cluster.  This is a
    sufficient numerical indication, not a proof.
    """
    return all(s <= eps for s in frame_spreads(g, frame_points, K).values())


def is_totally_positive(A) -> bool:
    """All minors strictly positive (exact for integer input)."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("total positivity is tested on square matrices")
    return all(np.all(compound(A, r) > 0) for r in range(1, A.shape[0] + 1))
