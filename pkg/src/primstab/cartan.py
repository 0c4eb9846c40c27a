"""Cartan and Jordan projections, the chamber-valued distance on the
symmetric space of ``PGL(n, R)``, wall margins and maximal flats.

Chamber vectors are nonincreasing, sum to zero, and use natural-log units.
A point of the symmetric space is a symmetric positive-definite matrix of
determinant one; the basepoint is the identity.  Distances are normalized
so that ``d(Id, g g^T) = |mu(g)|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar

from .grassmann import compound

__all__ = [
    "WeylVector", "SpacePoint", "FlatDescriptor", "NotLoxodromic", "FlatSolveError",
    "TranslationLength", "chamber_vector", "ladder_to_chamber", "cartan_projection",
    "jordan_projection", "opposition", "delta_distance", "riemannian_distance",
    "wall_margin", "kassel_defect", "flat_of", "distance_to_flat",
    "nearest_flat_point", "is_semisimple", "translation_length",
]

# relative gap below which two eigenvalue moduli count as equal
MODULUS_GAP = 1e-9


@dataclass(frozen=True)
class WeylVector:
    """A point of the closed positive chamber."""
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1:
            raise ValueError("chamber vector must be one-dimensional")
        if np.any(np.diff(c) > 1e-12 * max(1.0, np.max(np.abs(c)))):
            raise ValueError(f"coordinates {c} are not nonincreasing")
        if abs(c.sum()) > 1e-10 * max(1.0, np.max(np.abs(c)) * len(c)):
            raise ValueError(f"coordinates {c} do not sum to zero")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return len(self.coords)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def gaps(self) -> np.ndarray:
        return -np.diff(self.coords)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.coords, dtype=dtype)

    def __sub__(self, other: "WeylVector") -> np.ndarray:
        return self.coords - other.coords

    def tolist(self) -> list[float]:
        return self.coords.tolist()


def chamber_vector(values) -> WeylVector:
    """Sort descending and shift to sum zero."""
    v = np.sort(np.asarray(values, dtype=float))[::-1]
    return WeylVector(v - v.mean())


def ladder_to_chamber(tops: Sequence[float]) -> WeylVector:
    """Chamber vector from ``s_r = log sigma_1(C_r(g))``, ``r = 1..n``.

    Since ``sigma_1(C_r(g)) = sigma_1 ... sigma_r``, consecutive differences
    give the individual log singular values (the same holds for spectral
    radii and eigenvalue moduli).  Each ``s_r`` is a dominant, hence well
    conditioned, quantity, which keeps the small singular values accurate.
    """
    s = np.concatenate([[0.0], np.asarray(tops, dtype=float)])
    return chamber_vector(np.diff(s))


def _square(g) -> np.ndarray:
    g = np.asarray(g)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {g.shape}")
    return g


def _log_top_singular(m: np.ndarray) -> float:
    """``log sigma_1`` of a matrix, exact integers allowed (no overflow)."""
    if m.dtype != object:
        return float(np.log(np.linalg.norm(m.astype(float), 2)))
    peak = max(abs(int(x)) for x in m.flat)
    if peak == 0:
        raise np.linalg.LinAlgError("singular matrix")
    shift = max(peak.bit_length() - 1000, 0)
    scaled = np.array([[float(int(x) >> shift) for x in row] for row in m])
    return float(np.log(np.linalg.norm(scaled, 2)) + shift * np.log(2.0))


def cartan_projection(g) -> WeylVector:
    """Sorted log singular values of ``g``, shifted to sum zero.

    Float input is rescaled by its largest entry before the SVD.  Integer
    input goes through exact compound matrices instead, so that even the
    smallest singular values keep full relative accuracy.

    >>> cartan_projection(np.diag(np.exp([2.0, 0.0, -2.0]))).tolist()
    [2.0, 0.0, -2.0]
    """
    g = _square(g)
    if g.dtype.kind in "iub" or g.dtype == object:
        g = g.astype(object)
        n = g.shape[0]
        if compound(g, n)[0, 0] == 0:
            raise np.linalg.LinAlgError("singular matrix")
        return ladder_to_chamber([_log_top_singular(compound(g, r)) for r in range(1, n + 1)])
    g = g.astype(float)
    peak = np.max(np.abs(g))
    if not np.isfinite(peak) or peak == 0:
        raise np.linalg.LinAlgError("singular or non-finite matrix")
    s = np.linalg.svd(g / peak, compute_uv=False)
    if s[-1] == 0 or np.linalg.slogdet(g / peak)[0] == 0:
        raise np.linalg.LinAlgError("singular matrix")
    return chamber_vector(np.log(s))


def jordan_projection(g) -> WeylVector:
    """Sorted log eigenvalue moduli of ``g``, shifted to sum zero."""
    g = _square(g).astype(float)
    peak = np.max(np.abs(g))
    if not np.isfinite(peak) or peak == 0:
        raise np.linalg.LinAlgError("singular or non-finite matrix")
    mod = np.abs(np.linalg.eigvals(g / peak))
    if np.min(mod) == 0:
        raise np.linalg.LinAlgError("singular matrix")
    return chamber_vector(np.log(mod))


def opposition(v: WeylVector) -> WeylVector:
    """The opposition involution ``v -> -reverse(v)``; ``mu(g^-1) = opposition(mu(g))``."""
    return WeylVector(-v.coords[::-1])


@dataclass(frozen=True)
class SpacePoint:
    """Point of the symmetric space: SPD matrix with determinant one."""
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("space point must be a square matrix")
        if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(m)))):
            raise ValueError("space point matrix is not symmetric")
        m = (m + m.T) / 2
        if np.min(np.linalg.eigvalsh(m)) <= 0:
            raise ValueError("space point matrix is not positive definite")
        if abs(np.linalg.det(m) - 1) > 1e-10 * max(1.0, np.linalg.cond(m)):
            raise ValueError("space point matrix must have determinant 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, n: int) -> "SpacePoint":
        return cls(np.eye(n))

    @classmethod
    def normalized(cls, m) -> "SpacePoint":
        """Rescale an SPD matrix to determinant one."""
        m = np.asarray(m, dtype=float)
        m = (m + m.T) / 2
        sign, logdet = np.linalg.slogdet(m)
        if sign <= 0:
            raise ValueError("matrix is not positive definite")
        return cls(m * np.exp(-logdet / m.shape[0]))

    @classmethod
    def orbit_point(cls, g, base: "SpacePoint | None" = None) -> "SpacePoint":
        """The translate ``g . x = g X g^T`` of ``base`` (default identity)."""
        g = np.asarray(g, dtype=float)
        X = np.eye(g.shape[0]) if base is None else base.matrix
        return cls.normalized(g @ X @ g.T)


def _as_point(P) -> SpacePoint:
    return P if isinstance(P, SpacePoint) else SpacePoint(P)


def delta_distance(P, Q) -> WeylVector:
    """Chamber-valued distance: half the sorted log eigenvalues of ``P^-1 Q``."""
    P, Q = _as_point(P), _as_point(Q)
    mu = scipy.linalg.eigh(Q.matrix, P.matrix, eigvals_only=True)
    if np.min(mu) <= 0:
        raise ValueError("non-positive-definite input")
    return chamber_vector(0.5 * np.log(mu))


def riemannian_distance(P, Q) -> float:
    return delta_distance(P, Q).norm()


def wall_margin(v: WeylVector) -> float:
    """Smallest consecutive gap, i.e. the distance scale to the nearest wall."""
    return float(np.min(v.gaps())) if v.n > 1 else 0.0


def kassel_defect(g1, g2, g3) -> tuple[float, float]:
    """Both sides of ``|mu(g1 g2 g3) - mu(g2)| <= |mu(g1)| + |mu(g3)|``."""
    g1, g2, g3 = (np.asarray(g, dtype=float) for g in (g1, g2, g3))
    lhs = np.linalg.norm(cartan_projection(g1 @ g2 @ g3) - cartan_projection(g2))
    rhs = cartan_projection(g1).norm() + cartan_projection(g3).norm()
    return float(lhs), float(rhs)


class NotLoxodromic(ValueError):
    """Spectrum is not real with pairwise distinct moduli."""

    def __init__(self, message: str, pair: tuple[complex, complex] | None = None):
        super().__init__(message)
        self.pair = pair


class FlatSolveError(RuntimeError):
    """The flat-distance minimization did not converge."""


@dataclass(frozen=True)
class FlatDescriptor:
    """Maximal flat ``{B D B^T : D > 0 diagonal, det = 1}``; ``frame`` is ``B``."""
    frame: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.frame, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValueError("frame must be square")
        if not np.isfinite(np.linalg.cond(B)):
            raise ValueError("frame is singular")
        B = B / np.linalg.norm(B, axis=0)
        B.setflags(write=False)
        object.__setattr__(self, "frame", B)

    @property
    def n(self) -> int:
        return self.frame.shape[0]

    def point(self, t) -> SpacePoint:
        """Flat point ``B diag(exp t) B^T``, rescaled to determinant one."""
        B = self.frame
        return SpacePoint.normalized((B * np.exp(np.asarray(t, dtype=float))) @ B.T)

    @classmethod
    def diagonal(cls, n: int) -> "FlatDescriptor":
        return cls(np.eye(n))


def check_spectrum(eigvals: np.ndarray, gap: float = MODULUS_GAP) -> np.ndarray:
    """Order indices by decreasing modulus; raise NotLoxodromic unless all
    eigenvalues are real with pairwise distinct moduli."""
    eigvals = np.asarray(eigvals)
    mod = np.abs(eigvals)
    scale = np.max(mod)
    for lam in eigvals:
        if abs(np.imag(lam)) > gap * max(abs(lam), 1e-300):
            raise NotLoxodromic(f"non-real eigenvalue {complex(lam)}",
                                (complex(lam), complex(np.conj(lam))))
    order = np.argsort(-mod, kind="stable")
    for i, j in zip(order[:-1], order[1:]):
        if mod[i] - mod[j] <= gap * max(mod[i], 1e-300 * scale):
            raise NotLoxodromic(
                f"eigenvalue moduli {mod[i]:.17g} and {mod[j]:.17g} coincide",
                (complex(eigvals[i]), complex(eigvals[j])))
    return order


def flat_of(g) -> FlatDescriptor:
    """Invariant flat of a loxodromic element, columns ordered by decreasing
    eigenvalue modulus."""
    g = _square(g).astype(float)
    w, V = np.linalg.eig(g / np.max(np.abs(g)))
    order = check_spectrum(w)
    return FlatDescriptor(np.real(V[:, order]))


class _FlatObjective:
    """``f(s) = sum (log mu_j)^2`` with ``mu`` the spectrum of ``Q^-1 P(t)``
    and ``t = c + U s`` constrained to ``det P(t) = 1``."""

    def __init__(self, Q: SpacePoint, F: FlatDescriptor):
        n = F.n
        self.Q = Q.matrix
        self.B = F.frame
        _, logdet = np.linalg.slogdet(self.B)
        self.c = np.full(n, -2.0 * logdet / n)
        # orthonormal basis of the sum-zero hyperplane
        self.U = scipy.linalg.null_space(np.ones((1, n)))

    def t(self, s: np.ndarray) -> np.ndarray:
        return self.c + self.U @ s

    def value_grad(self, s: np.ndarray) -> tuple[float, np.ndarray]:
        t = self.t(s)
        et = np.exp(t)
        P = (self.B * et) @ self.B.T
        mu, V = scipy.linalg.eigh(P, self.Q)
        if np.min(mu) <= 0:
            return np.inf, np.full(len(s), np.nan)
        lm = np.log(mu)
        proj = (V.T @ self.B) ** 2          # proj[j, i] = (v_j . b_i)^2, with v_j^T Q v_j = 1
        grad_t = et * ((2 * lm / mu) @ proj)
        return float(lm @ lm), self.U.T @ grad_t

    def initial(self) -> np.ndarray:
        Binv = np.linalg.inv(self.B)
        t0 = np.log(np.diag(Binv @ self.Q @ Binv.T))
        return self.U.T @ (t0 - self.c)


def _slack(f: float, tol: float) -> float:
    """Allowed excess of ``f`` over its minimum for a distance error ``tol``;
    note ``d = sqrt(f) / 2``."""
    return 0.01 * max(4.0 * np.sqrt(f) * tol, 4.0 * tol * tol)


def _hessian(obj: _FlatObjective, s: np.ndarray) -> np.ndarray:
    h = 1e-5 * max(1.0, np.linalg.norm(s))
    H = np.empty((len(s), len(s)))
    for i in range(len(s)):
        e = np.zeros(len(s))
        e[i] = h
        H[:, i] = (obj.value_grad(s + e)[1] - obj.value_grad(s - e)[1]) / (2 * h)
    return (H + H.T) / 2


def _newton(obj: _FlatObjective, s: np.ndarray, tol: float, max_iter: int) -> tuple[np.ndarray, bool]:
    f, g = obj.value_grad(s)
    for _ in range(max_iter):
        try:
            step = -np.linalg.solve(_hessian(obj, s), g)
            newton = step @ g < 0
        except np.linalg.LinAlgError:
            newton = False
        if not newton:
            step = -g
        elif -(step @ g) / 2 <= _slack(f, tol):
            # predicted remaining decrease is below the requested accuracy
            return s, True
        a = 1.0
        while True:
            f_new, g_new = obj.value_grad(s + a * step)
            if f_new <= f + 1e-4 * a * (step @ g):
                break
            a /= 2
            if a < 1e-12:
                return s, False
        s, f, g = s + a * step, f_new, g_new
    return s, False


def _coordinate_descent(obj: _FlatObjective, s: np.ndarray, tol: float, sweeps: int) -> tuple[np.ndarray, bool]:
    s = s.copy()
    f = obj.value_grad(s)[0]
    for _ in range(sweeps):
        for i in range(len(s)):
            def line(x, i=i):
                trial = s.copy()
                trial[i] = x
                return obj.value_grad(trial)[0]
            s[i] = minimize_scalar(line, bracket=(s[i] - 1.0, s[i] + 1.0),
                                   options={"xtol": 1e-12}).x
        f_new = obj.value_grad(s)[0]
        if f - f_new <= _slack(f_new, tol):
            return s, True
        f = f_new
    return s, False


def nearest_flat_point(Q, F: FlatDescriptor, tol: float = 1e-8,
                       max_iter: int = 100) -> tuple[float, SpacePoint]:
    """Distance from ``Q`` to the flat ``F`` and the nearest flat point.

    The squared distance is convex along the flat, so a damped Newton
    iteration in log-diagonal coordinates converges from the log-diagonal of
    ``B^-1 Q B^-T``; coordinate descent is the fallback.
    """
    Q = _as_point(Q)
    if Q.n != F.n:
        raise ValueError("dimension mismatch between point and flat")
    obj = _FlatObjective(Q, F)
    s, ok = _newton(obj, obj.initial(), tol, max_iter)
    if not ok:
        s, ok = _coordinate_descent(obj, s, tol, max_iter)
    f, grad = obj.value_grad(s)
    if not ok or not np.isfinite(f):
        raise FlatSolveError(f"flat distance did not converge (gradient {np.linalg.norm(grad):.3g}); "
                             "the frame is probably ill-conditioned")
    return 0.5 * float(np.sqrt(f)), F.point(obj.t(s))


def distance_to_flat(Q, F: FlatDescriptor, tol: float = 1e-8, max_iter: int = 100) -> float:
    return nearest_flat_point(Q, F, tol, max_iter)[0]


def is_semisimple(g, tol: float = 1e-6) -> bool:
    """Diagonalizable over C: every eigenvalue cluster has full geometric
    multiplicity."""
    g = _square(g).astype(float)
    g = g / np.max(np.abs(g))
    w = np.linalg.eigvals(g)
    n = len(w)
    seen = np.zeros(n, dtype=bool)
    for i in range(n):
        if seen[i]:
            continue
        cluster = np.abs(w - w[i]) <= tol * max(abs(w[i]), 1.0)
        seen |= cluster
        m = int(cluster.sum())
        if m == 1:
            continue
        lam = w[cluster].mean()
        s = np.linalg.svd(g - lam * np.eye(n), compute_uv=False)
        if int(np.sum(s <= tol * max(1.0, abs(lam)))) < m:
            return False
    return True


class TranslationLength(NamedTuple):
    length: float
    semisimple: bool


def translation_length(g) -> TranslationLength:
    """Norm of the Jordan projection, with a semisimplicity flag (for a
    non-semisimple element this is the infimal, not attained, displacement)."""
    return TranslationLength(jordan_projection(g).norm(), is_semisimple(g))
