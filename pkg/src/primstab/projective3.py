"""Isometries of the projective plane group ``PGL(3, R)`` and closed-form
asymptotics: the parabolic ``gamma_1 = Sym^2 [[1, 1], [0, 1]]``, the
quasi-hyperbolic normal form, boundary regularity exponents and limit cones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import freegroup
from .cartan import WeylVector, ladder_to_chamber
from .grassmann import compound
from .reps import Representation, word_jordan_projection

__all__ = [
    "IsometryClass", "classify_isometry", "parabolic_power", "parabolic_gram_poly",
    "parabolic_gram_eigenvalues", "parabolic_mu", "barycenter_angle",
    "parabolic_barycenter_angle", "quasihyperbolic_mu", "quasihyperbolic_theta",
    "singular_ray_angle", "boundary_alpha", "sector_check", "ConeDirection",
    "ConeEstimate", "limit_cone_estimate",
]

KINDS = ("Hyperbolic", "QuasiHyperbolic", "Parabolic", "Elliptic", "Other")

# relative tolerance for coincident eigenvalues and Jordan blocks
CLASSIFY_TOL = 1e-9


@dataclass(frozen=True)
class IsometryClass:
    kind: str
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown isometry kind {self.kind!r}")

    def as_dict(self) -> dict:
        return {"kind": self.kind, **self.parameters}


def _near(a: float, b: float, scale: float = 1.0) -> bool:
    return abs(a - b) <= CLASSIFY_TOL * max(1.0, abs(scale))


def _nullity(m: np.ndarray, scale: float) -> int:
    s = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(s <= CLASSIFY_TOL * max(1.0, scale)))


def classify_isometry(g) -> IsometryClass:
    """Classify a ``3 x 3`` matrix by its real Jordan form.

    The matrix is rescaled to determinant one.  The cases are read off the
    characteristic polynomial ``x^3 - t x^2 + s x - 1`` through its
    discriminant, which separates repeated roots far more reliably than
    comparing computed eigenvalues (a defective eigenvalue splits by about
    the square root of machine precision).

    >>> classify_isometry(np.diag([2.0, 1.0, 0.5])).as_dict()
    {'kind': 'Hyperbolic', 'lambda_plus': 2.0, 'lambda_zero': 1.0, 'lambda_minus': 0.5}
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (3, 3):
        raise ValueError("classify_isometry needs a 3x3 matrix")
    det = np.linalg.det(g)
    if det == 0 or not np.isfinite(det):
        raise ValueError("matrix is singular")
    g = g / np.cbrt(det)
    norm = np.linalg.norm(g, 2)
    t = float(np.trace(g))
    s = float(np.trace(compound(g, 2)))
    disc = 18 * t * s - 4 * t**3 + t * t * s * s - 4 * s**3 - 27
    disc_scale = t * t * s * s + 4 * abs(s) ** 3 + 4 * abs(t) ** 3 + 18 * abs(t * s) + 27
    eye = np.eye(3)

    if abs(disc) <= CLASSIFY_TOL * disc_scale:
        if _near(t, 3.0, t) and _near(s, 3.0, s):
            nullity = _nullity(g - eye, norm)
            if nullity == 3:
                return IsometryClass("Elliptic", {"theta": 0.0})
            if nullity == 1:
                return IsometryClass("Parabolic", {})
            return IsometryClass("Other", {"reason": "unipotent with two Jordan blocks"})
        double = (t * s - 9) / (2 * (t * t - 3 * s))
        simple = (t**3 - 4 * t * s + 9) / (t * t - 3 * s)
        block = _nullity(g - double * eye, norm) == 1
        if double > 0 and simple > 0 and block:
            return IsometryClass("QuasiHyperbolic", {"alpha": float(double), "beta": float(simple)})
        if _near(double, -1.0) and _near(simple, 1.0) and not block:
            return IsometryClass("Elliptic", {"theta": float(np.pi)})
        return IsometryClass("Other", {"reason": "repeated eigenvalue outside the normal forms"})

    if disc > 0:
        lam = np.sort(np.real(np.linalg.eigvals(g)))[::-1]
        if lam[-1] > 0:
            return IsometryClass("Hyperbolic", {"lambda_plus": float(lam[0]), "lambda_zero": float(lam[1]),
                                                "lambda_minus": float(lam[2])})
        return IsometryClass("Other", {"reason": "negative real eigenvalues"})

    # one real eigenvalue and a complex pair; elliptic iff the real one is 1
    if _near(s, t, max(abs(s), abs(t))):
        return IsometryClass("Elliptic", {"theta": float(np.arccos(np.clip((t - 1) / 2, -1, 1)))})
    return IsometryClass("Other", {"reason": "complex eigenvalues off the unit circle"})


def parabolic_power(n: int) -> np.ndarray:
    """``gamma_1^n`` in exact integer arithmetic."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    gamma1 = np.array([[1, 1, 1], [0, 1, 2], [0, 0, 1]], dtype=object)
    out = np.eye(3, dtype=int).astype(object)
    for _ in range(n):
        out = out.dot(gamma1)
    return out


def _quadratic_roots(c: float) -> tuple[float, float]:
    """Roots of ``x^2 - c x + 1`` for ``c >= 2``, larger first, both accurate."""
    big = (c + np.sqrt(c * c - 4.0)) / 2.0
    return big, 1.0 / big


def parabolic_gram_poly(n: int) -> tuple[int, tuple[float, float, float]]:
    """Middle coefficient ``n^4 + 5 n^2 + 2`` of the quadratic factor of the
    characteristic polynomial of ``gamma_1^n (gamma_1^n)^T`` and the
    eigenvalues ``(alpha, 1, 1/alpha)``.

    >>> parabolic_gram_poly(2)[0]
    38
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    c = n**4 + 5 * n**2 + 2
    big, small = _quadratic_roots(float(c))
    return c, (big, 1.0, small)


def parabolic_gram_eigenvalues(n: int) -> np.ndarray:
    """Squared singular values of ``gamma_1^n``, descending.

    The Gram matrix and its compounds are exact integers; only the top
    eigenvalue of each compound is computed in floating point, which keeps
    every eigenvalue at full relative accuracy.
    """
    G = parabolic_power(n)
    gram = G.dot(G.T)
    tops = [float(np.max(np.linalg.eigvalsh(compound(gram, r).astype(float)))) for r in (1, 2)]
    return np.array([tops[0], tops[1] / tops[0], 1.0 / tops[1]])


def parabolic_mu(n: int) -> WeylVector:
    ev = parabolic_gram_eigenvalues(n)
    return ladder_to_chamber(np.cumsum(0.5 * np.log(ev)))


def barycenter_angle(v: WeylVector) -> float:
    """Angle between ``v`` and the barycenter ray ``(1, 0, -1)`` of the chamber."""
    c = np.asarray(v.coords)
    if len(c) != 3:
        raise ValueError("barycenter angle is defined for n = 3")
    axis = np.array([1.0, 0.0, -1.0]) / np.sqrt(2)
    along = c @ axis
    return float(np.arctan2(np.linalg.norm(c - along * axis), along))


def parabolic_barycenter_angle(n: int) -> float:
    return barycenter_angle(parabolic_mu(n))


def _qh_log_f(alpha: float, n: int) -> float:
    """``ln f(n)`` with the factor ``alpha^(2n)`` pulled out of ``f``."""
    la = np.log(alpha)
    u = n * n / (alpha * alpha)
    return 2 * n * la + np.log(u + 2.0 + np.sqrt(u * u + 4.0 * u))


def quasihyperbolic_mu(alpha: float, n: int) -> WeylVector:
    """Cartan projection of the ``n``-th power of the quasi-hyperbolic normal
    form, in closed form.

    The ``2 x 2`` Jordan block ``alpha^n [[1, n/alpha], [0, 1]]`` has
    ``sigma_1^2 = f(n) / 2`` and ``sigma_1 sigma_2 = alpha^(2n)``; the third
    singular value is ``alpha^(-2n)``.
    """
    if alpha <= 0 or alpha == 1:
        raise ValueError("quasi-hyperbolic needs alpha > 0, alpha != 1")
    if n < 1:
        raise ValueError("n must be a positive integer")
    la = np.log(alpha)
    lf = _qh_log_f(alpha, n)
    coords = np.array([0.5 * (lf - np.log(2.0)), 0.5 * (np.log(2.0) + 4 * n * la - lf), -2.0 * n * la])
    return WeylVector(np.sort(coords)[::-1])


def quasihyperbolic_theta(alpha: float, n: int) -> float:
    """Angle ``theta_n`` between ``mu(gamma^n)`` and the singular ray
    ``x = y`` (the ray through ``(1, 1, -2)``), from the closed form
    ``tan theta_n = (ln f - 2 n ln alpha - ln 2) / (2 sqrt(3) n ln alpha)``."""
    if alpha <= 1:
        raise ValueError("the angle formula assumes alpha > 1")
    la = np.log(alpha)
    return float(np.arctan((_qh_log_f(alpha, n) - 2 * n * la - np.log(2.0)) / (2 * np.sqrt(3.0) * n * la)))


def singular_ray_angle(v: WeylVector) -> float:
    """Angle between ``v`` and the wall ray through ``(1, 1, -2)``."""
    c = np.asarray(v.coords)
    if len(c) != 3:
        raise ValueError("singular ray angle is defined for n = 3")
    return float(np.arctan2(abs(c[0] - c[1]) / np.sqrt(2), (c[0] + c[1] - 2 * c[2]) / np.sqrt(6)))


def boundary_alpha(lambda1: float, lambda2: float, lambda3: float) -> tuple[float, float]:
    """Boundary regularity exponents ``(alpha_plus, alpha_minus)`` of a
    hyperbolic element with eigenvalues ``lambda1 > lambda2 > lambda3 > 0``.

    ``alpha_plus = log(l1/l3) / log(l1/l2)`` and
    ``alpha_minus = log(l1/l3) / log(l2/l3)``.  Their reciprocals sum to one,
    so the larger one is always at least 2.

    >>> boundary_alpha(np.e**2, 1.0, np.e**-2)
    (2.0, 2.0)
    """
    if not lambda1 > lambda2 > lambda3 > 0:
        raise ValueError("need distinct eigenvalues lambda1 > lambda2 > lambda3 > 0")
    x = np.log(lambda1) - np.log(lambda2)
    y = np.log(lambda2) - np.log(lambda3)
    return float((x + y) / x), float((x + y) / y)


def sector_check(x: float, y: float, K: float) -> bool:
    """Strict membership ``x / (K - 1) < y < (K - 1) x`` in the uniform
    regularity sector, with ``x, y`` the gap coordinates of the chamber."""
    if K <= 2:
        raise ValueError("the sector is only meaningful for K > 2")
    if x < 0 or y < 0:
        raise ValueError("gap coordinates must be nonnegative")
    return x / (K - 1) < y < (K - 1) * x


@dataclass(frozen=True)
class ConeDirection:
    word: freegroup.Word
    jordan: WeylVector
    on_wall: bool

    @property
    def gaps(self) -> np.ndarray:
        return self.jordan.gaps()

    @property
    def direction(self) -> np.ndarray:
        return self.jordan.coords / self.jordan.norm()


@dataclass(frozen=True)
class ConeEstimate:
    """Normalized Jordan projections of all words up to the cutoff."""
    cutoff: int
    directions: tuple[ConeDirection, ...]
    hull: tuple[np.ndarray, ...]

    @property
    def on_wall(self) -> bool:
        return any(d.on_wall for d in self.directions)

    def simplex_points(self) -> np.ndarray:
        """Gap vectors scaled to sum one: the cone's trace on the simplex."""
        g = np.array([d.gaps for d in self.directions])
        return g / g.sum(axis=1, keepdims=True)

    def is_opposition_symmetric(self, tol: float = 1e-9) -> bool:
        """Whether the direction set is closed under ``v -> -reverse(v)``."""
        pts = np.array([d.direction for d in self.directions])
        flipped = -pts[:, ::-1]
        return all(np.min(np.linalg.norm(pts - f, axis=1)) <= tol for f in flipped)


def _hull(points: np.ndarray) -> tuple[np.ndarray, ...]:
    if len(points) == 0:
        return ()
    if points.shape[1] == 2:
        u = points[:, 0]
        extremes = sorted({int(np.argmin(u)), int(np.argmax(u))})
        return tuple(points[i] for i in extremes)
    try:
        h = ConvexHull(points[:, :-1])
        return tuple(points[i] for i in sorted(h.vertices))
    except (QhullError, ValueError):
        # degenerate (e.g. all on a lower-dimensional face): keep everything
        unique = np.unique(np.round(points, 12), axis=0)
        return tuple(unique)


def limit_cone_estimate(rep: Representation, L: int, zero_tol: float = 1e-4) -> ConeEstimate:
    """Estimate the limit cone from the Jordan projections of ``rho(w)``
    for every conjugacy class with cyclic length at most ``L``.

    Classes are taken up to rotation but not inversion, so the sample is
    closed under inversion.  Words whose Jordan projection has norm below
    ``zero_tol`` (identity, elliptic and unipotent images) carry no direction
    and are skipped.  The tolerance is loose on purpose: a unipotent Jordan
    block of size ``k`` has eigenvalues that scatter by ``eps**(1/k)``.
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    dirs = []
    for w in freegroup.rotation_classes(rep.rank, L):
        lam = word_jordan_projection(rep, w)
        if lam.norm() <= zero_tol:
            continue
        on_wall = bool(np.min(lam.gaps()) <= 1e-9 * lam.norm())
        dirs.append(ConeDirection(w, lam, on_wall))
    est = ConeEstimate(L, tuple(dirs), ())
    hull = _hull(est.simplex_points()) if dirs else ()
    return ConeEstimate(L, tuple(dirs), hull)
