"""Finite-cutoff certificates of primitive stability.

For every primitive conjugacy class ``[w]`` up to a length cutoff, three
things are checked:

1. ``rho(w)`` is loxodromic: real spectrum with pairwise distinct moduli;
2. the orbit of the axis of ``w`` stays close to the invariant flat of
   ``rho(w)``, measured by ``flat_sup``;
3. the orbit of the axis diverges from the chamber walls, measured by the
   growth slope of the wall margin along the axis.

A pass certifies only the classes that were enumerated.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import freegroup
from .cartan import (
    FlatDescriptor, NotLoxodromic, SpacePoint, distance_to_flat, is_semisimple,
    ladder_to_chamber, wall_margin,
)
from .freegroup import PrimitiveClass, Word
from .grassmann import compound, plucker_to_subspace
from .reps import Representation, evaluate, evaluate_compound, word_jordan_projection

__all__ = [
    "Tolerances", "ClassReport", "StabilityCertificate", "LoxodromicCheck",
    "GrowthCheck", "LengthRatios", "word_spectrum", "attracting_frame",
    "check_loxodromic", "check_flat_distance", "check_regularity_growth",
    "check_class", "certify", "length_ratio_stats", "default_workers",
]


@dataclass(frozen=True)
class Tolerances:
    tol_eig: float = 1e-6
    tol_slope: float = 1e-6
    flat_tol: float = 1e-8
    modulus_gap: float = 1e-9
    window_factor: int = 6

    def __post_init__(self):
        for name in ("tol_eig", "tol_slope", "flat_tol", "modulus_gap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"tolerance {name} must be positive")
        if self.window_factor < 4:
            raise ValueError("window_factor must be at least 4")


def _word(cls: PrimitiveClass | Sequence[int]) -> Word:
    w = cls.representative if isinstance(cls, PrimitiveClass) else tuple(cls)
    core, _ = freegroup.cyclic_reduce(freegroup.reduce(w))
    if not core:
        raise ValueError("the trivial word has no dynamics to certify")
    return core


class WordSpectrum(NamedTuple):
    log_moduli: np.ndarray
    dominant: bool
    worst_gap: float


def word_spectrum(rep: Representation, w: Sequence[int], gap: float = 1e-9) -> WordSpectrum:
    """Log eigenvalue moduli of ``rho(w)``, descending, from the spectral
    radii of ``C_r(rho(w))``.

    ``dominant`` is true when the top eigenvalue of every compound power is
    real and strictly dominant (relative gap above ``gap``), which is
    equivalent to a real spectrum with distinct moduli.
    """
    tops = []
    dominant = True
    worst = np.inf
    for r in range(1, rep.n + 1):
        m, s = evaluate_compound(rep, w, r)
        ev = np.linalg.eigvals(m)
        ev = ev[np.argsort(-np.abs(ev))]
        top = abs(ev[0])
        tops.append(s + float(np.log(top)))
        if len(ev) > 1:
            rel = (top - abs(ev[1])) / top
            worst = min(worst, rel)
            if rel <= gap or abs(ev[0].imag) > gap * top:
                dominant = False
    s = np.concatenate([[0.0], tops])
    return WordSpectrum(np.diff(s), dominant, float(worst))


def _top_eigenvector(m: np.ndarray) -> np.ndarray:
    ev, vecs = np.linalg.eig(m)
    v = vecs[:, int(np.argmax(np.abs(ev)))]
    v = v * np.exp(-1j * np.angle(v[np.argmax(np.abs(v))]))
    return np.real(v)


def attracting_frame(rep: Representation, w: Sequence[int], gap: float = 1e-9) -> FlatDescriptor:
    """Eigenbasis of ``rho(w)``, ordered by decreasing modulus.

    Eigenvector ``i`` is the intersection of the attracting ``i``-plane of
    ``rho(w)`` with the attracting ``(n-i+1)``-plane of ``rho(w)^-1``; both
    come from top eigenvectors of compound products, which stay accurate for
    long words where a direct eigensolve of ``rho(w)`` does not.
    """
    if not word_spectrum(rep, w, gap).dominant:
        raise NotLoxodromic(f"rho({freegroup.format_word(w)}) is not loxodromic")
    n = rep.n
    winv = freegroup.inverse(w)
    up = {n: np.eye(n)}
    down = {n: np.eye(n)}
    for r in range(1, n):
        up[r] = plucker_to_subspace(_top_eigenvector(evaluate_compound(rep, w, r)[0]), n, r)
        down[r] = plucker_to_subspace(_top_eigenvector(evaluate_compound(rep, winv, r)[0]), n, r)
    cols = []
    for i in range(1, n + 1):
        U, V = up[i], down[n - i + 1]
        _, _, vt = np.linalg.svd(np.hstack([U, -V]))
        v = U @ vt[-1, :i]
        cols.append(v / np.linalg.norm(v))
    return FlatDescriptor(np.array(cols).T)


class LoxodromicCheck(NamedTuple):
    ok: bool
    eig_margin: float


def check_loxodromic(rep: Representation, cls, tol: Tolerances = Tolerances()) -> LoxodromicCheck:
    """Condition (1): distinct real eigenvalue moduli.  ``eig_margin`` is the
    smallest gap between log moduli divided by the cyclic length."""
    w = _word(cls)
    spec = word_spectrum(rep, w, tol.modulus_gap)
    margin = float(np.min(-np.diff(spec.log_moduli))) / len(w) if rep.n > 1 else 0.0
    return LoxodromicCheck(spec.dominant, margin if margin > 0 else 0.0)


def _basepoint_root(basepoint: SpacePoint | None, n: int) -> tuple[SpacePoint, np.ndarray]:
    x = SpacePoint.identity(n) if basepoint is None else basepoint
    w, V = np.linalg.eigh(x.matrix)
    return x, (V * np.sqrt(w)) @ V.T


def check_flat_distance(rep: Representation, cls, basepoint: SpacePoint | None = None,
                        tol: Tolerances = Tolerances()) -> float:
    """Condition (2): ``max_k d(rho(q(k)) x, F)`` over one period of the axis,
    ``F`` the invariant flat of ``rho(w)``.

    Since ``rho(u)^-1 F(rho(w)) = F(rho(u^-1 w u))`` and ``u^-1 w u`` is a
    rotation of ``w`` when ``u = q(k)``, this equals the largest distance
    from ``x`` to the flats of the rotations of ``w``.  That avoids forming
    the badly conditioned orbit points.
    """
    w = _word(cls)
    x, _ = _basepoint_root(basepoint, rep.n)
    worst = 0.0
    for k in range(len(w)):
        F = attracting_frame(rep, w[k:] + w[:k], tol.modulus_gap)
        worst = max(worst, distance_to_flat(x, F, tol.flat_tol))
    return worst


class GrowthCheck(NamedTuple):
    slope: float
    ks: np.ndarray
    margins: np.ndarray


def _axis_margins(rep: Representation, w: Word, k_max: int, h: np.ndarray, sign: int) -> list[float]:
    """Wall margins of ``mu(h^-1 rho(q(sign*k)) h)`` for ``k = 1..k_max``."""
    n = rep.n
    hinv = np.linalg.inv(h)
    letters = w if sign > 0 else freegroup.inverse(w)
    tops = np.zeros((k_max, n))
    for r in range(1, n):
        Ch, Chinv = compound(h, r), compound(hinv, r)
        P = np.eye(Ch.shape[0])
        scale = 0.0
        for k in range(k_max):
            P = P @ rep.compound_letter(letters[k % len(letters)], r)
            peak = np.max(np.abs(P))
            P, scale = P / peak, scale + float(np.log(peak))
            tops[k, r - 1] = scale + float(np.log(np.linalg.norm(Chinv @ P @ Ch, 2)))
    # s_n = log |det| = 0 for |det|-normalized images
    return [wall_margin(ladder_to_chamber(t)) for t in tops]


def check_regularity_growth(rep: Representation, cls, window: tuple[int, int] | None = None,
                            basepoint: SpacePoint | None = None,
                            tol: Tolerances = Tolerances()) -> GrowthCheck:
    """Condition (3): wall margins of ``d(x, rho(q(k)) x)`` along the axis
    and their least-squares slope against ``|k|``."""
    w = _word(cls)
    m = len(w)
    k_min, k_max = window if window is not None else (-tol.window_factor * m, tol.window_factor * m)
    if k_max < k_min + 4 * m:
        raise ValueError(f"window must span at least 4 periods ({4 * m} steps)")
    _, h = _basepoint_root(basepoint, rep.n)
    ks = np.arange(k_min, k_max + 1)
    pos = _axis_margins(rep, w, max(k_max, 0), h, +1) if k_max > 0 else []
    neg = _axis_margins(rep, w, max(-k_min, 0), h, -1) if k_min < 0 else []
    mu0 = wall_margin(ladder_to_chamber(np.zeros(rep.n)))
    table = {0: mu0}
    table.update({k + 1: v for k, v in enumerate(pos)})
    table.update({-(k + 1): v for k, v in enumerate(neg)})
    margins = np.array([table[int(k)] for k in ks])
    slope = float(np.polyfit(np.abs(ks), margins, 1)[0])
    return GrowthCheck(slope, ks, margins)


def _finite(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


@dataclass(frozen=True)
class ClassReport:
    word: str
    length: int
    loxodromic: bool
    eig_margin: float
    flat_sup: float
    regularity_slope: float
    end_margin: float
    semisimple: bool
    failures: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {
            "word": self.word,
            "length": self.length,
            "eig_margin": self.eig_margin,
            "flat_sup": _finite(self.flat_sup),
            "slope": _finite(self.regularity_slope),
            "end_margin": _finite(self.end_margin),
            "semisimple": self.semisimple,
            "pass": self.passed,
            "failures": list(self.failures),
        }


def check_class(rep: Representation, cls: PrimitiveClass, basepoint: SpacePoint | None = None,
                tol: Tolerances = Tolerances()) -> ClassReport:
    """Run all three checks on one class; errors become recorded failures."""
    w = _word(cls)
    name = freegroup.format_word(w)
    failures = []
    lox = check_loxodromic(rep, w, tol)
    if not lox.ok:
        failures.append("not loxodromic: eigenvalue moduli coincide or are complex")
    elif lox.eig_margin <= tol.tol_eig:
        failures.append(f"eigenvalue gap {lox.eig_margin:.3g} below tolerance")
    flat_sup = math.inf
    if lox.ok:
        try:
            flat_sup = check_flat_distance(rep, w, basepoint, tol)
        except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
            failures.append(f"flat distance failed: {exc}")
    slope = end = -math.inf
    try:
        growth = check_regularity_growth(rep, w, None, basepoint, tol)
        slope = growth.slope
        end = float(min(growth.margins[0], growth.margins[-1]))
        if slope <= tol.tol_slope or end <= tol.tol_slope:
            failures.append(f"wall margin does not grow (slope {slope:.3g}, end margin {end:.3g})")
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        failures.append(f"regularity growth failed: {exc}")
    if lox.ok:
        semisimple = True
    else:
        m, _ = evaluate(rep, w)
        semisimple = bool(is_semisimple(m))
    return ClassReport(name, len(w), lox.ok, lox.eig_margin, flat_sup, slope, end, semisimple,
                       tuple(failures))


@dataclass
class StabilityCertificate:
    rep_sha: str
    cutoff: int
    basepoint: np.ndarray
    tolerances: Tolerances
    classes: list[ClassReport] = field(default_factory=list)

    @property
    def min_eig_margin(self) -> float:
        return min((c.eig_margin for c in self.classes), default=math.inf)

    @property
    def max_flat_sup(self) -> float:
        return max((c.flat_sup for c in self.classes), default=0.0)

    @property
    def min_regularity_slope(self) -> float:
        return min((c.regularity_slope for c in self.classes), default=math.inf)

    @property
    def failures(self) -> list[ClassReport]:
        return [c for c in self.classes if not c.passed]

    @property
    def passed(self) -> bool:
        tol = self.tolerances
        return (bool(self.classes) and not self.failures and self.min_eig_margin > tol.tol_eig
                and math.isfinite(self.max_flat_sup) and self.min_regularity_slope > tol.tol_slope)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    @property
    def label(self) -> str:
        return f"certified up to L={self.cutoff}" if self.passed else f"failed at cutoff L={self.cutoff}"

    def as_dict(self) -> dict:
        return {
            "rep_sha": self.rep_sha,
            "L": self.cutoff,
            "basepoint": self.basepoint.tolist(),
            "tolerances": asdict(self.tolerances),
            "classes": [c.as_dict() for c in self.classes],
            "global": {
                "n_classes": len(self.classes),
                "min_eig_margin": _finite(self.min_eig_margin),
                "max_flat_sup": _finite(self.max_flat_sup),
                "min_regularity_slope": _finite(self.min_regularity_slope),
                "failed_words": [c.word for c in self.failures],
            },
            "verdict": self.verdict,
            "label": self.label,
        }


def default_workers() -> int:
    env = os.environ.get("PRIMSTAB_THREADS")
    if env:
        return max(1, int(env))
    return 1


def _check_task(args) -> ClassReport:
    rep_dict, cls, basepoint, tol = args
    rep = Representation.from_dict(rep_dict)
    return check_class(rep, cls, None if basepoint is None else SpacePoint(basepoint), tol)


def certify(rep: Representation, L: int, basepoint: SpacePoint | None = None,
            tol: Tolerances = Tolerances(), workers: int | None = None) -> StabilityCertificate:
    """Check every primitive class with cyclic length at most ``L``.

    Classes are processed in canonical order, so the certificate does not
    depend on ``workers``.
    """
    if L < 1:
        raise ValueError("cutoff L must be at least 1")
    x = SpacePoint.identity(rep.n) if basepoint is None else basepoint
    if x.n != rep.n:
        raise ValueError("basepoint dimension does not match the representation")
    classes = freegroup.enumerate_primitive_classes(rep.rank, L)
    workers = default_workers() if workers is None else max(1, workers)
    if workers == 1 or len(classes) < 2:
        reports = [check_class(rep, c, x, tol) for c in classes]
    else:
        tasks = [(rep.as_dict(), c, np.array(x.matrix), tol) for c in classes]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_check_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return StabilityCertificate(rep.fingerprint(), L, np.array(x.matrix), tol, reports)


class LengthRatios(NamedTuple):
    r_min: float
    R_max: float
    argmin: str
    argmax: str
    degenerate: tuple[str, ...]


def length_ratio_stats(rep: Representation, L: int, zero_tol: float = 1e-4) -> LengthRatios:
    """Extremes of ``|lambda(rho(w))| / |w|`` over primitive classes up to ``L``.

    Classes whose translation length is below ``zero_tol`` (unipotent or
    elliptic images, where the computed value is rounding noise) count as
    zero and are listed in ``degenerate``.
    """
    ratios = []
    degenerate = []
    for cls in freegroup.enumerate_primitive_classes(rep.rank, L):
        t = word_jordan_projection(rep, cls.representative).norm()
        if t <= zero_tol:
            t = 0.0
            degenerate.append(cls.name)
        ratios.append((t / cls.length, cls.name))
    lo = min(ratios)
    hi = max(ratios)
    return LengthRatios(lo[0], hi[0], lo[1], hi[1], tuple(degenerate))
