"""Representations of free groups into ``PGL(n, R)``.

A representation stores one matrix per generator, rescaled to
``|det| = 1``.  Words are evaluated left to right with renormalization so
that long products neither overflow nor underflow.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from . import freegroup
from ._scaled import scaled_product
from .cartan import WeylVector, ladder_to_chamber
from .grassmann import compound

__all__ = [
    "Representation", "RepresentationFormatError", "evaluate", "evaluate_compound",
    "sym_power", "punctured_torus_fuchsian", "punctured_torus_sym",
    "quasihyperbolic_example", "quasihyperbolic_rep", "make_preset", "PRESETS",
    "perturb", "word_cartan_projection", "word_jordan_projection",
]

MAX_CONDITION = 1e12


class RepresentationFormatError(ValueError):
    """Malformed representation data; the message names the offending field."""


def _normalize_det(m: np.ndarray, where: str) -> np.ndarray:
    sign, logdet = np.linalg.slogdet(m)
    if sign == 0 or not np.isfinite(logdet):
        raise RepresentationFormatError(f"{where}: matrix is singular")
    return m * np.exp(-logdet / m.shape[0])


@dataclass(frozen=True, eq=False)
class Representation:
    """Generator images of a representation of the free group of rank ``rank``.

    Images are normalized to ``|det| = 1`` on construction; the sign is left
    alone since every comparison is projective.
    """
    images: tuple[np.ndarray, ...]
    labels: tuple[str, ...] = ()
    _compounds: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.images:
            raise RepresentationFormatError("generators: at least one generator is required")
        n = np.asarray(self.images[0]).shape[0]
        fixed = []
        for i, m in enumerate(self.images):
            where = f"generators[{i}].matrix"
            m = np.array(m, dtype=float)
            if m.shape != (n, n):
                raise RepresentationFormatError(f"{where}: expected a {n}x{n} matrix, got shape {m.shape}")
            if not np.all(np.isfinite(m)):
                raise RepresentationFormatError(f"{where}: non-finite entries")
            m = _normalize_det(m, where)
            if np.linalg.cond(m) >= MAX_CONDITION:
                raise RepresentationFormatError(f"{where}: condition number exceeds {MAX_CONDITION:g}")
            m.setflags(write=False)
            fixed.append(m)
        labels = tuple(self.labels) or tuple(freegroup.format_word((i + 1,)) for i in range(len(fixed)))
        if len(labels) != len(fixed):
            raise RepresentationFormatError("generators: one name per matrix required")
        object.__setattr__(self, "images", tuple(fixed))
        object.__setattr__(self, "labels", labels)
        inverses = []
        for m in fixed:
            inv = np.linalg.inv(m)
            inv.setflags(write=False)
            inverses.append(inv)
        object.__setattr__(self, "_inverses", tuple(inverses))

    @property
    def rank(self) -> int:
        return len(self.images)

    @property
    def n(self) -> int:
        return self.images[0].shape[0]

    def letter(self, x: int) -> np.ndarray:
        """Image of the generator ``x`` (negative for inverses)."""
        if x == 0 or abs(x) > self.rank:
            raise ValueError(f"letter {x} out of range for rank {self.rank}")
        return self.images[x - 1] if x > 0 else self._inverses[-x - 1]

    def compound_letter(self, x: int, r: int) -> np.ndarray:
        """``C_r`` of the image of ``x``, cached per representation."""
        key = (x, r)
        if key not in self._compounds:
            c = compound(self.letter(x), r)
            c.setflags(write=False)
            self._compounds[key] = c
        return self._compounds[key]

    def conjugate(self, h) -> "Representation":
        """The representation ``w -> h rho(w) h^-1``."""
        h = np.asarray(h, dtype=float)
        hinv = np.linalg.inv(h)
        return Representation(tuple(h @ m @ hinv for m in self.images), self.labels)

    def as_dict(self) -> dict:
        return {
            "rank": self.rank,
            "n": self.n,
            "generators": [{"name": name, "matrix": m.tolist()}
                           for name, m in zip(self.labels, self.images)],
        }

    @classmethod
    def from_dict(cls, data) -> "Representation":
        if not isinstance(data, dict):
            raise RepresentationFormatError("top level: expected a JSON object")
        for key in ("rank", "n", "generators"):
            if key not in data:
                raise RepresentationFormatError(f"{key}: missing field")
        rank, n, gens = data["rank"], data["n"], data["generators"]
        if not isinstance(rank, int) or rank < 1:
            raise RepresentationFormatError("rank: expected a positive integer")
        if not isinstance(n, int) or n < 1:
            raise RepresentationFormatError("n: expected a positive integer")
        if not isinstance(gens, list) or len(gens) != rank:
            raise RepresentationFormatError(f"generators: expected a list of {rank} entries")
        images, labels = [], []
        for i, gen in enumerate(gens):
            if not isinstance(gen, dict) or "matrix" not in gen:
                raise RepresentationFormatError(f"generators[{i}].matrix: missing field")
            try:
                m = np.array(gen["matrix"], dtype=float)
            except (TypeError, ValueError):
                raise RepresentationFormatError(f"generators[{i}].matrix: not a numeric matrix") from None
            if m.shape != (n, n):
                raise RepresentationFormatError(f"generators[{i}].matrix: expected {n}x{n}, got shape {m.shape}")
            images.append(m)
            labels.append(str(gen.get("name", freegroup.format_word((i + 1,)))))
        return cls(tuple(images), tuple(labels))

    def dumps(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    @classmethod
    def load(cls, path) -> "Representation":
        text = Path(path).read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise RepresentationFormatError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from None
        return cls.from_dict(data)

    def dump(self, path) -> None:
        Path(path).write_text(self.dumps() + "\n", encoding="utf-8")

    def fingerprint(self) -> str:
        """SHA-256 of the canonical JSON encoding."""
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def evaluate(rep: Representation, w: Sequence[int]) -> tuple[np.ndarray, float]:
    """``rho(w)`` as ``(M, s)`` with ``max|M| = 1`` and ``rho(w) = exp(s) M``.

    The word is freely reduced first, so cancelling pairs cost no accuracy.
    """
    return scaled_product((rep.letter(x) for x in freegroup.reduce(w, rep.rank)), size=rep.n)


def evaluate_compound(rep: Representation, w: Sequence[int], r: int) -> tuple[np.ndarray, float]:
    """``C_r(rho(w))`` as a renormalized product of compound generator images."""
    size = compound(np.eye(rep.n), r).shape[0]
    return scaled_product((rep.compound_letter(x, r) for x in freegroup.reduce(w, rep.rank)), size=size)


def _poly_mul(p: list, q: list) -> list:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] = out[i + j] + a * b
    return out


def sym_power(g, n: int) -> np.ndarray:
    """Action of ``g in SL(2, R)`` on binary forms of degree ``n - 1``.

    The basis is the monomials ``x^(n-1-i) y^i``; column ``j`` holds the
    coefficients of ``(g x)^(n-1-j) (g y)^j``.  Integer input stays exact.

    >>> sym_power(np.array([[1, 1], [0, 1]]), 3)
    array([[1, 1, 1],
           [0, 1, 2],
           [0, 0, 1]])
    """
    g = np.asarray(g)
    if g.shape != (2, 2):
        raise ValueError("sym_power needs a 2x2 matrix")
    if n < 2:
        raise ValueError("target dimension must be at least 2")
    exact = g.dtype.kind in "iub" or g.dtype == object
    a, b, c, d = (int(x) for x in g.ravel()) if exact else (float(x) for x in g.ravel())
    det = a * d - b * c
    # float det carries rounding relative to the size of its terms
    if (det != 1) if exact else abs(det - 1) > 1e-10 * max(1.0, abs(a * d) + abs(b * c)):
        raise ValueError(f"sym_power needs det 1, got {det}")
    deg = n - 1
    cols = []
    for j in range(n):
        p = [1]
        for _ in range(deg - j):
            p = _poly_mul(p, [a, c])
        for _ in range(j):
            p = _poly_mul(p, [b, d])
        cols.append(p)
    if not exact:
        return np.array(cols, dtype=float).T
    out = np.array(cols, dtype=object).T
    return out.astype(np.int64) if all(abs(x) < 2**62 for x in out.flat) else out


PUNCTURED_TORUS = (np.array([[1, 1], [1, 2]]), np.array([[1, -1], [-1, 2]]))


def punctured_torus_fuchsian() -> Representation:
    """A Fuchsian punctured-torus group; the commutator ``abAB`` has trace -2."""
    return Representation(PUNCTURED_TORUS, ("a", "b"))


def punctured_torus_sym(n: int) -> Representation:
    """The punctured-torus group composed with the irreducible ``n``-dimensional
    representation of ``SL(2, R)``."""
    return Representation(tuple(sym_power(g, n) for g in PUNCTURED_TORUS), ("a", "b"))


def quasihyperbolic_example(alpha: float) -> np.ndarray:
    """Normal form ``[[a, 1, 0], [0, a, 0], [0, 0, a^-2]]``."""
    alpha = float(alpha)
    if alpha <= 0 or alpha == 1:
        raise ValueError("quasi-hyperbolic normal form needs alpha > 0, alpha != 1")
    return np.array([[alpha, 1.0, 0.0], [0.0, alpha, 0.0], [0.0, 0.0, alpha**-2]])


def quasihyperbolic_rep(alpha: float) -> Representation:
    """Rank-one representation generated by the quasi-hyperbolic normal form."""
    return Representation((quasihyperbolic_example(alpha),), ("a",))


PRESETS = {
    "punctured-torus-fuchsian": (punctured_torus_fuchsian, 0),
    "punctured-torus-sym": (punctured_torus_sym, 1),
    "quasi-hyperbolic": (quasihyperbolic_rep, 1),
}


def make_preset(name: str, *args: str) -> Representation:
    """Build a preset from string arguments (as given on the command line)."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    build, arity = PRESETS[name]
    if len(args) != arity:
        raise ValueError(f"preset {name!r} takes {arity} argument(s), got {len(args)}")
    if name == "punctured-torus-sym":
        return build(int(args[0]))
    return build(*(float(a) for a in args))


def perturb(rep: Representation, eps: float, seed: int) -> Representation:
    """Right-multiply each image by ``expm(E)``, ``E`` uniform in ``[-eps, eps]``."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0:
        return rep
    rng = np.random.default_rng(seed)
    images = tuple(m @ scipy.linalg.expm(rng.uniform(-eps, eps, size=m.shape)) for m in rep.images)
    return Representation(images, rep.labels)


def _log_spectral_radius(m: np.ndarray) -> float:
    return float(np.log(np.max(np.abs(np.linalg.eigvals(m)))))


def word_cartan_projection(rep: Representation, w: Sequence[int]) -> WeylVector:
    """``mu(rho(w))`` from the top singular values of compound products.

    Each compound power is multiplied out generator by generator, so the
    small singular values of long words do not drown in rounding error.
    """
    tops = []
    for r in range(1, rep.n + 1):
        m, s = evaluate_compound(rep, w, r)
        tops.append(s + float(np.log(np.linalg.norm(m, 2))))
    return ladder_to_chamber(tops)


def word_jordan_projection(rep: Representation, w: Sequence[int]) -> WeylVector:
    """``lambda(rho(w))`` from spectral radii of compound products."""
    tops = []
    for r in range(1, rep.n + 1):
        m, s = evaluate_compound(rep, w, r)
        tops.append(s + _log_spectral_radius(m))
    return ladder_to_chamber(tops)
