"""Words in free groups, Whitehead graphs and primitivity.

A word is a tuple of nonzero integers: ``i`` stands for the generator
``s_i`` and ``-i`` for its inverse.  As ASCII strings, generators are
``a..z`` and inverses ``A..Z``, so ``aba^-1b^-1`` is written ``"abAB"``.

Letters are ordered ``1 < -1 < 2 < -2 < ...``; the canonical
representative of a conjugacy class is the smallest cyclic rotation of
``w`` or of ``w^-1`` in that order.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import networkx as nx

Word = tuple[int, ...]

__all__ = [
    "Word", "WhiteheadGraph", "PrimitiveClass",
    "parse_word", "format_word", "inverse", "reduce", "cyclic_reduce",
    "cyclic_length", "is_cyclically_reduced", "canonical_form", "min_rotation",
    "rotation_classes",
    "cayley_line_prefixes", "whitehead_graph", "whitehead_obstruction",
    "whitehead_automorphisms", "apply_automorphism", "is_primitive",
    "cyclic_words", "enumerate_primitive_classes", "primitive_containing",
    "is_primitive_blocking",
]


def parse_word(text: str, rank: int | None = None) -> Word:
    """Parse ``"abAB"`` into ``(1, 2, -1, -2)`` and freely reduce it."""
    letters = []
    for ch in text.strip():
        if "a" <= ch <= "z":
            letters.append(ord(ch) - ord("a") + 1)
        elif "A" <= ch <= "Z":
            letters.append(-(ord(ch) - ord("A") + 1))
        else:
            raise ValueError(f"invalid letter {ch!r} in word {text!r}")
    return reduce(letters, rank)


def format_word(w: Sequence[int]) -> str:
    return "".join(chr(ord("a") + x - 1) if x > 0 else chr(ord("A") - x - 1)
                   for x in w)


def inverse(w: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(w))


def reduce(letters: Iterable[int], rank: int | None = None) -> Word:
    """Freely reduce a letter sequence.

    >>> reduce([1, 2, -2])
    (1,)
    >>> reduce([])
    ()
    """
    out: list[int] = []
    for x in letters:
        x = int(x)
        if x == 0 or (rank is not None and abs(x) > rank):
            raise ValueError(f"letter {x} out of range for rank {rank}")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def cyclic_reduce(w: Sequence[int]) -> tuple[Word, Word]:
    """Split a reduced word as ``conjugator * core * conjugator^-1``.

    >>> cyclic_reduce((2, 1, -2))
    ((1,), (2,))
    """
    w = tuple(w)
    i, j = 0, len(w) - 1
    while i < j and w[i] == -w[j]:
        i += 1
        j -= 1
    return w[i:j + 1], w[:i]


def cyclic_length(w: Sequence[int]) -> int:
    return len(cyclic_reduce(reduce(w))[0])


def is_cyclically_reduced(w: Sequence[int]) -> bool:
    if any(w[i] == -w[i + 1] for i in range(len(w) - 1)):
        return False
    return len(w) < 2 or w[0] != -w[-1]


def _key(w: Sequence[int]) -> tuple[int, ...]:
    return tuple(2 * abs(x) - (x > 0) for x in w)


def min_rotation(w: Sequence[int]) -> Word:
    w = tuple(w)
    return min((w[i:] + w[:i] for i in range(len(w))), key=_key, default=())


def rotation_classes(rank: int, max_length: int) -> list[Word]:
    """Conjugacy classes of nontrivial elements with cyclic length at most
    ``max_length``, one minimal rotation each.  Unlike
    :func:`canonical_form`, a class and its inverse are kept apart."""
    out = []
    for length in range(1, max_length + 1):
        out.extend(w for w in cyclic_words(rank, length) if min_rotation(w) == w)
    return out


def canonical_form(w: Sequence[int]) -> Word:
    """Smallest rotation of the core of ``w`` or of its inverse."""
    core, _ = cyclic_reduce(reduce(w))
    if not core:
        return ()
    candidates = []
    for v in (core, inverse(core)):
        for i in range(len(v)):
            candidates.append(v[i:] + v[:i])
    return min(candidates, key=_key)


def cayley_line_prefixes(w: Sequence[int], k_min: int, k_max: int) -> list[Word]:
    """Vertices ``q(k)``, ``k_min <= k <= k_max``, of the axis of ``w``.

    ``q(k)`` is the length-``k`` prefix of ``www...`` for ``k >= 0`` and
    the length-``|k|`` prefix of ``w^-1 w^-1 ...`` for ``k < 0``.
    """
    w = tuple(w)
    if not w or not is_cyclically_reduced(w):
        raise ValueError(f"{format_word(w)!r} is not a nonempty cyclically reduced word")
    inv = inverse(w)
    m = len(w)
    out = []
    for k in range(k_min, k_max + 1):
        src = w if k >= 0 else inv
        a = abs(k)
        out.append(src * (a // m) + src[:a % m])
    return out


@dataclass(frozen=True)
class WhiteheadGraph:
    rank: int
    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    def to_networkx(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(self.edges)
        return g

    def edge_multiset(self) -> dict[tuple[int, int], int]:
        counts: dict[tuple[int, int], int] = {}
        for e in self.edges:
            counts[e] = counts.get(e, 0) + 1
        return counts

    def as_dict(self) -> dict:
        return {
            "vertices": [format_word((v,)) for v in self.vertices],
            "edges": [[format_word((u,)), format_word((v,))] for u, v in self.edges],
        }


def whitehead_graph(w: Sequence[int], rank: int) -> WhiteheadGraph:
    """One edge ``{x, y^-1}`` for each cyclic 2-substring ``xy`` of ``w``."""
    w = tuple(w)
    if not w:
        raise ValueError("the Whitehead graph of the empty word is undefined")
    if not is_cyclically_reduced(w):
        raise ValueError(f"{format_word(w)!r} is not cyclically reduced")
    if max(abs(x) for x in w) > rank:
        raise ValueError(f"word uses generators beyond rank {rank}")
    vertices = tuple(x for i in range(1, rank + 1) for x in (i, -i))
    order = {v: i for i, v in enumerate(vertices)}
    edges = []
    for i, x in enumerate(w):
        y = w[(i + 1) % len(w)]
        e = tuple(sorted((x, -y), key=order.__getitem__))
        edges.append(e)
    return WhiteheadGraph(rank, vertices, tuple(edges))


def whitehead_obstruction(w: Sequence[int], rank: int) -> bool:
    """True when ``Wh(w)`` is connected without cut vertex, which rules out
    primitivity."""
    g = nx.Graph(whitehead_graph(w, rank).to_networkx())
    return nx.is_connected(g) and next(nx.articulation_points(g), None) is None


@functools.lru_cache(maxsize=None)
def whitehead_automorphisms(rank: int) -> tuple[dict[int, Word], ...]:
    """All nontrivial Whitehead automorphisms ``(A, a)``.

    Each is returned as a map from every letter to the reduced image word.
    Permutations and inversions of the basis are omitted: they never change
    cyclic length.
    """
    letters = [x for i in range(1, rank + 1) for x in (i, -i)]
    autos = []
    for a in letters:
        others = [x for x in letters if abs(x) != abs(a)]
        for bits in itertools.product((False, True), repeat=len(others)):
            A = {x for x, b in zip(others, bits) if b}
            if not A:
                continue
            images: dict[int, Word] = {a: (a,), -a: (-a,)}
            for x in range(1, rank + 1):
                if x == abs(a):
                    continue
                image = ((-a,) if -x in A else ()) + (x,) + ((a,) if x in A else ())
                images[x] = image
                images[-x] = inverse(image)
            autos.append(images)
    return tuple(autos)


def apply_automorphism(phi: dict[int, Word], w: Sequence[int]) -> Word:
    return reduce(itertools.chain.from_iterable(phi[x] for x in w))


@functools.lru_cache(maxsize=1 << 20)
def _minimal_cyclic_length(core: Word, rank: int) -> int:
    if len(core) <= 1:
        return len(core)
    best = None
    for phi in whitehead_automorphisms(rank):
        image, _ = cyclic_reduce(apply_automorphism(phi, core))
        if len(image) < len(core) and (best is None or len(image) < len(best)):
            best = image
    if best is None:
        return len(core)
    return _minimal_cyclic_length(canonical_form(best), rank)


def is_primitive(w: Sequence[int], rank: int) -> bool:
    """Decide membership in a free basis by Whitehead's peak reduction.

    Whitehead automorphisms are applied greedily, always moving to the
    shortest image; the word is primitive iff this ends at cyclic length 1.

    >>> is_primitive(parse_word("abb"), 2)
    True
    >>> is_primitive(parse_word("abAB"), 2)
    False
    """
    core = canonical_form(w)
    if not core:
        return False
    if max(abs(x) for x in core) > rank:
        raise ValueError(f"word uses generators beyond rank {rank}")
    if len(core) == 1:
        return True
    # a primitive element abelianizes to a primitive vector
    sums = [0] * rank
    for x in core:
        sums[abs(x) - 1] += 1 if x > 0 else -1
    if math.gcd(*sums) != 1:
        return False
    return _minimal_cyclic_length(core, rank) == 1


def cyclic_words(rank: int, length: int) -> Iterator[Word]:
    """All cyclically reduced words of the given length."""
    letters = [x for i in range(1, rank + 1) for x in (i, -i)]

    def extend(prefix: list[int]) -> Iterator[Word]:
        if len(prefix) == length:
            if length < 2 or prefix[0] != -prefix[-1]:
                yield tuple(prefix)
            return
        for x in letters:
            if prefix and x == -prefix[-1]:
                continue
            prefix.append(x)
            yield from extend(prefix)
            prefix.pop()

    if length == 0:
        yield ()
        return
    yield from extend([])


@dataclass(frozen=True, order=True)
class PrimitiveClass:
    length: int
    representative: Word

    @property
    def name(self) -> str:
        return format_word(self.representative)


def enumerate_primitive_classes(rank: int, max_length: int) -> list[PrimitiveClass]:
    """Primitive conjugacy classes up to inversion with cyclic length at most
    ``max_length``, sorted by length then canonical word."""
    if rank < 1 or max_length < 1:
        raise ValueError("need rank >= 1 and max_length >= 1")
    out = []
    for length in range(1, max_length + 1):
        reps = []
        for w in cyclic_words(rank, length):
            if canonical_form(w) == w and is_primitive(w, rank):
                reps.append(w)
        reps.sort(key=_key)
        out.extend(PrimitiveClass(length, w) for w in reps)
    return out


def _cyclic_contains(w: Word, sub: Word) -> bool:
    if len(sub) > len(w):
        return False
    doubled = w + w
    m = len(sub)
    return any(doubled[i:i + m] == sub for i in range(len(w)))


def primitive_containing(w: Sequence[int], rank: int, max_length: int) -> Word | None:
    """A cyclically reduced primitive word of length at most ``max_length``
    containing ``w`` as a subword, or None."""
    w = reduce(w)
    for cls in enumerate_primitive_classes(rank, max_length):
        for v in (cls.representative, inverse(cls.representative)):
            if _cyclic_contains(v, w):
                # rotate so that w occurs literally
                doubled = v + v
                for i in range(len(v)):
                    if doubled[i:i + len(w)] == w:
                        return doubled[i:i + len(v)]
    return None


def is_primitive_blocking(w: Sequence[int], rank: int, max_length: int) -> bool:
    """Whether no cyclically reduced primitive word of length at most
    ``max_length`` contains ``w``.  Only a finite-cutoff approximation."""
    return primitive_containing(w, rank, max_length) is None
