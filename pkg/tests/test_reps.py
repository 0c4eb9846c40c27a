import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from primstab import freegroup
from primstab.reps import (
    Representation, RepresentationFormatError, evaluate, evaluate_compound, make_preset,
    perturb, punctured_torus_fuchsian, punctured_torus_sym, quasihyperbolic_example,
    quasihyperbolic_rep, sym_power,
)
from primstab.grassmann import compound, projective_angle

seeds = st.integers(0, 2**32 - 1)


def random_sl2(rng):
    g = rng.normal(size=(2, 2))
    if np.linalg.det(g) < 0:
        g[0] *= -1
    return g / np.sqrt(np.linalg.det(g))


def random_word(rng, rank, length):
    return freegroup.reduce(int(x) * int(s) for x, s in zip(rng.integers(1, rank + 1, length),
                                                            rng.choice([-1, 1], length)))


def test_sym_power_examples():
    np.testing.assert_array_equal(sym_power(np.array([[1, 1], [0, 1]]), 3), [[1, 1, 1], [0, 1, 2], [0, 0, 1]])
    np.testing.assert_allclose(sym_power(np.diag([3.0, 1 / 3]), 3), np.diag([9.0, 1, 1 / 9]))
    with pytest.raises(ValueError):
        sym_power(np.diag([2.0, 1.0]), 3)
    with pytest.raises(ValueError):
        sym_power(np.eye(2), 1)


@given(seeds, st.sampled_from([3, 4]))
@settings(max_examples=100, deadline=None)
def test_sym_power_homomorphism(seed, n):
    rng = np.random.default_rng(seed)
    g, h = random_sl2(rng), random_sl2(rng)
    Sg, Sh = sym_power(g, n), sym_power(h, n)
    scale = np.linalg.norm(Sg) * np.linalg.norm(Sh)
    assert np.max(np.abs(sym_power(g @ h, n) - Sg @ Sh)) < 1e-10 * scale
    assert abs(np.linalg.det(Sg) - 1) < 1e-8 * np.linalg.cond(Sg)
    np.testing.assert_allclose(sym_power(np.linalg.inv(g), n), np.linalg.inv(Sg), atol=1e-10 * np.linalg.cond(Sg))
    conj = sym_power(h @ g @ np.linalg.inv(h), n)
    np.testing.assert_allclose(conj, Sh @ Sg @ np.linalg.inv(Sh), atol=1e-9 * np.linalg.cond(Sh) ** 2 * np.linalg.norm(Sg))


def test_punctured_torus():
    rep = punctured_torus_fuchsian()
    a, b = rep.images
    assert np.trace(a) == pytest.approx(3)
    c, s = evaluate(rep, freegroup.parse_word("abAB"))
    c_exact = np.array([[1, 1], [1, 2]]) @ np.array([[1, -1], [-1, 2]]) @ np.array([[2, -1], [-1, 1]]) @ np.array([[2, 1], [1, 1]])
    assert np.trace(c_exact) == -2
    np.testing.assert_allclose(np.exp(s) * c, c_exact, atol=1e-12)


def test_evaluate_basic():
    rep = punctured_torus_sym(3)
    m, s = evaluate(rep, ())
    np.testing.assert_array_equal(m, np.eye(3))
    assert s == 0.0
    m, s = evaluate(rep, (1,))
    np.testing.assert_allclose(np.exp(s) * m, rep.images[0])


@given(seeds, st.integers(0, 12))
@settings(max_examples=60, deadline=None)
def test_evaluate_inverse_cancels(seed, length):
    rng = np.random.default_rng(seed)
    rep = punctured_torus_sym(3)
    w = random_word(rng, 2, length)
    m, s = evaluate(rep, w + freegroup.inverse(w))
    np.testing.assert_allclose(np.exp(s) * m, np.eye(3), atol=1e-10)


@given(seeds, st.integers(0, 8), st.integers(0, 8))
@settings(max_examples=60, deadline=None)
def test_evaluate_homomorphism_projectively(seed, lu, lv):
    rng = np.random.default_rng(seed)
    rep = punctured_torus_sym(3)
    u, v = random_word(rng, 2, lu), random_word(rng, 2, lv)
    mu, _ = evaluate(rep, u)
    mv, _ = evaluate(rep, v)
    muv, _ = evaluate(rep, u + v)
    assert projective_angle((mu @ mv).ravel(), muv.ravel()) < 1e-9


def test_evaluate_compound_matches_compound_of_product():
    rep = punctured_torus_sym(4)
    w = freegroup.parse_word("abbaB")
    m, _ = evaluate(rep, w)
    c, _ = evaluate_compound(rep, w, 2)
    assert projective_angle(compound(m, 2).ravel(), c.ravel()) < 1e-10


def test_representation_validation_and_json(tmp_path):
    rep = Representation((np.diag([2.0, 2.0]),))
    assert abs(np.linalg.det(rep.images[0]) - 1) < 1e-12
    assert rep.labels == ("a",)
    with pytest.raises(RepresentationFormatError, match=r"generators\[0\]"):
        Representation((np.zeros((2, 2)),))
    with pytest.raises(RepresentationFormatError, match="condition"):
        Representation((np.diag([1e7, 1e-7]),))
    path = tmp_path / "rep.json"
    orig = punctured_torus_sym(3)
    orig.dump(path)
    back = Representation.load(path)
    assert back.fingerprint() == orig.fingerprint()
    data = json.loads(path.read_text())
    data["generators"][1]["matrix"] = [[1, 2], [3, 4]]
    with pytest.raises(RepresentationFormatError, match=r"generators\[1\]\.matrix"):
        Representation.from_dict(data)
    del data["rank"]
    with pytest.raises(RepresentationFormatError, match="rank"):
        Representation.from_dict(data)
    path.write_text("{not json")
    with pytest.raises(RepresentationFormatError, match="malformed"):
        Representation.load(path)


def test_quasihyperbolic_example():
    np.testing.assert_array_equal(quasihyperbolic_example(2), [[2, 1, 0], [0, 2, 0], [0, 0, 0.25]])
    with pytest.raises(ValueError):
        quasihyperbolic_example(1)
    assert quasihyperbolic_rep(2.0).rank == 1


def test_presets():
    assert make_preset("punctured-torus-sym", "3").n == 3
    assert make_preset("quasi-hyperbolic", "2").rank == 1
    with pytest.raises(ValueError):
        make_preset("nope")
    with pytest.raises(ValueError):
        make_preset("punctured-torus-sym")


def test_perturb():
    rep = punctured_torus_sym(3)
    assert perturb(rep, 0.0, 3) is rep
    p1, p2 = perturb(rep, 1e-3, 7), perturb(rep, 1e-3, 7)
    assert p1.fingerprint() == p2.fingerprint()
    assert p1.fingerprint() != perturb(rep, 1e-3, 8).fingerprint()
    assert all(np.max(np.abs(a - b)) < 1e-2 * np.max(np.abs(b)) for a, b in zip(p1.images, rep.images))
    with pytest.raises(ValueError):
        perturb(rep, -1.0, 0)


def test_conjugate():
    rep = punctured_torus_sym(3)
    h = np.array([[1.0, 0.2, 0], [0, 1, 0.3], [0.1, 0, 1]])
    conj = rep.conjugate(h)
    np.testing.assert_allclose(conj.images[0], h @ rep.images[0] @ np.linalg.inv(h), atol=1e-12)
