import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schreier_liouville.groups import FreeGroupAction, ThompsonAction, ZAction
from schreier_liouville.measures import (
    EXACT,
    FLOAT,
    EscapedRegion,
    GroupMeasure,
    OrbitDist,
    ball_interior,
    convolve,
    harmonic_defect,
    lazify,
    mix,
    non_degenerate,
    pushforward,
    step,
    symmetrize_check,
    tv,
    tv_error,
)
from schreier_liouville.numerics import HALF, dyadic_normalize
from schreier_liouville.schreier import orbit_ball
from schreier_liouville.thompson import IDENTITY, X0, X1, pl_compose, pl_invert, pl_power

T = ThompsonAction()
Z = ZAction()
F = FreeGroupAction()
Q = lambda n, e: dyadic_normalize(n, e)  # noqa: E731


def uniform_S(action, mode=EXACT):
    return GroupMeasure.uniform(action, [g for _, g in action.symmetric_generators()], mode)


def test_pushforward_examples():
    mu = GroupMeasure.uniform(T, [X0, pl_invert(X0)])
    assert pushforward(mu, HALF).weights == {Q(1, 2): Fraction(1, 2), Q(3, 2): Fraction(1, 2)}
    assert pushforward(GroupMeasure.point_mass(T, IDENTITY), Q(3, 3)).weights == {Q(3, 3): 1}
    mu1 = GroupMeasure.uniform(T, [X1, pl_invert(X1)])
    assert pushforward(mu1, Q(1, 2)).weights == {Q(1, 2): 1}


def test_step_examples():
    mu = uniform_S(Z)
    d = OrbitDist.delta(0)
    assert step(d, mu) == pushforward(mu, 0)
    two = step(step(d, mu), mu)
    assert two.weights == {-2: Fraction(1, 4), 0: Fraction(1, 2), 2: Fraction(1, 4)}
    e = GroupMeasure.point_mass(Z, 0)
    assert step(two, e) == two


def test_convolution_examples():
    a, b = pl_power(X0, 2), X1
    assert convolve(GroupMeasure.point_mass(T, a), GroupMeasure.point_mass(T, b)).weights == {pl_compose(a, b): 1}
    mu = uniform_S(T)
    assert convolve(GroupMeasure.point_mass(T, IDENTITY), mu) == GroupMeasure(T, mu.weights, strict=False)
    s = GroupMeasure.uniform(T, [X0, pl_invert(X0)])
    c = convolve(s, s)
    assert c.weights == {pl_power(X0, 2): Fraction(1, 4), IDENTITY: Fraction(1, 2), pl_power(X0, -2): Fraction(1, 4)}


def test_lazify_examples():
    mu = uniform_S(T)
    lz = lazify(mu, Fraction(1, 2))
    assert lz[IDENTITY] == Fraction(1, 2)
    e = GroupMeasure.point_mass(T, IDENTITY)
    assert lazify(e, Fraction(1, 3)).weights == {IDENTITY: 1}
    for x in orbit_ball(T, HALF, 2).vertices:
        assert pushforward(lz, x)[x] >= Fraction(1, 2)
    with pytest.raises(ValueError):
        lazify(mu, 0)


def test_symmetrize_examples():
    assert symmetrize_check(uniform_S(T))
    assert not symmetrize_check(GroupMeasure.point_mass(T, X0))
    g = X1
    conj = [pl_compose(pl_invert(g), pl_compose(pl_power(X0, k), g)) for k in range(-3, 4)]
    assert symmetrize_check(GroupMeasure.uniform(T, conj))


def test_tv_examples():
    u = lambda pts: OrbitDist({p: Fraction(1, len(pts)) for p in pts})  # noqa: E731
    assert tv(u([0, 1]), u([0, 1])) == 0
    assert tv(u([0, 1]), u([2, 3])) == 2
    assert tv(u([0, 1, 2]), u([1, 2, 3])) == Fraction(2, 3)


def test_harmonic_defect_examples():
    mu = uniform_S(Z)
    ball = orbit_ball(Z, 0, 5)
    const = {x: 7 for x in ball.vertices}
    assert set(harmonic_defect(const, mu, Z, ball_interior(ball)).values()) == {0}
    lin = {x: x for x in ball.vertices}
    assert set(harmonic_defect(lin, mu, Z, ball_interior(ball)).values()) == {0}
    with pytest.raises(EscapedRegion):
        harmonic_defect(lin, mu, Z, ball.vertices)
    # indicator of o under the lazy walk: 1 - 1/2
    ind = {x: int(x == 0) for x in ball.vertices}
    assert harmonic_defect(ind, lazify(mu, Fraction(1, 2)), Z, [0])[0] == Fraction(1, 2)


def test_mass_and_strictness():
    with pytest.raises(ValueError):
        GroupMeasure(Z, {1: Fraction(1, 2)})
    with pytest.raises(ValueError):
        GroupMeasure(Z, {1: Fraction(3, 2), 2: Fraction(-1, 2)})
    part = mix(Z, [(Fraction(1, 3), uniform_S(Z))], strict=False)
    assert part.total() == Fraction(1, 3)


def random_free_measure(rng, size):
    elems = set()
    while len(elems) < size:
        w = tuple(rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(0, 4)))
        from schreier_liouville.groups import free_reduce

        elems.add(free_reduce(w))
    raw = {g: rng.randint(1, 9) for g in elems}
    tot = sum(raw.values())
    return GroupMeasure(F, {g: Fraction(c, tot) for g, c in raw.items()})


@settings(max_examples=60)
@given(st.integers(0, 10_000))
def test_convolution_pushforward_compatibility(seed):
    rng = random.Random(seed)
    mu, nu = random_free_measure(rng, 4), random_free_measure(rng, 4)
    x = (1, 2)
    lhs = pushforward(convolve(mu, nu), x, F)
    rhs = step(pushforward(nu, x, F), mu, F)
    assert lhs == rhs
    assert lhs.total() == 1


@settings(max_examples=60)
@given(st.integers(0, 10_000))
def test_l1_contraction_and_mass(seed):
    rng = random.Random(seed)
    mu = random_free_measure(rng, 5)
    d1 = pushforward(random_free_measure(rng, 3), (), F)
    d2 = pushforward(random_free_measure(rng, 3), (1,), F)
    before = tv(d1, d2)
    s1, s2 = step(d1, mu, F), step(d2, mu, F)
    assert tv(s1, s2) <= before
    assert s1.total() == 1 and s2.total() == 1


def test_float_pruning_accounting():
    mu = GroupMeasure(Z, {1: 1 - 1e-17 * 2, -1: 1e-17, 5: 1e-17}, FLOAT, strict=False)
    d = step(OrbitDist.delta(0, FLOAT), mu, Z, prune=1e-15)
    assert set(d.weights) == {1}
    assert d.pruned == pytest.approx(2e-17)
    assert d.total() + d.pruned == pytest.approx(1.0, abs=1e-15)
    assert tv_error(d, d) == pytest.approx(4e-17)


def test_float_walk_matches_exact_within_error():
    mu = lazify(uniform_S(T), Fraction(1, 2))
    mf = mu.to_float()
    de, df = OrbitDist.delta(HALF), OrbitDist.delta(HALF, FLOAT)
    ye, yf = OrbitDist.delta(Q(1, 2)), OrbitDist.delta(Q(1, 2), FLOAT)
    for _ in range(8):
        de, df = step(de, mu, T), step(df, mf, T)
        ye, yf = step(ye, mu, T), step(yf, mf, T)
    assert abs(float(tv(de, ye)) - tv(df, yf)) <= tv_error(df, yf) + 1e-12


def test_step_independent_of_workers():
    mu = lazify(uniform_S(T), Fraction(1, 2))
    d = OrbitDist.delta(HALF)
    for _ in range(6):
        d = step(d, mu, T)
    # enough support for several chunks
    import schreier_liouville.measures as M

    old = M.CHUNK
    M.CHUNK = 8
    try:
        a = step(d, mu, T, workers=1)
        b = step(d, mu, T, workers=2)
    finally:
        M.CHUNK = old
    assert list(a.weights.items()) == list(b.weights.items())


def test_measure_csv_round_trip(tmp_path):
    mu = uniform_S(T)
    mu.write_csv(tmp_path / "mu.csv")
    back = GroupMeasure.read_csv(T, tmp_path / "mu.csv")
    assert back == mu
    assert "1/4" in (tmp_path / "mu.csv").read_text()


def test_non_degenerate():
    assert non_degenerate(uniform_S(T))
    assert not non_degenerate(GroupMeasure.uniform(T, [X0, pl_invert(X0)]))
