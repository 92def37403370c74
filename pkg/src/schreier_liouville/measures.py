"""Finitely supported measures on groups and distributions on orbits.

Weights are exact :class:`~fractions.Fraction` values by default.  Float
mode trades exactness for speed on long horizons: after every step entries
below a prune threshold are dropped and their mass is accumulated in
``OrbitDist.pruned``, which callers add to reported distances as an error
bar.

Convolution is ordered so that ``pushforward(convolve(mu, nu), x)`` equals
``pushforward`` of ``mu`` applied to ``nu . x``: the walk is a left random
walk ``W_n = g_n W_{n-1}``.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Callable, Iterable

from .groups import GroupAction
from .numerics import format_weight, parse_weight

EXACT = "exact"
FLOAT = "float"
PRUNE_THRESHOLD = 1e-15
SUPPORT_LIMIT = 5_000_000
# fixed chunking keeps float sums independent of the worker count
CHUNK = 2048


class SupportLimitExceeded(RuntimeError):
    pass


class EscapedRegion(ValueError):
    pass


def _zero(mode):
    return Fraction(0) if mode == EXACT else 0.0


def _coerce(w, mode):
    if mode == EXACT:
        if isinstance(w, float):
            raise TypeError("float weight in exact mode")
        return Fraction(w)
    return float(w)


class GroupMeasure:
    """A finitely supported measure ``element -> weight``.

    Elements of the shipped actions are canonical, so they serve as their
    own keys.  ``strict=False`` admits sub-probability measures, which the
    scheduler uses for partial sums of a mixture.
    """

    def __init__(self, action: GroupAction, weights: dict, mode: str = EXACT, strict: bool = True):
        self.action = action
        self.mode = mode
        self.weights = {g: _coerce(w, mode) for g, w in weights.items() if w}
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("negative weight")
        if strict:
            total = self.total()
            if mode == EXACT and total != 1:
                raise ValueError(f"total mass {total} != 1")
            if mode == FLOAT and abs(total - 1.0) > 1e-12:
                raise ValueError(f"total mass {total} != 1")

    @classmethod
    def uniform(cls, action, elements: Iterable, mode: str = EXACT):
        elements = list(elements)
        w: dict = defaultdict(int)
        for g in elements:
            w[g] += 1
        n = len(elements)
        return cls(action, {g: Fraction(c, n) for g, c in w.items()}, mode)

    @classmethod
    def point_mass(cls, action, g, mode: str = EXACT):
        return cls(action, {g: 1}, mode)

    def total(self):
        return sum(self.weights.values(), _zero(self.mode))

    def support(self) -> list:
        return list(self.weights)

    def items(self):
        return self.weights.items()

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, g):
        return self.weights.get(g, _zero(self.mode))

    def __eq__(self, other):
        if not isinstance(other, GroupMeasure):
            return NotImplemented
        return self.mode == other.mode and self.weights == other.weights

    def to_float(self) -> GroupMeasure:
        return GroupMeasure(self.action, self.weights, FLOAT, strict=False)

    def scaled(self, c) -> GroupMeasure:
        return GroupMeasure(self.action, {g: w * c for g, w in self.weights.items()}, self.mode, strict=False)

    def write_csv(self, path):
        fmt = self.action.format_element
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["element", "weight"])
            for g in sorted(self.weights, key=_elem_sort_key):
                w.writerow([fmt(g), format_weight(self.weights[g])])

    @classmethod
    def read_csv(cls, action, path, strict: bool = True):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        weights = {}
        mode = EXACT
        for row in rows:
            wt = parse_weight(row["weight"])
            if isinstance(wt, float):
                mode = FLOAT
            g = action.parse_element(row["element"])
            weights[g] = weights.get(g, 0) + wt
        return cls(action, weights, mode, strict=strict)


def _elem_sort_key(g):
    return g.sort_key() if hasattr(g, "sort_key") else g


def mix(action, parts: Iterable[tuple[object, GroupMeasure]], mode: str = EXACT, strict: bool = True) -> GroupMeasure:
    """``sum c_i mu_i`` for weight/measure pairs."""
    out: dict = defaultdict(lambda: _zero(mode))
    for c, mu in parts:
        c = _coerce(c, mode)
        for g, w in mu.items():
            out[g] += c * _coerce(w, mode)
    return GroupMeasure(action, out, mode, strict=strict)


class OrbitDist:
    """A finitely supported distribution ``point -> weight`` on an orbit."""

    def __init__(self, weights: dict, mode: str = EXACT, pruned: float = 0.0):
        self.weights = weights
        self.mode = mode
        self.pruned = pruned

    @classmethod
    def delta(cls, x, mode: str = EXACT):
        return cls({x: Fraction(1) if mode == EXACT else 1.0}, mode)

    def total(self):
        return sum(self.weights.values(), _zero(self.mode))

    def support(self) -> list:
        return list(self.weights)

    def items(self):
        return self.weights.items()

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, x):
        return self.weights.get(x, _zero(self.mode))

    def __eq__(self, other):
        if not isinstance(other, OrbitDist):
            return NotImplemented
        return self.weights == other.weights

    def write_csv(self, path, action: GroupAction):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["point", "weight"])
            for x, wt in self.weights.items():
                w.writerow([action.format_point(x), format_weight(wt)])


def pushforward(mu: GroupMeasure, x, action: GroupAction | None = None) -> OrbitDist:
    """``(mu . x)(y) = sum_g 1{g.x = y} mu(g)``."""
    return step(OrbitDist.delta(x, mu.mode), mu, action, prune=None)


def _partial_step(args):
    chunk, elems, act = args
    out: dict = {}
    get = out.get
    for x, w in chunk:
        for g, c in elems:
            y = act(g, x)
            out[y] = get(y, 0) + w * c
    return out


def step(
    dist: OrbitDist,
    mu: GroupMeasure,
    action: GroupAction | None = None,
    prune: float | None = PRUNE_THRESHOLD,
    workers: int = 1,
    support_limit: int | None = None,
) -> OrbitDist:
    """One application of ``P_mu``: ``out(y) = sum_x dist(x) P_mu(x, y)``.

    Works for signed or sub-stochastic inputs too.  In float mode, entries
    with ``|weight| < prune`` are removed and their absolute mass is added
    to the returned ``pruned`` deficit.  The support is processed in fixed
    key-ordered chunks and the chunk results are merged in order, so the
    output does not depend on ``workers``.
    """
    action = action or mu.action
    mode = mu.mode
    elems = list(mu.items())
    items = list(dist.items())
    chunks = [(items[i : i + CHUNK], elems, action.act) for i in range(0, len(items), CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            partials = list(ex.map(_partial_step, chunks))
    else:
        partials = [_partial_step(c) for c in chunks]
    if len(partials) == 1:
        merged = partials[0]
    else:
        merged = {}
        get = merged.get
        for part in partials:
            for y, w in part.items():
                merged[y] = get(y, 0) + w
    limit = SUPPORT_LIMIT if support_limit is None else support_limit
    if len(merged) > limit:
        raise SupportLimitExceeded(f"support {len(merged)} exceeds limit {limit}")
    pruned = dist.pruned
    out = {}
    if mode == FLOAT and prune:
        for y in sorted(merged, key=action.point_key):
            w = merged[y]
            if abs(w) < prune:
                pruned += abs(w)
            else:
                out[y] = w
    else:
        for y in sorted(merged, key=action.point_key):
            w = merged[y]
            if w:
                out[y] = w
    return OrbitDist(out, mode, pruned)


def convolve(mu: GroupMeasure, nu: GroupMeasure, support_limit: int | None = None) -> GroupMeasure:
    """``(mu * nu)(g) = sum_{ab = g} mu(a) nu(b)``."""
    action = mu.action
    limit = SUPPORT_LIMIT if support_limit is None else support_limit
    out: dict = {}
    for a, wa in mu.items():
        for b, wb in nu.items():
            g = action.compose(a, b)
            out[g] = out.get(g, 0) + wa * wb
            if len(out) > limit:
                raise SupportLimitExceeded(f"convolution support exceeds {limit}")
    return GroupMeasure(action, out, mu.mode, strict=False)


def lazify(mu: GroupMeasure, alpha) -> GroupMeasure:
    """``(1 - alpha) delta_e + alpha mu``."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha={alpha} must lie in (0, 1)")
    action = mu.action
    out = {g: alpha * w for g, w in mu.items()}
    out[action.identity] = out.get(action.identity, 0) + (1 - alpha)
    return GroupMeasure(action, out, mu.mode, strict=False)


def symmetrize_check(mu: GroupMeasure) -> bool:
    """True iff ``mu(g) == mu(g^-1)`` for every ``g``."""
    inv = mu.action.invert
    return all(mu[inv(g)] == w for g, w in mu.items())


def tv(d1: OrbitDist, d2: OrbitDist):
    """The l1 distance ``sum_x |d1(x) - d2(x)|`` (between 0 and 2)."""
    total = _zero(d1.mode)
    for x, w in d1.items():
        total += abs(w - d2[x])
    for x, w in d2.items():
        if x not in d1.weights:
            total += abs(w)
    return total


def tv_error(d1: OrbitDist, d2: OrbitDist) -> float:
    """Worst-case effect of pruning on :func:`tv`."""
    return d1.pruned + d2.pruned


def harmonic_defect(f: dict, mu: GroupMeasure, action: GroupAction, points: Iterable | None = None) -> dict:
    """``f(x) - sum_y P_mu(x, y) f(y)`` at each of ``points``.

    ``f`` must be known on the whole of ``mu . x``; otherwise
    :class:`EscapedRegion` is raised.  If ``points`` is omitted every point
    of ``f``'s domain is used.
    """
    out = {}
    for x in (f if points is None else points):
        acc = 0
        for y, w in pushforward(mu, x, action).items():
            if y not in f:
                raise EscapedRegion(f"mu . {action.format_point(x)} leaves the domain of f")
            acc += w * f[y]
        out[x] = f[x] - acc
    return out


def ball_interior(ball) -> list:
    """Points of a :class:`~schreier_liouville.schreier.SchreierBall` at distance < r."""
    return [v for d, shell in enumerate(ball.shells) if d < ball.radius for v in shell]


def non_degenerate(mu: GroupMeasure) -> bool:
    """Whether ``supp mu`` contains the generating set and its inverses."""
    return all(g in mu.weights for _, g in mu.action.symmetric_generators())


def is_support_within(dist: OrbitDist, region: Callable[[object], bool] | set) -> bool:
    check = region.__contains__ if isinstance(region, (set, frozenset, dict)) else region
    return all(check(x) for x in dist.weights)
