"""Coupling families for the Thompson and lamplighter actions.

A family entry packages a finite region ``K`` of the orbit, a finitely
supported measure ``nu`` on the group, and a certified number ``eps`` such
that ``|nu.x - nu.y|_1 <= eps`` for every generator edge ``x -- y`` inside
``K``.  Each entry also records a per-step displacement bound ``radius``
(the largest Schreier distance any element of ``supp nu`` moves a point of
``K``) and the inradius of ``K`` around the basepoint.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from . import thompson
from .groups import GroupAction, LamplighterAction, ThompsonAction
from .measures import EXACT, GroupMeasure, pushforward, tv
from .numerics import hair_point
from .schreier import orbit_ball, schreier_distance

log = logging.getLogger(__name__)

SUPPORT_CAP = 1 << 16


class ConstructionError(ValueError):
    pass


class CertificateError(AssertionError):
    pass


@dataclass
class FamilyEntry:
    n: int
    K: frozenset
    nu: GroupMeasure
    eps: Fraction
    radius: int | None
    inradius: int
    certified_max: Fraction | None = None
    extra: dict = field(default_factory=dict)


def neighbor_pairs(action: GroupAction, K) -> list[tuple[Any, Any, str]]:
    """Generator edges ``(x, s.x, label)`` with both ends in ``K`` and ``x != s.x``."""
    K = set(K)
    out = []
    for x in sorted(K, key=action.point_key):
        for label, g in action.generators:
            y = action.act(g, x)
            if y != x and y in K:
                out.append((x, y, label))
    return out


def coupling_certificate(action: GroupAction, K, nu: GroupMeasure, eps) -> Fraction:
    """Exhaustively check ``tv(nu.x, nu.y) <= eps`` over generator edges in ``K``.

    Returns the largest observed distance; raises :class:`CertificateError`
    if any edge exceeds ``eps``.
    """
    cache = {}

    def push(x):
        if x not in cache:
            cache[x] = pushforward(nu, x, action)
        return cache[x]

    worst = Fraction(0)
    for x, y, label in neighbor_pairs(action, K):
        d = tv(push(x), push(y))
        if d > eps:
            raise CertificateError(
                f"tv(nu.{action.format_point(x)}, nu.{action.format_point(y)}) = {d} > eps = {eps}"
            )
        worst = max(worst, d)
    return worst


def displacement(action: GroupAction, nu: GroupMeasure, region, limit: int = 64, max_nodes: int = 500_000) -> int | None:
    """``max d_X(x, g.x)`` over ``g`` in ``supp nu`` and ``x`` in ``region``.

    Distances are exact graph distances from bidirectional BFS; None means
    some distance could not be resolved within the search budget.
    """
    best = 0
    seen = {}
    for x in region:
        for g in nu.weights:
            y = action.act(g, x)
            key = (x, y)
            if key not in seen:
                seen[key] = schreier_distance(action, x, y, limit=limit, max_nodes=max_nodes)
            d = seen[key]
            if d is None:
                return None
            best = max(best, d)
    return best


# -- Thompson hairs -------------------------------------------------------------


def hair_conjugator(K, depth: int) -> thompson.PLMap:
    """The element sending the sorted points of ``K`` to hair positions
    ``depth + 1, depth + 2, ...``."""
    pts = sorted(K)
    targets = [hair_point(depth + i) for i in range(1, len(pts) + 1)]
    return thompson.map_tuple(pts, targets)


def thompson_family(
    n: int,
    K,
    action: ThompsonAction | None = None,
    depth: int | None = None,
    basepoint=None,
    with_radius: bool = False,
    mode: str = EXACT,
) -> FamilyEntry:
    """Conjugated hair windows ``{g^-1 x0^k g : |k| <= n}``.

    ``g`` pushes the sorted points of ``K`` to consecutive hair positions
    ``M+1, ..., M+|K|`` with ``M = n + 1``, far enough that every shift by
    ``|k| <= n`` stays on the hair.  Points at sorted indices ``i, i'`` then
    have windows offset by ``|i - i'|`` and
    ``|nu.x - nu.y|_1 = 2|i - i'|/(2n + 1) <= 2(|K| - 1)/(2n + 1)``.
    """
    action = action or ThompsonAction()
    K = frozenset(K)
    if n < len(K):
        raise ConstructionError(f"n={n} must be at least |K|={len(K)}")
    M = n + 1 if depth is None else depth
    if M + 1 - n < 2:
        raise ConstructionError(f"depth {M} too shallow for window {n}")
    g = hair_conjugator(K, M)
    ginv = thompson.pl_invert(g)
    elems = []
    power = thompson.pl_power(thompson.X0, -n)
    for k in range(-n, n + 1):
        elems.append(thompson.pl_compose(ginv, thompson.pl_compose(power, g)))
        power = thompson.pl_compose(thompson.X0, power)
    nu = GroupMeasure.uniform(action, elems, mode)
    eps = Fraction(2 * (len(K) - 1), 2 * n + 1)
    worst = coupling_certificate(action, K, nu, eps)
    o = action.basepoint if basepoint is None else basepoint
    r_in = _thompson_inradius(action, o, K)
    radius = displacement(action, nu, sorted(K)) if with_radius else None
    return FamilyEntry(n, K, nu, eps, radius, r_in, worst, {"conjugator": g, "depth": M})


def _thompson_inradius(action, o, K):
    if o not in K:
        return -1
    r = 0
    while True:
        ball = orbit_ball(action, o, r + 1)
        if any(v not in K for v in ball.shells[r + 1]):
            return r
        r += 1


def hair_shift_positions(entry: FamilyEntry) -> dict:
    """For each point of ``K``: the hair positions reached by the window."""
    M = entry.extra["depth"]
    n = entry.n
    out = {}
    for i, x in enumerate(sorted(entry.K), start=1):
        out[x] = [M + i - k for k in range(-n, n + 1)]
    return out


# -- lamplighter ----------------------------------------------------------------


def lamplighter_family(
    n: int,
    action: LamplighterAction,
    support_cap: int = SUPPORT_CAP,
    mode: str = EXACT,
    with_radius: bool = True,
) -> FamilyEntry:
    """Uniform measure on the finite lamp group ``A_n = (+)_{B(o,n)} Z/2``.

    ``K_n`` is the set of configurations supported in the base ball
    ``B(o, n)``.  ``A_n`` acts on ``K_n`` simply transitively, so ``nu . x``
    is uniform on the coset ``x + A_n`` and every pair in ``K_n`` is coupled
    exactly (``eps = 0``).
    """
    base = action.base
    ball = orbit_ball(base, base.basepoint, n)
    sites = ball.vertices
    size = 1 << len(sites)
    if size > support_cap:
        raise ConstructionError(f"|A_n| = 2^{len(sites)} exceeds cap {support_cap}")
    configs = [
        tuple(sorted(c, key=base.point_key))
        for r in range(len(sites) + 1)
        for c in itertools.combinations(sites, r)
    ]
    elems = [(base.identity, a) for a in configs]
    nu = GroupMeasure.uniform(action, elems, mode)
    K = frozenset(configs)
    worst = coupling_certificate(action, K, nu, Fraction(0))
    radius = lamp_displacement(action, sites) if with_radius else None
    r_in = lamp_inradius(action, n)
    return FamilyEntry(n, K, nu, Fraction(0), radius, r_in, worst, {"sites": tuple(sites)})


def lamp_inradius(action: LamplighterAction, n: int) -> int:
    """Inradius of ``{configs supported in B(o, n)}`` around the empty config."""
    base = action.base
    sites = set(orbit_ball(base, base.basepoint, n).dist)
    r = 0
    while True:
        ball = orbit_ball(action, (), r + 1)
        if any(not set(c) <= sites for c in ball.shells[r + 1]):
            return r
        r += 1


def lamp_word_length(action: LamplighterAction, a) -> int:
    """Word length of the pure lamp element ``(e, a)`` over a tree-shaped base.

    The lamplighter must visit every lit site and come home: ``|a|`` flips
    plus two traversals of each edge of the subtree spanning ``a`` and
    ``o``.  Valid for the Z and F2 bases, whose Schreier graphs are trees.
    """
    base = action.base
    o = base.basepoint
    edges = set()
    for site in a:
        edges.update(_tree_path_edges(base, o, site))
    return len(a) + 2 * len(edges)


def _tree_path_edges(base, o, site):
    if isinstance(site, int):
        lo, hi = sorted((o, site))
        return {(k, k + 1) for k in range(lo, hi)}
    # free group: the geodesic from e to a reduced word runs through its prefixes
    return {(site[:k], site[: k + 1]) for k in range(len(site))}


def lamp_displacement(action: LamplighterAction, sites) -> int:
    """Largest word length of ``(e, a)`` with ``a`` ranging over subsets of ``sites``.

    Word length bounds ``d(x, (e, a).x)`` for every configuration ``x``;
    the maximum is attained by lighting all sites.
    """
    return lamp_word_length(action, tuple(sites))


def lamp_word_length_bfs(action: LamplighterAction, a, limit: int = 40) -> int:
    """Word length of ``(e, a)`` by BFS in the wreath group (small cases only)."""
    a = tuple(sorted(a, key=action.base.point_key))
    target = (action.base.identity, a)
    gens = [g for _, g in action.symmetric_generators()]
    seen = {action.identity}
    frontier = [action.identity]
    d = 0
    while frontier and d <= limit:
        if target in seen:
            return d
        d += 1
        nxt = []
        for u in frontier:
            for s in gens:
                v = action.compose(s, u)
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    if target in seen:
        return d
    raise ConstructionError("target not reached within limit")


# -- family builders ---------------------------------------------------------------


def thompson_builder(rho_of_n: dict, action: ThompsonAction | None = None, mode: str = EXACT):
    """Builder for :class:`~schreier_liouville.liouville.CouplingFamily` with
    ``K_n = B(o, rho_of_n[n])``."""
    action = action or ThompsonAction()
    balls = {}

    def build(n):
        rho = rho_of_n[n]
        if rho not in balls:
            balls[rho] = frozenset(orbit_ball(action, action.basepoint, rho).dist)
        return thompson_family(n, balls[rho], action, mode=mode)

    return build


def lamplighter_builder(action: LamplighterAction, support_cap: int = SUPPORT_CAP, mode: str = EXACT):
    def build(n):
        return lamplighter_family(n, action, support_cap=support_cap, mode=mode)

    return build
