"""Thompson's group F as exact piecewise-linear homeomorphisms of [0, 1].

Elements are kept in a single canonical form: the minimal list of
breakpoints ``(x, y)`` from ``(0, 0)`` to ``(1, 1)``.  Equal maps have
identical breakpoint tuples, so a :class:`PLMap` hashes and compares by
value.

Generators follow the usual convention::

    x0(t) = t/2 on [0,1/2],  t - 1/4 on [1/2,3/4],  2t - 1 on [3/4,1]
    x1    = identity on [0,1/2], a half-scale copy of x0 on [1/2,1]

so ``x0`` moves the ray ``1 - 2**-m`` (a "hair") one step toward 1/2.
"""

from __future__ import annotations

from bisect import bisect_right
from typing import Iterable, Sequence

from .numerics import (
    Dyadic,
    HALF,
    ONE,
    ZERO,
    _trailing_zeros,
    dyadic_compare,
    dyadic_normalize,
    parse_dyadic,
)


class PLMapError(ValueError):
    pass


def _is_pow2_ratio(a: int, b: int) -> bool:
    # a, b > 0
    return (a >> _trailing_zeros(a)) == (b >> _trailing_zeros(b))


def _log2_ratio(a: int, b: int) -> int:
    return _trailing_zeros(a) - _trailing_zeros(b)


def _diff(p: Dyadic, q: Dyadic) -> tuple[int, int]:
    """``p - q`` as an unnormalized (numerator, exponent) pair."""
    e = max(p.exp, q.exp)
    return (p.num << (e - p.exp)) - (q.num << (e - q.exp)), e


class PLMap:
    """An element of F given by its canonical breakpoint list."""

    __slots__ = ("points", "_xs", "_scale", "_hash")

    def __init__(self, points: Sequence[tuple[Dyadic, Dyadic]], check: bool = True):
        pts = tuple(points)
        if check:
            pts = _canonicalize(pts)
            _validate(pts)
        self.points = pts
        self._xs = None
        self._scale = 0
        self._hash = None

    # -- evaluation -------------------------------------------------------

    def _index(self):
        if self._xs is None:
            E = max(x.exp for x, _ in self.points)
            self._scale = E
            self._xs = [x.num << (E - x.exp) for x, _ in self.points]
        return self._xs, self._scale

    def __call__(self, t: Dyadic) -> Dyadic:
        return pl_eval(self, t)

    def slopes_log2(self) -> list[int]:
        out = []
        for (x0, y0), (x1, y1) in zip(self.points, self.points[1:]):
            dx, ex = _diff(x1, x0)
            dy, ey = _diff(y1, y0)
            # (dy/2^ey)/(dx/2^ex)
            out.append(_log2_ratio(dy, dx) + ex - ey)
        return out

    # -- identity ---------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, PLMap):
            return NotImplemented
        return self.points == other.points

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.points)
        return self._hash

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def sort_key(self):
        return tuple((x.num, x.exp, y.num, y.exp) for x, y in self.points)

    def __reduce__(self):
        return (PLMap, (self.points, False))

    def __repr__(self):
        return f"PLMap({format_plmap(self)!r})"

    def __len__(self):
        return len(self.points)


def _validate(pts):
    if len(pts) < 2 or pts[0] != (ZERO, ZERO) or pts[-1] != (ONE, ONE):
        raise PLMapError("breakpoints must run from (0,0) to (1,1)")
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        dx, _ = _diff(x1, x0)
        dy, _ = _diff(y1, y0)
        if dx <= 0 or dy <= 0:
            raise PLMapError("breakpoints must be strictly increasing")
        if not _is_pow2_ratio(dx, dy):
            raise PLMapError(f"slope between {x0} and {x1} is not a power of 2")


def _canonicalize(pts):
    """Drop interior breakpoints that are collinear with their neighbours."""
    if len(pts) <= 2:
        return tuple(pts)
    out = [pts[0]]
    for i in range(1, len(pts) - 1):
        xa, ya = out[-1]
        xb, yb = pts[i]
        xc, yc = pts[i + 1]
        dx1, ex1 = _diff(xb, xa)
        dy1, ey1 = _diff(yb, ya)
        dx2, ex2 = _diff(xc, xb)
        dy2, ey2 = _diff(yc, yb)
        # dy1/dx1 == dy2/dx2 with exponents folded in
        e1 = ex1 - ey1
        e2 = ex2 - ey2
        lhs = dy1 * dx2
        rhs = dy2 * dx1
        if e1 > e2:
            lhs <<= e1 - e2
        else:
            rhs <<= e2 - e1
        if lhs != rhs:
            out.append(pts[i])
    out.append(pts[-1])
    return tuple(out)


def _d(num, exp):
    return dyadic_normalize(num, exp)


IDENTITY = PLMap([(ZERO, ZERO), (ONE, ONE)])
X0 = PLMap([(ZERO, ZERO), (HALF, _d(1, 2)), (_d(3, 2), HALF), (ONE, ONE)])
X1 = PLMap(
    [
        (ZERO, ZERO),
        (HALF, HALF),
        (_d(3, 2), _d(5, 3)),
        (_d(7, 3), _d(3, 2)),
        (ONE, ONE),
    ]
)
GENERATORS = (("x0", X0), ("x1", X1))


def pl_eval(g: PLMap, t: Dyadic) -> Dyadic:
    """Exact image ``g(t)``."""
    xs, E = g._index()
    q = t.exp
    key = t.num << (E - q) if q <= E else t.num >> (q - E)
    i = bisect_right(xs, key) - 1
    pts = g.points
    if i >= len(pts) - 1:
        i = len(pts) - 2
    x0, y0 = pts[i]
    x1, y1 = pts[i + 1]
    if t.num == x0.num and t.exp == x0.exp:
        return y0
    dx, ex = _diff(x1, x0)
    dy, ey = _diff(y1, y0)
    a = _log2_ratio(dy, dx) + ex - ey
    # y0 + 2^a (t - x0)
    d, ed = _diff(t, x0)
    ed -= a
    e = max(ed, y0.exp, 0)
    return dyadic_normalize((y0.num << (e - y0.exp)) + (d << (e - ed)), e)


def pl_invert(g: PLMap) -> PLMap:
    return PLMap([(y, x) for x, y in g.points], check=False)


def pl_compose(g: PLMap, h: PLMap) -> PLMap:
    """The map ``t -> g(h(t))``."""
    hinv = pl_invert(h)
    xs = {x for x, _ in h.points}
    xs.update(pl_eval(hinv, x) for x, _ in g.points)
    pts = [(x, pl_eval(g, pl_eval(h, x))) for x in sorted(xs)]
    return PLMap(_canonicalize(pts), check=False)


def pl_power(g: PLMap, k: int) -> PLMap:
    if k < 0:
        g, k = pl_invert(g), -k
    out = IDENTITY
    base = g
    while k:
        if k & 1:
            out = pl_compose(out, base)
        k >>= 1
        if k:
            base = pl_compose(base, base)
    return out


def pl_word(letters: Iterable[tuple[PLMap, int]]) -> PLMap:
    """Compose ``g1^e1 g2^e2 ...`` (leftmost factor applied last)."""
    out = IDENTITY
    for g, e in letters:
        out = pl_compose(out, pl_power(g, e))
    return out


# -- strong transitivity ----------------------------------------------------


def standard_partition(a: Dyadic, b: Dyadic) -> list[tuple[Dyadic, Dyadic]]:
    """Minimal cover of ``[a, b]`` by standard dyadic intervals, left to right.

    Greedy: from the current left end ``p = k/2^q`` (k odd) take the
    largest ``[p, p + 2^-s]`` with ``s >= q`` that still fits.
    """
    if dyadic_compare(a, b) >= 0:
        raise PLMapError(f"empty interval [{a}, {b}]")
    out = []
    p = a
    while p != b:
        rem, erem = _diff(b, p)
        # largest s with 2^-s <= rem, i.e. 2^(erem - s) <= rem
        s = erem - (rem.bit_length() - 1)
        s = max(s, p.exp) if p.num else s
        q = dyadic_normalize((p.num << (s - p.exp)) + 1, s)
        out.append((p, q))
        p = q
    return out


def _split(leaf):
    a, b = leaf
    d, e = _diff(b, a)
    mid = dyadic_normalize((a.num << (e + 1 - a.exp)) + d, e + 1)
    return (a, mid), (mid, b)


def _leaf_size_exp(leaf):
    d, e = _diff(leaf[1], leaf[0])
    return e - _trailing_zeros(d)


def _balance(leaves: list, target: int) -> list:
    """Split the leftmost largest leaf until there are ``target`` leaves."""
    leaves = list(leaves)
    while len(leaves) < target:
        best = min(range(len(leaves)), key=lambda i: (_leaf_size_exp(leaves[i]), i))
        leaves[best : best + 1] = _split(leaves[best])
    return leaves


def map_tuple(sources: Sequence[Dyadic], targets: Sequence[Dyadic]) -> PLMap:
    """An element of F sending ``sources[i]`` to ``targets[i]``.

    Both lists must be strictly increasing and lie in the open interval
    (0, 1).  Each gap between consecutive points (with 0 and 1 adjoined) is
    cut into standard dyadic intervals, the shorter side is refined until
    the counts agree, and leaves are matched in order.
    """
    if len(sources) != len(targets):
        raise PLMapError("sources and targets differ in length")
    for seq in (sources, targets):
        for u in seq:
            if u == ZERO or u == ONE:
                raise PLMapError("points must lie in the open interval (0, 1)")
        for u, v in zip(seq, seq[1:]):
            if dyadic_compare(u, v) >= 0:
                raise PLMapError("points must be strictly increasing")
    a = [ZERO, *sources, ONE]
    b = [ZERO, *targets, ONE]
    pts = [(ZERO, ZERO)]
    for i in range(len(a) - 1):
        la = standard_partition(a[i], a[i + 1])
        lb = standard_partition(b[i], b[i + 1])
        n = max(len(la), len(lb))
        la = _balance(la, n)
        lb = _balance(lb, n)
        pts.extend((u[1], v[1]) for u, v in zip(la, lb))
    return PLMap(pts)


def hair_position(t: Dyadic) -> int | None:
    """``m`` if ``t = 1 - 2**-m`` with ``m >= 2``, else None."""
    if t.exp >= 2 and t.num == (1 << t.exp) - 1:
        return t.exp
    return None


# -- text form ----------------------------------------------------------------


def _fmt(d: Dyadic) -> str:
    return f"{d.num}/{1 << d.exp}"


def format_plmap(g: PLMap) -> str:
    return "; ".join(f"{_fmt(x)}:{_fmt(y)}" for x, y in g.points)


def parse_plmap(text: str) -> PLMap:
    pts = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        xs, ys = chunk.split(":")
        pts.append((parse_dyadic(xs), parse_dyadic(ys)))
    return PLMap(pts)
