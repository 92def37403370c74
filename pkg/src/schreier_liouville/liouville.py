"""Assembling a Liouville measure from a family of coupling measures.

Given finite regions ``K_n`` exhausting the orbit and finitely supported
``nu_n`` with ``|nu_n.x - nu_n.y|_1 <= eps_n`` across every edge of
``K_n``, the measure ``mu = sum_j c_j zeta_j`` with ``zeta_0`` uniform on
``S u S^-1`` and ``zeta_j = nu_{n_j}`` satisfies

    |mu^(m_j).x - mu^(m_j).y|_1 <= 2 (c_0 + ... + c_{j-1})^{m_j}
                                   + 2 (m_j - 1) R_{n_{j-1}} eps_{n_j}

for neighbouring ``x, y``, provided ``m_j`` and ``n_j`` are picked by
:func:`select_m` and :func:`select_n`.  Everything here works with the
truncation at level ``J`` renormalised to mass one.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from .constructions import CertificateError, FamilyEntry, coupling_certificate, displacement
from .groups import GroupAction
from .measures import EXACT, PRUNE_THRESHOLD, GroupMeasure, OrbitDist, mix, pushforward, step, tv
from .numerics import format_weight

log = logging.getLogger(__name__)


class FamilyExhausted(RuntimeError):
    pass


class FamilyError(ValueError):
    pass


class ContainmentViolation(AssertionError):
    pass


class BoundViolation(AssertionError):
    pass


class CouplingFamily:
    """Lazily built family ``n -> (K_n, nu_n, eps_n, radius_n, r_n)``.

    ``builder(n)`` returns a :class:`FamilyEntry`; ``grid`` lists the
    admissible indices.  Entries are checked on construction: ``K_n`` must
    grow and ``eps_n`` must not increase along the grid.
    """

    def __init__(self, action: GroupAction, builder: Callable[[int], FamilyEntry], grid: Iterable[int], basepoint=None):
        self.action = action
        self.builder = builder
        self.grid = sorted(set(grid))
        self.basepoint = action.basepoint if basepoint is None else basepoint
        self._entries: dict[int, FamilyEntry] = {}

    def __getitem__(self, n: int) -> FamilyEntry:
        if n not in self._entries:
            if n not in self.grid:
                raise KeyError(n)
            entry = self.builder(n)
            self._check_monotone(n, entry)
            self._entries[n] = entry
        return self._entries[n]

    def _check_monotone(self, n, entry):
        below = [k for k in self._entries if k < n]
        above = [k for k in self._entries if k > n]
        if below:
            prev = self._entries[max(below)]
            if not prev.K <= entry.K:
                raise FamilyError(f"K_{max(below)} is not contained in K_{n}")
            if prev.eps < entry.eps:
                raise FamilyError(f"eps increases from n={max(below)} to n={n}")
        if above:
            nxt = self._entries[min(above)]
            if not entry.K <= nxt.K or entry.eps < nxt.eps:
                raise FamilyError(f"entry n={n} breaks monotonicity against n={min(above)}")

    def after(self, n: int) -> list[int]:
        return [k for k in self.grid if k > n]

    def radius(self, n: int) -> int:
        """Displacement bound of ``nu_n`` over ``K_n``, computed on demand."""
        entry = self[n]
        if entry.radius is None:
            r = displacement(self.action, entry.nu, sorted(entry.K, key=self.action.point_key))
            if r is None:
                raise FamilyError(f"displacement of nu_{n} could not be resolved by BFS")
            entry.radius = r
        return entry.radius

    def verify(self, n: int) -> Fraction:
        entry = self[n]
        return coupling_certificate(self.action, entry.K, entry.nu, entry.eps)


# -- weights and indices ---------------------------------------------------------


def geometric_weights(ratio, count: int) -> list[Fraction]:
    """``c_j = (1 - ratio) ratio^j`` for ``j < count``."""
    ratio = Fraction(ratio)
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    return [(1 - ratio) * ratio**j for j in range(count)]


def _pow_le(base: Fraction, m: int, bound: Fraction) -> bool:
    # base^m <= bound, exactly
    return base.numerator**m * bound.denominator <= bound.numerator * base.denominator**m


def select_m(c, j: int) -> int:
    """Least ``m >= 1`` with ``(c_0 + ... + c_{j-1})^m <= 1/j``."""
    if j < 1:
        raise ValueError("j must be at least 1")
    s = sum((Fraction(x) for x in c[:j]), Fraction(0))
    if s >= 1:
        raise ValueError(f"partial sum {s} >= 1: no admissible m")
    bound = Fraction(1, j)
    if s == 0:
        return 1
    # start just below the real-valued solution, then walk up exactly
    guess = max(1, math.floor(math.log(j) / -math.log(float(s))) - 1) if j > 1 else 1
    while guess > 1 and _pow_le(s, guess - 1, bound):
        guess -= 1
    while not _pow_le(s, guess, bound):
        guess += 1
    return guess


def select_n(family: CouplingFamily, m_j: int, prev_radius: int, j: int, prev_n: int) -> int:
    """Least grid index ``n > prev_n`` with ``m_j R <= r_n`` and ``m_j R eps_n <= 1/j``."""
    need = m_j * prev_radius
    for n in family.after(prev_n):
        entry = family[n]
        if need <= entry.inradius and need * entry.eps <= Fraction(1, j):
            return n
    raise FamilyExhausted(
        f"j={j}: no family index > {prev_n} has inradius >= {need} and eps <= {Fraction(1, j * need) if need else 'any'}"
        f" (grid: {family.grid})"
    )


@dataclass
class Schedule:
    """Selected scales of a truncated mixture.

    ``n[0]`` and ``radius[0]`` describe ``zeta_0`` (uniform on the
    generators, displacement 1); ``n[j], m[j]`` for ``j >= 1`` come from
    :func:`select_n` and :func:`select_m`.
    """

    c: list
    n: list
    m: list
    radius: list
    J: int
    eps: list = field(default_factory=list)
    inradius: list = field(default_factory=list)
    exhausted: str | None = None

    @property
    def complete(self) -> bool:
        return self.exhausted is None

    @property
    def c_prime(self) -> list[Fraction]:
        total = sum(self.c[: self.J + 1], Fraction(0))
        return [Fraction(x) / total for x in self.c[: self.J + 1]]

    def bad_mass(self, j: int) -> Fraction:
        """``(c'_0 + ... + c'_{j-1})^{m_j}``."""
        return sum(self.c_prime[:j], Fraction(0)) ** self.m[j]

    def bound(self, j: int) -> Fraction | None:
        """``B_j = 2 (sum_{i<j} c'_i)^{m_j} + 2 (m_j - 1) R_{n_{j-1}} eps_{n_j}``."""
        if self.eps[j] is None:
            return None
        return 2 * self.bad_mass(j) + 2 * (self.m[j] - 1) * self.radius[j - 1] * self.eps[j]

    def edge_bound(self, j: int) -> Fraction | None:
        """``B_j`` with the starting edge counted: ``(2 (m_j - 1) R + 1) eps``."""
        if self.eps[j] is None:
            return None
        return 2 * self.bad_mass(j) + (2 * (self.m[j] - 1) * self.radius[j - 1] + 1) * self.eps[j]

    def rows(self) -> list[dict]:
        cp = self.c_prime
        out = []
        for j in range(1, self.J + 1):
            out.append(
                {
                    "j": j,
                    "n_j": self.n[j],
                    "m_j": self.m[j],
                    "c_j": self.c[j],
                    "c'_j": cp[j],
                    "eps_{n_j}": self.eps[j],
                    "radius_{n_{j-1}}": self.radius[j - 1] if j - 1 < len(self.radius) else None,
                    "r_{n_j}": self.inradius[j],
                    "bound B_j": self.bound(j),
                    "nominal 3/j": Fraction(3, j),
                }
            )
        return out

    def write_csv(self, path):
        rows = self.rows()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["j", "n_j", "m_j", "c_j", "c'_j", "eps_{n_j}", "radius_{n_{j-1}}", "r_{n_j}", "bound B_j", "nominal 3/j"]
            )
            for r in rows:
                w.writerow([_cell(v) for v in r.values()])


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (Fraction, float)):
        return format_weight(v)
    return str(v)


def build_schedule(
    family: CouplingFamily, c, J: int, n0: int = -1, radius0: int = 1, allow_partial: bool = False
) -> Schedule:
    """Pick ``m_j`` and ``n_j`` for ``j = 1..J``.

    ``n0 = -1`` marks ``zeta_0`` as not belonging to the family.  With
    ``allow_partial`` an exhausted family does not raise: the remaining
    levels keep their ``m_j`` with ``n_j`` unset and ``exhausted`` holds
    the reason.
    """
    if len(c) < J + 1:
        raise ValueError("need at least J + 1 weights")
    ns, ms, radii, eps, rin = [n0], [0], [radius0], [None], [None]
    exhausted = None
    for j in range(1, J + 1):
        m = select_m(c, j)
        ms.append(m)
        if exhausted is None:
            try:
                n = select_n(family, m, radii[j - 1], j, ns[j - 1])
            except FamilyExhausted as exc:
                if not allow_partial:
                    raise
                exhausted = str(exc)
                log.warning("%s", exc)
        if exhausted is not None:
            ns.append(None)
            eps.append(None)
            rin.append(None)
            continue
        entry = family[n]
        ns.append(n)
        eps.append(entry.eps)
        rin.append(entry.inradius)
        log.info("j=%d: m=%d n=%d eps=%s r=%d", j, m, n, entry.eps, entry.inradius)
        if j < J:
            radii.append(family.radius(n))
    return Schedule(list(c[: J + 1]), ns, ms, radii, J, eps, rin, exhausted)


def uniform_generators(action: GroupAction, mode: str = EXACT) -> GroupMeasure:
    """``nu_0``: uniform on ``S u S^-1``."""
    return GroupMeasure.uniform(action, [g for _, g in action.symmetric_generators()], mode)


def assemble(schedule: Schedule, family: CouplingFamily, nu0: GroupMeasure, mode: str = EXACT, verify: bool = True) -> GroupMeasure:
    """Truncated, renormalised mixture ``sum_{j<=J} c'_j zeta_j``.

    Each ``zeta_j`` has its coupling certificate re-checked first.
    """
    if not schedule.complete:
        raise FamilyError(f"schedule is incomplete: {schedule.exhausted}")
    parts = [(schedule.c_prime[0], nu0)]
    for j in range(1, schedule.J + 1):
        n = schedule.n[j]
        if verify:
            try:
                family.verify(n)
            except CertificateError as exc:
                raise FamilyError(f"nu_{n} fails its coupling certificate: {exc}") from exc
        parts.append((schedule.c_prime[j], family[n].nu))
    mu = mix(family.action, parts, mode)
    missing = [g for g in nu0.weights if g not in mu.weights]
    if missing:
        raise FamilyError("assembled measure lost part of supp nu_0")
    return mu


def partial_mixture(schedule: Schedule, family: CouplingFamily, nu0: GroupMeasure, upto: int, mode: str = EXACT) -> GroupMeasure:
    """The sub-probability measure ``sum_{i<upto} c'_i zeta_i``."""
    parts = [(schedule.c_prime[0], nu0)]
    for i in range(1, upto):
        parts.append((schedule.c_prime[i], family[schedule.n[i]].nu))
    return mix(family.action, parts, mode, strict=False)


# -- verification ----------------------------------------------------------------


@dataclass
class BoundRow:
    j: int
    m: int
    y: object
    tv: object
    error: float
    bound: Fraction
    edge_bound: Fraction
    nominal: Fraction
    bad_tv: object
    contained: bool
    support_x: int
    support_y: int
    zeta_tv: object = None

    @property
    def ok(self) -> bool:
        return self.contained and self.tv <= self.bound + Fraction(self.error)


def neighbors_of(action: GroupAction, x) -> list:
    out = []
    for _, g in action.symmetric_generators():
        y = action.act(g, x)
        if y != x and y not in out:
            out.append(y)
    return sorted(out, key=action.point_key)


def walk(start: OrbitDist, mu: GroupMeasure, steps: int, action, prune, workers, keep: bool = False):
    dists = [start]
    d = start
    for _ in range(steps):
        d = step(d, mu, action, prune=prune, workers=workers)
        if keep:
            dists.append(d)
    return dists if keep else d


def verify_bound(
    mu: GroupMeasure,
    schedule: Schedule,
    family: CouplingFamily,
    x,
    action: GroupAction | None = None,
    nu0: GroupMeasure | None = None,
    prune: float | None = PRUNE_THRESHOLD,
    workers: int = 1,
    strict: bool = True,
) -> list[BoundRow]:
    """Check ``T_j <= B_j`` at every level and every neighbour of ``x``.

    ``T_j`` is computed by ``m_j`` applications of :func:`step`.  Before
    that, the walk driven by the partial mixture over ``zeta_0..zeta_{j-1}``
    is run ``m_j - 1`` steps from ``x`` and from ``y`` and every visited
    point must lie in ``K_{n_j}``; a violation means the schedule is
    unsound and raises :class:`ContainmentViolation` when ``strict``.
    ``bad_tv`` is the l1 distance between the two ``m_j``-step pushforwards
    of that partial mixture alone, and ``zeta_tv`` the one-step distance
    ``|zeta_j.x - zeta_j.y|_1`` under the level-j family measure.
    """
    action = action or mu.action
    mode = mu.mode
    nu0 = nu0 or uniform_generators(action, EXACT)
    rows = []
    ys = neighbors_of(action, x)
    full = {}
    for j in range(1, schedule.J + 1):
        m = schedule.m[j]
        K = family[schedule.n[j]].K
        part = partial_mixture(schedule, family, nu0, j, mode)
        zeta = family[schedule.n[j]].nu
        if zeta.mode != mode:
            zeta = GroupMeasure(action, zeta.weights, mode)
        for y in ys:
            escaped = []
            bad = {}
            for z in (x, y):
                d = OrbitDist.delta(z, mode)
                for i in range(m):
                    if any(p not in K for p in d.weights):
                        escaped.append(z)
                    d = step(d, part, action, prune=prune, workers=workers)
                bad[z] = d
            contained = not escaped
            for z in (x, y):
                if (z, m) not in full:
                    full[(z, m)] = _cached_walk(full, z, m, mu, action, prune, workers)
            dx, dy = full[(x, m)], full[(y, m)]
            row = BoundRow(
                j,
                m,
                y,
                tv(dx, dy),
                dx.pruned + dy.pruned,
                schedule.bound(j),
                schedule.edge_bound(j),
                Fraction(3, j),
                tv(bad[x], bad[y]),
                contained,
                len(dx),
                len(dy),
                tv(pushforward(zeta, x, action), pushforward(zeta, y, action)),
            )
            rows.append(row)
            if strict and not contained:
                raise ContainmentViolation(
                    f"j={j}: walk from {action.format_point(escaped[0])} left K_{schedule.n[j]} within {m - 1} steps"
                )
            if strict and not row.ok:
                raise BoundViolation(f"j={j}, y={action.format_point(y)}: T={row.tv} > B={row.bound}")
    return rows


def _cached_walk(cache, z, m, mu, action, prune, workers):
    # reuse the longest shorter walk from the same start
    done = [k for (w, k) in cache if w == z and k < m]
    if done:
        k = max(done)
        d = cache[(z, k)]
    else:
        k = 0
        d = OrbitDist.delta(z, mu.mode)
    for _ in range(m - k):
        d = step(d, mu, action, prune=prune, workers=workers)
    return d


def decay_curve(mu: GroupMeasure, x, y, horizon: int, action=None, prune=PRUNE_THRESHOLD, workers: int = 1) -> list[dict]:
    """``|mu^(m).x - mu^(m).y|_1`` for ``m = 0..horizon``."""
    action = action or mu.action
    dx = OrbitDist.delta(x, mu.mode)
    dy = OrbitDist.delta(y, mu.mode)
    out = []
    for m in range(horizon + 1):
        if m:
            dx = step(dx, mu, action, prune=prune, workers=workers)
            dy = step(dy, mu, action, prune=prune, workers=workers)
        out.append({"m": m, "tv": tv(dx, dy), "support_x": len(dx), "support_y": len(dy), "pruned_mass": dx.pruned + dy.pruned})
    return out
