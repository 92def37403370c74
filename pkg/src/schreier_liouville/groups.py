"""Groups acting on countable sets.

Every concrete action keeps both elements and points in a canonical,
hashable, mutually comparable form, so ``element_key``/``point_key`` are
the identity and dict lookups respect equality.

Shipped instances:

* :class:`ZAction` -- Z acting on itself by translation.
* :class:`FreeGroupAction` -- F2 = <a, b> acting on itself by left
  multiplication (its Cayley graph).
* :class:`ThompsonAction` -- F acting on dyadic rationals.
* :class:`LamplighterAction` -- the wreath product ``(+)_X Z/2 x| G`` acting
  on finite lamp configurations over a base action ``G -> X``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Any, Hashable, Sequence

from . import thompson
from .numerics import HALF, Dyadic, parse_dyadic
from .thompson import PLMap


class GroupAction(ABC):
    name = "abstract"
    identity: Any = None
    basepoint: Any = None

    @property
    @abstractmethod
    def generators(self) -> Sequence[tuple[str, Any]]:
        """The generating set S as ``(label, element)`` pairs."""

    @abstractmethod
    def compose(self, g, h):
        """The product ``gh`` (``h`` acts first)."""

    @abstractmethod
    def invert(self, g):
        ...

    @abstractmethod
    def act(self, g, x):
        ...

    def element_key(self, g) -> Hashable:
        return g

    def point_key(self, x) -> Hashable:
        return x

    def symmetric_generators(self) -> list[tuple[str, Any]]:
        """S together with S^-1, with coincident elements listed once."""
        out = []
        seen = set()
        for label, g in self.generators:
            for lab, h in ((label, g), (label + "^-1", self.invert(g))):
                if h not in seen:
                    seen.add(h)
                    out.append((lab, h))
        return out

    def format_point(self, x) -> str:
        return str(x)

    def format_element(self, g) -> str:
        return str(g)

    def parse_point(self, text: str):
        raise NotImplementedError

    def parse_element(self, text: str):
        raise NotImplementedError


# -- Z ------------------------------------------------------------------------


class ZAction(GroupAction):
    name = "z"
    identity = 0
    basepoint = 0

    @property
    def generators(self):
        return (("t", 1),)

    def compose(self, g, h):
        return g + h

    def invert(self, g):
        return -g

    def act(self, g, x):
        return g + x

    def parse_point(self, text):
        return int(text)

    parse_element = parse_point


# -- free group ---------------------------------------------------------------

# letters: 1 = a, -1 = A = a^-1, 2 = b, -2 = B
_LETTERS = {1: "a", -1: "A", 2: "b", -2: "B"}
_CODES = {v: k for k, v in _LETTERS.items()}

FreeWord = tuple


def free_reduce(word: Sequence[int]) -> FreeWord:
    out: list[int] = []
    for c in word:
        if out and out[-1] == -c:
            out.pop()
        else:
            out.append(c)
    return tuple(out)


def free_multiply(u: FreeWord, v: FreeWord) -> FreeWord:
    """Reduced concatenation of two reduced words."""
    i = 0
    n = min(len(u), len(v))
    while i < n and u[len(u) - 1 - i] == -v[i]:
        i += 1
    return u[: len(u) - i] + v[i:]


def free_inverse(u: FreeWord) -> FreeWord:
    return tuple(-c for c in reversed(u))


def word_to_str(u: FreeWord) -> str:
    return "".join(_LETTERS[c] for c in u) or "e"


def str_to_word(text: str) -> FreeWord:
    text = text.strip()
    if text in ("", "e"):
        return ()
    return free_reduce([_CODES[ch] for ch in text])


def ball_count_free(r: int) -> int:
    """Size of the radius-r ball in the 4-regular tree."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return 1 if r == 0 else 2 * 3**r - 1


class FreeGroupAction(GroupAction):
    name = "f2"
    identity = ()
    basepoint = ()

    @property
    def generators(self):
        return (("a", (1,)), ("b", (2,)))

    def compose(self, g, h):
        return free_multiply(g, h)

    def invert(self, g):
        return free_inverse(g)

    def act(self, g, x):
        return free_multiply(g, x)

    def format_point(self, x):
        return word_to_str(x)

    format_element = format_point

    def parse_point(self, text):
        return str_to_word(text)

    parse_element = parse_point


# -- Thompson's F -----------------------------------------------------------


class ThompsonAction(GroupAction):
    name = "thompson"
    identity = thompson.IDENTITY
    basepoint = HALF

    @property
    def generators(self):
        return thompson.GENERATORS

    def compose(self, g, h):
        return thompson.pl_compose(g, h)

    def invert(self, g):
        return thompson.pl_invert(g)

    def act(self, g: PLMap, x: Dyadic) -> Dyadic:
        return thompson.pl_eval(g, x)

    def format_point(self, x):
        return f"{x.num}/2^{x.exp}"

    def format_element(self, g):
        return thompson.format_plmap(g)

    def parse_point(self, text):
        return parse_dyadic(text)

    def parse_element(self, text):
        return thompson.parse_plmap(text)


# -- lamplighter --------------------------------------------------------------

LampConfig = tuple  # sorted tuple of lit sites


def lamp_sum(a: LampConfig, b: LampConfig) -> LampConfig:
    """Symmetric difference of two lamp configurations."""
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(set(a).symmetric_difference(b)))


class LamplighterAction(GroupAction):
    """``(+)_X Z/2 x| G`` acting on ``(+)_X Z/2`` via ``(g, a).x = a + g.x``.

    Elements are pairs ``(g, a)`` with ``g`` in the base group and ``a`` a
    lamp configuration; points are lamp configurations.  The generating set
    is ``{(s, {}) : s in S_G}`` together with the flip ``(e, {o})``.
    """

    def __init__(self, base: GroupAction):
        self.base = base
        self.name = f"lamplighter-{base.name}"
        self.identity = (base.identity, ())
        self.basepoint = ()

    @property
    def generators(self):
        gens = [(label, (g, ())) for label, g in self.base.generators]
        gens.append(("flip", (self.base.identity, (self.base.basepoint,))))
        return tuple(gens)

    def move(self, g, config: LampConfig) -> LampConfig:
        if not config or g == self.base.identity:
            return config
        return tuple(sorted(self.base.act(g, s) for s in config))

    def compose(self, g, h):
        (g0, a), (h0, b) = g, h
        return (self.base.compose(g0, h0), lamp_sum(a, self.move(g0, b)))

    def invert(self, g):
        g0, a = g
        ginv = self.base.invert(g0)
        return (ginv, self.move(ginv, a))

    def act(self, g, x):
        g0, a = g
        return lamp_sum(a, self.move(g0, x))

    def format_point(self, x):
        return "[" + " ".join(self.base.format_point(s) for s in x) + "]"

    def format_element(self, g):
        return f"{self.base.format_element(g[0])}|{self.format_point(g[1])}"

    def parse_point(self, text):
        body = text.strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise ValueError(f"lamp config must be bracketed: {text!r}")
        sites = [self.base.parse_point(s) for s in body[1:-1].split()]
        return tuple(sorted(set(sites)))

    def parse_element(self, text):
        g, a = text.split("|", 1)
        return (self.base.parse_element(g), self.parse_point(a))


def make_action(name: str) -> GroupAction:
    name = name.strip().lower()
    if name == "thompson":
        return ThompsonAction()
    if name == "z":
        return ZAction()
    if name == "f2":
        return FreeGroupAction()
    if name in ("lamplighter-z", "lamplighter_z"):
        return LamplighterAction(ZAction())
    if name in ("lamplighter-f2", "lamplighter_f2"):
        return LamplighterAction(FreeGroupAction())
    raise ValueError(f"unknown group {name!r}")
