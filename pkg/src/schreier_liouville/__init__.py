"""Liouville measures for group actions, checked at finite scale.

Exact dyadic and rational arithmetic, Thompson's group F as piecewise-linear
maps, Schreier graphs of group actions, finitely supported measures and
their random walks, the inductive construction of a measure whose walk
forgets its starting point, and the coupling families that feed it.
"""

from .numerics import Dyadic, dyadic_from_fraction, hair_point, parse_dyadic
from .thompson import IDENTITY, X0, X1, PLMap, map_tuple, pl_compose, pl_eval, pl_invert
from .groups import (
    FreeGroupAction,
    GroupAction,
    LamplighterAction,
    ThompsonAction,
    ZAction,
    make_action,
)
from .schreier import CheegerReport, cheeger, inradius, orbit_ball
from .measures import EXACT, FLOAT, GroupMeasure, OrbitDist, convolve, pushforward, step, tv
from .constructions import FamilyEntry, lamplighter_family, thompson_family
from .liouville import (
    CouplingFamily,
    Schedule,
    assemble,
    build_schedule,
    select_m,
    select_n,
    verify_bound,
)

__version__ = "0.1.0"

__all__ = [
    "Dyadic",
    "dyadic_from_fraction",
    "hair_point",
    "parse_dyadic",
    "IDENTITY",
    "X0",
    "X1",
    "PLMap",
    "map_tuple",
    "pl_compose",
    "pl_eval",
    "pl_invert",
    "FreeGroupAction",
    "GroupAction",
    "LamplighterAction",
    "ThompsonAction",
    "ZAction",
    "make_action",
    "CheegerReport",
    "cheeger",
    "inradius",
    "orbit_ball",
    "EXACT",
    "FLOAT",
    "GroupMeasure",
    "OrbitDist",
    "convolve",
    "pushforward",
    "step",
    "tv",
    "FamilyEntry",
    "lamplighter_family",
    "thompson_family",
    "CouplingFamily",
    "Schedule",
    "assemble",
    "build_schedule",
    "select_m",
    "select_n",
    "verify_bound",
]
