from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from schreier_liouville.numerics import dyadic_normalize

# derandomized so that the suite is reproducible run to run
settings.register_profile(
    "repo", deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


@st.composite
def dyadics(draw, max_exp=12, open_interval=False):
    e = draw(st.integers(0, max_exp))
    lo, hi = (1, (1 << e) - 1) if open_interval else (0, 1 << e)
    if lo > hi:
        e = 1
        lo, hi = 1, 1
    return dyadic_normalize(draw(st.integers(lo, hi)), e)


def frac(d):
    return Fraction(d.num, 1 << d.exp)


# Independent oracles for the generators of F, written from their formulas.
def x0_ref(t):
    if t <= Fraction(1, 2):
        return t / 2
    if t <= Fraction(3, 4):
        return t - Fraction(1, 4)
    return 2 * t - 1


def x0_inv_ref(s):
    if s <= Fraction(1, 4):
        return 2 * s
    if s <= Fraction(1, 2):
        return s + Fraction(1, 4)
    return (s + 1) / 2


def x1_ref(t):
    if t <= Fraction(1, 2):
        return t
    return Fraction(1, 2) + x0_ref(2 * t - 1) / 2


def x1_inv_ref(s):
    if s <= Fraction(1, 2):
        return s
    return Fraction(1, 2) + x0_inv_ref(2 * s - 1) / 2


REF = {("x0", 1): x0_ref, ("x0", -1): x0_inv_ref, ("x1", 1): x1_ref, ("x1", -1): x1_inv_ref}

words = st.lists(st.tuples(st.sampled_from(["x0", "x1"]), st.sampled_from([1, -1])), max_size=10)


# -- acceptance summary ----------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}" + (f" -- {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
