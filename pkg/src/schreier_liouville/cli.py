"""Command-line experiments: schedules, bound checks, decay curves, CSV/SVG output.

Configuration is a flat ``key = value`` text file (``#`` starts a comment)::

    group     = thompson          # thompson | lamplighter-z | lamplighter-f2
    basepoint = 1/2
    weights   = geometric(1/2)    # or just the ratio: 1/2
    J         = 3
    horizon   = 9                 # decay-curve length; default max m_j
    mode      = float             # exact | float
    prune     = 1e-15
    n_grid    = 3:1, 310:5        # Thompson: n:rho pairs; lamplighter: 0-4 or 0,1,2
    workers   = 1

Exit codes: 0 when every asserted bound holds, 1 on a bound violation (or
a schedule the family cannot complete), 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

from .constructions import (
    SUPPORT_CAP,
    ConstructionError,
    FamilyEntry,
    coupling_certificate,
    lamplighter_builder,
    lamplighter_family,
    thompson_builder,
    thompson_family,
)
from .groups import GroupAction, LamplighterAction, ThompsonAction, make_action
from .liouville import (
    ContainmentViolation,
    CouplingFamily,
    FamilyError,
    Schedule,
    assemble,
    build_schedule,
    decay_curve,
    geometric_weights,
    neighbors_of,
    uniform_generators,
    verify_bound,
)
from .measures import EXACT, FLOAT, PRUNE_THRESHOLD, GroupMeasure, lazify, non_degenerate, symmetrize_check
from .numerics import format_weight
from .schreier import cheeger, complete_graph, cycle_graph, orbit_ball

log = logging.getLogger("schreier_liouville")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


class SchemaMismatch(ValueError):
    pass


# -- configuration -----------------------------------------------------------------


@dataclass
class Config:
    schema: int = SCHEMA_VERSION
    preset: str = ""
    kind: str = "lemma"  # lemma | contrast
    group: str = "thompson"
    basepoint: str = ""
    ratio: Fraction = Fraction(1, 2)
    J: int = 3
    horizon: int | None = None
    mode: str = EXACT
    prune: float = PRUNE_THRESHOLD
    n_grid: str = ""
    workers: int = 1
    svg: bool = False
    cheeger_radius: int = 2
    lazy: Fraction = Fraction(1, 2)
    support_cap: int = SUPPORT_CAP

    def dump(self) -> str:
        lines = []
        for f in fields(self):
            if f.name == "workers":
                continue  # never part of the result
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {'' if v is None else v}")
        return "\n".join(lines) + "\n"


PRESETS: dict[str, dict[str, str]] = {
    # geometric(1/2) weights at J = 3: m = (1, 3, 9); the family grid runs out at j = 2
    "thompson": {"group": "thompson", "ratio": "1/2", "J": "3", "mode": "float", "n_grid": "3:1, 310:5"},
    # flatter weights keep every m_j = 1, so two levels fit on a desk
    "thompson-desk": {"group": "thompson", "ratio": "3/4", "J": "2", "mode": "exact", "n_grid": "3:1, 310:5"},
    "lamplighter-z": {"group": "lamplighter-z", "ratio": "1/2", "J": "2", "mode": "exact", "n_grid": "0-4"},
    "lamplighter-z-deep": {"group": "lamplighter-z", "ratio": "1/2", "J": "3", "mode": "exact", "n_grid": "0-4"},
    "lamplighter-f2": {"group": "lamplighter-f2", "ratio": "3/4", "J": "2", "mode": "exact", "n_grid": "0-1"},
    "contrast": {"group": "thompson", "kind": "contrast", "horizon": "10", "mode": "exact", "lazy": "1/2"},
}

_ALIASES = {"j": "J", "weights": "ratio", "grid": "n_grid", "n-grid": "n_grid", "cheeger-radius": "cheeger_radius"}


def _parse_ratio(text: str) -> Fraction:
    t = text.strip().lower()
    if t.startswith("geometric(") and t.endswith(")"):
        t = t[len("geometric(") : -1]
    r = Fraction(t)
    if not 0 < r < 1:
        raise ConfigError(f"geometric ratio must lie in (0, 1), got {text!r}")
    return r


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _set(cfg: Config, key: str, value: str) -> None:
    key = key.strip()
    key = _ALIASES.get(key.lower(), key if key == "J" else key.lower())
    value = value.strip()
    try:
        if key == "schema":
            cfg.schema = int(value)
        elif key == "preset":
            cfg.preset = value
        elif key == "kind":
            if value not in ("lemma", "contrast"):
                raise ConfigError(f"kind must be lemma or contrast, got {value!r}")
            cfg.kind = value
        elif key == "group":
            make_action(value)
            cfg.group = value.lower()
        elif key == "basepoint":
            cfg.basepoint = value
        elif key == "ratio":
            cfg.ratio = _parse_ratio(value)
        elif key == "J":
            cfg.J = int(value)
            if cfg.J < 0:
                raise ConfigError("J must be nonnegative")
        elif key == "horizon":
            cfg.horizon = int(value) if value else None
        elif key == "mode":
            if value not in (EXACT, FLOAT):
                raise ConfigError(f"mode must be exact or float, got {value!r}")
            cfg.mode = value
        elif key == "prune":
            cfg.prune = float(value)
        elif key == "n_grid":
            cfg.n_grid = value
        elif key == "workers":
            cfg.workers = max(1, int(value))
        elif key == "svg":
            cfg.svg = _parse_bool(value)
        elif key == "cheeger_radius":
            cfg.cheeger_radius = int(value)
        elif key == "lazy":
            cfg.lazy = Fraction(value)
        elif key == "support_cap":
            cfg.support_cap = int(value)
        else:
            raise ConfigError(f"unknown key {key!r}")
    except ConfigError:
        raise
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from exc


def parse_config_text(text: str, overrides: list[str] | None = None) -> Config:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        k, v = line.split("=", 1)
        pairs.append((k, v))
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        pairs.append(tuple(item.split("=", 1)))
    cfg = Config()
    preset = [v.strip() for k, v in pairs if k.strip().lower() == "preset"]
    if preset:
        name = preset[-1]
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
        cfg.preset = name
        for k, v in PRESETS[name].items():
            _set(cfg, k, v)
    for k, v in pairs:
        _set(cfg, k, v)
    if cfg.schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema {cfg.schema}; this build reads {SCHEMA_VERSION}")
    return cfg


def load_config(path=None, preset: str | None = None, overrides: list[str] | None = None) -> Config:
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    if preset:
        text = f"preset = {preset}\n" + text
    return parse_config_text(text, overrides)


def parse_grid(text: str, group: str):
    """``"3:1, 310:5"`` -> ``{3: 1, 310: 5}``; ``"0-4"`` or ``"0,2,3"`` -> list of ints."""
    text = text.strip()
    if not text:
        raise ConfigError("n_grid is empty")
    try:
        if group == "thompson":
            out = {}
            for item in text.split(","):
                n, rho = item.split(":")
                out[int(n)] = int(rho)
            return out
        out = []
        for item in text.split(","):
            item = item.strip()
            if "-" in item[1:]:
                lo, hi = item.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(item))
        return sorted(set(out))
    except ValueError as exc:
        raise ConfigError(f"bad n_grid {text!r} for group {group}") from exc


def make_family(cfg: Config, action: GroupAction) -> CouplingFamily:
    grid = parse_grid(cfg.n_grid, cfg.group)
    if isinstance(action, ThompsonAction):
        return CouplingFamily(action, thompson_builder(grid, action), list(grid))
    if isinstance(action, LamplighterAction):
        return CouplingFamily(action, lamplighter_builder(action, cfg.support_cap), grid)
    raise ConfigError(f"no coupling family for group {cfg.group}")


def basepoint_of(cfg: Config, action: GroupAction):
    if not cfg.basepoint:
        return action.basepoint
    try:
        return action.parse_point(cfg.basepoint)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad basepoint {cfg.basepoint!r}: {exc}") from exc


# -- CSV/SVG writers -----------------------------------------------------------------


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (Fraction, float)):
        return format_weight(v)
    return str(v)


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def write_svg(path, series: dict, title: str = "", width: int = 640, height: int = 400):
    """Minimal line chart: ``series`` maps a label to ``[(x, y), ...]``."""
    pts = [p for s in series.values() for p in s]
    if not pts:
        return
    xs = [float(x) for x, _ in pts]
    ys = [float(y) for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = 0.0, max(max(ys), 1e-12)
    pad = 50
    sx = (width - 2 * pad) / ((x1 - x0) or 1.0)
    sy = (height - 2 * pad) / ((y1 - y0) or 1.0)
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle">{_xml(title)}</text>',
        f'<text x="{pad}" y="{height - pad + 15}" text-anchor="middle">{x0:g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 15}" text-anchor="middle">{x1:g}</text>',
        f'<text x="{pad - 5}" y="{pad}" text-anchor="end">{y1:.3g}</text>',
        f'<text x="{pad - 5}" y="{height - pad}" text-anchor="end">0</text>',
    ]
    for i, (label, s) in enumerate(series.items()):
        c = colors[i % len(colors)]
        poly = " ".join(f"{pad + (float(x) - x0) * sx:.2f},{height - pad - (float(y) - y0) * sy:.2f}" for x, y in s)
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{poly}"/>')
        out.append(f'<text x="{width - pad + 4}" y="{pad + 14 * i}" fill="{c}">{_xml(label)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def _xml(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


SCHEDULE_HEADER = ["j", "n_j", "m_j", "c_j", "c'_j", "eps_{n_j}", "radius_{n_{j-1}}", "r_{n_j}", "bound B_j", "nominal 3/j"]
DECAY_HEADER = ["m", "neighbor_key", "tv", "support_x", "support_y", "pruned_mass"]
BOUND_HEADER = [
    "j", "m_j", "neighbor_key", "T_j", "error", "bound B_j", "edge_bound", "nominal 3/j",
    "bad_tv", "zeta_tv", "contained", "support_x", "support_y", "ok",
]
CHEEGER_HEADER = [
    "graph", "radius", "vertices", "edges", "lambda1", "spectral_lower_bound",
    "edge_expansion", "conductance", "band_ok", "iterations",
]


def write_schedule(path, schedule: Schedule):
    rows = [list(r.values()) for r in schedule.rows()]
    write_rows(path, SCHEDULE_HEADER, rows)


def cheeger_rows(action: GroupAction, o, max_radius: int, tol: float = 1e-10) -> list[list]:
    rows = []
    for r in range(1, max_radius + 1):
        ball = orbit_ball(action, o, r)
        rep = cheeger(ball, tol=tol)
        rows.append(
            [
                f"{action.name}:B({action.format_point(o)},{r})",
                r,
                rep.size,
                rep.n_edges,
                rep.lambda1,
                rep.spectral_lower_bound,
                rep.edge_expansion,
                rep.conductance,
                rep.band_ok,
                rep.iterations,
            ]
        )
    return rows


# -- experiments --------------------------------------------------------------------------


@dataclass
class RunResult:
    code: int
    checks: list = field(default_factory=list)  # (name, ok, detail)
    schedule: Schedule | None = None
    bound_rows: list = field(default_factory=list)
    decay: dict = field(default_factory=dict)
    mu: GroupMeasure | None = None

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.checks)


def _decay_monotone(curve: list[dict]) -> bool:
    for a, b in zip(curve, curve[1:]):
        if b["tv"] > a["tv"] + a["pruned_mass"] + b["pruned_mass"]:
            return False
    return True


def run_experiment(cfg: Config, outdir, workers: int | None = None) -> RunResult:
    """Run one configured experiment and write its artifacts to ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    workers = cfg.workers if workers is None else workers
    action = make_action(cfg.group)
    x = basepoint_of(cfg, action)
    prune = cfg.prune if cfg.mode == FLOAT else None
    (outdir / "config.txt").write_text(cfg.dump())
    res = RunResult(EXIT_OK)
    t0 = time.perf_counter()

    if cfg.kind == "contrast":
        mu = lazify(uniform_generators(action, cfg.mode), cfg.lazy)
        mu = GroupMeasure(action, mu.weights, cfg.mode)
        res.mu = mu
        write_schedule(outdir / "schedule.csv", Schedule([], [], [], [], 0))
        horizon = 10 if cfg.horizon is None else cfg.horizon
    else:
        family = make_family(cfg, action)
        c = geometric_weights(cfg.ratio, cfg.J + 1)
        schedule = build_schedule(family, c, cfg.J, allow_partial=True)
        res.schedule = schedule
        write_schedule(outdir / "schedule.csv", schedule)
        if not schedule.complete:
            res.checks.append(("schedule", False, schedule.exhausted))
            _finish(res, outdir)
            return res
        nu0 = uniform_generators(action, EXACT)
        mu = assemble(schedule, family, nu0, EXACT)
        if cfg.mode == FLOAT:
            mu = GroupMeasure(action, mu.weights, FLOAT)
        res.mu = mu
        res.checks.append(("symmetric", symmetrize_check(mu), ""))
        res.checks.append(("non_degenerate", non_degenerate(mu), ""))
        rows = verify_bound(mu, schedule, family, x, action, nu0, prune=prune, workers=workers, strict=False)
        res.bound_rows = rows
        write_rows(
            outdir / "bounds.csv",
            BOUND_HEADER,
            [
                [r.j, r.m, action.format_point(r.y), r.tv, r.error, r.bound, r.edge_bound, r.nominal,
                 r.bad_tv, r.zeta_tv, r.contained, r.support_x, r.support_y, r.ok]
                for r in rows
            ],
        )
        for r in rows:
            res.checks.append((f"bound j={r.j} y={action.format_point(r.y)}", r.ok, f"T={_cell(r.tv)} B={_cell(r.bound)}"))
        horizon = max(schedule.m) if cfg.horizon is None else cfg.horizon
        log.info("schedule and bounds done in %.2fs", time.perf_counter() - t0)

    decay_rows = []
    for y in neighbors_of(action, x):
        curve = decay_curve(mu, x, y, horizon, action, prune=prune, workers=workers)
        res.decay[y] = curve
        key = action.format_point(y)
        for p in curve:
            decay_rows.append([p["m"], key, p["tv"], p["support_x"], p["support_y"], p["pruned_mass"]])
        if cfg.kind != "contrast":
            res.checks.append((f"contraction y={key}", _decay_monotone(curve), ""))
    write_rows(outdir / "tv_decay.csv", DECAY_HEADER, decay_rows)
    if cfg.svg:
        series = {action.format_point(y): [(p["m"], float(p["tv"])) for p in cv] for y, cv in res.decay.items()}
        write_svg(outdir / "tv_decay.svg", series, title=f"{cfg.group}: |mu^m.x - mu^m.y|_1")

    crow = cheeger_rows(action, action.basepoint, cfg.cheeger_radius)
    write_rows(outdir / "cheeger.csv", CHEEGER_HEADER, crow)
    for row in crow:
        if row[8] is not None:
            res.checks.append((f"cheeger band {row[0]}", bool(row[8]), ""))
    log.info("run finished in %.2fs", time.perf_counter() - t0)
    _finish(res, outdir)
    return res


def _finish(res: RunResult, outdir: Path):
    # numbers live in bounds.csv; keeping them out here lets float and exact runs compare cleanly
    write_rows(outdir / "checks.csv", ["check", "ok"], [(name, ok) for name, ok, _ in res.checks])
    res.code = EXIT_OK if res.ok else EXIT_VIOLATION


# -- comparison ------------------------------------------------------------------------------


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def _num(text: str):
    try:
        if "/" in text:
            return Fraction(text)
        if any(ch in text for ch in ".eEn"):
            return float(text)
        return int(text)
    except (ValueError, ZeroDivisionError):
        return None


def _schema(d: Path) -> int:
    p = d / "config.txt"
    if not p.exists():
        raise SchemaMismatch(f"{d} has no config.txt")
    for line in p.read_text().splitlines():
        if line.startswith("schema"):
            return int(line.split("=", 1)[1])
    raise SchemaMismatch(f"{p} has no schema line")


def compare_runs(dir1, dir2, tol: float = 1e-12) -> list[str]:
    """Field-by-field diff of the CSV artifacts of two run directories.

    Cells that are exact in both runs (integers or ``num/den``) must match
    bit for bit.  When either side is a float the cells may differ by
    ``tol`` plus, in ``tv_decay.csv``, the larger reported ``pruned_mass``
    of the two rows.
    """
    d1, d2 = Path(dir1), Path(dir2)
    s1, s2 = _schema(d1), _schema(d2)
    if s1 != s2:
        raise SchemaMismatch(f"schema {s1} != {s2}")
    diffs = []
    names = sorted({p.name for p in d1.glob("*.csv")} | {p.name for p in d2.glob("*.csv")})
    for name in names:
        p1, p2 = d1 / name, d2 / name
        if not p1.exists() or not p2.exists():
            diffs.append(f"{name}: present in only one run")
            continue
        r1, r2 = _read_csv(p1), _read_csv(p2)
        if not r1 or not r2 or r1[0] != r2[0]:
            diffs.append(f"{name}: headers differ")
            continue
        header = r1[0]
        if len(r1) != len(r2):
            diffs.append(f"{name}: {len(r1) - 1} rows vs {len(r2) - 1} rows")
        slack_col = header.index("pruned_mass") if "pruned_mass" in header else None
        for i, (a, b) in enumerate(zip(r1[1:], r2[1:]), start=1):
            slack = 0.0
            if slack_col is not None:
                slack = max(float(_num(a[slack_col]) or 0), float(_num(b[slack_col]) or 0))
            for col, u, v in zip(header, a, b):
                if u == v:
                    continue
                nu, nv = _num(u), _num(v)
                exact = not isinstance(nu, float) and not isinstance(nv, float)
                if nu is None or nv is None or exact:
                    diffs.append(f"{name}:{i}:{col}: {u!r} != {v!r}")
                elif col == "pruned_mass" or math.isnan(float(nu)) or math.isnan(float(nv)):
                    continue
                elif abs(float(nu) - float(nv)) > tol * max(1.0, abs(float(nu))) + slack:
                    diffs.append(f"{name}:{i}:{col}: {u} vs {v} (|diff| > {tol} + {slack:g})")
    return diffs


# -- family manifests ------------------------------------------------------------------------


def write_family(entry: FamilyEntry, action: GroupAction, outdir):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_rows(
        outdir / "family.csv",
        ["n", "eps", "radius", "inradius", "certified_max", "K_size", "nu_size"],
        [[entry.n, entry.eps, entry.radius, entry.inradius, entry.certified_max, len(entry.K), len(entry.nu)]],
    )
    write_rows(outdir / "K.csv", ["key"], [[action.format_point(p)] for p in sorted(entry.K, key=_point_sort)])
    entry.nu.write_csv(outdir / "nu.csv")


def _point_sort(p):
    return (len(p), p) if isinstance(p, tuple) else p


def read_family(action: GroupAction, indir) -> FamilyEntry:
    """Load a family manifest and re-check its coupling certificate."""
    indir = Path(indir)
    (row,) = [r for r in csv.DictReader(open(indir / "family.csv", newline=""))]
    K = frozenset(action.parse_point(r["key"]) for r in csv.DictReader(open(indir / "K.csv", newline="")))
    nu = GroupMeasure.read_csv(action, indir / "nu.csv")
    eps = Fraction(row["eps"])
    worst = coupling_certificate(action, K, nu, eps)
    radius = int(row["radius"]) if row["radius"] else None
    return FamilyEntry(int(row["n"]), K, nu, eps, radius, int(row["inradius"]), worst)


# -- entry point ----------------------------------------------------------------------------------


def _add_config_args(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named preset")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="schreier-liouville", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("build-graph", help="BFS ball of a Schreier graph -> edges.csv, vertices.csv")
    p.add_argument("--group", required=True)
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--basepoint")
    p.add_argument("--out", required=True)

    p = sub.add_parser("make-family", help="build and certify one coupling family entry")
    p.add_argument("--group", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=int, default=1, help="Thompson: K = B(1/2, rho)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("schedule", help="select (m_j, n_j) and write schedule.csv")
    _add_config_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="full experiment: schedule, bound check, decay curve, Cheeger report")
    _add_config_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("cheeger", help="isoperimetric report for Schreier balls or test graphs")
    p.add_argument("--group")
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--graph", help="cycle:N or complete:N")
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="diff the CSV artifacts of two runs")
    p.add_argument("dir1")
    p.add_argument("dir2")
    p.add_argument("--tol", type=float, default=1e-12)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return _dispatch(args)
    except (ConfigError, SchemaMismatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FamilyError, ContainmentViolation, ConstructionError, AssertionError) as exc:
        print(f"violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


def _action_arg(name: str) -> GroupAction:
    try:
        return make_action(name)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _dispatch(args) -> int:
    if args.cmd == "build-graph":
        action = _action_arg(args.group)
        o = action.parse_point(args.basepoint) if args.basepoint else action.basepoint
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        ball = orbit_ball(action, o, args.radius)
        ball.write_csv(out / "edges.csv", out / "vertices.csv")
        print(f"{len(ball)} vertices, {len(ball.edges)} edges -> {out}")
        return EXIT_OK

    if args.cmd == "make-family":
        action = _action_arg(args.group)
        if isinstance(action, ThompsonAction):
            K = orbit_ball(action, action.basepoint, args.rho).dist
            entry = thompson_family(args.n, K, action, with_radius=True)
        elif isinstance(action, LamplighterAction):
            entry = lamplighter_family(args.n, action)
        else:
            raise ConfigError(f"no coupling family for group {args.group}")
        write_family(entry, action, args.out)
        print(f"n={entry.n} |K|={len(entry.K)} |nu|={len(entry.nu)} eps={_cell(entry.eps)} "
              f"certified max={_cell(entry.certified_max)} radius={entry.radius} inradius={entry.inradius}")
        return EXIT_OK

    if args.cmd == "schedule":
        cfg = load_config(args.config, args.preset, args.set)
        action = make_action(cfg.group)
        family = make_family(cfg, action)
        schedule = build_schedule(family, geometric_weights(cfg.ratio, cfg.J + 1), cfg.J, allow_partial=True)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_schedule(out / "schedule.csv", schedule)
        if not schedule.complete:
            print(f"schedule incomplete: {schedule.exhausted}", file=sys.stderr)
            return EXIT_VIOLATION
        return EXIT_OK

    if args.cmd == "run":
        cfg = load_config(args.config, args.preset, args.set)
        res = run_experiment(cfg, args.out, workers=args.workers)
        for name, ok, detail in res.checks:
            print(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
        return res.code

    if args.cmd == "cheeger":
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        if args.graph:
            kind, _, size = args.graph.partition(":")
            builders = {"cycle": cycle_graph, "complete": complete_graph}
            if kind not in builders or not size.isdigit():
                raise ConfigError(f"--graph must be cycle:N or complete:N, got {args.graph!r}")
            rep = cheeger(builders[kind](int(size)), tol=1e-10)
            rows = [[args.graph, "", rep.size, rep.n_edges, rep.lambda1, rep.spectral_lower_bound,
                     rep.edge_expansion, rep.conductance, rep.band_ok, rep.iterations]]
        else:
            if not args.group:
                raise ConfigError("cheeger needs --group or --graph")
            action = _action_arg(args.group)
            rows = cheeger_rows(action, action.basepoint, args.radius)
        write_rows(out, CHEEGER_HEADER, rows)
        bad = [r for r in rows if r[8] is False]
        return EXIT_VIOLATION if bad else EXIT_OK

    if args.cmd == "compare":
        diffs = compare_runs(args.dir1, args.dir2, args.tol)
        for d in diffs:
            print(d)
        return EXIT_OK if not diffs else EXIT_VIOLATION

    raise ConfigError(f"unknown command {args.cmd}")  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
