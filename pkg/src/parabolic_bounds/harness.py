"""Config-driven experiments: solve, estimate, mark and write tables.

A run expands the configuration into variants (one per point of its sweep),
evaluates every variant and collects per-level rows, a summary line per
variant, indicator and marking data and any violated guarantee.  Reports are
plain JSON-compatible data, so ``Report.from_dict(report.to_dict())`` is an
exact round trip.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import itertools
import json
import logging
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from .discretization import (
    SpaceTimeField,
    build_space_time_grid,
    exact_energy_components,
    interpolate_exact,
    solve_parabolic,
    true_error_components,
)
from .flux import reconstruct_flux
from .indicators import bulk_mark, element_indicator, spearman, strong_measure, weak_measure
from .majorant import MajorantParams, majorant_general, majorant_incremental, two_sided_weights
from .minorant import MinorantParams, maximize_minorant
from .problem import PRESETS, embedding_constants, preset_problem
from .validation import (
    check_cells,
    check_flux_mode,
    check_kappa,
    check_mu_mode,
    check_positive_int,
    check_theta,
)

log = logging.getLogger(__name__)

OUTPUT_ENV = "PARABOLIC_BOUNDS_OUT"
APPROXIMATIONS = ("solve", "interpolant")
FORMATS = ("csv", "json")
EXACTNESS_TOL = 1e-10

ROW_COLUMNS = [
    "variant", "level", "t",
    "err_grad", "err_l2", "err_reaction", "err_final",
    "err", "err_two_sided", "u_norm", "u_norm_two_sided",
    "maj", "maj_initial", "maj_reaction", "maj_friedrichs", "maj_flux", "maj_boundary",
    "maj_incremental", "min",
    "err_rel", "maj_rel", "min_rel",
    "i_maj", "i_min", "i_eff",
]
SUMMARY_COLUMNS = [
    "variant", "label", "preset", "cells", "slabs", "flux", "mu", "delta", "gamma", "kappa",
    "t", "err", "err_two_sided", "u_norm", "maj", "min", "err_rel", "maj_rel", "min_rel",
    "i_maj", "i_min", "i_eff", "exact", "violations",
]
INDICATOR_COLUMNS = ["variant", "slab", "element", "center", "indicator", "error", "error_rank"]
MARKING_COLUMNS = [
    "variant", "slab", "theta", "marked_indicator", "marked_error", "weak_measure",
    "strong_measure", "spearman",
]


class ConfigError(ValueError):
    """Raised for malformed experiment configurations."""


class GuaranteeViolation(RuntimeError):
    """A bound failed to enclose the true error."""

    def __init__(self, violations):
        self.violations = violations
        first = violations[0]
        super().__init__(f"{len(violations)} guarantee violation(s); first: {first}")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment (or one sweep).

    ``sweep`` maps config keys (``params.<name>`` for preset parameters) to
    value lists whose Cartesian product defines the variants; ``zip`` maps
    keys to equally long lists varied together.  ``flux_slabs`` restricts the
    flux optimisation to some slabs, ``indicator_slabs`` lists the slabs whose
    element indicators are reported (negative indices count from the end).
    ``perturb`` adds seeded noise of that amplitude to the free nodal values.
    """

    name: str = "experiment"
    preset: str = "ex1"
    params: dict = field(default_factory=dict)
    cells: object = 20
    slabs: int = 20
    scheme: str = "backward_euler"
    approximation: str = "solve"
    perturb: float = 0.0
    flux: str = "optimize"
    flux_method: str = "global"
    flux_rounds: int = 3
    flux_slabs: Optional[list] = None
    delta: float = 1.0
    gamma: float = 1.0
    mu: str = "zero"
    beta: Optional[float] = None
    source_mode: str = "quadrature"
    minorant: bool = True
    kappa: float = 1e-3
    bubbles: bool = True
    theta: list = field(default_factory=lambda: [0.2, 0.3, 0.4])
    indicator_slabs: list = field(default_factory=list)
    report_levels: int = 10
    space_order: int = 3
    time_order: int = 3
    minorant_order: int = 4
    error_order: int = 5
    tolerance: float = 1e-9
    seed: int = 0
    sweep: dict = field(default_factory=dict)
    zip: dict = field(default_factory=dict)
    workers: int = 1
    output: Optional[str] = None
    format: str = "csv"

    def __post_init__(self):
        try:
            self._validate()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config {self.name!r}: {exc}") from exc

    def _validate(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        check_positive_int(self.slabs, "slabs")
        check_flux_mode(self.flux)
        check_mu_mode(self.mu)
        check_theta(self.theta)
        check_positive_int(self.report_levels, "report_levels")
        check_positive_int(self.workers, "workers")
        if self.approximation not in APPROXIMATIONS:
            raise ValueError(f"approximation must be one of {APPROXIMATIONS}")
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")
        if self.minorant:
            check_kappa(self.kappa, self.delta)
        if self.perturb < 0:
            raise ValueError("perturb must be nonnegative")
        if not self.tolerance >= 0:
            raise ValueError("tolerance must be nonnegative")
        lengths = {len(v) for v in self.zip.values()}
        if len(lengths) > 1:
            raise ValueError("zip lists must have equal lengths")
        names = {f.name for f in dataclasses.fields(self)}
        for key in itertools.chain(self.sweep, self.zip):
            if not (key in names or key.startswith("params.")) or key in ("sweep", "zip", "name"):
                raise ValueError(f"cannot vary {key!r}")

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        data.setdefault("name", path.stem)
        return cls.from_dict(data)

    def to_dict(self):
        return dataclasses.asdict(self)

    def replace(self, **changes):
        """Copy with some keys changed; ``params.<name>`` keys edit preset parameters."""
        params = dict(self.params)
        plain = {}
        for key, value in changes.items():
            if key.startswith("params."):
                params[key.split(".", 1)[1]] = value
            else:
                plain[key] = value
        if "params" not in plain:
            plain["params"] = params
        return dataclasses.replace(self, **plain)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def variants(self):
        """``(label, overrides)`` for every point of the sweep."""
        keys = list(self.sweep)
        zipped = list(self.zip)
        zip_rows = list(zip(*self.zip.values())) if zipped else [()]
        out = []
        for prod in itertools.product(*(self.sweep[k] for k in keys)):
            for zrow in zip_rows:
                over = dict(zip(keys, prod))
                over.update(zip(zipped, zrow))
                label = ",".join(f"{k}={_fmt(v)}" for k, v in over.items()) or "base"
                out.append((label, over))
        return out


def _fmt(value):
    if isinstance(value, (list, tuple)):
        return "x".join(_fmt(v) for v in value)
    return f"{value:g}" if isinstance(value, float) else str(value)


def bundled_configs():
    """Names of the configurations shipped with the package."""
    root = resources.files(__package__) / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_config(name_or_path):
    """Read a config file, or a bundled config by name."""
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        return ExperimentConfig.from_json(path)
    if name_or_path in bundled_configs():
        res = resources.files(__package__) / "configs" / f"{name_or_path}.json"
        data = json.loads(res.read_text())
        data.setdefault("name", name_or_path)
        return ExperimentConfig.from_dict(data)
    raise ConfigError(f"no config file or bundled config named {name_or_path!r}")


# ---------------------------------------------------------------------------
# report


@dataclass
class Report:
    """Serialisable result of :func:`run_experiment`."""

    config: dict
    metadata: dict
    variants: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    indicators: list = field(default_factory=list)
    marking: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _num(x):
    """Plain float for finite values, ``None`` otherwise."""
    x = float(x)
    return x if math.isfinite(x) else None


def _ratio(num, den):
    if num is None or den is None or den <= 0:
        return None
    return _num(np.sqrt(max(num, 0.0) / den))


def reporting_levels(K, count=10):
    """``ceil(K j / count)`` for ``j = 1..count`` (all levels when ``K < count``)."""
    if K <= count:
        return list(range(1, K + 1))
    return sorted({math.ceil(K * j / count) for j in range(1, count + 1)})


# ---------------------------------------------------------------------------
# one variant


def _has_reaction(spec, points, tgrid):
    return any(np.any(np.asarray(spec.reaction(points, t)) != 0) for t in tgrid.levels[:: max(1, tgrid.K // 4)])


def _approximation(cfg, spec, exact, mesh, tgrid):
    if cfg.approximation == "interpolant":
        v = interpolate_exact(exact, mesh, tgrid)
    else:
        v = solve_parabolic(spec, mesh, tgrid, cfg.scheme)
    if cfg.perturb > 0:
        rng = np.random.default_rng(cfg.seed)
        values = v.values.copy()
        free = v.space.free_dofs
        values[:, free] += cfg.perturb * rng.standard_normal((values.shape[0], free.size))
        v = SpaceTimeField(v.space, tgrid, values)
    return v


def _slab_list(slabs, K):
    return sorted({(int(k) + K) % K if int(k) < 0 else int(k) for k in slabs if -K <= int(k) < K})


def run_variant(cfg, index=0, label="base"):
    """Evaluate one configuration without sweeps; returns report fragments."""
    spec, exact = preset_problem(cfg.preset, **cfg.params)
    cells = check_cells(cfg.cells, spec.dim)
    mesh, tgrid = build_space_time_grid(spec, cells, cfg.slabs)
    K = tgrid.K
    v = _approximation(cfg, spec, exact, mesh, tgrid)
    constants = embedding_constants(spec)
    mparams = MajorantParams(delta=cfg.delta, gamma=cfg.gamma, mu=cfg.mu, beta=cfg.beta,
                             source_mode=cfg.source_mode, space_order=cfg.space_order,
                             time_order=cfg.time_order, initial_order=cfg.error_order)

    flux_slabs = None if cfg.flux_slabs is None else _slab_list(cfg.flux_slabs, K)
    y = reconstruct_flux(v, spec, constants, cfg.flux, mparams, slabs=flux_slabs,
                         rounds=cfg.flux_rounds, method=cfg.flux_method)
    maj = majorant_general(v, y, spec, constants, mparams)
    inc = None
    if spec.identity_diffusion and not spec.has_neumann and cfg.delta == 1 and spec.nu1 == 1:
        inc = majorant_incremental(v, y, spec, constants, beta=maj.beta, space_order=cfg.space_order,
                                   initial_order=cfg.error_order)

    ec = true_error_components(v, exact, spec, cfg.error_order, cfg.error_order,
                               elementwise=bool(cfg.indicator_slabs))
    uc = exact_energy_components(exact, spec, v.space, tgrid, cfg.error_order, cfg.error_order)
    w_maj = mparams.error_weights

    mino, w_two = None, None
    if cfg.minorant:
        points = v.space.quadrature(2).points
        w_two, kappas = two_sided_weights(cfg.kappa, constants, cfg.delta, spec.nu1, cfg.gamma,
                                          with_reaction=_has_reaction(spec, points, tgrid))
        mino = maximize_minorant(v, spec, MinorantParams(
            kappa=kappas, space_order=cfg.minorant_order, time_order=cfg.minorant_order,
            source_mode=cfg.source_mode, bubbles=cfg.bubbles))

    rows, violations = [], []
    scale_floor = 1e-12
    for k in range(K + 1):
        g, l2, r, e = ec.cumulative(k)
        err = ec.weighted(w_maj, k)
        u_norm = uc.weighted(w_maj, k)
        err_two = ec.weighted(w_two, k) if w_two is not None else None
        u_two = uc.weighted(w_two, k) if w_two is not None else None
        m_up = float(maj.cumulative[k])
        m_low = float(mino.cumulative[k]) if mino is not None else None
        tol = cfg.tolerance
        if m_up < err - tol * max(err, scale_floor * u_norm):
            violations.append({"variant": index, "level": k, "bound": "majorant",
                               "estimate": m_up, "error": err})
        if m_low is not None and m_low > err_two + tol * max(err_two, scale_floor * u_two):
            violations.append({"variant": index, "level": k, "bound": "minorant",
                               "estimate": m_low, "error": err_two})
        mrow = maj.rows()[k]
        rows.append({
            "variant": index,
            "level": k,
            "t": _num(tgrid.levels[k]),
            "err_grad": _num(g), "err_l2": _num(l2), "err_reaction": _num(r), "err_final": _num(e),
            "err": _num(err),
            "err_two_sided": None if err_two is None else _num(err_two),
            "u_norm": _num(u_norm),
            "u_norm_two_sided": None if u_two is None else _num(u_two),
            "maj": _num(m_up),
            "maj_initial": _num(mrow["maj_initial"]),
            "maj_reaction": _num(mrow["maj_reaction"]),
            "maj_friedrichs": _num(mrow["maj_friedrichs"]),
            "maj_flux": _num(mrow["maj_flux"]),
            "maj_boundary": _num(mrow["maj_boundary"]),
            "maj_incremental": None if inc is None else _num(inc.cumulative[k]),
            "min": None if m_low is None else _num(m_low),
            "err_rel": _num(err / u_norm) if u_norm > 0 else None,
            "maj_rel": _num(m_up / u_norm) if u_norm > 0 else None,
            "min_rel": _num(m_low / u_two) if m_low is not None and u_two > 0 else None,
            "i_maj": _ratio(m_up, err),
            "i_min": _ratio(m_low, err_two),
            "i_eff": _ratio(m_up, m_low) if m_low is not None and m_low > 0 else None,
        })

    last = rows[-1]
    u_total = last["u_norm"]
    exact_flag = bool(last["maj"] <= EXACTNESS_TOL * u_total) if u_total > 0 else bool(last["maj"] <= 1e-20)
    summary = {
        "variant": index,
        "label": label,
        "preset": cfg.preset,
        "cells": list(cells),
        "slabs": K,
        "flux": cfg.flux,
        "mu": cfg.mu,
        "delta": cfg.delta,
        "gamma": cfg.gamma,
        "kappa": cfg.kappa if cfg.minorant else None,
        "exact": exact_flag,
        "violations": len(violations),
    }
    summary.update({key: last[key] for key in ("t", "err", "err_two_sided", "u_norm", "maj", "min",
                                                "err_rel", "maj_rel", "min_rel", "i_maj", "i_min", "i_eff")})

    ind_rows, mark_rows = [], []
    thetas = check_theta(cfg.theta)
    centers = mesh.element_centers
    for k in _slab_list(cfg.indicator_slabs, K):
        ind = element_indicator(v, y, spec, k, cfg.space_order, cfg.time_order)
        err_el = ec.grad_elements[k]
        rank = np.empty(err_el.size, dtype=int)
        rank[np.argsort(-err_el, kind="stable")] = np.arange(err_el.size)
        for el in range(err_el.size):
            ind_rows.append({
                "variant": index, "slab": k, "element": el,
                "center": [float(c) for c in centers[el]],
                "indicator": _num(ind.values[el]), "error": _num(err_el[el]),
                "error_rank": int(rank[el]),
            })
        total_err = float(err_el.sum())
        strong = _num(strong_measure(total_err, ind.total)) if total_err > 0 else None
        corr = _num(spearman(err_el, ind.values)) if np.ptp(err_el) > 0 and np.ptp(ind.values) > 0 else None
        for theta in thetas:
            me, mi = bulk_mark(err_el, theta), bulk_mark(ind, theta)
            mark_rows.append({
                "variant": index, "slab": k, "theta": theta,
                "marked_indicator": mi.count, "marked_error": me.count,
                "weak_measure": weak_measure(me, mi),
                "strong_measure": strong, "spearman": corr,
            })
    return {"rows": rows, "summary": summary, "indicators": ind_rows,
            "marking": mark_rows, "violations": violations}


def _run_one(args):
    cfg_dict, index, label = args
    return run_variant(ExperimentConfig.from_dict(cfg_dict), index, label)


def _versions():
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"artifact": pkg, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def run_experiment(config, strict=False):
    """Run every variant of ``config`` and assemble a :class:`Report`.

    With ``strict`` a :class:`GuaranteeViolation` is raised when a bound fails
    to enclose the error; otherwise violations are listed in the report.
    """
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    variants = config.variants()
    jobs = []
    for i, (label, over) in enumerate(variants):
        cfg = config.replace(**over, sweep={}, zip={})
        jobs.append((cfg.to_dict(), i, label))
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_run_one, jobs))
    else:
        parts = [_run_one(job) for job in jobs]

    report = Report(
        config=config.to_dict(),
        metadata={
            "config_hash": config.digest(),
            "versions": _versions(),
            "exact": all(p["summary"]["exact"] for p in parts),
        },
        variants=[{"index": i, "label": label, "overrides": over}
                  for i, (label, over) in enumerate(variants)],
    )
    for part in parts:
        report.rows.extend(part["rows"])
        report.summary.append(part["summary"])
        report.indicators.extend(part["indicators"])
        report.marking.extend(part["marking"])
        report.violations.extend(part["violations"])
    report = Report.from_json(report.to_json())  # normalise tuples and numpy scalars
    if strict and report.violations:
        raise GuaranteeViolation(report.violations)
    return report


# ---------------------------------------------------------------------------
# output


def _csv_value(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return " ".join(_csv_value(v) for v in value)
    return str(value)


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_value(row.get(c)) for c in columns])


def report_rows(report, levels=None):
    """Per-level rows restricted to the reporting levels of each variant."""
    out = []
    for s in report.summary:
        K = s["slabs"]
        keep = set(reporting_levels(K, report.config.get("report_levels", 10)) if levels is None else levels)
        out.extend(r for r in report.rows if r["variant"] == s["variant"] and r["level"] in keep)
    return out


def emit_tables(report, out_dir, fmt="csv"):
    """Write the report tables to ``out_dir``; returns the written paths.

    ``csv`` writes ``efficiency_by_time.csv``, ``summary.csv``,
    ``marking.csv`` and one ``indicators_slab<k>.csv`` per reported slab;
    ``report.json`` is written in both formats.
    """
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "csv":
        path = out / "efficiency_by_time.csv"
        _write_csv(path, ROW_COLUMNS, report_rows(report))
        written.append(path)
        path = out / "summary.csv"
        _write_csv(path, SUMMARY_COLUMNS, report.summary)
        written.append(path)
        path = out / "marking.csv"
        _write_csv(path, MARKING_COLUMNS, report.marking)
        written.append(path)
        for k in sorted({r["slab"] for r in report.indicators}):
            path = out / f"indicators_slab{k}.csv"
            _write_csv(path, INDICATOR_COLUMNS, [r for r in report.indicators if r["slab"] == k])
            written.append(path)
    path = out / "report.json"
    path.write_text(report.to_json())
    written.append(path)
    return written


def output_dir(config, override=None):
    """``override``, the config's ``output``, ``$PARABOLIC_BOUNDS_OUT/<name>`` or ``results/<name>``."""
    if override:
        return Path(override)
    if config.output:
        return Path(config.output)
    root = os.environ.get(OUTPUT_ENV)
    return Path(root or "results") / config.name


def run_and_emit(config, out_dir=None, fmt=None):
    """Run, write the tables plus ``run_info.json`` (wall time) and return the report."""
    start = time.perf_counter()
    report = run_experiment(config)
    wall = time.perf_counter() - start
    out = output_dir(config, out_dir)
    emit_tables(report, out, fmt or config.format)
    info = {"wall_time_s": wall, "config_hash": report.metadata["config_hash"]}
    (out / "run_info.json").write_text(json.dumps(info, sort_keys=True, indent=1) + "\n")
    if report.violations:
        log.error("%d guarantee violation(s) in %s", len(report.violations), config.name)
    return report, out
