"""Observables, experiment configuration and the batch ``run`` driver."""

from __future__ import annotations

import dataclasses
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from . import __version__
from . import kernel, oracle, series, stationary
from .params import DomainError, PacketParams, PhysParams, SpatialGrid, WaveField, initial_packet, momentum_density, packet_energy

log = logging.getLogger(__name__)

MODES = ("stationary", "propagate", "oracle", "series", "compare")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# --- observables -------------------------------------------------------------


def channel_norms(w: WaveField):
    """``(int |psi1|^2 dx, int |psi2|^2 dx)`` by the trapezoid rule."""
    return w.norms()


def l2_distance(a: WaveField, b: WaveField):
    """Per-channel ``sqrt(int |a - b|^2 dx)``."""
    if a.grid != b.grid:
        raise DomainError("l2_distance needs identical grids")
    if abs(a.t - b.t) > 1e-9 * max(1.0, abs(a.t)):
        raise DomainError(f"l2_distance needs equal times ({a.t} vs {b.t})")
    dx = a.grid.dx
    return (
        float(np.sqrt(np.trapezoid(np.abs(a.psi1 - b.psi1) ** 2, dx=dx))),
        float(np.sqrt(np.trapezoid(np.abs(a.psi2 - b.psi2) ** 2, dx=dx))),
    )


def relative_density_error(approx, ref, floor=1e-4):
    """Relative L2 error of ``|approx|^2`` against ``|ref|^2`` where ``|ref|^2 > floor * max``."""
    da, dr = np.abs(approx) ** 2, np.abs(ref) ** 2
    mask = dr > floor * dr.max()
    return float(np.sqrt(np.sum((da[mask] - dr[mask]) ** 2) / np.sum(dr[mask] ** 2)))


def weighted_fluxes(p: PhysParams, q: PacketParams, tol=1e-12):
    """Stationary ``(R, T1, T2)`` averaged over the packet's momentum density."""
    lo, hi = max(q.k1 - 8.0 / q.sigma, 1e-12), q.k1 + 8.0 / q.sigma
    if hi <= lo:
        raise DomainError("packet has no positive-momentum content")
    b = p.k_threshold
    pts = [b] if lo < b < hi else None

    def f(k):
        return np.array(stationary.flux_vs_k(p, k)) * momentum_density(q, k)

    val, _ = integrate.quad_vec(f, lo, hi, epsabs=tol, epsrel=tol, points=pts)
    return tuple(float(v) for v in val)


def analytic_field(p: PhysParams, q: PacketParams, grid: SpatialGrid, t: float,
                   quad: kernel.QuadratureSpec = kernel.QuadratureSpec(), real_pole_weight=0.5) -> WaveField:
    x = grid.x
    return WaveField(grid, t, kernel.psi1_total(p, q, x, t, quad, real_pole_weight), kernel.psi2(p, q, x, t, quad))


def subsample(w: WaveField, grid: SpatialGrid) -> WaveField:
    """Restrict ``w`` to a coarser grid whose nodes are a subset of ``w.grid``."""
    g = w.grid
    if (g.x_min, g.x_max) != (grid.x_min, grid.x_max) or (g.n_points - 1) % (grid.n_points - 1):
        raise DomainError("target grid nodes are not a subset of the field grid")
    s = (g.n_points - 1) // (grid.n_points - 1)
    return WaveField(grid, w.t, w.psi1[::s], w.psi2[::s])


# --- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class OracleSettings:
    """Oracle grid = experiment grid refined ``refine`` times."""

    dt: float = 1e-3
    refine: int = 1
    delta_width: float | None = None
    boundary: dict | None = None
    stencil: int = 3


@dataclass(frozen=True)
class SeriesSettings:
    regime: str = "high-energy"
    n_terms: int = 12
    form: str = "moment"
    sigma_k1_factor: float = 2.0
    envelope: str = "decaying"


@dataclass(frozen=True)
class KScan:
    k_min: float = 0.1
    k_max: float = 10.0
    n_k: int = 100


@dataclass(frozen=True)
class ExperimentConfig:
    phys: PhysParams
    packet: PacketParams
    grid: SpatialGrid
    mode: str
    times: tuple = ()
    oracle: OracleSettings | None = None
    quad: kernel.QuadratureSpec = field(default_factory=kernel.QuadratureSpec)
    series: SeriesSettings | None = None
    k_scan: KScan = field(default_factory=KScan)
    output_dir: str = "out"
    real_pole_weight: float = 0.5

    def oracle_config(self, n_steps: int) -> oracle.OracleConfig:
        o = self.oracle
        g = self.grid
        fine = SpatialGrid(g.x_min, g.x_max, (g.n_points - 1) * o.refine + 1)
        boundary = oracle.AbsorbingBoundary(**o.boundary) if o.boundary else None
        return oracle.OracleConfig(fine, o.dt, n_steps, o.delta_width, boundary, o.stencil)


def _build(cls, data, name, problems):
    if data is None:
        return None
    if not isinstance(data, dict):
        problems.append(f"{name}: expected an object")
        return None
    try:
        return cls(**data)
    except TypeError as exc:
        problems.append(f"{name}: {exc}")
    except DomainError as exc:
        problems.append(f"{name}: {exc}")
    return None


def _build_grid(data, problems):
    if not isinstance(data, dict):
        problems.append("grid: missing or not an object")
        return None
    data = dict(data)
    try:
        if "dx" in data:
            return SpatialGrid.from_spacing(data.pop("x_min"), data.pop("x_max"), data.pop("dx"))
        return SpatialGrid(**data)
    except (TypeError, KeyError, DomainError) as exc:
        problems.append(f"grid: {exc}")
    return None


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a JSON config document; every violation is collected before raising."""
    problems = []
    if not isinstance(data, dict):
        raise ConfigError(["config must be a JSON object"])
    mode = data.get("mode")
    if mode not in MODES:
        problems.append(f"mode: must be one of {', '.join(MODES)} (got {mode!r})")
    phys = _build(PhysParams, data.get("phys", {}), "phys", problems)
    packet = _build(PacketParams, data.get("packet", {}), "packet", problems)
    grid = _build_grid(data.get("grid"), problems)
    osets = _build(OracleSettings, data.get("oracle"), "oracle", problems)
    ssets = _build(SeriesSettings, data.get("series"), "series", problems)
    quad = _build(kernel.QuadratureSpec, data.get("quad", {}), "quad", problems)
    k_scan = _build(KScan, data.get("k_scan", {}), "k_scan", problems)
    times = data.get("times", [])
    if not isinstance(times, list) or not all(isinstance(t, (int, float)) for t in times):
        problems.append("times: must be a list of numbers")
        times = []
    else:
        if any(t < 0 for t in times):
            problems.append("times: all times must be >= 0")
        if list(times) != sorted(times):
            problems.append("times: must be sorted ascending")
    if mode in ("propagate", "oracle", "series", "compare") and not times:
        problems.append(f"times: required for mode {mode!r}")
    if mode in ("oracle", "compare") and data.get("oracle") is None:
        problems.append(f"oracle: required for mode {mode!r}")
    if mode == "series" and data.get("series") is None:
        problems.append("series: required for mode 'series'")
    if osets is not None:
        if not (isinstance(osets.refine, int) and osets.refine >= 1):
            problems.append("oracle.refine: must be an integer >= 1")
        elif grid is not None:
            try:
                probe = SpatialGrid(grid.x_min, grid.x_max, (grid.n_points - 1) * osets.refine + 1)
                bnd = oracle.AbsorbingBoundary(**osets.boundary) if osets.boundary else None
                oracle.OracleConfig(probe, osets.dt, 0, osets.delta_width, bnd, osets.stencil)
            except (DomainError, TypeError) as exc:
                problems.append(f"oracle: {exc}")
        if isinstance(osets.dt, (int, float)) and osets.dt > 0:
            bad = [t for t in times if abs(round(t / osets.dt) * osets.dt - t) > 1e-9 * max(1.0, t)]
            if bad:
                problems.append(f"times: {bad} are not multiples of oracle.dt={osets.dt}")
    if ssets is not None:
        if ssets.regime not in ("high-energy", "low-energy"):
            problems.append(f"series.regime: unknown regime {ssets.regime!r}")
        if ssets.n_terms < 1:
            problems.append("series.n_terms: must be >= 1")
    if packet is not None and grid is not None and mode in ("propagate", "oracle", "compare"):
        lo, hi = -packet.x0 - 5 * packet.sigma, -packet.x0 + 5 * packet.sigma
        if grid.x_min > lo or grid.x_max < hi:
            problems.append("grid: does not cover the initial packet (+-5 sigma)")
    output_dir = data.get("output_dir", "out")
    if not isinstance(output_dir, str):
        problems.append("output_dir: must be a string")
    unknown = set(data) - {"mode", "phys", "packet", "grid", "oracle", "series", "quad", "k_scan", "times",
                           "output_dir", "real_pole_weight"}
    if unknown:
        problems.append(f"unknown keys: {', '.join(sorted(unknown))}")
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(
        phys, packet, grid, mode, tuple(float(t) for t in times), osets, quad, ssets, k_scan, output_dir,
        float(data.get("real_pole_weight", 0.5)),
    )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"invalid JSON: {exc}"]) from exc
    return parse_config(data)


# --- reporting ---------------------------------------------------------------


@dataclass
class ComparisonReport:
    times: list
    l2_psi1: list
    l2_psi2: list
    norms_analytic: list
    norms_oracle: list
    fluxes_stationary: tuple
    fluxes_oracle: tuple | None
    energy_ratio: float
    runtime: dict = field(default_factory=dict)

    def as_dict(self):
        """Serializable form; wall-clock runtimes are left out so outputs stay reproducible."""
        d = asdict(self)
        d.pop("runtime")
        return d


def _fmt(v: float) -> str:
    return repr(float(v))


def write_field_csv(path, w: WaveField):
    cols = (w.x, w.psi1.real, w.psi1.imag, np.abs(w.psi1) ** 2, w.psi2.real, w.psi2.imag, np.abs(w.psi2) ** 2)
    with open(path, "w", newline="\n") as fh:
        fh.write("x,re_psi1,im_psi1,abs2_psi1,re_psi2,im_psi2,abs2_psi2\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_field_csv(path, grid: SpatialGrid, t: float) -> WaveField:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return WaveField(grid, t, data[:, 1] + 1j * data[:, 2], data[:, 4] + 1j * data[:, 5])


def _norm_ledger(w: WaveField):
    n1, n2 = channel_norms(w)
    return {"N1": n1, "N2": n2, "total": n1 + n2}


def _n_steps(t, dt):
    n = int(round(t / dt))
    if abs(n * dt - t) > 1e-9 * max(1.0, t):
        raise DomainError(f"time {t} is not a multiple of dt={dt}")
    return n


def _oracle_snapshots(cfg: ExperimentConfig):
    """Oracle fields at every requested time (on the oracle's own grid)."""
    o = cfg.oracle
    steps = [_n_steps(t, o.dt) for t in cfg.times]
    ocfg = cfg.oracle_config(max(steps) if steps else 0)
    state = initial_packet(cfg.packet, ocfg.grid)
    snaps = []
    current, done = state, 0
    for n in steps:
        if n > done:
            part = dataclasses.replace(ocfg, n_steps=n - done)
            current = oracle.evolve(current, part, cfg.phys)[-1]
            done = n
        snaps.append(WaveField(ocfg.grid, n * o.dt, current.psi1, current.psi2))
    return ocfg, snaps


def _run_stationary(cfg: ExperimentConfig, out: Path, summary: dict):
    ks = np.linspace(cfg.k_scan.k_min, cfg.k_scan.k_max, cfg.k_scan.n_k)
    R, T1, T2 = stationary.flux_vs_k(cfg.phys, ks)
    with open(out / "stationary.csv", "w", newline="\n") as fh:
        fh.write("k,R,T1,T2,sum\n")
        for row in zip(ks, R, T1, T2, R + T1 + T2):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    summary["stationary"] = {
        "n_k": len(ks),
        "max_flux_defect": float(np.max(np.abs(R + T1 + T2 - 1.0))),
        "weighted_fluxes": list(weighted_fluxes(cfg.phys, cfg.packet)),
    }


def _run_propagate(cfg, out, summary):
    rows = []
    for i, t in enumerate(cfg.times):
        w = analytic_field(cfg.phys, cfg.packet, cfg.grid, t, cfg.quad, cfg.real_pole_weight)
        write_field_csv(out / f"t_{i}.csv", w)
        rows.append({"index": i, "t": t, **_norm_ledger(w)})
    summary["fields"] = rows


def _run_oracle(cfg, out, summary):
    ocfg, snaps = _oracle_snapshots(cfg)
    rows = []
    for i, w in enumerate(snaps):
        write_field_csv(out / f"t_{i}.csv", subsample(w, cfg.grid))
        rows.append({"index": i, "t": w.t, **_norm_ledger(w)})
    summary["fields"] = rows
    if _passed_junction(cfg.phys, cfg.packet, snaps[-1]):
        summary["oracle_fluxes_final"] = list(oracle.extract_fluxes(snaps[-1]))
    summary["junction_density_final"] = oracle.junction_density(snaps[-1])


def _run_series(cfg, out, summary):
    s = cfg.series
    p, q, x = cfg.phys, cfg.packet, cfg.grid.x
    rows = []
    with open(out / "terms.csv", "w", newline="\n") as fh:
        fh.write("time_index,channel,term,max_abs,included\n")
        for i, t in enumerate(cfg.times):
            if s.regime == "high-energy":
                r1 = series.psi1_series_highE(p, q, x, t, s.n_terms, s.form)
                r2 = series.psi2_series_highE(p, q, x, t, s.n_terms, s.form, s.sigma_k1_factor)
            else:
                r1 = series.psi1_series_lowE(p, q, x, t, s.n_terms)
                r2 = series.psi2_series_lowE(p, q, x, t, s.n_terms, s.envelope, s.sigma_k1_factor)
            for ch, r in ((1, r1), (2, r2)):
                inc = r.included if r.included is not None else np.arange(len(r.terms)) <= r.truncation_index
                for j, term in enumerate(r.terms):
                    fh.write(f"{i},{ch},{j},{_fmt(np.max(np.abs(term)))},{int(inc[j])}\n")
            w = WaveField(cfg.grid, t, r1.value, r2.value)
            write_field_csv(out / f"t_{i}.csv", w)
            ti = r2.truncation_index
            rows.append({"index": i, "t": t, "truncation_psi1": r1.truncation_index,
                         "truncation_psi2": list(ti) if isinstance(ti, tuple) else ti, **_norm_ledger(w)})
    summary["fields"] = rows
    summary["energy_ratio"] = _energy_ratio(p, q)


def _energy_ratio(p, q):
    return float(packet_energy(p, q) / p.V0) if p.V0 > 0 else None


def _passed_junction(p: PhysParams, q: PacketParams, w: WaveField, threshold=1e-8) -> bool:
    """True once the packet's trailing edge has had time to cross and the origin is empty."""
    t_pass = p.m * (q.x0 + 5.0 * q.sigma) / (p.hbar * q.k1) if q.k1 > 0 else np.inf
    dens = np.abs(w.psi1) ** 2 + np.abs(w.psi2) ** 2
    return w.t >= t_pass and oracle.junction_density(w) < threshold * dens.max()


def compare(cfg: ExperimentConfig, out: Path | None = None) -> ComparisonReport:
    """Analytic kernel against the grid oracle at each requested time."""
    t0 = time.perf_counter()
    ocfg, snaps = _oracle_snapshots(cfg)
    t_oracle = time.perf_counter() - t0
    rep = ComparisonReport([], [], [], [], [], weighted_fluxes(cfg.phys, cfg.packet), None,
                           _energy_ratio(cfg.phys, cfg.packet))
    t0 = time.perf_counter()
    for i, snap in enumerate(snaps):
        coarse = subsample(snap, cfg.grid)
        ana = analytic_field(cfg.phys, cfg.packet, cfg.grid, snap.t, cfg.quad, cfg.real_pole_weight)
        d1, d2 = l2_distance(ana, coarse)
        rep.times.append(snap.t)
        rep.l2_psi1.append(d1)
        rep.l2_psi2.append(d2)
        rep.norms_analytic.append(_norm_ledger(ana))
        rep.norms_oracle.append(_norm_ledger(snap))
        if out is not None:
            write_field_csv(out / f"t_{i}.csv", ana)
            write_field_csv(out / f"oracle_t_{i}.csv", coarse)
    if snaps and _passed_junction(cfg.phys, cfg.packet, snaps[-1]):
        rep.fluxes_oracle = oracle.extract_fluxes(snaps[-1])
    rep.runtime = {"oracle_s": t_oracle, "analytic_s": time.perf_counter() - t0}
    return rep


def _provenance(cfg: ExperimentConfig, raw: dict | None):
    return {"code_version": __version__, "package": "deltawave", "config": raw}


def run(cfg: ExperimentConfig, raw: dict | None = None, output_dir=None) -> int:
    """Execute one experiment, writing CSV fields and ``summary.json``; returns an exit status."""
    out = Path(output_dir or cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create output directory %s: %s", out, exc)
        return EXIT_IO
    summary = {"mode": cfg.mode, "provenance": _provenance(cfg, raw)}
    try:
        if cfg.mode == "stationary":
            _run_stationary(cfg, out, summary)
        elif cfg.mode == "propagate":
            _run_propagate(cfg, out, summary)
        elif cfg.mode == "oracle":
            _run_oracle(cfg, out, summary)
        elif cfg.mode == "series":
            _run_series(cfg, out, summary)
        elif cfg.mode == "compare":
            rep = compare(cfg, out)
            log.info("runtime: %s", rep.runtime)
            summary["comparison"] = rep.as_dict()
        with open(out / "summary.json", "w", newline="\n") as fh:
            json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return EXIT_IO
    except (DomainError, oracle.OracleError, FloatingPointError, ArithmeticError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    return EXIT_OK


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj
