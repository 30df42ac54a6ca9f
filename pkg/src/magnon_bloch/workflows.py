"""Experiment workflows behind the command-line subcommands.

Each ``run_*`` function writes CSV/JSON files plus ``manifest.json`` and
``plot.py`` into an output directory and returns a small summary dict.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis, io
from .basis import ChainGeometry, Sector, SectorState, enumerate_basis, make_initial_state
from .config import ConfigError, RunConfig
from .hamiltonian import (ModelParams, SectorOperator, build_effective_pair_hamiltonian,
                          build_xxz_sector_hamiltonian)
from .observables import (con7_correlation, fidelity, generalized_deviation, longitudinal_correlation,
                          spin_distribution, two_magnon_correlation)
from .propagator import EigenDecomposition, TimeGrid, Trajectory, diagonalize, evolve_krylov, evolve_spectral
from .spectrum import overlaps, two_magnon_spectrum

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Simulation:
    geometry: ChainGeometry
    params: ModelParams
    grid: TimeGrid
    hamiltonian: SectorOperator
    initial: SectorState
    trajectory: Trajectory
    eig: EigenDecomposition | None = None

    @property
    def bloch_period(self) -> float:
        return self.params.bloch_period

    @property
    def sites(self) -> np.ndarray:
        return self.geometry.sites


def simulate(total_sites: int, delta: float, B: float, positions=(-1, 0), periods: float = 1,
             samples_per_period: int = 256, method: str = "spectral", tol: float = 1e-9,
             boundary: str = "open", sector: Sector | str = Sector.TWO_MAGNON) -> Simulation:
    """Evolve a product state of flipped spins in the full model (or the effective pair model).

    ``sector="bound-pair"`` propagates the effective pair Hamiltonian instead of the
    full two-magnon one; ``positions`` must then be adjacent.
    """
    geometry = ChainGeometry.from_total_sites(total_sites, boundary)
    params = ModelParams(delta, B)
    grid = TimeGrid.bloch_periods(B, periods, samples_per_period)
    sector = Sector(sector)
    if sector is Sector.BOUND_PAIR:
        H = build_effective_pair_hamiltonian(geometry, params)
        basis = H.basis
    else:
        basis = enumerate_basis(geometry, sector)
        H = build_xxz_sector_hamiltonian(basis, params)
    psi0 = make_initial_state(basis, positions)
    eig = None
    if method == "spectral":
        eig = diagonalize(H)
        traj = evolve_spectral(psi0, eig, grid)
    elif method == "krylov":
        traj = evolve_krylov(psi0, H, grid, tol)
    else:
        raise ValueError(f"unknown propagator {method!r}")
    return Simulation(geometry, params, grid, H, psi0, traj, eig)


def _simulate_config(cfg: RunConfig, delta: float, B: float | None = None,
                     sector: Sector | str = Sector.TWO_MAGNON) -> Simulation:
    cfg.require_gradient()
    if cfg.boundary == "periodic":
        raise ConfigError(f"{cfg.where('geometry', 'boundary')}: dynamics in a gradient field need an open chain")
    return simulate(cfg.total_sites, delta, cfg.B if B is None else B, cfg.positions, cfg.periods,
                    cfg.samples_per_period, cfg.propagator, cfg.tol, cfg.boundary, sector)


def snapshot_indices(cfg: RunConfig) -> list[tuple[float, int]]:
    """Grid indices of the snapshot times (given in Bloch periods); each must land on the grid."""
    out = []
    last = int(round(cfg.periods * cfg.samples_per_period))
    for s in cfg.snapshots:
        k = s * cfg.samples_per_period
        idx = int(round(k))
        if abs(k - idx) > 1e-9 or not 0 <= idx <= last:
            raise ConfigError(f"{cfg.source}: snapshot t = {s} T_B is not a point of the time grid")
        out.append((s, idx))
    return out


def _prepare(out: Path) -> Path:
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc.strerror}") from None
    return out


def _sweep_dirs(cfg: RunConfig, out: Path):
    if len(cfg.deltas) == 1:
        yield cfg.deltas[0], out
    else:
        for d in cfg.deltas:
            yield d, out / f"Delta_{d:+g}"


def periodic_window(times: np.ndarray, values: np.ndarray, bloch_period: float | None):
    """Drop the closing sample of a grid that ends on a whole number of Bloch periods.

    That sample repeats the phase of ``t = 0``; without it the DFT window spans
    exactly the whole periods and integer multiples of ``omega_B`` fall on bins.
    """
    if bloch_period is not None and len(times) > 1:
        periods = times[-1] / bloch_period
        if abs(periods - round(periods)) < 1e-9:
            return times[:-1], values[:-1]
    return times, values


def run_evolve(cfg: RunConfig, out: Path) -> dict:
    """Spin distribution history, C and Gamma snapshots, fidelity and D^x series for every Delta."""
    out = _prepare(out)
    summary = {}
    for delta, target in _sweep_dirs(cfg, out):
        target = _prepare(target)
        sim = _simulate_config(cfg, delta)
        traj, TB, sites = sim.trajectory, sim.bloch_period, sim.sites
        snaps = snapshot_indices(cfg)
        written = []
        sz = spin_distribution(traj)
        results = {"max_norm_error": float(np.max(np.abs(traj.norms - 1)))}
        if cfg.distribution:
            written.append(io.write_time_table(target / "distribution.csv", traj.times, TB,
                                               [str(s) for s in sites], sz.T))
        if cfg.fidelity:
            F = fidelity(traj, sim.initial)
            written.append(io.write_time_table(target / "fidelity.csv", traj.times, TB, ["fidelity"], [F]))
        if cfg.deviation:
            dev = generalized_deviation(sz, sites, cfg.exponent)
            written.append(io.write_time_table(target / "deviation.csv", traj.times, TB,
                                               ["centroid", "D"], [dev.centroid, dev.deviation]))
        if cfg.correlations or cfg.pair_correlations:
            C = longitudinal_correlation(traj) if cfg.correlations else None
            G = two_magnon_correlation(traj)
            if C is not None:
                results["con7_max_residual"] = float(np.max(np.abs(C - con7_correlation(G, sz))))
            for s, idx in snaps:
                if cfg.correlations:
                    written.append(io.write_matrix(target / f"C_t{s:.4f}.csv", sites, C[idx]))
                if cfg.pair_correlations:
                    written.append(io.write_matrix(target / f"Gamma_t{s:.4f}.csv", sites, G[idx]))
        written.append(io.write_plot_script(target, ["fidelity.csv", "deviation.csv", "distribution.csv"]))
        params = cfg.with_delta(delta).as_dict()
        io.write_manifest(target, "evolve", params, written, results)
        summary[delta] = {"dir": str(target), **results}
        log.info("evolve Delta=%g -> %s", delta, target)
    return summary


def run_spectrum(cfg: RunConfig, out: Path) -> dict:
    """Momentum-resolved spectrum on the periodic, field-free chain with initial-state overlaps."""
    out = _prepare(out)
    summary = {}
    geometry = ChainGeometry.from_total_sites(cfg.total_sites, "periodic")
    for delta, target in _sweep_dirs(cfg, out):
        target = _prepare(target)
        res = two_magnon_spectrum(geometry, delta, cfg.bound_tol)
        res = overlaps(res, make_initial_state(res.basis, cfg.positions))
        path = target / "spectrum.csv"
        with open(path, "w", newline="") as fh:
            res.write_csv(fh)
        results = {
            "bound_fraction": res.bound_fraction,
            "num_bound": int(res.bound.sum()),
            "overlap_sum": float(res.overlaps.sum()),
            "bound_tol": res.bound_tol,
        }
        plot = io.write_plot_script(target, ["spectrum.csv"])
        params = {**cfg.with_delta(delta).as_dict(), "boundary": "periodic", "B": 0.0}
        io.write_manifest(target, "spectrum", params, [path, plot], results)
        summary[delta] = {"dir": str(target), **results}
    return summary


def run_effective(cfg: RunConfig, out: Path) -> dict:
    """Full two-magnon dynamics against the effective bound-pair model: centroid and D^x."""
    out = _prepare(out)
    full = _simulate_config(cfg, cfg.delta)
    eff = _simulate_config(cfg, cfg.delta, sector=Sector.BOUND_PAIR)
    sites, TB = full.sites, full.bloch_period
    dev_full = generalized_deviation(spin_distribution(full.trajectory), sites, cfg.exponent)
    dev_eff = generalized_deviation(spin_distribution(eff.trajectory), sites, cfg.exponent)
    times = full.trajectory.times
    path = io.write_time_table(out / "effective.csv", times, TB,
                               ["centroid_full", "centroid_eff", "D_full", "D_eff"],
                               [dev_full.centroid, dev_eff.centroid, dev_full.deviation, dev_eff.deviation])
    first_period = times <= TB * (1 + 1e-12)
    results = {"max_centroid_difference_first_period":
               float(np.max(np.abs(dev_full.centroid - dev_eff.centroid)[first_period]))}
    for name, series in [("centroid_full", dev_full.centroid), ("centroid_eff", dev_eff.centroid),
                         ("D_full", dev_full.deviation), ("D_eff", dev_eff.deviation)]:
        t, v = periodic_window(times, series, TB)
        peaks = analysis.find_peaks(analysis.dft_spectrum(t, v, cfg.window), cfg.min_prominence_fraction)
        results[f"{name}_dominant_omega"] = peaks[0].omega if len(peaks) else None
    plot = io.write_plot_script(out, ["effective.csv"])
    io.write_manifest(out, "effective", cfg.as_dict(), [path, plot], results)
    return results


def run_symmetry(cfg: RunConfig, out: Path, variant: str = "reflect") -> dict:
    """Correlation histories at ``(Delta, B)`` against ``(-Delta, B)`` reflected about the initial centroid.

    ``variant="flip-field"`` compares with ``(-Delta, -B)`` without reflection.
    """
    out = _prepare(out)
    delta = cfg.delta
    run_a = _simulate_config(cfg, delta)
    if variant == "reflect":
        run_b = _simulate_config(cfg, -delta)
        centroid = 0.5 * sum(cfg.positions)
    elif variant == "flip-field":
        run_b = _simulate_config(cfg, -delta, -cfg.B)
        centroid = None
    else:
        raise ValueError(f"unknown symmetry variant {variant!r}")
    sites = run_a.sites
    ca = longitudinal_correlation(run_a.trajectory)
    cb = longitudinal_correlation(run_b.trajectory)
    pa = {"Delta": delta, "B": cfg.B}
    pb = {"Delta": -delta, "B": run_b.params.B}
    if centroid is None:
        dev = float(np.max(np.abs(ca - cb)))
        report = analysis.SymmetryReport(dev, float("nan"), pa, pb, len(sites) ** 2, 0)
        mirror = list(cfg.trace)
    else:
        report = analysis.dynamical_symmetry_check(ca, cb, sites, centroid, pa, pb)
        mirror = sorted(int(round(2 * centroid)) - s for s in cfg.trace)
    files = []
    payload = {**report.to_dict(), "variant": variant}
    l1, l2 = cfg.trace
    half = run_a.geometry.half_length
    if all(abs(s) <= half for s in (l1, l2, *mirror)):
        a_series = ca[:, l1 + half, l2 + half]
        b_series = cb[:, mirror[0] + half, mirror[1] + half]
        payload["trace"] = {"sites_a": [l1, l2], "sites_b": mirror,
                            "max_deviation": float(np.max(np.abs(a_series - b_series)))}
        files.append(io.write_time_table(out / "trace.csv", run_a.trajectory.times, run_a.bloch_period,
                                         [f"C_a({l1},{l2})", f"C_b({mirror[0]},{mirror[1]})"],
                                         [a_series, b_series]))
    files.append(io.write_json(out / "symmetry.json", payload))
    files.append(io.write_plot_script(out, ["trace.csv"]))
    io.write_manifest(out, "symmetry", cfg.as_dict(), files, {"max_deviation": report.max_deviation})
    return payload


def analyze_series(times, values, bloch_period: float | None = None, window: str = "none",
                   mode: str = "auto", min_prominence_fraction: float = 0.05):
    """DFT, peaks and gradient estimate of one series. Returns ``(spectrum, peaks, estimate)``."""
    t, v = periodic_window(np.asarray(times), np.asarray(values), bloch_period)
    spec = analysis.dft_spectrum(t, v, window)
    peaks = analysis.find_peaks(spec, min_prominence_fraction)
    est = analysis.estimate_gradient(peaks, mode) if len(peaks) else None
    return spec, peaks, est


def run_analyze(cfg: RunConfig | None, out: Path, input_path: Path, column: str,
                window: str = "none", mode: str = "auto", min_prominence_fraction: float = 0.05) -> dict:
    """Spectrum, peaks and gradient estimate of a column of a stored time table."""
    out = _prepare(out)
    table = io.read_table(Path(input_path))
    if "t" not in table:
        raise ValueError(f"{input_path}: no 't' column")
    if column not in table:
        raise ValueError(f"{input_path}: no column {column!r}; available: {sorted(table)}")
    times = table["t"]
    TB = None
    if "t_over_TB" in table and table["t_over_TB"][-1] > 0:
        TB = float(times[-1] / table["t_over_TB"][-1])
    spec, peaks, est = analyze_series(times, table[column], TB, window, mode, min_prominence_fraction)
    files = [
        io.write_columns(out / "spectrum.csv", ["omega", "magnitude"], [spec.omega, spec.magnitude]),
        io.write_columns(out / "peaks.csv", ["omega_peak", "magnitude", "prominence"],
                         [[p.omega for p in peaks], [p.magnitude for p in peaks],
                          [p.prominence for p in peaks]]),
    ]
    result = {
        "input": str(input_path), "column": column, "window": window,
        "bin_width": spec.bin_width, "num_peaks": len(peaks),
        "gradient": None if est is None else {"B": est.B, "uncertainty": est.uncertainty,
                                              "mode": est.mode, "omega_top": est.omega_top},
    }
    files.append(io.write_json(out / "gradient.json", result))
    files.append(io.write_plot_script(out, ["spectrum.csv"]))
    params = {"input": str(input_path), "column": column, "window": window, "mode": mode,
              "min_prominence_fraction": min_prominence_fraction}
    io.write_manifest(out, "analyze", params, files, result)
    return result
