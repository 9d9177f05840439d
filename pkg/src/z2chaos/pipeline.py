"""Full reproduction runs: evolve, measure, fit, analyze, report.

A run fans out over (initial state x time point), evolves exactly and/or by
Trotterized circuits, optionally simulates randomized measurements and runs
tomography fits, then aggregates spectra into the regime-resolved statistics
files. Every stochastic choice draws from a named substream of the root
seed, so reruns with equal seeds are byte-identical in all delimited
outputs.

Times are specified as the dimensionless combination gt; the physical
evolution time handed to the propagators is gt/g.
"""
from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .circuits import build_trotter_circuit, apply_circuit
from .lattice import (ModelConfig, build_dual_hamiltonian, gauss_operators,
                      sample_initial_state)
from .measurement import (exact_basis_probabilities, sample_cue_basis,
                          simulate_measurements, write_records)
from .pauli import PauliTerm, apply_term
from .rng import derive_seed, substream
from .spectra import (default_theta_grid, egrd, entanglement_spectrum,
                      entropy_decomposition, esff, fit_ramp, gap_ratios)
from .statevector import exact_evolve, partial_trace, prepare
from .tomography import (FitOptions, fit_eh_from_measurements, fit_eh_infinite,
                         generate_ansatz, save_density_matrix, write_fit)

REGIME_NAMES = ("I", "II", "III")
DEFAULT_GT_POINTS = (0.0, 0.34, 0.68, 1.02, 1.36, 1.70, 2.04, 2.38)
EXTENDED_GT_POINTS = DEFAULT_GT_POINTS + (3.0, 3.6, 4.2, 5.0, 5.8, 6.6, 7.4, 8.2, 9.1, 10.0)
DEFAULT_REGIMES = ((0.0, 1.8), (1.8, 5.0), (5.0, 10.0))
MODES = ("exact", "trotter", "tomography", "infinite")


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    out_dir: Path = Path("run")
    modes: tuple[str, ...] = ("exact", "trotter")
    n_initial_states: int = 6
    gt_points: tuple[float, ...] = DEFAULT_GT_POINTS
    n_trotter_steps: int = 4
    n_bases: int = 24
    n_shots: int = 750
    n_boots: int = 1000
    seed: int = 1
    cutoff: float = 1e-15
    regimes: tuple[tuple[float, float], ...] = DEFAULT_REGIMES
    theta_points: int = 200
    ramp_window: tuple[float, float] = (2.0, 12.0)
    fit_restarts: int = 1
    fit_max_iter: int = 2000
    trotter_order: tuple[str, ...] = ("Z", "ZZ", "X", "XX")

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        for mode in self.modes:
            if mode not in MODES:
                raise ValueError(f"unknown mode {mode!r}")
        for count in (self.n_initial_states, self.n_trotter_steps, self.n_bases,
                      self.n_shots, self.n_boots):
            if count < 1:
                raise ValueError("all counts must be positive")
        if any(gt < 0 for gt in self.gt_points):
            raise ValueError("time points must be nonnegative")
        if self.model.g <= 0:
            raise ValueError("the gt time grid needs a positive coupling g")

    def fit_options(self, seed_path) -> FitOptions:
        return FitOptions(n_restarts=self.fit_restarts, max_iter=self.fit_max_iter,
                          seed=derive_seed(self.seed, "fit", *seed_path))


@dataclass
class RunManifest:
    config_lines: list[str]
    artifacts: list[tuple[str, str]] = field(default_factory=list)  # (sha256, relpath)
    notes: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    status: str = "ok"
    out_dir: Path = Path(".")

    def add_file(self, path: Path):
        digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        rel = str(Path(path).relative_to(self.out_dir))
        self.artifacts.append((digest, rel))

    def note(self, message: str):
        self.notes.append(message)

    def write(self, path: Path):
        lines = [f"z2chaos manifest v1", f"version {__version__}", f"status {self.status}",
                 "config:"]
        lines += [f"  {ln}" for ln in self.config_lines]
        lines.append("timings:")
        lines += [f"  {k} {v:.3f}" for k, v in self.timings.items()]
        lines.append("notes:")
        lines += [f"  {n}" for n in self.notes]
        lines.append("artifacts:")
        lines += [f"  {digest}  {rel}" for digest, rel in self.artifacts]
        lines.append("end")
        Path(path).write_text("\n".join(lines) + "\n")


def bootstrap(samples, n_boots: int, seed: int) -> tuple[float, float]:
    """Mean and standard deviation of resampled means (resampling with replacement)."""
    samples = np.asarray(samples, dtype=float)
    if len(samples) == 0:
        raise ValueError("cannot bootstrap an empty sample")
    rng = substream(seed, "bootstrap")
    idx = rng.integers(0, len(samples), size=(n_boots, len(samples)))
    means = samples[idx].mean(axis=1)
    return float(means.mean()), float(means.std())


def _config_lines(run: RunConfig) -> list[str]:
    m = run.model
    return [
        f"lx {m.l_x}", f"la {m.l_a}", f"g {m.g!r}", f"seed {run.seed}",
        f"modes {' '.join(run.modes)}",
        f"n_initial_states {run.n_initial_states}",
        f"gt_points {' '.join(f'{gt:g}' for gt in run.gt_points)}",
        f"n_trotter_steps {run.n_trotter_steps}",
        f"n_bases {run.n_bases}", f"n_shots {run.n_shots}", f"n_boots {run.n_boots}",
        f"cutoff {run.cutoff:g}",
        f"regimes {' '.join(f'{lo:g}:{hi:g}' for lo, hi in run.regimes)}",
        f"ramp_window {run.ramp_window[0]:g} {run.ramp_window[1]:g}",
    ]


def regime_of(gt: float, regimes) -> str | None:
    for name, (lo, hi) in zip(REGIME_NAMES, regimes):
        last = name == REGIME_NAMES[len(regimes) - 1]
        if lo <= gt < hi or (last and gt == hi):
            return name
    return None


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join(f"{v:.12g}" if isinstance(v, float) else str(v)
                              for v in row))
    path.write_text("\n".join(lines) + "\n")


def _gt_tag(gt: float) -> str:
    return f"{gt:g}"


def initial_states(run: RunConfig):
    return [sample_initial_state(run.model, derive_seed(run.seed, "state", i))
            for i in range(run.n_initial_states)]


def _observable_terms(model: ModelConfig):
    m = model.subsystem_qubits
    singles = [PauliTerm(1.0, {q: "Z"}) for q in range(m)]
    pairs = [PauliTerm(1.0, {q: "X", q + 1: "X"}) for q in range(m - 1)]
    return singles + pairs


def run_pipeline(run: RunConfig, fit_source: str = "simulate") -> RunManifest:
    """Execute the full configured run; see the module docstring.

    fit_source="files" reuses tomography results already present under
    out_dir/fits (the analyze stage) instead of simulating measurements and
    refitting; everything deterministic is recomputed.
    """
    t_start = time.perf_counter()
    out = run.out_dir
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config_lines=_config_lines(run), out_dir=out)

    model = run.model
    m = model.subsystem_qubits
    h = build_dual_hamiltonian(model)
    gauss = gauss_operators(model)
    states = initial_states(run)
    theta = default_theta_grid(run.theta_points)
    needs_fits = "tomography" in run.modes or "infinite" in run.modes
    simulate_fits = needs_fits and fit_source == "simulate"
    ansatz = generate_ansatz(model) if needs_fits else None
    observables = _observable_terms(model)

    if "tomography" in run.modes and simulate_fits:
        (out / "records").mkdir(exist_ok=True)
    if needs_fits and simulate_fits:
        (out / "fits").mkdir(exist_ok=True)
    for mode in run.modes:
        (out / mode).mkdir(exist_ok=True)

    # per-mode accumulation: mode -> list of dict per (state, time)
    results = {mode: [] for mode in run.modes}
    obs_rows = []
    gauss_rows = []
    selftest_done = False
    t_evolve = 0.0
    t_fit = 0.0

    for i, basis_state in enumerate(states):
        psi0 = prepare(basis_state)
        for ti, gt in enumerate(run.gt_points):
            t_phys = gt / model.g
            tick = time.perf_counter()
            evolved = {}
            needs_trotter = "trotter" in run.modes or simulate_fits
            if "exact" in run.modes:
                evolved["exact"] = exact_evolve(psi0, h, t_phys)
            if needs_trotter:
                circuit = build_trotter_circuit(h, t_phys, run.n_trotter_steps,
                                                family_order=run.trotter_order)
                evolved["trotter"] = apply_circuit(psi0, circuit)
            t_evolve += time.perf_counter() - tick
            source = evolved.get("trotter", evolved.get("exact"))

            rhos = {}
            for mode in ("exact", "trotter"):
                if mode not in run.modes or mode not in evolved:
                    continue
                psi = evolved[mode]
                rho = partial_trace(psi, m)
                rhos[mode] = rho
                spectrum = entanglement_spectrum(rho, model, run.cutoff)
                decomposition = entropy_decomposition(rho, model)
                results[mode].append({"state": i, "gt": gt, "spectrum": spectrum,
                                      "entropy": decomposition})
                for term in observables:
                    obs_rows.append((gt, mode, i, term.label(),
                                     float(np.vdot(psi, _apply(term, psi)).real)))
                gauss_rows.append((gt, mode, i,
                                   float(np.vdot(psi, _apply(gauss[0], psi)).real),
                                   float(np.vdot(psi, _apply(gauss[1], psi)).real)))

            if "tomography" in run.modes and simulate_fits:
                records = simulate_record_set(run, source, i, ti)
                rec_path = out / "records" / f"state{i}_gt{_gt_tag(gt)}.txt"
                write_records(rec_path, records)
                manifest.add_file(rec_path)

                tick = time.perf_counter()
                fit = fit_eh_from_measurements(records, ansatz,
                                               run.fit_options(("finite", i, ti)))
                t_fit += time.perf_counter() - tick
                fit.beta_star.time_tag = gt
                _record_fit(out, manifest, results, "tomography", i, gt, fit,
                            ansatz, model, suffix="finite")
            elif "tomography" in run.modes:
                _load_fit_entry(out, manifest, results, "tomography", i, gt,
                                ansatz, model, suffix="finite")

            if "infinite" in run.modes and simulate_fits:
                rho_source = rhos.get("trotter")
                if rho_source is None:
                    rho_source = partial_trace(source, m)
                tick = time.perf_counter()
                fit = fit_eh_infinite(rho_source, ansatz,
                                      run.fit_options(("infinite", i, ti)))
                t_fit += time.perf_counter() - tick
                fit.beta_star.time_tag = gt
                _record_fit(out, manifest, results, "infinite", i, gt, fit,
                            ansatz, model, suffix="infinite")
            elif "infinite" in run.modes:
                _load_fit_entry(out, manifest, results, "infinite", i, gt,
                                ansatz, model, suffix="infinite")

            if not selftest_done and "exact" in run.modes and gt > 0:
                basis = sample_cue_basis(substream(run.seed, "selftest"), model.n_qubits)
                deviation = self_consistency_deviation(evolved["exact"], basis, m)
                manifest.note(f"selftest marginal-vs-reduced max deviation {deviation:.3g}")
                selftest_done = True

    _write_csv(out / "observables.csv", "gt,mode,state,observable,value", obs_rows)
    manifest.add_file(out / "observables.csv")
    _write_csv(out / "gauss.csv", "gt,mode,state,gauss_ca,gauss_ac", gauss_rows)
    manifest.add_file(out / "gauss.csv")

    for mode in run.modes:
        if results[mode]:
            _aggregate_mode(out / mode, mode, results[mode], run, theta, manifest)

    from .plots import emit_plots
    plot_files, plot_notes = emit_plots(out)
    for p in plot_files:
        manifest.add_file(p)
    for n in plot_notes:
        manifest.note(n)

    manifest.timings["evolve"] = t_evolve
    manifest.timings["fit"] = t_fit
    manifest.timings["total"] = time.perf_counter() - t_start
    if any("non-converged" in n for n in manifest.notes):
        manifest.status = "partial"
    manifest.write(out / "manifest.txt")
    return manifest


def _apply(term, psi):
    return apply_term(term, psi, int(np.log2(len(psi))))


def self_consistency_deviation(psi: np.ndarray, basis, m: int) -> float:
    """Exact-mode identity check: reduced-state Born probabilities must equal
    the subsystem marginal of full-register probabilities in the same basis."""
    from .circuits import apply_circuit as apply_c
    from .measurement import basis_rotation_circuit
    rho = partial_trace(psi, m)
    p_reduced = exact_basis_probabilities(rho, basis.restrict(m))
    rotated = apply_c(psi, basis_rotation_circuit(basis))
    p_marginal = (np.abs(rotated) ** 2).reshape(1 << m, -1).sum(axis=1)
    return float(np.max(np.abs(p_reduced - p_marginal)))


def simulate_record_set(run: RunConfig, source: np.ndarray, state_idx: int,
                        time_idx: int):
    """The randomized-measurement records for one (state, time) work item."""
    model = run.model
    records = []
    for b in range(run.n_bases):
        basis = sample_cue_basis(substream(run.seed, "basis", state_idx, time_idx, b),
                                 model.n_qubits, basis_id=b)
        shots_rng = substream(run.seed, "shots", state_idx, time_idx, b)
        records.append(simulate_measurements(source, basis, run.n_shots, shots_rng,
                                             model.subsystem_qubits))
    return records


def _fit_entry(results, mode, state_idx, gt, fit, model):
    spectrum = entanglement_spectrum(fit.rho_fit, model, cutoff=None)
    decomposition = entropy_decomposition(fit.rho_fit, model)
    results[mode].append({"state": state_idx, "gt": gt, "spectrum": spectrum,
                          "entropy": decomposition, "cost": fit.cost_final})


def _record_fit(out, manifest, results, mode, state_idx, gt, fit, ansatz,
                model, suffix):
    fit_path = out / "fits" / f"state{state_idx}_gt{_gt_tag(gt)}_{suffix}.txt"
    write_fit(fit_path, fit, ansatz)
    manifest.add_file(fit_path)
    rho_path = out / "fits" / f"state{state_idx}_gt{_gt_tag(gt)}_{suffix}_rho.txt"
    save_density_matrix(rho_path, fit.rho_fit)
    manifest.add_file(rho_path)
    if not fit.converged:
        manifest.note(f"fit non-converged mode={mode} state={state_idx} gt={_gt_tag(gt)}")
    _fit_entry(results, mode, state_idx, gt, fit, model)


def _load_fit_entry(out, manifest, results, mode, state_idx, gt, ansatz, model,
                    suffix):
    from .tomography import read_fit
    fit_path = out / "fits" / f"state{state_idx}_gt{_gt_tag(gt)}_{suffix}.txt"
    if not fit_path.exists():
        manifest.note(f"missing fit file {fit_path.name}; {mode} entry skipped")
        return
    fit = read_fit(fit_path, ansatz)
    if not fit.converged:
        manifest.note(f"fit non-converged mode={mode} state={state_idx} gt={_gt_tag(gt)}")
    _fit_entry(results, mode, state_idx, gt, fit, model)


def _aggregate_mode(mode_dir: Path, mode: str, entries, run: RunConfig, theta,
                    manifest: RunManifest) -> None:
    mode_dir.mkdir(exist_ok=True)

    # spectra regression file
    rows = []
    for e in entries:
        for s, xi in enumerate(e["spectrum"].sectors, start=1):
            for k, level in enumerate(xi):
                rows.append((e["gt"], e["state"], s, k, float(level)))
    _write_csv(mode_dir / "spectra.csv", "gt,state,sector,index,xi", rows)
    manifest.add_file(mode_dir / "spectra.csv")

    # mean gap ratio vs time
    rows = []
    for gt in run.gt_points:
        pool = []
        per_group = []
        for e in entries:
            if e["gt"] != gt:
                continue
            for xi in e["spectrum"].sectors:
                r = gap_ratios(xi)
                if len(r):
                    pool.append(r)
                    per_group.append(r.mean())
        if not pool:
            continue
        pooled = np.concatenate(pool)
        boot_mean, boot_std = bootstrap(pooled, run.n_boots,
                                        derive_seed(run.seed, "boot", mode, gt))
        spread = float(np.std(per_group)) if per_group else 0.0
        rows.append((gt, float(pooled.mean()), boot_std, spread, len(pooled)))
    _write_csv(mode_dir / "gap_ratio_mean.csv",
               "gt,r_mean,r_boot_std,r_spread_std,n_ratios", rows)
    manifest.add_file(mode_dir / "gap_ratio_mean.csv")

    # effective rank and entropy traces
    rows = []
    ent_rows = []
    for gt in run.gt_points:
        at_gt = [e for e in entries if e["gt"] == gt]
        if not at_gt:
            continue
        ranks = [e["spectrum"].total_rank for e in at_gt]
        rows.append((gt, float(np.mean(ranks)), float(np.min(ranks)), float(np.max(ranks))))
        ent_rows.append((gt,
                         float(np.mean([e["entropy"].s_vn for e in at_gt])),
                         float(np.mean([e["entropy"].s_symmetry for e in at_gt])),
                         float(np.mean([e["entropy"].s_distillable for e in at_gt]))))
    _write_csv(mode_dir / "rank.csv", "gt,rank_mean,rank_min,rank_max", rows)
    manifest.add_file(mode_dir / "rank.csv")
    _write_csv(mode_dir / "entropy.csv", "gt,S_vN,S_sym,S_dist", ent_rows)
    manifest.add_file(mode_dir / "entropy.csv")

    # regime-pooled gap-ratio distribution
    egrd_rows = []
    regime_rows = []
    for name in REGIME_NAMES[:len(run.regimes)]:
        pool = [r for e in entries
                if regime_of(e["gt"], run.regimes) == name
                for r in e["spectrum"].pooled_ratios()]
        if not pool:
            continue
        hist = egrd(np.asarray(pool))
        for c, d in zip(hist.bin_centers, hist.density):
            egrd_rows.append((name, float(c), float(d)))
        regime_rows.append((name, hist.mean, hist.n_ratios))
    _write_csv(mode_dir / "egrd.csv", "regime,bin_center,density", egrd_rows)
    manifest.add_file(mode_dir / "egrd.csv")
    _write_csv(mode_dir / "gap_ratio_regimes.csv", "regime,r_mean,n_ratios", regime_rows)
    manifest.add_file(mode_dir / "gap_ratio_regimes.csv")

    # regime-averaged form factor, ramp fit on the last regime
    for name in REGIME_NAMES[:len(run.regimes)]:
        curves = []
        for e in entries:
            if regime_of(e["gt"], run.regimes) != name:
                continue
            for curve in esff(e["spectrum"], theta):
                if curve is not None:
                    curves.append(curve)
        if not curves:
            continue
        stack = np.stack(curves)
        f_mean = stack.mean(axis=0)
        f_std = stack.std(axis=0)
        _write_csv(mode_dir / f"esff_{name}.csv", "theta,F_mean,F_std",
                   list(zip(map(float, theta), map(float, f_mean), map(float, f_std))))
        manifest.add_file(mode_dir / f"esff_{name}.csv")
        if name == REGIME_NAMES[len(run.regimes) - 1]:
            try:
                ramp = fit_ramp(theta, f_mean, run.ramp_window)
                manifest.note(f"{mode} regime-{name} ramp kappa "
                              f"{ramp.kappa:.4f} +- {ramp.uncertainty:.4f}"
                              + ("" if ramp.monotone else " [non-monotone window]"))
                _write_csv(mode_dir / "ramp_fit.csv", "kappa,uncertainty,monotone",
                           [(ramp.kappa, ramp.uncertainty, int(ramp.monotone))])
                manifest.add_file(mode_dir / "ramp_fit.csv")
            except ValueError as exc:
                manifest.note(f"{mode} ramp fit skipped: {exc}")


def measure_stage(run: RunConfig) -> RunManifest:
    """Evolve by Trotter circuits and write measurement records, nothing else."""
    out = run.out_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "records").mkdir(exist_ok=True)
    manifest = RunManifest(config_lines=_config_lines(run), out_dir=out)
    model = run.model
    h = build_dual_hamiltonian(model)
    t0 = time.perf_counter()
    for i, basis_state in enumerate(initial_states(run)):
        psi0 = prepare(basis_state)
        for ti, gt in enumerate(run.gt_points):
            circuit = build_trotter_circuit(h, gt / model.g, run.n_trotter_steps,
                                            family_order=run.trotter_order)
            source = apply_circuit(psi0, circuit)
            records = simulate_record_set(run, source, i, ti)
            rec_path = out / "records" / f"state{i}_gt{_gt_tag(gt)}.txt"
            write_records(rec_path, records)
            manifest.add_file(rec_path)
    manifest.timings["total"] = time.perf_counter() - t0
    manifest.write(out / "manifest.txt")
    return manifest


def fit_stage(run: RunConfig, kinds: tuple[str, ...] = ("finite",)) -> RunManifest:
    """Fit every record file under out_dir/records; optionally add KL fits.

    Record files are the substitution point for real experimental data: any
    file matching the interchange format is fitted as-is. Infinite-
    measurement fits recompute the Trotterized reduced state from the run
    configuration.
    """
    from .measurement import read_records
    out = run.out_dir
    (out / "fits").mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config_lines=_config_lines(run), out_dir=out)
    model = run.model
    ansatz = generate_ansatz(model)
    h = build_dual_hamiltonian(model) if "infinite" in kinds else None
    t0 = time.perf_counter()
    rec_files = sorted((out / "records").glob("state*_gt*.txt"))
    if not rec_files and "finite" in kinds:
        manifest.note("no record files found")
    for rec_path in rec_files if "finite" in kinds else []:
        i, gt = _parse_item_name(rec_path.stem)
        records = read_records(rec_path)
        fit = fit_eh_from_measurements(records, ansatz,
                                       run.fit_options(("finite", rec_path.stem)))
        fit.beta_star.time_tag = gt
        results = {"tomography": []}
        _record_fit(out, manifest, results, "tomography", i, gt, fit, ansatz,
                    model, suffix="finite")
    if "infinite" in kinds:
        for i, basis_state in enumerate(initial_states(run)):
            psi0 = prepare(basis_state)
            for ti, gt in enumerate(run.gt_points):
                circuit = build_trotter_circuit(h, gt / model.g, run.n_trotter_steps,
                                                family_order=run.trotter_order)
                rho = partial_trace(apply_circuit(psi0, circuit),
                                    model.subsystem_qubits)
                fit = fit_eh_infinite(rho, ansatz,
                                      run.fit_options(("infinite", i, ti)))
                fit.beta_star.time_tag = gt
                results = {"infinite": []}
                _record_fit(out, manifest, results, "infinite", i, gt, fit,
                            ansatz, model, suffix="infinite")
    manifest.timings["total"] = time.perf_counter() - t0
    if any("non-converged" in n for n in manifest.notes):
        manifest.status = "partial"
    manifest.write(out / "manifest.txt")
    return manifest


def _parse_item_name(stem: str) -> tuple[int, float]:
    state_part, gt_part = stem.split("_gt")
    gt_part = gt_part.split("_")[0]
    return int(state_part.removeprefix("state")), float(gt_part)


def analyze_stage(run: RunConfig) -> RunManifest:
    """Recompute deterministic modes, load existing fits, aggregate and plot."""
    return run_pipeline(run, fit_source="files")
