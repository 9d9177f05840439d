"""Command-line entry point.

Exit codes: 0 full success, 2 partial success (some fits did not converge),
1 fatal error.
"""
from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from .lattice import ModelConfig, read_config
from .pipeline import (DEFAULT_GT_POINTS, EXTENDED_GT_POINTS, RunConfig,
                       analyze_stage, fit_stage, measure_stage, run_pipeline)

MODE_ALIASES = {"infinite-measurement": "infinite"}


def _parse_gt(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _parse_modes(text: str) -> tuple[str, ...]:
    modes = []
    for tok in text.replace(",", " ").split():
        modes.append(MODE_ALIASES.get(tok, tok))
    return tuple(modes)


def _model_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True),
                      default=None, help="model config file (keys lx, la, g, seed)")(fn)
    fn = click.option("--lx", type=int, default=None, help="plaquette count")(fn)
    fn = click.option("--la", type=int, default=None, help="subsystem plaquettes")(fn)
    fn = click.option("--g", type=float, default=None, help="electric coupling")(fn)
    fn = click.option("--seed", type=int, default=None, help="root seed")(fn)
    return fn


def _run_options(fn):
    fn = click.option("--out", type=click.Path(), default="run", show_default=True)(fn)
    fn = click.option("--states", type=int, default=6, show_default=True)(fn)
    fn = click.option("--gt", "gt_text", default=None,
                      help="space/comma separated gt values")(fn)
    fn = click.option("--steps", type=int, default=4, show_default=True)(fn)
    fn = click.option("--bases", type=int, default=24, show_default=True)(fn)
    fn = click.option("--shots", type=int, default=750, show_default=True)(fn)
    fn = click.option("--boots", type=int, default=1000, show_default=True)(fn)
    fn = click.option("--restarts", type=int, default=1, show_default=True,
                      help="extra random optimizer starts per fit")(fn)
    return fn


def _build_run(config_path, lx, la, g, seed, out, states, gt_text, steps, bases,
               shots, boots, restarts, modes) -> RunConfig:
    file_seed = None
    if config_path:
        model, file_seed = read_config(config_path)
    else:
        model = ModelConfig()
    model = ModelConfig(l_x=lx if lx is not None else model.l_x,
                        l_a=la if la is not None else model.l_a,
                        g=g if g is not None else model.g)
    root_seed = seed if seed is not None else (file_seed if file_seed is not None else 1)
    gt_points = _parse_gt(gt_text) if gt_text else DEFAULT_GT_POINTS
    return RunConfig(model=model, out_dir=Path(out), modes=modes,
                     n_initial_states=states, gt_points=gt_points,
                     n_trotter_steps=steps, n_bases=bases, n_shots=shots,
                     n_boots=boots, seed=root_seed, fit_restarts=restarts)


def _finish(manifest):
    click.echo(f"status: {manifest.status}; outputs in {manifest.out_dir}")
    for note in manifest.notes:
        click.echo(f"  note: {note}")
    if manifest.status == "partial":
        sys.exit(2)


@click.group()
def main():
    """Thermalization and quantum-chaos diagnostics for the Z2 plaquette chain."""


@main.command()
@_model_options
@_run_options
@click.option("--modes", "modes_text", default="exact,trotter", show_default=True)
def evolve(config_path, lx, la, g, seed, out, states, gt_text, steps, bases,
           shots, boots, restarts, modes_text):
    """Time-evolve sampled initial states and write spectra statistics."""
    modes = tuple(m for m in _parse_modes(modes_text) if m in ("exact", "trotter"))
    run = _build_run(config_path, lx, la, g, seed, out, states, gt_text, steps,
                     bases, shots, boots, restarts, modes)
    _finish(run_pipeline(run))


@main.command()
@_model_options
@_run_options
def measure(config_path, lx, la, g, seed, out, states, gt_text, steps, bases,
            shots, boots, restarts):
    """Simulate randomized-measurement records for Trotterized states."""
    run = _build_run(config_path, lx, la, g, seed, out, states, gt_text, steps,
                     bases, shots, boots, restarts, ("trotter", "tomography"))
    _finish(measure_stage(run))


@main.command()
@_model_options
@_run_options
@click.option("--kind", type=click.Choice(["finite", "infinite", "both"]),
              default="finite", show_default=True)
def fit(config_path, lx, la, g, seed, out, states, gt_text, steps, bases, shots,
        boots, restarts, kind):
    """Fit entanglement Hamiltonians to record files (or exact states)."""
    kinds = ("finite", "infinite") if kind == "both" else (kind,)
    run = _build_run(config_path, lx, la, g, seed, out, states, gt_text, steps,
                     bases, shots, boots, restarts, ("trotter", "tomography"))
    _finish(fit_stage(run, kinds))


@main.command()
@_model_options
@_run_options
@click.option("--modes", "modes_text", default="exact,trotter,tomography,infinite",
              show_default=True)
def analyze(config_path, lx, la, g, seed, out, states, gt_text, steps, bases,
            shots, boots, restarts, modes_text):
    """Aggregate existing fits plus recomputed evolution into CSVs and plots."""
    run = _build_run(config_path, lx, la, g, seed, out, states, gt_text, steps,
                     bases, shots, boots, restarts, _parse_modes(modes_text))
    _finish(analyze_stage(run))


PRESETS = {
    "observables": dict(modes=("exact", "trotter"), states=1, gt=DEFAULT_GT_POINTS),
    "regimes": dict(modes=("exact",), states=6, gt=EXTENDED_GT_POINTS),
    "tomography": dict(modes=("exact", "trotter", "tomography", "infinite"),
                       states=1, gt=(0.0, 0.34, 1.02, 1.7, 2.38)),
}


@main.command()
@_model_options
@click.option("--out", type=click.Path(), default="reproduction", show_default=True)
@click.option("--preset", type=click.Choice([*PRESETS, "all"]), default="all",
              show_default=True)
@click.option("--restarts", type=int, default=1, show_default=True)
def reproduce(config_path, lx, la, g, seed, out, preset, restarts):
    """Preset runs mirroring the published observable, regime, and tomography studies."""
    chosen = list(PRESETS) if preset == "all" else [preset]
    status_partial = False
    for name in chosen:
        spec = PRESETS[name]
        gt_text = " ".join(f"{gt:g}" for gt in spec["gt"])
        run = _build_run(config_path, lx, la, g, seed, str(Path(out) / name),
                         spec["states"], gt_text, 4, 24, 750, 1000, restarts,
                         spec["modes"])
        click.echo(f"preset {name}: modes={','.join(spec['modes'])} "
                   f"states={spec['states']} times={len(spec['gt'])}")
        manifest = run_pipeline(run)
        click.echo(f"  -> {manifest.status}")
        status_partial |= manifest.status == "partial"
    if status_partial:
        sys.exit(2)


@main.command()
@_model_options
def selftest(config_path, lx, la, g, seed):
    """Fast cross-module consistency checks; prints one line per check."""
    from .lattice import build_dual_hamiltonian, check_gauge_invariance, \
        sample_initial_state
    from .measurement import sample_cue_basis
    from .pipeline import self_consistency_deviation
    from .rng import substream
    from .statevector import exact_evolve, prepare
    from .tomography import generate_ansatz

    model = ModelConfig(l_x=lx or 6, l_a=la or 2, g=g or 0.85)
    root = seed if seed is not None else 1
    failures = 0

    def check(name, ok, detail=""):
        nonlocal failures
        click.echo(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else ""))
        failures += not ok

    h = build_dual_hamiltonian(model)
    check("hamiltonian commutes with Gauss strings", check_gauge_invariance(h, model))
    state = sample_initial_state(model, root)
    psi = exact_evolve(prepare(state), h, 1.0 / model.g)
    basis = sample_cue_basis(substream(root, "selftest"), model.n_qubits)
    dev = self_consistency_deviation(psi, basis, model.subsystem_qubits)
    check("reduced state matches measurement marginals", dev < 1e-10, f"dev={dev:.2e}")
    default_ansatz = generate_ansatz(ModelConfig())
    check("default ansatz has 73 operators", len(default_ansatz) == 73,
          f"n={len(default_ansatz)}")
    nrm = float(np.linalg.norm(psi))
    check("evolution preserves the norm", abs(nrm - 1) < 1e-10, f"norm={nrm:.12f}")
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
