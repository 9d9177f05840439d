import hashlib
from pathlib import Path

import numpy as np
import pytest

from z2chaos.lattice import ModelConfig
from z2chaos.pipeline import (DEFAULT_REGIMES, RunConfig, analyze_stage, bootstrap,
                              fit_stage, initial_states, measure_stage, regime_of,
                              run_pipeline)


def small_run(tmp_path, **overrides):
    base = dict(model=ModelConfig(l_x=6, l_a=2, g=0.85),
                out_dir=tmp_path,
                modes=("exact", "trotter"),
                n_initial_states=2,
                gt_points=(0.0, 0.9, 2.1),
                n_boots=200,
                seed=5)
    base.update(overrides)
    return RunConfig(**base)


def test_bootstrap_constant_samples():
    mean, std = bootstrap([2.5] * 30, 500, seed=1)
    assert mean == pytest.approx(2.5)
    assert std == pytest.approx(0.0, abs=1e-14)


def test_bootstrap_two_point_sample():
    # resampled mean of {0,1} is Binomial(2, 1/2)/2: std = sqrt(p(1-p)/n) = 0.3536
    mean, std = bootstrap([0.0, 1.0], 200_000, seed=2)
    assert mean == pytest.approx(0.5, abs=0.005)
    assert std == pytest.approx(np.sqrt(0.25 / 2), abs=0.005)


def test_bootstrap_deterministic():
    samples = list(np.linspace(0, 1, 17))
    assert bootstrap(samples, 1000, seed=3) == bootstrap(samples, 1000, seed=3)
    assert bootstrap(samples, 1000, seed=3) != bootstrap(samples, 1000, seed=4)


def test_regime_membership():
    assert regime_of(0.0, DEFAULT_REGIMES) == "I"
    assert regime_of(1.79, DEFAULT_REGIMES) == "I"
    assert regime_of(1.8, DEFAULT_REGIMES) == "II"
    assert regime_of(5.0, DEFAULT_REGIMES) == "III"
    assert regime_of(10.0, DEFAULT_REGIMES) == "III"   # closed upper end
    assert regime_of(10.5, DEFAULT_REGIMES) is None


def test_run_config_validation(tmp_path):
    with pytest.raises(ValueError):
        RunConfig(out_dir=tmp_path, modes=("exact", "bogus"))
    with pytest.raises(ValueError):
        RunConfig(out_dir=tmp_path, n_shots=0)
    with pytest.raises(ValueError):
        RunConfig(out_dir=tmp_path, gt_points=(-1.0,))


def test_initial_states_deterministic(tmp_path):
    run = small_run(tmp_path)
    assert initial_states(run) == initial_states(run)


def test_pipeline_exact_trotter_outputs(tmp_path):
    run = small_run(tmp_path / "run")
    manifest = run_pipeline(run)
    assert manifest.status == "ok"
    for mode in ("exact", "trotter"):
        for name in ("spectra.csv", "gap_ratio_mean.csv", "egrd.csv", "entropy.csv",
                     "rank.csv"):
            assert (run.out_dir / mode / name).exists(), name
    assert (run.out_dir / "observables.csv").exists()
    assert (run.out_dir / "gauss.csv").exists()
    assert (run.out_dir / "manifest.txt").exists()
    # every artifact listed in the manifest exists and matches its checksum
    for digest, rel in manifest.artifacts:
        data = (run.out_dir / rel).read_bytes()
        assert hashlib.sha256(data).hexdigest() == digest
    # selftest note recorded with a tiny deviation
    note = [n for n in manifest.notes if n.startswith("selftest")]
    assert note and float(note[0].split()[-1]) < 1e-10


def test_pipeline_rank_one_at_time_zero(tmp_path):
    run = small_run(tmp_path / "run", gt_points=(0.0,), n_initial_states=1)
    run_pipeline(run)
    rank = (run.out_dir / "exact" / "rank.csv").read_text().splitlines()[1]
    assert rank.split(",")[1] == "1"
    entropy = (run.out_dir / "exact" / "entropy.csv").read_text().splitlines()[1]
    assert float(entropy.split(",")[1]) == pytest.approx(0.0, abs=1e-12)
    # a single pure level yields no gap ratios at all
    gap_lines = (run.out_dir / "exact" / "gap_ratio_mean.csv").read_text().splitlines()
    assert len(gap_lines) == 1  # header only


def test_pipeline_byte_identical_reruns(tmp_path):
    run_a = small_run(tmp_path / "a")
    run_b = small_run(tmp_path / "b")
    man_a = run_pipeline(run_a)
    man_b = run_pipeline(run_b)
    files_a = {rel: digest for digest, rel in man_a.artifacts}
    files_b = {rel: digest for digest, rel in man_b.artifacts}
    assert files_a == files_b
    for rel in files_a:
        if rel.endswith(".csv"):
            assert (run_a.out_dir / rel).read_bytes() == (run_b.out_dir / rel).read_bytes()


def test_pipeline_seed_changes_outputs(tmp_path):
    man_a = run_pipeline(small_run(tmp_path / "a"))
    man_b = run_pipeline(small_run(tmp_path / "b", seed=6))
    files_a = {rel: digest for digest, rel in man_a.artifacts}
    files_b = {rel: digest for digest, rel in man_b.artifacts}
    changed = [rel for rel in files_a if files_a[rel] != files_b.get(rel)]
    assert changed


def test_pipeline_with_tomography_modes(tmp_path):
    run = small_run(tmp_path / "run",
                    modes=("trotter", "tomography", "infinite"),
                    n_initial_states=1, gt_points=(0.6,),
                    n_bases=6, n_shots=300, fit_restarts=0, fit_max_iter=150)
    manifest = run_pipeline(run)
    out = run.out_dir
    assert (out / "records" / "state0_gt0.6.txt").exists()
    assert (out / "fits" / "state0_gt0.6_finite.txt").exists()
    assert (out / "fits" / "state0_gt0.6_infinite.txt").exists()
    assert (out / "fits" / "state0_gt0.6_finite_rho.txt").exists()
    for mode in ("tomography", "infinite"):
        assert (out / mode / "spectra.csv").exists()
    assert manifest.status in ("ok", "partial")


def test_staged_measure_fit_analyze_match_records(tmp_path):
    run = small_run(tmp_path / "run", modes=("trotter", "tomography"),
                    n_initial_states=1, gt_points=(0.6,), n_bases=4, n_shots=200,
                    fit_restarts=0, fit_max_iter=100)
    measure_stage(run)
    assert (run.out_dir / "records" / "state0_gt0.6.txt").exists()
    fit_stage(run, kinds=("finite",))
    assert (run.out_dir / "fits" / "state0_gt0.6_finite.txt").exists()
    manifest = analyze_stage(run)
    assert (run.out_dir / "tomography" / "spectra.csv").exists()
    assert not any("missing fit" in n for n in manifest.notes)


def test_records_match_between_pipeline_and_measure_stage(tmp_path):
    kw = dict(modes=("trotter", "tomography"), n_initial_states=1,
              gt_points=(0.6,), n_bases=3, n_shots=150, fit_restarts=0,
              fit_max_iter=50)
    run_a = small_run(tmp_path / "a", **kw)
    run_b = small_run(tmp_path / "b", **kw)
    run_pipeline(run_a)
    measure_stage(run_b)
    rec = "records/state0_gt0.6.txt"
    assert (run_a.out_dir / rec).read_bytes() == (run_b.out_dir / rec).read_bytes()


def test_plots_emitted(tmp_path):
    run = small_run(tmp_path / "run")
    manifest = run_pipeline(run)
    plots = [rel for _, rel in manifest.artifacts if rel.startswith("plots/")]
    assert any("gap_ratio_mean" in p for p in plots)
    assert any("entropy_exact" in p for p in plots)
    assert any("observables" in p for p in plots)
    for _, rel in manifest.artifacts:
        assert (run.out_dir / rel).exists()


def test_manifest_text_format(tmp_path):
    run = small_run(tmp_path / "run")
    run_pipeline(run)
    text = (run.out_dir / "manifest.txt").read_text()
    assert text.startswith("z2chaos manifest v1")
    assert "status ok" in text
    assert "artifacts:" in text and text.rstrip().endswith("end")
