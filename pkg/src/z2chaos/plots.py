"""Static figures rendered next to the delimited outputs of a run.

Each figure corresponds to one analysis product: observable traces, mean
gap ratio with random-matrix reference lines, regime-resolved gap-ratio
histograms, form-factor panels, entropy decomposition, and low-spectrum
comparisons between modes. Missing inputs skip only the affected figure.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .spectra import reference_distribution

_PNG_META = {"Software": "z2chaos"}
_MODE_COLORS = {"exact": "black", "trotter": "tab:blue",
                "tomography": "tab:orange", "infinite": "tab:cyan"}


def _read_csv(path: Path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    columns = {h: [] for h in header}
    for line in lines[1:]:
        if not line.strip():
            continue
        for h, tok in zip(header, line.split(",")):
            try:
                columns[h].append(float(tok))
            except ValueError:
                columns[h].append(tok)
    return {h: (np.asarray(v) if v and isinstance(v[0], float) else v)
            for h, v in columns.items()}


def _save(fig, path: Path):
    fig.savefig(path, dpi=150, metadata=_PNG_META)
    plt.close(fig)


def _modes_present(run_dir: Path):
    return [m for m in _MODE_COLORS if (run_dir / m).is_dir()]


def emit_plots(run_dir: Path) -> tuple[list[Path], list[str]]:
    """Render every figure whose inputs exist; returns (files, skip notes)."""
    run_dir = Path(run_dir)
    plot_dir = run_dir / "plots"
    plot_dir.mkdir(exist_ok=True)
    files: list[Path] = []
    notes: list[str] = []

    def attempt(name, fn):
        try:
            out = fn()
        except FileNotFoundError as exc:
            notes.append(f"plot {name} skipped: missing input {Path(str(exc.filename)).name}")
            return
        except ValueError as exc:
            notes.append(f"plot {name} skipped: {exc}")
            return
        if out:
            files.extend(out)

    attempt("observables", lambda: _plot_observables(run_dir, plot_dir))
    attempt("gauss", lambda: _plot_gauss(run_dir, plot_dir))
    attempt("gap_ratio_mean", lambda: _plot_gap_ratio_mean(run_dir, plot_dir))
    for mode in _modes_present(run_dir):
        attempt(f"egrd_{mode}", lambda m=mode: _plot_egrd(run_dir, plot_dir, m))
        attempt(f"esff_{mode}", lambda m=mode: _plot_esff(run_dir, plot_dir, m))
        attempt(f"entropy_{mode}", lambda m=mode: _plot_entropy(run_dir, plot_dir, m))
    attempt("spectrum_comparison", lambda: _plot_spectrum_comparison(run_dir, plot_dir))
    return files, notes


def _plot_observables(run_dir, plot_dir):
    data = _read_csv(run_dir / "observables.csv")
    names = sorted(set(data["observable"]))
    singles = [n for n in names if n.startswith("Z")]
    pairs = [n for n in names if n.startswith("X")]
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for ax, group, title in ((axes[0], singles, "single-spin Z"),
                             (axes[1], pairs, "neighboring XX")):
        for name in group:
            for mode, style in (("exact", "-"), ("trotter", "--")):
                mask = [(o == name and md == mode and s == 0)
                        for o, md, s in zip(data["observable"], data["mode"], data["state"])]
                mask = np.asarray(mask)
                if not mask.any():
                    continue
                order = np.argsort(data["gt"][mask])
                ax.plot(data["gt"][mask][order], data["value"][mask][order], style,
                        label=f"{name} {mode}", alpha=0.8)
        ax.set_ylabel(r"$\langle O \rangle$")
        ax.set_title(title, fontsize=10)
        ax.legend(fontsize=6, ncol=4)
    axes[1].set_xlabel(r"$gt$")
    path = plot_dir / "observables.png"
    _save(fig, path)
    return [path]


def _plot_gauss(run_dir, plot_dir):
    data = _read_csv(run_dir / "gauss.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    for mode in sorted(set(data["mode"])):
        mask = np.asarray([m == mode for m in data["mode"]])
        gt = data["gt"][mask]
        dev = np.maximum(np.abs(data["gauss_ca"][mask] - 1.0),
                         np.abs(data["gauss_ac"][mask] - 1.0))
        ax.semilogy(gt, np.clip(dev, 1e-18, None), "o",
                    color=_MODE_COLORS.get(mode), label=mode, alpha=0.6)
    ax.set_xlabel(r"$gt$")
    ax.set_ylabel(r"max $|\langle G\rangle - 1|$")
    ax.set_title("Gauss-law conservation")
    ax.legend()
    path = plot_dir / "gauss.png"
    _save(fig, path)
    return [path]


def _plot_gap_ratio_mean(run_dir, plot_dir):
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    plotted = False
    for mode in _modes_present(run_dir):
        csv = run_dir / mode / "gap_ratio_mean.csv"
        if not csv.exists():
            continue
        data = _read_csv(csv)
        if len(data["gt"]) == 0:
            continue
        ax.errorbar(data["gt"], data["r_mean"], yerr=data["r_spread_std"],
                    fmt="o-", ms=4, capsize=2, label=mode,
                    color=_MODE_COLORS.get(mode))
        plotted = True
    if not plotted:
        raise FileNotFoundError(run_dir / "*/gap_ratio_mean.csv")
    for kind, style, color in (("poisson", ":", "tab:blue"), ("gue", "--", "tab:red")):
        _, mean = reference_distribution(kind)
        ax.axhline(mean, linestyle=style, color=color, label=kind.upper())
    ax.set_xlabel(r"$gt$")
    ax.set_ylabel(r"$\langle r \rangle$")
    ax.legend()
    path = plot_dir / "gap_ratio_mean.png"
    _save(fig, path)
    return [path]


def _plot_egrd(run_dir, plot_dir, mode):
    data = _read_csv(run_dir / mode / "egrd.csv")
    regimes = sorted(set(data["regime"]))
    if not regimes:
        raise ValueError("no regime rows")
    fig, axes = plt.subplots(1, len(regimes), figsize=(3.2 * len(regimes), 3.2),
                             sharey=True, squeeze=False)
    r_grid = np.linspace(1e-3, 1, 200)
    for ax, regime in zip(axes[0], regimes):
        mask = np.asarray([r == regime for r in data["regime"]])
        ax.bar(data["bin_center"][mask], data["density"][mask], width=1 / 12,
               color="tab:orange", alpha=0.7, edgecolor="k", linewidth=0.4)
        for kind, style, color in (("poisson", ":", "tab:blue"), ("gue", "--", "tab:red")):
            density, _ = reference_distribution(kind)
            ax.plot(r_grid, density(r_grid), style, color=color, label=kind.upper())
        ax.set_title(f"regime {regime}")
        ax.set_xlabel(r"$r$")
    axes[0][0].set_ylabel(r"$\bar P(r)$")
    axes[0][0].legend(fontsize=8)
    path = plot_dir / f"egrd_{mode}.png"
    _save(fig, path)
    return [path]


def _sector_dimension(spectra_csv: Path) -> int:
    if spectra_csv.exists():
        data = _read_csv(spectra_csv)
        if len(data["index"]):
            return int(np.max(data["index"])) + 1
    return 16


def _plot_esff(run_dir, plot_dir, mode):
    curves = []
    for name in ("I", "II", "III"):
        csv = run_dir / mode / f"esff_{name}.csv"
        if csv.exists():
            curves.append((name, _read_csv(csv)))
    if not curves:
        raise FileNotFoundError(run_dir / mode / "esff_I.csv")
    fig, ax = plt.subplots(figsize=(6, 4.2))
    for name, data in curves:
        ax.loglog(data["theta"], data["F_mean"], label=f"regime {name}")
        ax.fill_between(data["theta"],
                        np.clip(data["F_mean"] - data["F_std"], 1e-12, None),
                        data["F_mean"] + data["F_std"], alpha=0.2)
    d_s = _sector_dimension(run_dir / mode / "spectra.csv")
    ax.axhline(1 / d_s, color="gray", linestyle=":", label=r"$1/d_s$")
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel(r"$\mathcal{F}(\theta)$")
    ax.set_title(f"entanglement spectral form factor ({mode})")
    ax.legend(fontsize=8)
    path = plot_dir / f"esff_{mode}.png"
    _save(fig, path)
    return [path]


def _plot_entropy(run_dir, plot_dir, mode):
    data = _read_csv(run_dir / mode / "entropy.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(data["gt"], data["S_vN"], "k-o", ms=4, label=r"$S_{vN}$")
    ax.plot(data["gt"], data["S_sym"], "-s", ms=4, color="tab:green", label=r"$S_{sym}$")
    ax.plot(data["gt"], data["S_dist"], "-^", ms=4, color="tab:purple", label=r"$S_{dist}$")
    ax.axhline(np.log(4), color="gray", linestyle=":", label=r"$\log 4$")
    ax.set_xlabel(r"$gt$")
    ax.set_ylabel("entropy (nats)")
    ax.set_title(f"entropy decomposition ({mode})")
    ax.legend(fontsize=8)
    path = plot_dir / f"entropy_{mode}.png"
    _save(fig, path)
    return [path]


def _plot_spectrum_comparison(run_dir, plot_dir):
    reference = run_dir / "exact" / "spectra.csv"
    fitted = [(m, run_dir / m / "spectra.csv") for m in ("infinite", "tomography")
              if (run_dir / m / "spectra.csv").exists()]
    base = reference if reference.exists() else (run_dir / "trotter" / "spectra.csv")
    if not fitted or not base.exists():
        raise FileNotFoundError(base)
    ref = _read_csv(base)
    gts = sorted(set(ref["gt"]))
    gt_sel = gts[min(len(gts) - 1, len(gts) // 2)]
    fig, axes = plt.subplots(1, 4, figsize=(11, 3.4), sharey=True)
    for sector, ax in enumerate(axes, start=1):
        mask = (ref["gt"] == gt_sel) & (ref["sector"] == sector) & (ref["state"] == 0)
        levels = np.sort(ref["xi"][mask])[:8]
        ax.hlines(levels, 0.1, 0.9, color="black", label="reference")
        for k, (mode, csv) in enumerate(fitted):
            data = _read_csv(csv)
            mk = (data["gt"] == gt_sel) & (data["sector"] == sector) & (data["state"] == 0)
            lv = np.sort(data["xi"][mk])[:8]
            ax.plot([0.3 + 0.3 * k] * len(lv), lv, "x",
                    color=_MODE_COLORS.get(mode), label=mode)
        ax.set_title(f"sector {sector}", fontsize=9)
        ax.set_xticks([])
    axes[0].set_ylabel(r"$\xi$")
    axes[0].legend(fontsize=7)
    fig.suptitle(f"low entanglement spectrum, gt={gt_sel:g}", fontsize=10)
    path = plot_dir / "spectrum_comparison.png"
    _save(fig, path)
    return [path]
