"""Static matplotlib figures rendered next to the delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_BRANCH_STYLE = {
    -1: ("tab:blue", "acoustic -"),
    0: ("tab:red", "energy"),
    1: ("tab:cyan", "acoustic +"),
    2: ("tab:green", "shear"),
    3: ("tab:olive", "shear 2"),
}


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata={})
    plt.close(fig)
    return path


def dispersion_curves(branches_by_alpha: dict, path) -> Path:
    """Re and Im of every hydrodynamic branch against rho, one panel each."""
    fig, (ax_re, ax_im) = plt.subplots(1, 2, figsize=(9.6, 3.8))
    for alpha, branches in sorted(branches_by_alpha.items(), reverse=True):
        for br in branches:
            rho = br.rhos
            lam = np.array([s.value for s in br.samples])
            color, name = _BRANCH_STYLE.get(br.label, ("k", f"j={br.label}"))
            ls = "-" if alpha == max(branches_by_alpha) else "--"
            label = f"{name}, a={alpha:g}" if br.label in (-1, 0, 2) or True else None
            ax_re.plot(rho, lam.real, ls, color=color, lw=1.2, label=label)
            ax_im.plot(rho, lam.imag, ls, color=color, lw=1.2)
    ax_re.set_xlabel(r"$\rho$")
    ax_re.set_ylabel(r"Re $\lambda$")
    ax_im.set_xlabel(r"$\rho$")
    ax_im.set_ylabel(r"Im $\lambda$")
    ax_re.axhline(0.0, color="0.7", lw=0.6)
    ax_re.legend(fontsize=6, ncol=2)
    fig.suptitle("hydrodynamic dispersion branches")
    return _save(fig, path)


def equilibrium_profile(f, T1: float, path) -> Path:
    """Radial scatter of the profile against the elastic Maxwellian."""
    g = f.grid
    r = np.sqrt(g.speed_sq)
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    ax.semilogy(r, np.maximum(f.values, 1e-300), ".", ms=2, label="equilibrium")
    rr = np.linspace(0.0, r.max(), 200)
    ref = (2 * np.pi * T1) ** (-g.d / 2) * np.exp(-rr ** 2 / (2 * T1))
    ax.semilogy(rr, ref, "-", lw=1.0, label="Maxwellian at T1")
    ax.set_xlabel("|v|")
    ax.set_ylabel("f")
    ax.set_ylim(max(f.values.max() * 1e-12, 1e-18), f.values.max() * 3)
    ax.legend(fontsize=8)
    return _save(fig, path)


def clustering_scan(table: list[dict], path) -> Path:
    """Closest approach of the leading eigenvalue to the imaginary axis."""
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    alphas = [row["alpha"] for row in table]
    dist = [row["min_distance_to_zero"] for row in table]
    ax.semilogy(alphas, np.maximum(dist, 1e-18), "o-")
    ax.set_xlabel(r"$\alpha$")
    ax.set_ylabel("min over rho of |max Re lambda|")
    ax.set_title("linear stability margin across inelasticity")
    return _save(fig, path)


def dispersion_roots_plot(roots, sound: float, path) -> Path:
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    zs = roots.as_array
    ax.plot(zs.real, zs.imag, "x", ms=9, label="cubic roots")
    ax.axhline(sound, color="0.8", lw=0.6)
    ax.axhline(-sound, color="0.8", lw=0.6)
    ax.axhline(0.0, color="0.8", lw=0.6)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_title("limit dispersion roots")
    ax.legend(fontsize=8)
    return _save(fig, path)
