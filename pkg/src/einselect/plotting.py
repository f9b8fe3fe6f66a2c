"""Optional figures written next to the CSV output (``--figures``)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .criteria import running_average  # noqa: E402

RC = {
    "font.size": 10,
    "axes.labelsize": 11,
    "axes.titlesize": 11,
    "legend.fontsize": 9,
    "lines.linewidth": 1.2,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def plot_trajectory(traj, path) -> None:
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(6.4, 3.6))
        for (m, mp), z in sorted(traj.z.items()):
            ax.plot(traj.times, np.abs(z), label=f"|z_{m}{mp}(t)|")
            ax.plot(traj.times, np.abs(running_average(z, traj.times)), "--", label=f"|<z_{m}{mp}>_T|")
        ax.set_xlabel("t")
        ax.set_ylim(-0.02, 1.05)
        ax.legend(frameon=False)
        fig.savefig(path)
        plt.close(fig)


def plot_scaling(rows, report, path) -> None:
    """Seed-averaged spread vs N on log axes, with both fitted laws."""
    ns = sorted({r[0] for r in rows})
    dz = np.array([np.mean([r[2] for r in rows if r[0] == n]) for n in ns])
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.8, 3.6))
        for n, r, d, _ in rows:
            ax.plot(n, d, ".", color="0.7")
        ax.plot(ns, dz, "o", color="k", label="seed mean")
        c = report.cond_c or {}
        grid = np.linspace(min(ns), max(ns), 100)
        if c.get("power_fit") and np.all(dz > 0):
            p = c["power_fit"]["p"]
            a = np.mean(np.log(dz) + p * np.log(ns))
            ax.plot(grid, np.exp(a - p * np.log(grid)), label=f"N^-{p:.2f}, R2={c['power_fit']['r2']:.3f}")
        if c.get("exp_fit") and np.all(dz > 0):
            rate = c["exp_fit"]["r"]
            a = np.mean(np.log(dz) + rate * np.asarray(ns))
            ax.plot(grid, np.exp(a - rate * grid), ":", label=f"exp(-{rate:.2f} N), R2={c['exp_fit']['r2']:.3f}")
        ax.set_yscale("log")
        ax.set_xlabel("N")
        ax.set_ylabel("delta z")
        ax.legend(frameon=False)
        fig.savefig(path)
        plt.close(fig)
