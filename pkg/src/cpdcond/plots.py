"""Log-log survival-function figures for tail-fit reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from cpdcond.stats import EmpiricalCCDF, TailFit  # noqa: E402


def render_ccdf_figure(path, ccdf: EmpiricalCCDF, fit: TailFit, title: str) -> None:
    """Empirical tail mass on log-log axes with the fitted segment.

    The fitted line is drawn only across the window it was estimated on,
    so extrapolation is visually distinct from data.
    """
    c = ccdf.at_samples()
    pos = c > 0  # the largest sample has c = 0 and no log image
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.loglog(
        ccdf.sorted_values[pos], c[pos], drawstyle="steps-post", lw=1.0, label="empirical"
    )
    window = pos & (c >= fit.fit_range[0]) & (c <= fit.fit_range[1])
    if window.any():
        xs = np.array(
            [ccdf.sorted_values[window].min(), ccdf.sorted_values[window].max()]
        )
        ax.loglog(
            xs,
            fit.a * xs ** (-fit.b),
            "--",
            lw=1.5,
            label=f"fit: c = {fit.a:.3g} x^(-{fit.b:.3g}), R^2 = {fit.r_squared:.4f}",
        )
    ax.set_xlabel("condition number")
    ax.set_ylabel("tail mass c(x)")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.25)
    ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
