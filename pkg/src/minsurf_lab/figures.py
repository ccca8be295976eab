"""Matplotlib renderings written next to the delimited report output."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)


def convergence_plot(path: str, tables: dict, title: str) -> None:
    """log-log residual vs h for every fitted table, with an order-2
    guide line."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    hmin, hmax, ref = np.inf, 0.0, None
    for name in sorted(tables):
        t = tables[name]
        hs = np.asarray(t["h"], float)
        rs = np.asarray(t["residual"], float)
        if not np.any(rs > 0):
            continue
        order = t.get("order")
        lbl = name if order is None else f"{name} (p={order:.2f})" if np.isfinite(order) else f"{name} (exact)"
        ax.loglog(hs, np.maximum(rs, 1e-17), "o-", label=lbl)
        hmin, hmax = min(hmin, hs.min()), max(hmax, hs.max())
        ref = ref if ref is not None else (hs[0], max(rs[0], 1e-17))
    if ref is not None:
        hs = np.array([hmin, hmax])
        ax.loglog(hs, ref[1] * (hs / ref[0]) ** 2, "k--", lw=0.8, label="h^2")
    ax.set_xlabel("h")
    ax.set_ylabel("residual")
    ax.set_title(title)
    ax.legend(fontsize=7)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def field_heatmaps(path: str, domain, fields: dict[str, np.ndarray], title: str) -> None:
    names = sorted(fields)
    n = len(names)
    if n == 0:
        return
    cols = min(n, 3)
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(4.0 * cols, 3.2 * rows), squeeze=False)
    extent = [domain.v_min, domain.v_max, domain.u_min, domain.u_max]
    for ax, name in zip(axes.ravel(), names):
        im = ax.imshow(fields[name], origin="lower", extent=extent, aspect="auto")
        ax.set_title(name, fontsize=9)
        fig.colorbar(im, ax=ax, shrink=0.85)
    for ax in axes.ravel()[n:]:
        ax.axis("off")
    fig.suptitle(title)
    _save(fig, path)


def eigen_section_plot(path: str, domain, section: np.ndarray, lam: float) -> None:
    """Heatmap of |s| and the per-component fields of the eigen-section."""
    mag = np.sqrt(np.einsum("...b,...b->...", section, section))
    fields = {"|s|": mag}
    for b in range(section.shape[-1]):
        fields[f"s_{b + 1}"] = section[..., b]
    field_heatmaps(path, domain, fields, f"smallest eigenvalue {lam:.6g}")
