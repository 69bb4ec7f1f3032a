"""Figure rendering for the curve reports.

The CSV stays the canonical, exact output; these figures are the quick-look
companions written next to it.  Rendering is deterministic (fixed styles,
no timestamps in the PNG metadata).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_RC = {
    "figure.figsize": (4.8, 3.2),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
}

_PNG_METADATA = {"Software": None}  # strip the version banner for byte-stable files


def render_curve_figures(rows, out_path) -> list:
    """Render the reciprocal-DoF and gap curves beside ``out_path``.

    ``rows`` are dicts with Fraction values for mu, inv_d_lower, inv_d_upper,
    inv_d_baseline, and gap.  Returns the written figure paths.
    """
    out_path = Path(out_path)
    mus = [float(r["mu"]) for r in rows]
    written = []
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(mus, [float(r["inv_d_lower"]) for r in rows], "-", label="achievable")
        ax.plot(mus, [float(r["inv_d_upper"]) for r in rows], "--", label="converse")
        ax.plot(mus, [float(r["inv_d_baseline"]) for r in rows], ":", label="baseline")
        ax.set_xlabel("normalized cache size")
        ax.set_ylabel("reciprocal per-user DoF")
        ax.legend()
        fig.tight_layout()
        dof_path = out_path.with_name(out_path.stem + "_dof.png")
        fig.savefig(dof_path, metadata=_PNG_METADATA)
        plt.close(fig)
        written.append(dof_path)

        fig, ax = plt.subplots()
        ax.plot(mus, [float(r["gap"]) for r in rows], "-")
        ax.set_xlabel("normalized cache size")
        ax.set_ylabel("additive DoF gap")
        fig.tight_layout()
        gap_path = out_path.with_name(out_path.stem + "_gap.png")
        fig.savefig(gap_path, metadata=_PNG_METADATA)
        plt.close(fig)
        written.append(gap_path)
    return written
