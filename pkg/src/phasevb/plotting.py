"""Sweep figure rendering.

One success-rate-vs-SNR polyline per decoder, written as SVG.  The
output is byte-deterministic for identical input: a fixed hash salt, no
creation date, and text kept as text elements rather than glyph paths.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import SweepResult

__all__ = ["render_plot"]

_RC = {
    "svg.hashsalt": "phasevb",
    "svg.fonttype": "none",
}


def render_plot(res: SweepResult, path) -> None:
    """Render the sweep comparison figure to an SVG file.

    Axes are labeled ``SNR (dB)`` and ``success rate``; each decoder
    contributes one line (grouped as ``series-<decoder>`` in the SVG)
    and one legend entry.
    """
    if not res.cells:
        raise ValueError("cannot plot an empty sweep result")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7.0, 4.5))
        for decoder in res.decoders:
            points = sorted(
                (cell.snr_db, cell.success_rate)
                for cell in res.cells
                if cell.decoder == decoder
            )
            snrs = [p[0] for p in points]
            rates = [p[1] for p in points]
            (line,) = ax.plot(snrs, rates, marker="o", markersize=3.5, label=decoder)
            line.set_gid(f"series-{decoder}")
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("success rate")
        ax.set_ylim(-0.02, 1.02)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
