"""Static SVG figures for sweeps and envelope fits.

Figures are written with matplotlib's SVG backend at a fixed 1200 x 800
viewBox. Output is made reproducible (fixed hash salt, no date stamp) and
stripped of the DOCTYPE and metadata blocks so the file references nothing
outside itself.
"""

from __future__ import annotations

import io
import re

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_VIEW_W, _VIEW_H = 1200, 800
_PT_PER_INCH = 72

_STYLE = {
    "svg.hashsalt": "bifcurve",
    "svg.fonttype": "path",
    "font.size": 16,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.6,
}


def _figure():
    return plt.figure(figsize=(_VIEW_W / _PT_PER_INCH, _VIEW_H / _PT_PER_INCH))


def _finish(fig):
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    text = buf.getvalue()
    text = re.sub(r"<!DOCTYPE[^>]*>\s*", "", text)
    text = re.sub(r"<metadata>.*?</metadata>\s*", "", text, flags=re.S)
    return text


def curve_svg(alpha, lam, reference=None, *, title="", reference_label="leading term", log=False):
    """lambda against alpha, optionally overlaid with a reference curve."""
    alpha = np.asarray(alpha, dtype=float)
    with plt.rc_context(_STYLE):
        fig = _figure()
        ax = fig.add_subplot()
        ax.plot(alpha, lam, label="lambda (time map)")
        if reference is not None:
            ax.plot(alpha, reference, "--", label=reference_label)
        if log:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel("alpha")
        ax.set_ylabel("lambda")
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        return _finish(fig)


def residual_svg(alpha, resid, envelope=None, *, title=""):
    """Residual lambda - leading term, with the +/- envelope if given."""
    alpha = np.asarray(alpha, dtype=float)
    with plt.rc_context(_STYLE):
        fig = _figure()
        ax = fig.add_subplot()
        ax.plot(alpha, resid, label="residual")
        if envelope is not None:
            env = np.asarray(envelope, dtype=float)
            ax.plot(alpha, env, ":", color="k", label="predicted envelope")
            ax.plot(alpha, -env, ":", color="k")
        ax.axhline(0.0, color="0.5", linewidth=0.8)
        ax.set_xlabel("alpha")
        ax.set_ylabel("lambda - leading term")
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        return _finish(fig)
