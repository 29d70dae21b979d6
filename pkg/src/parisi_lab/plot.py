"""Static SVG line plots with reproducible bytes."""

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .exceptions import ConfigError  # noqa: E402
from .io import atomic_write_bytes, read_csv  # noqa: E402


def render_svg(series, xlabel, ylabel, title="", kind="line"):
    """SVG bytes for ``series = [(label, xs, ys), ...]``.

    The SVG hash salt is pinned and the date stripped, so equal inputs give
    equal bytes.
    """
    with matplotlib.rc_context({"svg.hashsalt": "parisi-lab", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, xs, ys in series:
            if kind == "scatter":
                ax.scatter(xs, ys, s=8, label=label)
            else:
                ax.plot(xs, ys, marker=".", label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend()
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def plot_csv(csv_path, out_path, x, y, group=None, kind="line", title=""):
    """Plot column ``y`` against ``x`` (one line per value of ``group``)."""
    columns, rows = read_csv(csv_path)
    for c in (x, y) + ((group,) if group else ()):
        if c not in columns:
            raise ConfigError(f"column {c!r} not in {csv_path} (have {columns})")
    if not rows:
        raise ConfigError(f"{csv_path} has no data rows")
    groups = {}
    for r in rows:
        key = r[group] if group else y
        groups.setdefault(key, ([], []))
        groups[key][0].append(float(r[x]))
        groups[key][1].append(float(r[y]))
    series = [(f"{group}={k}" if group else k, xs, ys) for k, (xs, ys) in groups.items()]
    return atomic_write_bytes(out_path, render_svg(series, x, y, title, kind))
