"""CSV tables and optional SVG plots.

Every file starts with ``#`` comment lines (artifact version, config hash,
seeds), then one header row.  Floats are written with 9 significant digits,
so equal inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__

SOURCE_STATS_COLUMNS = ("tau_s", "g2_11", "g2_11_err", "g2_22", "g2_22_err", "g2_12", "g2_12_err")
HISTOGRAM_COLUMNS = ("intensity_bin_lo", "intensity_bin_hi", "count", "rayleigh_expected")
FRINGE_COLUMNS = ("theta_rad", "phi34_rad", "C_mc", "C_mc_err", "C_analytic")
LOCAL_COLUMNS = ("theta_rad", "phi34_rad", "mean3", "mean3_err", "mean4", "mean4_err",
                 "g2_33", "g2_33_err", "g2_44", "g2_44_err")
ENTROPY_COLUMNS = ("phi_rad", "phi1_rad", "concurrence", "entropy_bits",
                   "c_phi_plus_re", "c_phi_plus_im", "c_phi_minus_re", "c_phi_minus_im",
                   "c_psi_plus_re", "c_psi_plus_im", "c_psi_minus_re", "c_psi_minus_im")
COUNT_COLUMNS = ("bin", "t_s", "counts")
SUMMARY_COLUMNS = ("quantity", "value")


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        # avoid "-0"
        return "%.9g" % (v + 0.0)
    return str(v)


def render_csv(columns: Sequence[str], rows: Iterable[Sequence], meta: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# hbtphase {__version__}\n")
    for key, value in (meta or {}).items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, header has {len(columns)}")
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(path: str | Path, columns, rows, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(render_csv(columns, rows, meta))
    return path


def read_csv(path: str | Path) -> tuple[dict, list[str], np.ndarray]:
    """Parse a file written by ``write_csv``: (meta, header, float table)."""
    meta: dict[str, str] = {}
    lines = Path(path).read_text().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            if value:
                meta[key] = value
        else:
            body.append(line)
    rows = list(csv.reader(body))
    header, data = rows[0], rows[1:]
    table = np.array([[float(x) for x in r] for r in data], dtype=float).reshape(len(data), len(header))
    return meta, header, table


def provenance(cfg, **extra) -> dict:
    meta = {"config_sha256": cfg.digest()}
    meta.update({f"seed.{k}": v for k, v in cfg.seeds().items()})
    meta.update(extra)
    return meta


def count_record_rows(record, start_bin: int = 0):
    """Rows for ``COUNT_COLUMNS``: bin index, bin start time and counts (nonzero bins only)."""
    for i in np.flatnonzero(record.counts):
        b = start_bin + int(i)
        yield b, b * record.dt, int(record.counts[i])


def write_count_record(path: str | Path, record, meta: dict | None = None, start_bin: int = 0) -> Path:
    return write_csv(path, COUNT_COLUMNS, count_record_rows(record, start_bin), meta)


def rayleigh_histogram(samples, mean_intensity: float, n_bins: int, max_i0: float):
    """Histogram rows on ``[0, max_i0 * I0)`` with exponential-law expectations."""
    edges = np.linspace(0.0, max_i0 * mean_intensity, n_bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    cdf = 1.0 - np.exp(-edges / mean_intensity)
    expected = len(samples) * np.diff(cdf)
    return [(edges[i], edges[i + 1], int(counts[i]), expected[i]) for i in range(n_bins)]


# -- plots ---------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # keep vector output free of timestamps and random ids
    matplotlib.rcParams["svg.hashsalt"] = "hbtphase"
    return plt


def _save(fig, path: Path):
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_source_stats(g2_csv: Path, out: Path) -> Path:
    plt = _pyplot()
    _, header, t = read_csv(g2_csv)
    col = {h: i for i, h in enumerate(header)}
    fig, ax = plt.subplots(figsize=(6, 4))
    tau_ms = t[:, col["tau_s"]] * 1e3
    for name, label in (("g2_11", "G2 11"), ("g2_22", "G2 22"), ("g2_12", "G2 12")):
        ax.errorbar(tau_ms, t[:, col[name]], yerr=t[:, col[name + "_err"]], fmt="o", ms=3, label=label)
    ax.set_xlabel("tau (ms)")
    ax.set_ylabel("normalized correlation")
    ax.legend()
    _save(fig, out)
    plt.close(fig)
    return out


def plot_fringe(fringe_csv: Path, out: Path) -> Path:
    plt = _pyplot()
    _, header, t = read_csv(fringe_csv)
    col = {h: i for i, h in enumerate(header)}
    order = np.argsort(t[:, col["phi34_rad"]])
    phi = t[order, col["phi34_rad"]]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(phi, t[order, col["C_mc"]], yerr=t[order, col["C_mc_err"]], fmt="o", ms=3, label="Monte Carlo")
    ax.plot(phi, t[order, col["C_analytic"]], "-", label="analytic")
    ax.set_xlabel("phi34 (rad)")
    ax.set_ylabel("C = G2_34(0)")
    ax.legend()
    _save(fig, out)
    plt.close(fig)
    return out


def plot_entropy(entropy_csv: Path, out: Path) -> Path:
    plt = _pyplot()
    _, header, t = read_csv(entropy_csv)
    col = {h: i for i, h in enumerate(header)}
    fig, ax = plt.subplots(figsize=(6, 4))
    phi = t[:, col["phi_rad"]]
    ax.plot(phi, t[:, col["entropy_bits"]], "o-", ms=3, label="entropy (bits)")
    ax.plot(phi, t[:, col["concurrence"]], "s--", ms=3, label="concurrence")
    ax.set_xlabel("phi (rad)")
    ax.set_ylim(-0.05, 1.05)
    ax.legend()
    _save(fig, out)
    plt.close(fig)
    return out
