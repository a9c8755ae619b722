"""``hbtphase`` command-line interface.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 check failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, InvalidConfigError
from .entanglement import entropy_scan
from .experiment import fit_fringe, modulation_test, scan_fringe, source_statistics
from .interferometer import GEOMETRIC_PHASE_SIGN, UnsupportedConfigurationError, propagation_phase
from .output import (
    ENTROPY_COLUMNS,
    FRINGE_COLUMNS,
    HISTOGRAM_COLUMNS,
    LOCAL_COLUMNS,
    SOURCE_STATS_COLUMNS,
    SUMMARY_COLUMNS,
    plot_entropy,
    plot_fringe,
    plot_source_stats,
    provenance,
    rayleigh_histogram,
    write_csv,
)
from .source import CoarseSamplingWarning

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2


def run_source_stats(cfg: ExperimentConfig, threads: int = 1, plot: bool = False) -> list[Path]:
    out = Path(cfg["output.dir"])
    s1, s2 = cfg.source("source1"), cfg.source("source2")
    detectors = None
    if cfg["sim.stats_from"] == "counts":
        detectors = (cfg.detector("detector3"), cfg.detector("detector4"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoarseSamplingWarning)
        st = source_statistics(s1, s2, cfg.dt, cfg["sim.stats_bins"], cfg.lags(), detectors=detectors,
                               block_factor=cfg["sim.block_factor"], threads=threads)
    meta = provenance(cfg, coarse_sampling=int(st.coarse), statistics_from=cfg["sim.stats_from"])
    rows = zip(st.tau, st.g11.value, st.g11.stderr, st.g22.value, st.g22.stderr, st.g12.value, st.g12.stderr)
    paths = [write_csv(out / "g2_curves.csv", SOURCE_STATS_COLUMNS, rows, meta)]
    for name, cfg_s, samples in (("source1", s1, st.samples1), ("source2", s2, st.samples2)):
        hist = rayleigh_histogram(samples, cfg_s.mean_intensity, cfg["sim.histogram_bins"], cfg["sim.histogram_max_i0"])
        paths.append(write_csv(out / f"intensity_histogram_{name}.csv", HISTOGRAM_COLUMNS, hist, meta))
    if plot:
        paths.append(plot_source_stats(paths[0], out / "g2_curves.svg"))
    return paths


def run_fringe_scan(cfg: ExperimentConfig, threads: int = 1, plot: bool = False,
                    sign: int = GEOMETRIC_PHASE_SIGN) -> list[Path]:
    out = Path(cfg["output.dir"])
    geom = cfg.geometry()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoarseSamplingWarning)
        rows = scan_fringe(geom, cfg.thetas(), cfg.sim_params(), threads=threads, sign=sign)
    meta = provenance(cfg, coarse_sampling=int(cfg.coarse_sampling),
                      propagation_phase_rad=format(propagation_phase(geom), ".9g"))
    phi = np.array([r.phi34 for r in rows])
    c = np.array([r.result.coincidence.value for r in rows])
    ce = np.array([r.result.coincidence.stderr for r in rows])
    ca = np.array([r.analytic for r in rows])
    table = [(r.theta, r.phi34, r.result.coincidence.value, r.result.coincidence.stderr, r.analytic) for r in rows]
    paths = [write_csv(out / "fringe.csv", FRINGE_COLUMNS, table, meta)]
    local = [(r.theta, r.phi34,
              r.result.mean3.value, r.result.mean3.stderr, r.result.mean4.value, r.result.mean4.stderr,
              r.result.auto3.value, r.result.auto3.stderr, r.result.auto4.value, r.result.auto4.stderr)
             for r in rows]
    paths.append(write_csv(out / "fringe_local.csv", LOCAL_COLUMNS, local, meta))

    # unweighted: per-point jackknife errors correlate with the values and bias a weighted fit low
    fit = fit_fringe(phi, c)
    summary = [
        ("offset", fit.offset), ("offset_err", fit.offset_err),
        ("amplitude", fit.amplitude), ("amplitude_err", fit.amplitude_err),
        ("phase", fit.phase), ("frequency", fit.frequency), ("frequency_err", fit.frequency_err),
        ("period_rad", fit.period), ("residual_rms", fit.rms_residual),
        ("rms_vs_analytic", float(np.sqrt(np.mean((c - ca) ** 2)))),
    ]
    for name, r_attr in (("mean3", "mean3"), ("mean4", "mean4"), ("g2_33", "auto3"), ("g2_44", "auto4")):
        est = [getattr(r.result, r_attr) for r in rows]
        mt = modulation_test(phi, [e.value for e in est], [e.stderr for e in est])
        summary += [(f"{name}_modulation_amplitude", mt.amplitude), (f"{name}_modulation_p", mt.p_value)]
    paths.append(write_csv(out / "fringe_fit.csv", SUMMARY_COLUMNS, summary, meta))
    if plot:
        paths.append(plot_fringe(paths[0], out / "fringe.svg"))
    return paths


def run_entropy_scan(cfg: ExperimentConfig, plot: bool = False) -> list[Path]:
    out = Path(cfg["output.dir"])
    phi1 = math.radians(cfg["entropy.phi1_deg"])
    phi2 = math.radians(cfg["entropy.phi2_deg"])
    family = cfg["entropy.family"]
    rows = entropy_scan(cfg.phis(), phi1=phi1, family=family, phi2=phi2 if family == "superposition" else None)
    table = []
    for r in rows:
        coeffs = []
        for c in r.bell:
            coeffs += [c.real, c.imag]
        table.append((r.phase, r.phi1, r.concurrence, r.entropy, *coeffs))
    meta = provenance(cfg, family=family)
    paths = [write_csv(out / "entropy_scan.csv", ENTROPY_COLUMNS, table, meta)]
    if plot:
        paths.append(plot_entropy(paths[0], out / "entropy_scan.svg"))
    return paths


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value configuration file")
    common.add_argument("--seed", type=_u64, metavar="U64", help="master seed (re-derives all component seeds)")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    common.add_argument("--plot", action="store_true", help="also write SVG plots")
    common.add_argument("--threads", type=_positive_int, default=1, metavar="N")
    # test hook: evaluate the oracle with the opposite geometric-phase sign
    common.add_argument("--flip-geometric-sign", action="store_true", help=argparse.SUPPRESS)

    p = _Parser(prog="hbtphase", description="Two-source intensity interferometry simulator.")
    p.add_argument("--version", action="version", version=f"hbtphase {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("source-stats", parents=[common], help="thermal statistics and G2 curves of both sources")
    sub.add_parser("fringe-scan", parents=[common], help="coincidence fringe versus analyzer angle")
    sub.add_parser("entropy-scan", parents=[common], help="entanglement of exchange states versus phase")
    sub.add_parser("selftest", parents=[common], help="reduced-scale invariant checks")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    sign = -GEOMETRIC_PHASE_SIGN if args.flip_geometric_sign else GEOMETRIC_PHASE_SIGN
    if args.command == "selftest":
        from .selftest import run_selftest

        return EXIT_OK if run_selftest(sign=sign, threads=args.threads) else EXIT_CHECK
    try:
        cfg = ExperimentConfig.from_file(args.config, seed_override=args.seed, out_override=args.out)
    except OSError as exc:
        print(f"hbtphase: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidConfigError as exc:
        print(f"hbtphase: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "source-stats":
            paths = run_source_stats(cfg, args.threads, args.plot)
        elif args.command == "fringe-scan":
            paths = run_fringe_scan(cfg, args.threads, args.plot, sign)
        else:
            paths = run_entropy_scan(cfg, args.plot)
    except (UnsupportedConfigurationError, ValueError) as exc:
        print(f"hbtphase: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
