"""Flat ``section.key = value`` experiment configuration.

Lines are ``key = value``; ``#`` starts a comment; blank lines are ignored.
Every key has a default (mirroring the laboratory values), so an empty file
is a valid configuration.  Units are carried in the key names.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detection import DetectorConfig
from .experiment import SimParams, derive_seed
from .interferometer import InterferometerGeometry
from .polarization import circular_state, linear_state
from .source import SCATTERER_SUM, SPECTRAL, SourceConfig


class InvalidConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    return v


# key -> (parser, default); a default of None means "unset"
SCHEMA: dict[str, tuple] = {
    "sim.seed": (_u64, 1),
    "sim.dt_us": (float, 1.0),
    "sim.n_bins": (int, 100_000),
    "sim.stats_bins": (int, 1_000_000),
    "sim.stats_from": (str, "intensity"),
    "sim.detect": (_bool, True),
    "sim.theta_points": (int, 32),
    "sim.theta_start_deg": (float, 0.0),
    "sim.theta_stop_deg": (float, 360.0),
    "sim.max_lag_tau_c": (float, 4.0),
    "sim.lag_points": (int, 41),
    "sim.chunk_bins": (int, 1 << 16),
    "sim.block_factor": (float, 8.0),
    "sim.histogram_bins": (int, 40),
    "sim.histogram_max_i0": (float, 8.0),
    "geometry.wavelength_nm": (float, 852.0),
    "geometry.r13_m": (float, 1.0),
    "geometry.r14_m": (float, 1.0),
    "geometry.r23_m": (float, 1.0),
    "geometry.r24_m": (float, 1.0),
    "geometry.delta_rad": (float, None),
    "geometry.analyzer3_deg": (str, "0"),
    "geometry.analyzer4_deg": (str, "0"),
    "geometry.source1_pol": (str, "R"),
    "geometry.source2_pol": (str, "L"),
    "geometry.split13": (float, 0.5),
    "geometry.split14": (float, 0.5),
    "geometry.split23": (float, 0.5),
    "geometry.split24": (float, 0.5),
    "entropy.family": (str, "antiphase"),
    "entropy.phi_points": (int, 37),
    "entropy.phi_start_deg": (float, 0.0),
    "entropy.phi_stop_deg": (float, 360.0),
    "entropy.phi1_deg": (float, 0.0),
    "entropy.phi2_deg": (float, 90.0),
    "output.dir": (str, "out"),
}
for _s in ("source1", "source2"):
    SCHEMA[f"{_s}.intensity"] = (float, 8.0e6)
    SCHEMA[f"{_s}.tau_c_us"] = (float, 750.0)
    SCHEMA[f"{_s}.seed"] = (_u64, None)
    SCHEMA[f"{_s}.generator"] = (str, SPECTRAL)
    SCHEMA[f"{_s}.n_scatterers"] = (int, 10_000)
for _d in ("detector3", "detector4"):
    SCHEMA[f"{_d}.efficiency"] = (float, 0.05)
    SCHEMA[f"{_d}.dark_rate"] = (float, 100.0)
    SCHEMA[f"{_d}.dead_time_ns"] = (float, 45.0)
    SCHEMA[f"{_d}.seed"] = (_u64, None)

# stable role ids for seeds derived from sim.seed
_SEED_ROLES = {"source1": 1, "source2": 2, "detector3": 3, "detector4": 4}


def parse_config_text(text: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in SCHEMA:
            raise InvalidConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise InvalidConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def _parse_angle(text: str) -> float | None:
    if text.strip().lower() in ("none", "open"):
        return None
    return math.radians(float(text))


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict

    @classmethod
    def from_text(cls, text: str, seed_override: int | None = None, out_override: str | None = None):
        raw = parse_config_text(text)
        if seed_override is not None:
            raw["sim.seed"] = str(seed_override)
        if out_override is not None:
            raw["output.dir"] = out_override
        values = {}
        for key, (parse, default) in SCHEMA.items():
            if key in raw:
                try:
                    values[key] = parse(raw[key])
                except ValueError as exc:
                    raise InvalidConfigError(f"{key}: {exc}") from None
            else:
                values[key] = default
        if seed_override is not None:
            # an explicit --seed re-derives every component seed
            for role in _SEED_ROLES:
                values[f"{role}.seed"] = None
        cfg = cls(values)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path | None, **kw):
        text = "" if path is None else Path(path).read_text()
        return cls.from_text(text, **kw)

    def __getitem__(self, key: str):
        return self.values[key]

    # -- derived objects --------------------------------------------------

    def seed_for(self, role: str) -> int:
        explicit = self.values[f"{role}.seed"]
        if explicit is not None:
            return explicit
        return derive_seed(self.values["sim.seed"], _SEED_ROLES[role])

    @property
    def dt(self) -> float:
        return self["sim.dt_us"] * 1e-6

    def source(self, name: str) -> SourceConfig:
        return SourceConfig(
            mean_intensity=self[f"{name}.intensity"],
            coherence_time=self[f"{name}.tau_c_us"] * 1e-6,
            seed=self.seed_for(name),
            generator_kind=self[f"{name}.generator"],
            n_scatterers=self[f"{name}.n_scatterers"],
        )

    def detector(self, name: str) -> DetectorConfig:
        return DetectorConfig(
            efficiency=self[f"{name}.efficiency"],
            dark_rate=self[f"{name}.dark_rate"],
            dead_time=self[f"{name}.dead_time_ns"] * 1e-9,
            seed=self.seed_for(name),
        )

    def geometry(self) -> InterferometerGeometry:
        def pol(text):
            t = text.strip().upper()
            if t in ("R", "L"):
                return circular_state(t)
            return linear_state(math.radians(float(text)))

        geom = InterferometerGeometry(
            r13=self["geometry.r13_m"], r14=self["geometry.r14_m"],
            r23=self["geometry.r23_m"], r24=self["geometry.r24_m"],
            wavelength=self["geometry.wavelength_nm"] * 1e-9,
            source1_pol=pol(self["geometry.source1_pol"]),
            source2_pol=pol(self["geometry.source2_pol"]),
            analyzer3_angle=_parse_angle(self["geometry.analyzer3_deg"]),
            analyzer4_angle=_parse_angle(self["geometry.analyzer4_deg"]),
            splitting=tuple(self[f"geometry.split{r}"] for r in ("13", "14", "23", "24")),
        )
        if self["geometry.delta_rad"] is not None:
            geom = geom.with_propagation_phase(self["geometry.delta_rad"])
        return geom

    def sim_params(self) -> SimParams:
        return SimParams(
            n_bins=self["sim.n_bins"],
            dt=self.dt,
            source1=self.source("source1"),
            source2=self.source("source2"),
            detector3=self.detector("detector3"),
            detector4=self.detector("detector4"),
            detect=self["sim.detect"],
            chunk_bins=self["sim.chunk_bins"],
            block_factor=self["sim.block_factor"],
        )

    def thetas(self) -> np.ndarray:
        n = self["sim.theta_points"]
        start = math.radians(self["sim.theta_start_deg"])
        stop = math.radians(self["sim.theta_stop_deg"])
        return start + (stop - start) * np.arange(n) / n

    def phis(self) -> np.ndarray:
        return np.radians(np.linspace(self["entropy.phi_start_deg"], self["entropy.phi_stop_deg"],
                                      self["entropy.phi_points"]))

    def lags(self) -> np.ndarray:
        tau_c = max(self["source1.tau_c_us"], self["source2.tau_c_us"]) * 1e-6
        max_lag = int(math.ceil(self["sim.max_lag_tau_c"] * tau_c / self.dt))
        return np.unique(np.rint(np.linspace(0, max_lag, self["sim.lag_points"])).astype(np.int64))

    # -- provenance -------------------------------------------------------

    def canonical(self) -> str:
        """Resolved configuration, one ``key = value`` per line, seeds made explicit.

        The output directory is left out: it does not change any result.
        """
        vals = {k: v for k, v in self.values.items() if k != "output.dir"}
        for role in _SEED_ROLES:
            vals[f"{role}.seed"] = self.seed_for(role)
        return "".join(f"{k} = {vals[k]!r}\n" for k in sorted(vals))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def seeds(self) -> dict[str, int]:
        return {"sim": self["sim.seed"], **{r: self.seed_for(r) for r in _SEED_ROLES}}

    def validate(self) -> None:
        try:
            self.geometry()
            self.sim_params()
        except ValueError as exc:
            raise InvalidConfigError(str(exc)) from None
        v = self.values
        checks = [
            (v["sim.n_bins"] >= 1, "sim.n_bins must be >= 1"),
            (v["sim.stats_bins"] >= 2, "sim.stats_bins must be >= 2"),
            (v["sim.stats_from"] in ("intensity", "counts"), "sim.stats_from must be intensity or counts"),
            (v["sim.theta_points"] >= 8, "sim.theta_points must be >= 8"),
            (v["sim.lag_points"] >= 2, "sim.lag_points must be >= 2"),
            (v["sim.max_lag_tau_c"] > 0, "sim.max_lag_tau_c must be > 0"),
            (v["sim.chunk_bins"] >= 1, "sim.chunk_bins must be >= 1"),
            (v["sim.histogram_bins"] >= 1, "sim.histogram_bins must be >= 1"),
            (v["sim.histogram_max_i0"] > 0, "sim.histogram_max_i0 must be > 0"),
            (v["entropy.phi_points"] >= 2, "entropy.phi_points must be >= 2"),
            (v["source1.generator"] in (SPECTRAL, SCATTERER_SUM), "source1.generator invalid"),
            (v["source2.generator"] in (SPECTRAL, SCATTERER_SUM), "source2.generator invalid"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InvalidConfigError(msg)
        from .entanglement import FAMILIES

        if v["entropy.family"] not in FAMILIES:
            raise InvalidConfigError(f"entropy.family must be one of {FAMILIES}")

    @property
    def coarse_sampling(self) -> bool:
        from .source import is_coarse

        return any(is_coarse(self.dt, self[f"{s}.tau_c_us"] * 1e-6) for s in ("source1", "source2"))
