"""Measurement experiments: configuration, single runs, figure presets, oracle checks, sweeps."""

from __future__ import annotations

import dataclasses
import enum
import json
import logging
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import nmr
from .lindblad import MasterEquationProblem, integrate_master
from .quantum import ANNIHILATOR, KET_0, KET_1
from .qsd import (
    ExpectationSource,
    NoiseConvention,
    NoiseSharing,
    QsdWeights,
    TrajectoryRecord,
    evolve_basis_trajectories,
    evolve_pure_ensemble,
)

log = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
CSV_HEADER = "step,time_s,mx_abs_re,my_abs_re,trace_re,norm_minus,norm_plus"
ORACLE_CSV_HEADER = (
    "step,time_s,qsd_p1,oracle_p1,qsd_rho01_re,qsd_rho01_im,"
    "oracle_rho01_re,oracle_rho01_im,max_abs_dev,bound_4sigma"
)
SWEEP_CSV_HEADER = "alpha,beta,median_mx_abs_re,median_my_abs_re,noise_to_signal"

COUPLING_PRESETS: tuple[tuple[float, float], ...] = (
    (1.0, 0.0),
    (0.7, 0.3),
    (0.3, 0.7),
    (0.01, 0.99),
    (0.0, 1.0),
)
ZOOM_WINDOW = 0.25  # s
MIN_ORACLE_TRAJECTORIES = 100
ROUNDOFF_FLOOR = 1e-12  # added to statistical bounds so exact agreement is not judged on rounding


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every offending field."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


# Inline documentation for each key, written into config templates.
_FIELD_DOCS = {
    "alpha": "weight of the spin Hamiltonian, in [0, 1]",
    "beta": "weight of the measurement coupling, in [0, 1]",
    "omega0": "Larmor angular frequency, rad/s (hydrogen at ~10 T: 5e8)",
    "temperature": "sample temperature, K (room temperature)",
    "duration": "measurement time, s",
    "steps": "number of time steps the measurement is divided into",
    "seed": "integer RNG seed",
    "convention": "complex noise normalization: appendix-complex | gisin-percival",
    "frame": "laboratory (evolve under H0) | rotating (H = 0 during measurement)",
    "noise_sharing": "shared | independent noise for the two basis kets",
    "expectation_source": "per-state | appendix-compat",
    "ensemble_size": "number of basis-pair realizations averaged",
    "gate": "gate applied to the thermal state: X | Y | Z | None",
    "exact_thermal": "use the exact Gibbs state instead of the high-T expansion",
}


@dataclass(frozen=True)
class SimulationConfig:
    alpha: float = 1.0
    beta: float = 0.0
    omega0: float = 5e8
    temperature: float = 300.0
    duration: float = 1.0
    steps: int = 500
    seed: int = 0
    convention: NoiseConvention = NoiseConvention.APPENDIX_COMPLEX
    frame: nmr.Frame = nmr.Frame.LABORATORY
    noise_sharing: NoiseSharing = NoiseSharing.SHARED
    expectation_source: ExpectationSource = ExpectationSource.PER_STATE
    ensemble_size: int = 1
    gate: nmr.Gate = nmr.Gate.X
    exact_thermal: bool = False

    @classmethod
    def from_mapping(cls, values: dict) -> "SimulationConfig":
        """Build a config from loosely typed values (strings allowed), validating every field."""
        problems = []
        kwargs = {}
        known = {f.name: f for f in dataclasses.fields(cls)}
        for raw_key, raw in values.items():
            key = raw_key.replace("-", "_")
            if key not in known:
                problems.append(f"unknown key {raw_key!r}")
                continue
            try:
                kwargs[key] = _coerce(known[key], raw)
            except (TypeError, ValueError) as exc:
                problems.append(f"{key}: {exc}")
        if problems:
            raise ConfigError(problems)
        return cls(**kwargs).validated()

    def validated(self) -> "SimulationConfig":
        problems = []
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                problems.append(f"{name}: must lie in [0, 1], got {v}")
        if self.steps < 1:
            problems.append(f"steps: must be >= 1, got {self.steps}")
        if self.ensemble_size < 1:
            problems.append(f"ensemble_size: must be >= 1, got {self.ensemble_size}")
        if not self.duration > 0:
            problems.append(f"duration: must be positive, got {self.duration}")
        try:
            self.nmr_parameters()
        except ValueError as exc:
            problems.append(f"omega0/temperature: {exc}")
        if problems:
            raise ConfigError(problems)
        return self

    @property
    def dt(self) -> float:
        return self.duration / self.steps

    @property
    def weights(self) -> QsdWeights:
        return QsdWeights(self.alpha, self.beta)

    def nmr_parameters(self) -> nmr.NmrParameters:
        return nmr.NmrParameters(omega0=self.omega0, temperature=self.temperature)

    def replace(self, **changes) -> "SimulationConfig":
        return dataclasses.replace(self, **changes).validated()

    def to_dict(self) -> dict:
        return {k: (v.value if isinstance(v, enum.Enum) else v) for k, v in dataclasses.asdict(self).items()}


def _coerce(f: dataclasses.Field, raw):
    default = f.default
    if isinstance(default, enum.Enum):
        try:
            return type(default)(raw)
        except ValueError:
            choices = ", ".join(m.value for m in type(default))
            raise ValueError(f"expected one of {choices}, got {raw!r}") from None
    if isinstance(default, bool):
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(default, int):
        value = float(raw)
        if not value.is_integer():
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(value)
    value = float(raw)
    if not np.isfinite(value):
        raise ValueError(f"expected a finite number, got {raw!r}")
    return value


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    problems = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    if problems:
        raise ConfigError(problems)
    return values


def load_config(path, overrides: dict | None = None) -> SimulationConfig:
    values = parse_config_text(Path(path).read_text()) if path is not None else {}
    values.update(overrides or {})
    return SimulationConfig.from_mapping(values)


def default_config_text() -> str:
    """Config template with every key at its default and documented inline."""
    lines = [f"# nmrqsd simulation config (CSV schema v{CSV_SCHEMA_VERSION})"]
    for key, value in SimulationConfig().to_dict().items():
        lines.append(f"{key} = {value}  # {_FIELD_DOCS[key]}")
    return "\n".join(lines) + "\n"


# --- single runs --------------------------------------------------------------------


def initial_density(config: SimulationConfig) -> np.ndarray:
    """Thermal state followed by the configured gate."""
    p = config.nmr_parameters()
    rho_th = nmr.thermal_state(p, exact=config.exact_thermal)
    return nmr.apply_gate(nmr.named_gate(config.gate), rho_th)


def measurement_hamiltonian(config: SimulationConfig) -> np.ndarray:
    if config.frame is nmr.Frame.LABORATORY:
        return nmr.free_hamiltonian(config.nmr_parameters())
    return np.zeros((2, 2), dtype=complex)


def simulate(config: SimulationConfig) -> TrajectoryRecord:
    """Prepare the post-gate state and evolve it during the measurement."""
    return evolve_basis_trajectories(
        initial_density(config),
        measurement_hamiltonian(config),
        ANNIHILATOR,
        config.weights,
        dt=config.dt,
        steps=config.steps,
        rng_seed=config.seed,
        noise_sharing=config.noise_sharing,
        expectation_source=config.expectation_source,
        convention=config.convention,
        ensemble_size=config.ensemble_size,
        hbar=nmr.CONSTANTS.hbar,
    )


def _fmt(x) -> str:
    return repr(float(x))


def write_trajectory_csv(record: TrajectoryRecord, path) -> Path:
    path = Path(path)
    rows = [CSV_HEADER]
    for k in range(len(record.times)):
        rows.append(
            ",".join(
                [
                    str(k),
                    _fmt(record.times[k]),
                    _fmt(abs(record.mx[k])),
                    _fmt(abs(record.my[k])),
                    _fmt(record.trace_re[k]),
                    _fmt(record.norm_minus[k]),
                    _fmt(record.norm_plus[k]),
                ]
            )
        )
    path.write_text("\n".join(rows) + "\n")
    return path


def summarize(record: TrajectoryRecord) -> dict:
    mx = np.abs(record.mx)
    my = np.abs(record.my)
    med_my = float(np.median(my))
    return {
        "mean_mx_abs_re": float(np.mean(mx)),
        "median_mx_abs_re": float(np.median(mx)),
        "mean_my_abs_re": float(np.mean(my)),
        "median_my_abs_re": med_my,
        "noise_to_signal": float(np.median(mx)) / med_my if med_my > 0 else float("inf"),
        "final_trace_re": float(record.trace_re[-1]),
    }


@dataclass
class RunReport:
    config: dict
    csv_path: Path
    summary: dict
    seed: int
    wall_time_s: float
    plot_paths: list[Path] = field(default_factory=list)
    report_path: Path | None = None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "csv_path": str(self.csv_path),
            "plot_paths": [str(p) for p in self.plot_paths],
            "summary": self.summary,
            "seed": self.seed,
            "wall_time_s": self.wall_time_s,
        }


def run(config: SimulationConfig, out_dir=".", name: str = "run", plot: bool = False) -> RunReport:
    """Simulate one configuration and write ``<name>.csv`` (plus ``<name>.json``)."""
    config = config.validated()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    record = simulate(config)
    csv_path = write_trajectory_csv(record, out_dir / f"{name}.csv")
    report = RunReport(
        config=config.to_dict(),
        csv_path=csv_path,
        summary=summarize(record),
        seed=config.seed,
        wall_time_s=time.perf_counter() - start,
    )
    if plot:
        title = f"alpha={config.alpha:g}, beta={config.beta:g}"
        report.plot_paths += _try_plot(record, out_dir / f"{name}.svg", title)
    report.report_path = out_dir / f"{name}.json"
    report.report_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    log.info("wrote %s", csv_path)
    return report


# --- plotting ---------------------------------------------------------------------------


def plot_record(record: TrajectoryRecord, path, title: str = "", t_max: float | None = None) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    sel = slice(None) if t_max is None else record.times <= t_max + 1e-12
    t = record.times[sel]
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        ax.plot(t, np.abs(record.mx[sel]), ".", color="red", markersize=3, label="noise |Re Mx|")
        ax.plot(t, np.abs(record.my[sel]), "-", color="blue", label="signal |Re My|")
        ax.set_xlabel("time (s)")
        ax.set_ylabel("magnetic moment")
        ax.set_title(title)
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path)
    finally:
        plt.close(fig)
    return Path(path)


def _try_plot(record, path, title, t_max=None) -> list[Path]:
    try:
        return [plot_record(record, path, title, t_max)]
    except Exception as exc:  # plots are optional output
        warnings.warn(f"plotting failed ({exc}); CSV written without plot", RuntimeWarning, stacklevel=2)
        return []


def _preset_name(alpha: float, beta: float) -> str:
    return f"alpha{alpha:g}_beta{beta:g}"


def reproduce_figures(out_dir, base: SimulationConfig | None = None) -> list[RunReport]:
    """Run the five coupling presets and plot signal and noise for each.

    The ``alpha = 0, beta = 1`` preset gets an extra plot restricted to the
    first quarter second.
    """
    base = base or SimulationConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    for alpha, beta in COUPLING_PRESETS:
        cfg = base.replace(alpha=alpha, beta=beta)
        name = _preset_name(alpha, beta)
        start = time.perf_counter()
        record = simulate(cfg)
        csv_path = write_trajectory_csv(record, out_dir / f"{name}.csv")
        title = f"alpha={alpha:g}, beta={beta:g}"
        plots = _try_plot(record, out_dir / f"{name}.svg", title)
        if (alpha, beta) == COUPLING_PRESETS[-1]:
            plots += _try_plot(record, out_dir / f"{name}_zoom.svg", title + f", t <= {ZOOM_WINDOW:g} s", ZOOM_WINDOW)
        report = RunReport(
            config=cfg.to_dict(),
            csv_path=csv_path,
            summary=summarize(record),
            seed=cfg.seed,
            wall_time_s=time.perf_counter() - start,
            plot_paths=plots,
        )
        report.report_path = out_dir / f"{name}.json"
        report.report_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        reports.append(report)
    return reports


# --- oracle comparison --------------------------------------------------------------------

INITIAL_STATES = {
    "excited": KET_1,
    "ground": KET_0,
    "superposition": (KET_0 + KET_1) / np.sqrt(2),
}


@dataclass
class OracleReport:
    initial_state: str
    n_trajectories: int
    seed: int
    times: np.ndarray
    qsd_mean: np.ndarray
    oracle: np.ndarray
    deviation: np.ndarray
    bound: np.ndarray
    csv_path: Path | None = None

    @property
    def max_deviation(self) -> float:
        return float(self.deviation.max())

    @property
    def max_ratio(self) -> float:
        """Largest deviation in units of the 4-sigma bound (0/0 counts as 0)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(self.deviation == 0, 0.0, self.deviation / self.bound)
        return float(np.max(r))

    @property
    def passed(self) -> bool:
        return bool(np.all(self.deviation <= self.bound))


def compare_oracle(
    initial_state: str = "excited",
    n_trajectories: int = 2000,
    duration: float = 1.0,
    steps: int = 1000,
    seed: int = 0,
    out_dir=None,
) -> OracleReport:
    """Average QSD projectors of one pure state and compare with RK4 on the same grid.

    Uses the Gisin-Percival noise convention, weights ``(1, 1)``, ``H = 0``
    and the lowering operator, with independent noise per trajectory.  The
    per-entry bound is four standard errors of the ensemble mean plus a
    ``1e-12`` round-off floor.
    """
    if n_trajectories < MIN_ORACLE_TRAJECTORIES:
        raise ConfigError([f"n_trajectories: need at least {MIN_ORACLE_TRAJECTORIES}, got {n_trajectories}"])
    if initial_state not in INITIAL_STATES:
        raise ConfigError([f"initial_state: expected one of {', '.join(INITIAL_STATES)}, got {initial_state!r}"])
    if steps < 1 or not duration > 0:
        raise ConfigError(["steps and duration must be positive"])
    psi0 = INITIAL_STATES[initial_state]
    H = np.zeros((2, 2), dtype=complex)
    dt = duration / steps
    ens = evolve_pure_ensemble(
        psi0, H, ANNIHILATOR, QsdWeights(1.0, 1.0), dt, steps, n_trajectories, seed,
        convention=NoiseConvention.GISIN_PERCIVAL,
    )
    oracle = integrate_master(MasterEquationProblem(H, [ANNIHILATOR], np.outer(psi0, psi0.conj()), duration, steps))
    dev_all = np.abs(ens.mean_rho - oracle).reshape(steps + 1, 4)
    bound_all = 4.0 * ens.std_error.reshape(steps + 1, 4) + ROUNDOFF_FLOOR
    report = OracleReport(
        initial_state=initial_state,
        n_trajectories=n_trajectories,
        seed=seed,
        times=ens.times,
        qsd_mean=ens.mean_rho,
        oracle=oracle,
        deviation=dev_all,
        bound=bound_all,
    )
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        report.csv_path = _write_oracle_csv(report, out_dir / f"oracle_{initial_state}.csv")
    return report


def _write_oracle_csv(report: OracleReport, path) -> Path:
    rows = [ORACLE_CSV_HEADER]
    # bound column belongs to the entry with the largest deviation at that time
    worst = np.argmax(report.deviation, axis=1)
    for k, t in enumerate(report.times):
        q = report.qsd_mean[k]
        o = report.oracle[k]
        rows.append(
            ",".join(
                [str(k)]
                + [_fmt(v) for v in (t, q[1, 1].real, o[1, 1].real, q[0, 1].real, q[0, 1].imag, o[0, 1].real, o[0, 1].imag)]
                + [_fmt(report.deviation[k, worst[k]]), _fmt(report.bound[k, worst[k]])]
            )
        )
    Path(path).write_text("\n".join(rows) + "\n")
    return Path(path)


# --- sweeps ----------------------------------------------------------------------------


def sweep(pairs: Iterable[tuple[float, float]], config: SimulationConfig | None = None, out_dir=None) -> list[dict]:
    """One summary row per ``(alpha, beta)`` pair; optionally written to ``sweep.csv``."""
    pairs = [(float(a), float(b)) for a, b in pairs]
    if not pairs:
        raise ConfigError(["sweep grid is empty"])
    config = config or SimulationConfig()
    rows = []
    for alpha, beta in pairs:
        summary = summarize(simulate(config.replace(alpha=alpha, beta=beta)))
        rows.append(
            {
                "alpha": alpha,
                "beta": beta,
                "median_mx_abs_re": summary["median_mx_abs_re"],
                "median_my_abs_re": summary["median_my_abs_re"],
                "noise_to_signal": summary["noise_to_signal"],
            }
        )
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        lines = [SWEEP_CSV_HEADER] + [",".join(_fmt(r[k]) for k in SWEEP_CSV_HEADER.split(",")) for r in rows]
        (out_dir / "sweep.csv").write_text("\n".join(lines) + "\n")
    return rows
