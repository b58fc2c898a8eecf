"""Seeded Monte Carlo harness: SNR sweeps over the five decoders.

Every trial owns a counter-based random stream keyed on
``(seed, snr index, decoder, trial index)``, so results are independent
of execution order, chunking, and worker count.  Trials are decoded in
fixed-size chunks through the batched array cores; a chunk of one trial
reproduces exactly what the public per-batch operations compute.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from .circular import VonMises
from .exact import _dtft_stat, _exact_log_weights, _softmax
from .sigmodel import (
    ChannelParams,
    Constellation,
    PulseVector,
    build_pulse,
    make_constellation,
    snr_to_noise_variance,
    transmit,
)
from .vb import VbConfig, _offline_core, _online_step_core

__all__ = [
    "DECODERS",
    "SweepConfig",
    "CellResult",
    "SweepResult",
    "default_sweep_config",
    "parse_config",
    "load_config",
    "run_trial",
    "run_sweep",
    "write_csv",
    "read_csv",
]

DECODERS = ("independent", "vb_offline", "vb_online", "em", "vb_uniform")

# Decoders that receive the configured pilot prefix by default.
_PILOT_DECODERS = frozenset({"em", "vb_uniform"})

# Trials per work unit; fixed so chunk boundaries never depend on the
# worker count.
_CHUNK_TRIALS = 1000

_PHILOX_SALT = 0x9E3779B97F4A7C15
_MASK64 = 0xFFFFFFFFFFFFFFFF

CSV_HEADER = "decoder,snr_db,symbols,successes,success_rate,ci95,time_ms"


@dataclass(frozen=True)
class SweepConfig:
    """Experiment protocol for one SNR sweep.

    ``pilot_count`` applies to the baseline decoders (em, vb_uniform)
    unless ``pilot_overrides`` names a per-decoder count.  The true
    phase is drawn uniformly per trial by default; ``fixed`` mode pins
    it to ``true_phase_rad``.
    """

    snr_db_list: Tuple[float, ...] = tuple(float(s) for s in range(-15, 7, 2))
    trials_per_point: int = 5000
    batch_size: int = 20
    pilot_count: int = 5
    pilot_overrides: Mapping[str, int] = field(default_factory=dict)
    constellation: str = "psk4"
    pulse_s: Tuple[float, ...] = (1.0, 1.0, 1.0, 1.0)
    pulse_omega_rad: float = float(np.pi / 2)
    prior_kappa_mag: float = 10.0
    prior_kappa_angle_rad: float = 0.0
    true_phase_mode: str = "uniform"
    true_phase_rad: float = 0.0
    seed: int = 0
    decoders: Tuple[str, ...] = DECODERS
    vb_max_iterations: int = 100
    vb_tolerance: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "snr_db_list", tuple(float(s) for s in self.snr_db_list))
        object.__setattr__(self, "pulse_s", tuple(float(s) for s in self.pulse_s))
        object.__setattr__(self, "decoders", tuple(self.decoders))
        object.__setattr__(self, "pilot_overrides", dict(self.pilot_overrides))
        if not self.snr_db_list:
            raise ValueError("snr_db_list must not be empty")
        if self.trials_per_point < 1:
            raise ValueError("trials_per_point must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.pilot_count < 0:
            raise ValueError("pilot_count must be >= 0")
        if not self.decoders:
            raise ValueError("decoders must not be empty")
        for d in tuple(self.decoders) + tuple(self.pilot_overrides):
            if d not in DECODERS:
                raise ValueError(f"unknown decoder {d!r}; valid: {DECODERS}")
        if self.true_phase_mode not in ("fixed", "uniform"):
            raise ValueError("true_phase_mode must be 'fixed' or 'uniform'")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must fit in 64 bits")

    def constellation_obj(self) -> Constellation:
        return _constellation_from_name(self.constellation)

    def pulse_obj(self) -> PulseVector:
        return build_pulse(self.pulse_s, self.pulse_omega_rad)

    def prior(self) -> VonMises:
        return VonMises.from_polar(self.prior_kappa_mag, self.prior_kappa_angle_rad)

    def vb_config(self) -> VbConfig:
        return VbConfig(
            max_iterations=self.vb_max_iterations,
            tolerance=self.vb_tolerance,
            track_elbo=False,
        )

    def pilots_for(self, decoder: str) -> Dict[int, int]:
        count = self.pilot_overrides.get(
            decoder, self.pilot_count if decoder in _PILOT_DECODERS else 0
        )
        return {i: 0 for i in range(count)}


def default_sweep_config(seed: int = 1) -> SweepConfig:
    """Default comparison protocol.

    -15..5 dB in 2 dB steps, QPSK, K = 20, 5000 trials per point, 5
    pilots in front for the baselines, true phase fixed at the prior
    angle so the fixed-prior decoders are centred on the truth.
    """
    return SweepConfig(true_phase_mode="fixed", seed=seed)


def _constellation_from_name(name: str) -> Constellation:
    kind = name.rstrip("0123456789").lower()
    digits = name[len(kind):]
    if kind not in ("psk", "qam") or not digits:
        raise ValueError(f"unsupported constellation spec {name!r} (use e.g. psk4, qam16)")
    return make_constellation(kind, int(digits))


# --------------------------------------------------------------------------
# Config file parsing: flat `key = value` lines, '#' comments.
# --------------------------------------------------------------------------

_LIST_KEYS = {"snr_db_list", "pulse_s", "decoders"}
_INT_KEYS = {"trials_per_point", "batch_size", "pilot_count", "seed", "vb_max_iterations"}
_FLOAT_KEYS = {
    "pulse_omega_rad",
    "prior_kappa_mag",
    "prior_kappa_angle_rad",
    "true_phase_rad",
    "vb_tolerance",
}
_STR_KEYS = {"constellation", "true_phase_mode"}


def parse_config(text: str) -> SweepConfig:
    """Parse `key = value` sweep configuration text.

    Keys mirror the SweepConfig fields; list values are comma-separated.
    Per-decoder pilot overrides use ``pilot_count_<decoder>`` keys.
    """
    kwargs: Dict[str, object] = {}
    overrides: Dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("pilot_count_"):
            overrides[key[len("pilot_count_"):]] = int(value)
        elif key == "snr_db_list":
            kwargs[key] = tuple(float(v) for v in value.split(","))
        elif key == "pulse_s":
            kwargs[key] = tuple(float(v) for v in value.split(","))
        elif key == "decoders":
            kwargs[key] = tuple(v.strip() for v in value.split(","))
        elif key in _INT_KEYS:
            kwargs[key] = int(value)
        elif key in _FLOAT_KEYS:
            kwargs[key] = float(value)
        elif key in _STR_KEYS:
            kwargs[key] = value
        else:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
    if overrides:
        kwargs["pilot_overrides"] = overrides
    return SweepConfig(**kwargs)


def load_config(path) -> SweepConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


# --------------------------------------------------------------------------
# Trial generation and decoding.
# --------------------------------------------------------------------------


def _trial_rng(seed: int, snr_index: int, decoder: str, trial_index: int) -> np.random.Generator:
    """Counter-based stream for one trial; disjoint across all indices."""
    counter = [0, trial_index, DECODERS.index(decoder), snr_index]
    return np.random.Generator(np.random.Philox(counter=counter, key=[seed & _MASK64, _PHILOX_SALT]))


def _generate_cell(cfg: SweepConfig, snr_index: int, decoder: str, start: int, stop: int):
    """Transmit batches for trials [start, stop) of one (snr, decoder) cell."""
    c = cfg.constellation_obj()
    pulse = cfg.pulse_obj()
    snr_db = cfg.snr_db_list[snr_index]
    r = snr_to_noise_variance(snr_db, c, pulse)
    pilots = cfg.pilots_for(decoder)
    k_total = cfg.batch_size + len(pilots)
    count = stop - start
    x = np.empty((count, k_total, pulse.n), dtype=np.complex128)
    truth = np.empty((count, k_total), dtype=np.int64)
    for j, trial in enumerate(range(start, stop)):
        rng = _trial_rng(cfg.seed, snr_index, decoder, trial)
        if cfg.true_phase_mode == "uniform":
            phi = rng.uniform(-np.pi, np.pi)
        else:
            phi = cfg.true_phase_rad
        batch = transmit(c, pulse, ChannelParams(phi=phi, r=r, snr_db=snr_db), k_total, pilots, rng)
        x[j] = batch.observations
        truth[j] = batch.truth
    return c, pulse, r, pilots, x, truth


def _map_decode(
    decoder: str,
    x: np.ndarray,
    c: Constellation,
    pulse: PulseVector,
    prior_kappa: complex,
    r: float,
    pilots: Mapping[int, int],
    vb_cfg: VbConfig,
):
    """MAP symbol indices and posteriors for a stack of batches."""
    if decoder == "independent":
        dtft = _dtft_stat(x, pulse.g)
        logw, _ = _exact_log_weights(dtft, np.complex128(prior_kappa), c, pulse.energy, r)
        probs = _softmax(logw)
    elif decoder in ("vb_offline", "em", "vb_uniform"):
        if decoder == "vb_offline":
            kappa0 = prior_kappa
            cfg_run = vb_cfg
        else:
            kappa0 = 0j
            override = 1.0 if decoder == "em" else None
            cfg_run = VbConfig(
                max_iterations=vb_cfg.max_iterations,
                tolerance=vb_cfg.tolerance,
                ratio_override=override,
                track_elbo=False,
            )
        probs, _, _, _, _, _ = _offline_core(x, c, pulse, kappa0, r, cfg_run, pilots)
    elif decoder == "vb_online":
        trials, k_total, _ = x.shape
        dtft = _dtft_stat(x, pulse.g)
        acc = np.zeros(trials, dtype=np.complex128)
        probs = np.empty((trials, k_total, c.order))
        for t in range(k_total):
            _, p_t, _, acc = _online_step_core(
                acc, complex(prior_kappa), dtft[:, t], c, pulse.energy, r, pilots.get(t)
            )
            probs[:, t, :] = p_t
    else:
        raise ValueError(f"unknown decoder {decoder!r}")
    return np.argmax(probs, axis=-1), probs


def _decode_chunk(cfg: SweepConfig, snr_index: int, decoder: str, start: int, stop: int):
    """Correctness matrix over non-pilot positions for one chunk of trials.

    Returns ``(correct, decode_seconds)`` where ``correct`` has shape
    (trials, batch_size): MAP symbol equals the transmitted one at each
    data position.  Pilots are excluded from both the numerator and the
    denominator of the success metric.
    """
    c, pulse, r, pilots, x, truth = _generate_cell(cfg, snr_index, decoder, start, stop)
    t0 = time.perf_counter()
    maps, _ = _map_decode(decoder, x, c, pulse, cfg.prior().kappa, r, pilots, cfg.vb_config())
    elapsed = time.perf_counter() - t0
    data_cols = np.setdiff1d(np.arange(x.shape[1]), np.fromiter(pilots, dtype=np.intp, count=len(pilots)))
    return maps[:, data_cols] == truth[:, data_cols], elapsed


def run_trial(cfg: SweepConfig, snr_db: float, decoder: str, trial_index: int) -> np.ndarray:
    """Per-symbol correctness vector of one seeded trial.

    The trial stream is derived from (seed, snr index, decoder, trial
    index); identical arguments always reproduce the same vector.
    """
    if decoder not in DECODERS:
        raise ValueError(f"unknown decoder {decoder!r}")
    snr_list = list(cfg.snr_db_list)
    if float(snr_db) not in snr_list:
        raise ValueError(f"snr_db {snr_db!r} is not a point of this sweep config")
    snr_index = snr_list.index(float(snr_db))
    correct, _ = _decode_chunk(cfg, snr_index, decoder, trial_index, trial_index + 1)
    return correct[0]


# --------------------------------------------------------------------------
# Sweep aggregation.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CellResult:
    """Aggregated outcome of one (decoder, snr) cell."""

    decoder: str
    snr_db: float
    symbols: int
    successes: int
    success_rate: float
    ci95: float
    time_ms: float


@dataclass(frozen=True)
class SweepResult:
    """All cells of a sweep, sorted by (decoder, snr_db)."""

    cells: Tuple[CellResult, ...]

    def cell(self, decoder: str, snr_db: float) -> CellResult:
        for cell in self.cells:
            if cell.decoder == decoder and cell.snr_db == float(snr_db):
                return cell
        raise KeyError((decoder, snr_db))

    @property
    def decoders(self) -> Tuple[str, ...]:
        return tuple(sorted({cell.decoder for cell in self.cells}))


def _run_task(cfg: SweepConfig, snr_index: int, decoder: str, start: int, stop: int):
    correct, elapsed = _decode_chunk(cfg, snr_index, decoder, start, stop)
    return snr_index, decoder, int(correct.sum()), int(correct.size), elapsed


def _binomial_halfwidth(successes: int, total: int) -> float:
    if total == 0:
        return 0.0
    rate = successes / total
    return 1.96 * np.sqrt(rate * (1.0 - rate) / total)


def run_sweep(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    """Run the full sweep; cells aggregate identically at any worker count.

    Work is split into fixed 1000-trial chunks; aggregation is a plain
    sum of per-chunk counts, so ordering and parallelism cannot change
    the result.  Decoder failure states never abort the sweep: the
    offline decoders report non-convergence through their state and
    still yield MAP symbols.
    """
    tasks = []
    for snr_index in range(len(cfg.snr_db_list)):
        for decoder in cfg.decoders:
            for start in range(0, cfg.trials_per_point, _CHUNK_TRIALS):
                stop = min(start + _CHUNK_TRIALS, cfg.trials_per_point)
                tasks.append((snr_index, decoder, start, stop))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_task, cfg, *task) for task in tasks]
            outcomes = [future.result() for future in futures]
    else:
        outcomes = [_run_task(cfg, *task) for task in tasks]

    successes: Dict[Tuple[str, float], int] = {}
    symbols: Dict[Tuple[str, float], int] = {}
    seconds: Dict[Tuple[str, float], float] = {}
    for snr_index, decoder, good, total, elapsed in outcomes:
        key = (decoder, cfg.snr_db_list[snr_index])
        successes[key] = successes.get(key, 0) + good
        symbols[key] = symbols.get(key, 0) + total
        seconds[key] = seconds.get(key, 0.0) + elapsed

    cells = []
    for decoder, snr_db in sorted(successes):
        good = successes[(decoder, snr_db)]
        total = symbols[(decoder, snr_db)]
        cells.append(
            CellResult(
                decoder=decoder,
                snr_db=snr_db,
                symbols=total,
                successes=good,
                success_rate=good / total,
                ci95=float(_binomial_halfwidth(good, total)),
                time_ms=1000.0 * seconds[(decoder, snr_db)] / cfg.trials_per_point,
            )
        )
    return SweepResult(cells=tuple(cells))


def write_csv(res: SweepResult, path) -> None:
    """Emit the sweep table: one row per (decoder, snr) cell.

    Header ``decoder,snr_db,symbols,successes,success_rate,ci95,time_ms``;
    rows sorted by (decoder, snr_db); floats with six decimals; ``\\n``
    newlines.
    """
    lines = [CSV_HEADER]
    for cell in sorted(res.cells, key=lambda cl: (cl.decoder, cl.snr_db)):
        lines.append(
            f"{cell.decoder},{cell.snr_db:g},{cell.symbols},{cell.successes},"
            f"{cell.success_rate:.6f},{cell.ci95:.6f},{cell.time_ms:.6f}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> SweepResult:
    """Parse a file produced by write_csv back into a SweepResult."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("not a sweep CSV: bad or missing header")
    cells = []
    for line in lines[1:]:
        decoder, snr_db, symbols, successes, rate, ci95, time_ms = line.split(",")
        cells.append(
            CellResult(
                decoder=decoder,
                snr_db=float(snr_db),
                symbols=int(symbols),
                successes=int(successes),
                success_rate=float(rate),
                ci95=float(ci95),
                time_ms=float(time_ms),
            )
        )
    return SweepResult(cells=tuple(cells))
