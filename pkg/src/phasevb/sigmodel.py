"""Signal model: constellations, pulse/carrier vector, and the AWGN channel.

One symbol period observes ``x = a * g * exp(1j*phi) + w`` where ``a`` is
the transmitted constellation symbol, ``g`` the known modulation vector
built from pulse samples and carrier frequency, ``phi`` an unknown phase
offset constant over the batch, and ``w`` circular complex Gaussian noise
with per-sample variance ``r`` (density proportional to
``exp(-|x - mean|^2 / r)``, i.e. variance ``r/2`` per real dimension).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import isqrt
from typing import Mapping, Optional

import numpy as np

from .circular import wrap_angle

__all__ = [
    "Constellation",
    "PulseVector",
    "ChannelParams",
    "Batch",
    "make_constellation",
    "build_pulse",
    "snr_to_noise_variance",
    "transmit",
]


@dataclass(frozen=True)
class Constellation:
    """Finite symbol alphabet with prior probabilities.

    Invariants: at least two symbols, priors on the simplex, and unit
    average symbol energy sum_m priors[m] |symbols[m]|^2 = 1.
    """

    symbols: np.ndarray
    priors: np.ndarray
    name: str = ""

    def __post_init__(self):
        symbols = np.asarray(self.symbols, dtype=np.complex128)
        priors = np.asarray(self.priors, dtype=np.float64)
        if symbols.ndim != 1 or symbols.size < 2:
            raise ValueError("constellation needs at least 2 symbols")
        if priors.shape != symbols.shape:
            raise ValueError("priors must match symbols in length")
        if np.any(priors < 0.0) or abs(float(priors.sum()) - 1.0) > 1e-12:
            raise ValueError("priors must be non-negative and sum to 1 within 1e-12")
        energy = float(np.sum(priors * np.abs(symbols) ** 2))
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"average symbol energy must be 1, got {energy!r}")
        symbols.setflags(write=False)
        priors.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "priors", priors)

    @property
    def order(self) -> int:
        return self.symbols.size


@dataclass(frozen=True)
class PulseVector:
    """Known modulation vector g_k = s_k * exp(1j*omega*k), k = 1..n."""

    s: np.ndarray
    omega: float
    g: np.ndarray = field(init=False)

    def __post_init__(self):
        s = np.asarray(self.s, dtype=np.float64)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("pulse sequence must be a non-empty 1-D vector")
        if np.any(s <= 0.0) or not np.all(np.isfinite(s)):
            raise ValueError("pulse samples must be positive and finite")
        omega = float(self.omega)
        if not np.isfinite(omega):
            raise ValueError("omega must be finite")
        k = np.arange(1, s.size + 1, dtype=np.float64)
        g = s * np.exp(1j * omega * k)
        s.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "g", g)

    @property
    def n(self) -> int:
        return self.s.size

    @property
    def energy(self) -> float:
        """||g||^2, equal to sum_k s_k^2."""
        return float(np.sum(self.s * self.s))


@dataclass(frozen=True)
class ChannelParams:
    """True phase offset and noise level of the channel.

    ``snr_db`` is a report-only annotation; ``r`` is what the math uses.
    """

    phi: float
    r: float
    snr_db: Optional[float] = None

    def __post_init__(self):
        r = float(self.r)
        if not np.isfinite(r) or r <= 0.0:
            raise ValueError("noise variance r must be positive and finite")
        object.__setattr__(self, "phi", wrap_angle(float(self.phi)))
        object.__setattr__(self, "r", r)


@dataclass(frozen=True)
class Batch:
    """Observations for K symbol periods plus simulation-side truth.

    ``truth`` holds 0-based symbol indices (None outside simulation);
    ``pilots`` maps position -> known symbol index.
    """

    observations: np.ndarray
    truth: Optional[np.ndarray] = None
    pilots: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=np.complex128)
        if obs.ndim != 2:
            raise ValueError("observations must be a K x n complex matrix")
        truth = self.truth
        if truth is not None:
            truth = np.asarray(truth, dtype=np.int64)
            if truth.shape != (obs.shape[0],):
                raise ValueError("truth must hold one label per period")
            truth.setflags(write=False)
        pilots = dict(self.pilots)
        for pos in pilots:
            if not 0 <= pos < obs.shape[0]:
                raise ValueError(f"pilot position {pos} outside batch of length {obs.shape[0]}")
        obs.setflags(write=False)
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "pilots", pilots)

    @property
    def k(self) -> int:
        return self.observations.shape[0]

    @property
    def n(self) -> int:
        return self.observations.shape[1]


def _gray(v: np.ndarray) -> np.ndarray:
    return v ^ (v >> 1)


def make_constellation(kind: str, order: int) -> Constellation:
    """Build a Gray-ordered, unit-energy constellation with uniform priors.

    Parameters
    ----------
    kind : {"psk", "qam"}
        Modulation family.
    order : int
        Alphabet size.  PSK needs order >= 2; QAM a perfect square whose
        side is a power of two (4, 16, 64, ...).

    Returns
    -------
    Constellation
        Named ``f"{kind}{order}"``.  QPSK uses the pi/4-rotated
        convention {e^{j pi/4}, e^{j 3pi/4}, e^{-j 3pi/4}, e^{-j pi/4}}.
    """
    kind = kind.lower()
    priors = np.full(order, 1.0 / order)
    if kind == "psk":
        if order < 2:
            raise ValueError("psk order must be >= 2")
        offset = np.pi / 4.0 if order == 4 else 0.0
        angles = 2.0 * np.pi * np.arange(order) / order + offset
        symbols = np.exp(1j * angles)
    elif kind == "qam":
        side = isqrt(order)
        if order < 4 or side * side != order:
            raise ValueError("qam order must be a perfect square >= 4")
        if side & (side - 1):
            raise ValueError("qam side must be a power of two for Gray ordering")
        levels = 2.0 * np.arange(side) - (side - 1)
        grid = levels[None, :] + 1j * levels[::-1, None]
        # Gray mapping: the symbol at grid cell (row, col) gets the index
        # whose bit halves are the Gray codes of row and col, so symbols
        # one grid step apart always differ in exactly one index bit.
        bits = (side - 1).bit_length()
        rows = _gray(np.arange(side))[:, None]
        cols = _gray(np.arange(side))[None, :]
        symbols = np.empty(order, dtype=np.complex128)
        symbols[((rows << bits) | cols).reshape(-1)] = grid.reshape(-1)
        symbols = symbols / np.sqrt(np.mean(np.abs(symbols) ** 2))
    else:
        raise ValueError(f"unsupported constellation kind {kind!r}")
    return Constellation(symbols=symbols, priors=priors, name=f"{kind}{order}")


def build_pulse(s, omega: float) -> PulseVector:
    """Assemble the modulation vector from pulse samples and carrier frequency."""
    return PulseVector(s=np.asarray(s, dtype=np.float64), omega=float(omega))


def snr_to_noise_variance(snr_db: float, c: Constellation, p: PulseVector) -> float:
    """Noise variance for a target SNR in dB.

    SNR is defined as average received per-sample signal power over r:
    ``r = (sum_m priors[m] |a_m|^2) * (||g||^2 / n) / 10^(snr_db/10)``.
    With a unit-energy constellation and unit pulse this reduces to
    ``r = 10^(-snr_db/10)``.
    """
    snr_db = float(snr_db)
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    mean_energy = float(np.sum(c.priors * np.abs(c.symbols) ** 2))
    return mean_energy * (p.energy / p.n) / 10.0 ** (snr_db / 10.0)


def transmit(
    c: Constellation,
    p: PulseVector,
    ch: ChannelParams,
    k: int,
    pilots: Optional[Mapping[int, int]] = None,
    rng: Optional[np.random.Generator] = None,
) -> Batch:
    """Generate one batch of K noisy, phase-rotated symbol periods.

    Labels are drawn from the constellation priors except at pilot
    positions, which carry their fixed known symbol.  Each row is
    ``(a_label * g + w) * exp(1j*phi)`` with i.i.d. circular complex
    Gaussian noise of per-sample variance ``r``; rotating signal and
    noise together leaves the noise law unchanged and makes two batches
    generated from the same seed at phases ``phi`` and ``phi + delta``
    differ exactly by the factor ``exp(1j*delta)``.

    Parameters
    ----------
    c, p, ch : Constellation, PulseVector, ChannelParams
        Model pieces; ``ch.r`` is the per-sample noise variance.
    k : int
        Batch length, >= 1.
    pilots : mapping, optional
        position -> symbol index for known pilot symbols.
    rng : numpy.random.Generator
        Seeded stream; consumed deterministically (labels, then noise).
    """
    if k < 1:
        raise ValueError("batch length k must be >= 1")
    if rng is None:
        raise ValueError("transmit requires a seeded random generator")
    pilots = dict(pilots or {})
    for pos, sym in pilots.items():
        if not 0 <= pos < k:
            raise ValueError(f"pilot position {pos} outside batch of length {k}")
        if not 0 <= sym < c.order:
            raise ValueError(f"pilot symbol index {sym} outside constellation")

    # Inverse-CDF draw keeps the stream layout independent of numpy's
    # choice() internals; one uniform per period even at pilot slots.
    u = rng.random(k)
    edges = np.cumsum(c.priors)
    labels = np.minimum(np.searchsorted(edges, u, side="right"), c.order - 1)
    for pos, sym in pilots.items():
        labels[pos] = sym

    d = rng.standard_normal((k, p.n, 2))
    noise = (d[..., 0] + 1j * d[..., 1]) * np.sqrt(ch.r / 2.0)
    rotation = np.exp(1j * ch.phi)
    x = (c.symbols[labels][:, None] * p.g[None, :] + noise) * rotation
    return Batch(observations=x, truth=labels, pilots=pilots)
