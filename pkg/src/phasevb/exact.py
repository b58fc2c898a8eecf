"""Exact single-symbol-period inference with a von Mises phase prior.

For one observed period ``x`` the symbol posterior and the exact phase
posterior are available in closed form.  Writing ``D = g^H x`` (a DTFT
of the incoming samples at the carrier frequency), each candidate
symbol ``a_m`` gets a shaping parameter

    kappa_m = kappa0 + (2/r) * conj(a_m) * D

and an unnormalized log posterior weight

    log w_m = log alpha_m - |a_m|^2 ||g||^2 / r + log I0(|kappa_m|).

The phase posterior is the mixture sum_m p_m VonMises(kappa_m).  All
weight arithmetic stays in the log domain with max-subtraction because
I0(|kappa_m|) overflows at the magnitudes realistic batches produce.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .circular import PhaseMixture, VonMises, _log_i0
from .sigmodel import Batch, Constellation, PulseVector

__all__ = [
    "SymbolPosterior",
    "posterior_single",
    "map_symbol",
    "decode_independent",
]


@dataclass(frozen=True)
class SymbolPosterior:
    """Probability vector over constellation symbols for one period.

    ``probs`` is the softmax of ``log_weights``; the unnormalized log
    weights are kept for diagnostics.
    """

    probs: np.ndarray
    log_weights: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        logw = np.asarray(self.log_weights, dtype=np.float64)
        if probs.ndim != 1 or probs.shape != logw.shape:
            raise ValueError("probs and log_weights must be equal-length vectors")
        if np.any(probs < 0.0) or abs(float(probs.sum()) - 1.0) > 1e-12:
            raise ValueError("probs must be non-negative and sum to 1 within 1e-12")
        probs.setflags(write=False)
        logw.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "log_weights", logw)


def _dtft_stat(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """g^H x = sum_k s_k x_k exp(-1j*omega*k) along the last axis."""
    return (np.asarray(x) * np.conj(g)).sum(axis=-1)


def _softmax(logw: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logw - logw.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _exact_log_weights(dtft, kappa0, c: Constellation, pulse_energy: float, r: float):
    """Per-symbol shaping parameters and log weights for any batch shape.

    ``dtft`` has shape (...,), ``kappa0`` broadcasts against it; returns
    ``(log_weights, kappas)`` of shape (..., M).
    """
    dtft = np.asarray(dtft, dtype=np.complex128)
    scaled = (2.0 / r) * dtft
    kappas = np.asarray(kappa0)[..., None] + np.conj(c.symbols) * scaled[..., None]
    logw = (
        np.log(c.priors)
        - (np.abs(c.symbols) ** 2) * (pulse_energy / r)
        + _log_i0(np.abs(kappas))
    )
    return logw, kappas


def _indicator(order: int, index: int) -> np.ndarray:
    p = np.zeros(order)
    p[index] = 1.0
    return p


def _pilot_posterior(order: int, index: int) -> SymbolPosterior:
    logw = np.full(order, -np.inf)
    logw[index] = 0.0
    return SymbolPosterior(probs=_indicator(order, index), log_weights=logw)


def posterior_single(x, c: Constellation, p: PulseVector, prior: VonMises, r: float):
    """Exact symbol posterior and phase posterior for one symbol period.

    Parameters
    ----------
    x : array_like
        Length-n complex observation for one period.
    c, p : Constellation, PulseVector
        Alphabet and modulation vector.
    prior : VonMises
        Phase prior; ``prior.kappa = 0`` is the uniform-prior case, in
        which the weights depend on each symbol only through its
        magnitude (the origin of phase ambiguity for PSK/QAM rings).
    r : float
        Per-sample noise variance, > 0.

    Returns
    -------
    (SymbolPosterior, PhaseMixture)
        The phase mixture has the posterior probabilities as weights and
        one VonMises(kappa_m) component per symbol.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (p.n,):
        raise ValueError(f"observation must have length {p.n}, got shape {x.shape}")
    if not r > 0.0:
        raise ValueError("noise variance r must be positive")
    logw, kappas = _exact_log_weights(_dtft_stat(x, p.g), prior.kappa, c, p.energy, r)
    probs = _softmax(logw)
    posterior = SymbolPosterior(probs=probs, log_weights=logw)
    mixture = PhaseMixture(weights=probs, components=tuple(VonMises(k) for k in kappas))
    return posterior, mixture


def map_symbol(sp: SymbolPosterior) -> int:
    """MAP symbol index (0-based); ties resolve to the lowest index."""
    return int(np.argmax(sp.probs))


def decode_independent(
    b: Batch, c: Constellation, p: PulseVector, prior: VonMises, r: float
) -> List[SymbolPosterior]:
    """Decode each period independently under the same fixed phase prior.

    Pilot positions return the degenerate posterior on their known
    symbol; no information flows between periods.
    """
    if not r > 0.0:
        raise ValueError("noise variance r must be positive")
    if b.k == 0:
        return []
    if b.n != p.n:
        raise ValueError("batch sample count does not match pulse length")
    logw, _ = _exact_log_weights(
        _dtft_stat(b.observations, p.g), prior.kappa, c, p.energy, r
    )
    probs = _softmax(logw)
    out: List[SymbolPosterior] = []
    for i in range(b.k):
        if i in b.pilots:
            out.append(_pilot_posterior(c.order, b.pilots[i]))
        else:
            out.append(SymbolPosterior(probs=probs[i], log_weights=logw[i]))
    return out
