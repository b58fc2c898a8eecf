"""Offline and online Variational Bayes decoders for multi-symbol batches.

A batch of K periods with one shared unknown phase has an exact posterior
that is a mixture of M^K von Mises components, which is intractable.  The
mean-field approximation keeps one von Mises factor for the phase and one
categorical factor per symbol and alternates their closed-form updates:

    kappa  <- kappa0 + (2/r) * sum_i conj(a_hat_i) * (g^H x_i)
    log p_im <- log alpha_m - |a_m|^2 ||g||^2 / r + (2/r) * delta_im

with ``a_hat_i = sum_m p_im a_m`` the soft symbol mean and
``delta_im = Re{conj(a_m) (g^H x_i) e^{-j angle(kappa)}} * rho(|kappa|)``
the expected phase-aligned correlation (``rho = I1/I0``).  Forcing
``rho = 1`` with a zero prior recovers the EM turbo-synchronization
update; a zero prior alone is the uniform-prior variant.

The online decoder processes periods sequentially.  After each exact
single-period step the mixture phase posterior is conflated back into a
single von Mises whose shaping parameter is the running sum above, which
then acts as the prior for the next period.

Both decoders accumulate the phase statistic with an in-order left fold
(``cumsum``) of per-period scaled terms, so the offline batch update and
the online recursion produce bit-identical parameters on identical soft
symbols (e.g. all-pilot batches).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .circular import PhaseMixture, VonMises, _log_i0, _ratio, bessel_ratio
from .exact import (
    SymbolPosterior,
    _dtft_stat,
    _exact_log_weights,
    _softmax,
)
from .sigmodel import Batch, Constellation, PulseVector

__all__ = [
    "VbConfig",
    "VbState",
    "OnlineState",
    "vb_delta",
    "vb_offline",
    "vb_online_step",
    "decode_online",
    "elbo",
]

_LN_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class VbConfig:
    """Iteration controls for the offline decoders.

    ``ratio_override`` forces the Bessel ratio to a constant (1.0 gives
    the EM reduction); when set, the ELBO trace is omitted because the
    override invalidates the bound's coordinate-ascent guarantee.
    """

    max_iterations: int = 100
    tolerance: float = 1e-8
    ratio_override: Optional[float] = None
    track_elbo: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.tolerance > 0.0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class VbState:
    """Result of an offline decode.

    ``kappa`` is the final phase VB-marginal, ``iteration`` the number of
    sweeps run, and ``converged`` False when the sweep limit was hit
    before the maximum symbol-probability change fell under tolerance.
    """

    kappa: VonMises
    symbol_posteriors: List[SymbolPosterior]
    iteration: int
    elbo_trace: List[float]
    converged: bool


@dataclass(frozen=True)
class OnlineState:
    """Running state of the sequential decoder.

    ``kappa_hat = kappa0 + acc`` where ``acc`` is the left-fold sum of
    the scaled per-period statistics, so at ``t = 0`` the state is
    exactly the configured prior.
    """

    kappa0: complex
    acc: complex = 0j
    t: int = 0

    @classmethod
    def initial(cls, prior: VonMises) -> "OnlineState":
        return cls(kappa0=prior.kappa)

    @property
    def kappa_hat(self) -> complex:
        return self.kappa0 + self.acc


def vb_delta(x_i, a_m: complex, g: PulseVector, kappa: complex, r: float) -> float:
    """Expected phase-aligned correlation of one period with symbol a_m.

    Returns ``Re{conj(a_m) (g^H x_i) e^{-j angle(kappa)}} * rho(|kappa|)``
    under the current phase marginal VonMises(kappa); zero when
    ``kappa = 0`` since rho(0) = 0.
    """
    if not r > 0.0:
        raise ValueError("noise variance r must be positive")
    x_i = np.asarray(x_i, dtype=np.complex128)
    if x_i.shape != (g.n,):
        raise ValueError(f"observation must have length {g.n}")
    kappa = complex(kappa)
    z = complex(_dtft_stat(x_i, g.g)) * np.exp(-1j * np.angle(kappa))
    return float((np.conj(a_m) * z).real * bessel_ratio(abs(kappa)))


def _pilot_arrays(batch_len: int, pilots, order: int):
    positions = np.array(sorted(pilots), dtype=np.intp)
    symbols = np.array([pilots[p] for p in positions], dtype=np.intp)
    probs = np.zeros((positions.size, order))
    probs[np.arange(positions.size), symbols] = 1.0
    logw = np.full((positions.size, order), -np.inf)
    logw[np.arange(positions.size), symbols] = 0.0
    return positions, probs, logw


def _label_log_prior(batch_len: int, pilots, c: Constellation) -> np.ndarray:
    """Per-position label log-prior; pilots carry a degenerate prior."""
    with np.errstate(divide="ignore"):
        out = np.tile(np.log(c.priors), (batch_len, 1))
        for pos, sym in pilots.items():
            row = np.full(c.order, -np.inf)
            row[sym] = 0.0
            out[pos] = row
    return out


def _elbo_core(
    dtft: np.ndarray,
    sq_norms: np.ndarray,
    probs: np.ndarray,
    label_logprior: np.ndarray,
    kappa0: complex,
    q_kappa: complex,
    c: Constellation,
    pulse_energy: float,
    n: int,
    r: float,
) -> float:
    sym = c.symbols
    mag = abs(q_kappa)
    rho = float(_ratio(np.array([mag]))[0])
    phasor = np.exp(-1j * np.angle(q_kappa))
    z = dtft * phasor
    delta = (z.real[:, None] * sym.real + z.imag[:, None] * sym.imag) * rho
    quad = sq_norms[:, None] + (np.abs(sym) ** 2) * pulse_energy - 2.0 * delta
    e_lik = float(np.sum(probs * (-n * np.log(np.pi * r) - quad / r)))
    with np.errstate(invalid="ignore"):
        e_labels = float(np.sum(np.where(probs > 0.0, probs * label_logprior, 0.0)))
    log_i0_prior = float(_log_i0(np.array([abs(kappa0)]))[0])
    log_i0_q = float(_log_i0(np.array([mag]))[0])
    e_prior_phase = float(rho * (kappa0 * phasor).real) - (_LN_2PI + log_i0_prior)
    h_phase = (_LN_2PI + log_i0_q) - mag * rho
    with np.errstate(divide="ignore", invalid="ignore"):
        h_labels = -float(np.sum(np.where(probs > 0.0, probs * np.log(probs), 0.0)))
    return float(e_lik + e_labels + e_prior_phase + h_phase + h_labels)


def elbo(
    b: Batch,
    c: Constellation,
    p: PulseVector,
    prior: VonMises,
    r: float,
    q_kappa: complex,
    q_symbols: List[SymbolPosterior],
) -> float:
    """Evidence lower bound of a factorized posterior on a batch.

    ``E_q[log f(x, labels, phi)] + H(q)`` for the approximation with
    phase factor VonMises(q_kappa) and the given symbol posteriors.  A
    lower bound on the exact log-evidence; coordinate-ascent sweeps of
    the offline decoder never decrease it.
    """
    if len(q_symbols) != b.k:
        raise ValueError("need one symbol posterior per period")
    if not r > 0.0:
        raise ValueError("noise variance r must be positive")
    if b.k == 0:
        probs = np.zeros((0, c.order))
        label_logprior = np.zeros((0, c.order))
        dtft = np.zeros(0, dtype=np.complex128)
        sq_norms = np.zeros(0)
    else:
        probs = np.stack([q.probs for q in q_symbols])
        label_logprior = _label_log_prior(b.k, b.pilots, c)
        dtft = _dtft_stat(b.observations, p.g)
        sq_norms = np.sum(np.abs(b.observations) ** 2, axis=-1)
    return _elbo_core(
        dtft, sq_norms, probs, label_logprior,
        complex(prior.kappa), complex(q_kappa), c, p.energy, p.n, r,
    )


def _offline_core(
    X: np.ndarray,
    c: Constellation,
    p: PulseVector,
    kappa0: complex,
    r: float,
    cfg: VbConfig,
    pilots,
):
    """Batched offline VB over a stack of trials.

    ``X`` has shape (T, K, n); every trial shares the same pilot layout.
    Trials iterate independently: a trial that reaches tolerance is
    frozen and never touched again, so results are identical no matter
    how trials are grouped into batches.
    """
    T, K, n = X.shape
    sym = c.symbols
    energy = p.energy
    dtft = _dtft_stat(X, p.g)
    with np.errstate(divide="ignore"):
        base = np.log(c.priors) - (np.abs(sym) ** 2) * (energy / r)

    pilot_pos, pilot_probs, pilot_logw = _pilot_arrays(K, pilots, c.order)
    has_pilots = pilot_pos.size > 0

    logw, _ = _exact_log_weights(dtft, np.complex128(kappa0), c, energy, r)
    probs = _softmax(logw)
    if has_pilots:
        probs[:, pilot_pos, :] = pilot_probs[None]
        logw[:, pilot_pos, :] = pilot_logw[None]

    kappa = np.full(T, complex(kappa0), dtype=np.complex128)
    iterations = np.zeros(T, dtype=np.int64)
    converged = np.zeros(T, dtype=bool)

    track = cfg.track_elbo and cfg.ratio_override is None and T == 1
    trace: List[float] = []
    if track:
        sq_norms = np.sum(np.abs(X[0]) ** 2, axis=-1)
        label_logprior = _label_log_prior(K, pilots, c)

    scale = 2.0 / r
    active = np.arange(T)
    for it in range(1, cfg.max_iterations + 1):
        if active.size == 0:
            break
        d_a = dtft[active]
        p_a = probs[active]

        a_hat = (p_a * sym).sum(axis=-1)
        contrib = scale * (np.conj(a_hat) * d_a)
        kap = kappa0 + np.cumsum(contrib, axis=1)[:, -1]

        mag = np.abs(kap)
        if cfg.ratio_override is None:
            rho = _ratio(mag)
        else:
            rho = np.full(mag.shape, float(cfg.ratio_override))
        z = d_a * np.exp(-1j * np.angle(kap))[:, None]
        delta = z.real[:, :, None] * sym.real + z.imag[:, :, None] * sym.imag
        new_logw = base + (scale * rho)[:, None, None] * delta
        p_new = _softmax(new_logw)
        if has_pilots:
            p_new[:, pilot_pos, :] = pilot_probs[None]
            new_logw[:, pilot_pos, :] = pilot_logw[None]

        dp = np.abs(p_new - p_a).max(axis=(1, 2))
        probs[active] = p_new
        logw[active] = new_logw
        kappa[active] = kap
        iterations[active] = it
        if track:
            trace.append(
                _elbo_core(
                    dtft[0], sq_norms, probs[0], label_logprior,
                    complex(kappa0), complex(kappa[0]), c, energy, n, r,
                )
            )
        done = dp < cfg.tolerance
        converged[active[done]] = True
        active = active[~done]

    return probs, logw, kappa, iterations, converged, trace


def vb_offline(
    b: Batch,
    c: Constellation,
    p: PulseVector,
    prior: VonMises,
    r: float,
    cfg: Optional[VbConfig] = None,
) -> VbState:
    """Offline (batch) VB decode of a multi-symbol batch.

    Symbol posteriors are initialized by independent exact decoding
    under the prior, then phase and symbol factors alternate until the
    largest symbol-probability change falls below ``cfg.tolerance`` or
    ``cfg.max_iterations`` sweeps have run (reported, not raised, via
    ``VbState.converged``).  Pilot positions are held at their indicator
    in every sweep.
    """
    cfg = cfg or VbConfig()
    if not r > 0.0:
        raise ValueError("noise variance r must be positive")
    if b.n != p.n:
        raise ValueError("batch sample count does not match pulse length")
    probs, logw, kappa, iterations, converged, trace = _offline_core(
        b.observations[None], c, p, complex(prior.kappa), r, cfg, b.pilots
    )
    posteriors = [
        SymbolPosterior(probs=probs[0, i], log_weights=logw[0, i]) for i in range(b.k)
    ]
    return VbState(
        kappa=VonMises(complex(kappa[0])),
        symbol_posteriors=posteriors,
        iteration=int(iterations[0]),
        elbo_trace=trace,
        converged=bool(converged[0]),
    )


def _online_step_core(acc, kappa0, dtft_t, c, pulse_energy, r, pilot_sym=None):
    """One sequential step on arrays of any shared batch shape.

    Returns (log_weights, probs, kappas, acc_new); with a pilot symbol
    the posterior is the indicator and the conflation uses the pilot
    symbol exactly.
    """
    kappa_hat = kappa0 + acc
    logw, kappas = _exact_log_weights(dtft_t, kappa_hat, c, pulse_energy, r)
    if pilot_sym is None:
        probs = _softmax(logw)
    else:
        probs = np.zeros_like(logw)
        probs[..., pilot_sym] = 1.0
        logw = np.full_like(logw, -np.inf)
        logw[..., pilot_sym] = 0.0
    a_hat = (probs * c.symbols).sum(axis=-1)
    # Same product grouping as the offline kappa update so both paths
    # accumulate bit-identical statistics.
    acc_new = acc + (2.0 / r) * (np.conj(a_hat) * dtft_t)
    return logw, probs, kappas, acc_new


def vb_online_step(
    st: OnlineState,
    x_t,
    c: Constellation,
    p: PulseVector,
    r: float,
    pilot_index: Optional[int] = None,
) -> Tuple[OnlineState, SymbolPosterior, PhaseMixture]:
    """Consume one period: exact step under the running prior, then conflate.

    The exact step is ``posterior_single`` with prior
    VonMises(st.kappa_hat); the returned mixture is the pre-conflation
    phase posterior.  Conflation folds the soft symbol mean back into
    the running shaping parameter, which becomes the next prior.
    """
    if not r > 0.0:
        raise ValueError("noise variance r must be positive")
    x_t = np.asarray(x_t, dtype=np.complex128)
    if x_t.shape != (p.n,):
        raise ValueError(f"observation must have length {p.n}, got shape {x_t.shape}")
    # Shape-(1,) arrays keep every product on the vectorized ufunc path,
    # bit-identical to the batched decoding cores.
    dtft_t = np.atleast_1d(_dtft_stat(x_t, p.g))
    acc = np.array([st.acc], dtype=np.complex128)
    logw, probs, kappas, acc_new = _online_step_core(
        acc, complex(st.kappa0), dtft_t, c, p.energy, r, pilot_index
    )
    posterior = SymbolPosterior(probs=probs[0], log_weights=logw[0])
    mixture = PhaseMixture(
        weights=probs[0], components=tuple(VonMises(k) for k in kappas[0])
    )
    state = OnlineState(kappa0=st.kappa0, acc=complex(acc_new[0]), t=st.t + 1)
    return state, posterior, mixture


def decode_online(
    b: Batch,
    c: Constellation,
    p: PulseVector,
    prior: VonMises,
    r: float,
) -> Tuple[List[SymbolPosterior], OnlineState]:
    """Run the online decoder over a whole batch in period order."""
    state = OnlineState.initial(prior)
    posteriors: List[SymbolPosterior] = []
    for i in range(b.k):
        state, posterior, _ = vb_online_step(
            state, b.observations[i], c, p, r, pilot_index=b.pilots.get(i)
        )
        posteriors.append(posterior)
    return posteriors, state
