"""Bayesian symbol and phase inference for a phase-uncertain digital receiver.

A library and CLI simulator for soft decoding over an AWGN channel with
an unknown constant phase rotation: exact single-period decoding under a
von Mises phase prior, offline and online Variational Bayes decoders for
multi-symbol batches, EM turbo-synchronization and uniform-prior
baselines, and a seeded Monte Carlo harness for SNR-sweep comparisons.
"""

from .baselines import em_turbo_sync, vb_uniform_prior
from .circular import (
    PhaseMixture,
    VonMises,
    bessel_ratio,
    log_bessel_i0,
    mixture_resultant,
    vm_circular_variance,
    vm_log_pdf,
    vm_mean,
    vm_sample,
    wrap_angle,
)
from .exact import SymbolPosterior, decode_independent, map_symbol, posterior_single
from .harness import (
    DECODERS,
    CellResult,
    SweepConfig,
    SweepResult,
    default_sweep_config,
    load_config,
    parse_config,
    read_csv,
    run_sweep,
    run_trial,
    write_csv,
)
from .sigmodel import (
    Batch,
    ChannelParams,
    Constellation,
    PulseVector,
    build_pulse,
    make_constellation,
    snr_to_noise_variance,
    transmit,
)
from .vb import (
    OnlineState,
    VbConfig,
    VbState,
    decode_online,
    elbo,
    vb_delta,
    vb_offline,
    vb_online_step,
)

__version__ = "0.1.0"

__all__ = [
    "Batch",
    "CellResult",
    "ChannelParams",
    "Constellation",
    "DECODERS",
    "OnlineState",
    "PhaseMixture",
    "PulseVector",
    "SweepConfig",
    "SweepResult",
    "SymbolPosterior",
    "VbConfig",
    "VbState",
    "VonMises",
    "bessel_ratio",
    "build_pulse",
    "decode_independent",
    "decode_online",
    "default_sweep_config",
    "elbo",
    "em_turbo_sync",
    "load_config",
    "log_bessel_i0",
    "make_constellation",
    "map_symbol",
    "mixture_resultant",
    "parse_config",
    "posterior_single",
    "read_csv",
    "run_sweep",
    "run_trial",
    "snr_to_noise_variance",
    "transmit",
    "vb_delta",
    "vb_offline",
    "vb_online_step",
    "vb_uniform_prior",
    "vm_circular_variance",
    "vm_log_pdf",
    "vm_mean",
    "vm_sample",
    "wrap_angle",
    "write_csv",
]
