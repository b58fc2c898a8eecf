"""Reference decoders from the turbo-synchronization literature.

Both are thin parameterizations of the offline VB decoder: the EM
turbo-synchronizer is the zero-prior iteration with the Bessel ratio
clamped to 1 (phase treated as the point estimate angle(kappa)), and the
uniform-prior variant is plain VB with a zero shaping parameter.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

from .circular import VonMises
from .sigmodel import Batch, Constellation, PulseVector
from .vb import VbConfig, VbState, vb_offline

__all__ = ["em_turbo_sync", "vb_uniform_prior"]

_UNIFORM = VonMises(0j)


def em_turbo_sync(
    b: Batch,
    c: Constellation,
    p: PulseVector,
    r: float,
    cfg: Optional[VbConfig] = None,
) -> VbState:
    """EM-based turbo synchronization with pilot support.

    Identical iteration to ``vb_offline`` with a zero prior and the
    ratio forced to 1; ``|kappa|`` is still tracked for reporting, but
    no ELBO trace is produced since the override voids the bound.
    """
    cfg = replace(cfg or VbConfig(), ratio_override=1.0, track_elbo=False)
    return vb_offline(b, c, p, _UNIFORM, r, cfg)


def vb_uniform_prior(
    b: Batch,
    c: Constellation,
    p: PulseVector,
    r: float,
    cfg: Optional[VbConfig] = None,
) -> VbState:
    """Offline VB under a uniform phase prior (zero shaping parameter)."""
    return vb_offline(b, c, p, _UNIFORM, r, cfg or VbConfig())
