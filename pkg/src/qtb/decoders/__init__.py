"""Decoders mapping a syndrome to a correction, all sharing :class:`Decoder`.

Selection by name: ``"mwpm"``, ``"uf"``, ``"bp"``, ``"guided-mwpm"``.
Erasure flags on the error state are not consulted by any of them.
"""

from __future__ import annotations

import functools

from ..lattice import CodeLayout, Syndrome
from .base import BOUNDARY, DecodeResult, Decoder, DecodingGraph
from .bp import BeliefPropagationDecoder, belief_propagation
from .mwpm import GuidedMWPMDecoder, GuideTable, MWPMDecoder, min_weight_boundary_matching
from .uf import UnionFindDecoder

DECODER_NAMES = ("mwpm", "uf", "bp", "guided-mwpm")

__all__ = [
    "BOUNDARY",
    "DECODER_NAMES",
    "BeliefPropagationDecoder",
    "DecodeResult",
    "Decoder",
    "DecodingGraph",
    "GuideTable",
    "GuidedMWPMDecoder",
    "MWPMDecoder",
    "UnionFindDecoder",
    "belief_propagation",
    "decode_bp",
    "decode_guided_mwpm",
    "decode_mwpm",
    "decode_uf",
    "make_decoder",
    "min_weight_boundary_matching",
]


def make_decoder(
    name: str,
    layout: CodeLayout,
    *,
    guide: GuideTable | None = None,
    prior: float = 0.05,
    max_iters: int = 50,
) -> Decoder:
    if name == "mwpm":
        return MWPMDecoder(layout)
    if name == "uf":
        return UnionFindDecoder(layout)
    if name == "bp":
        return BeliefPropagationDecoder(layout, prior=prior, max_iters=max_iters)
    if name == "guided-mwpm":
        return GuidedMWPMDecoder(layout, guide)
    raise ValueError(f"unknown decoder {name!r}; expected one of {', '.join(DECODER_NAMES)}")


@functools.lru_cache(maxsize=None)
def _shared(name: str, layout: CodeLayout) -> Decoder:
    return make_decoder(name, layout)


def decode_mwpm(layout: CodeLayout, syndrome: Syndrome) -> DecodeResult:
    return _shared("mwpm", layout).decode(syndrome)


def decode_uf(layout: CodeLayout, syndrome: Syndrome) -> DecodeResult:
    return _shared("uf", layout).decode(syndrome)


def decode_bp(
    layout: CodeLayout, syndrome: Syndrome, prior: float, max_iters: int = 50
) -> DecodeResult:
    return BeliefPropagationDecoder(layout, prior=prior, max_iters=max_iters).decode(syndrome)


def decode_guided_mwpm(layout: CodeLayout, syndrome: Syndrome, guide: GuideTable) -> DecodeResult:
    return GuidedMWPMDecoder(layout, guide).decode(syndrome)
