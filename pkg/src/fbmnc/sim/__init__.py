"""Exact fGn synthesis and Monte-Carlo validation of the analytical bounds."""

from .fgn import BLOCK, FgnSynthesizer, block_rng, circulant_eigenvalues
from .montecarlo import (
    DelaySample,
    SamplePath,
    ViolationEstimate,
    clopper_pearson,
    envelope_violation_mc,
    generate_fgn,
    pointwise_violation_mc,
    reich_backlog,
    samplepath_violation_mc,
    tandem_delay_mc,
)

__all__ = [
    "BLOCK",
    "DelaySample",
    "FgnSynthesizer",
    "SamplePath",
    "ViolationEstimate",
    "block_rng",
    "circulant_eigenvalues",
    "clopper_pearson",
    "envelope_violation_mc",
    "generate_fgn",
    "pointwise_violation_mc",
    "reich_backlog",
    "samplepath_violation_mc",
    "tandem_delay_mc",
]
