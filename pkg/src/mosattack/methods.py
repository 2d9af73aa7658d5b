"""Detector + reconstructor pairings evaluated by the attack and the harness."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DetectionResult
from .hard_detect import DEFAULT_HARD, HARD_METHODS, HardDetectorConfig, detect
from .soft_recon import DEFAULT_SOFT, SOFT_METHODS, SoftConfig, esqr, mos, sureal, zrec

# Registry order is part of the seeding contract: new methods go at the end.
METHOD_NAMES = HARD_METHODS + SOFT_METHODS


def method_index(name: str) -> int:
    return METHOD_NAMES.index(canonical_name(name))


def canonical_name(name: str) -> str:
    for known in METHOD_NAMES:
        if known.lower() == str(name).lower():
            return known
    raise ValueError(f"unknown method {name!r}; choose from {', '.join(METHOD_NAMES)}")


@dataclass(frozen=True)
class MethodUnderTest:
    """A hard detector followed by plain MOS, or a soft reconstructor on the whole matrix."""

    name: str
    hard: HardDetectorConfig = field(default=DEFAULT_HARD)
    soft: SoftConfig = field(default=DEFAULT_SOFT)

    def __post_init__(self):
        object.__setattr__(self, "name", canonical_name(self.name))

    @property
    def kind(self) -> str:
        return "hard" if self.name in HARD_METHODS else "soft"

    def __call__(self, m: np.ndarray) -> DetectionResult:
        if self.kind == "hard":
            mask = detect(self.name, m, self.hard)
            return DetectionResult("hard", mos(m, mask), inlier_mask=mask)
        if self.name == "SUREAL":
            fit = sureal(m, self.soft)
            return DetectionResult(
                "soft", fit.scores, row_weights=fit.row_weights, converged=fit.converged,
                extras={"iterations": fit.iterations},
            )
        if self.name == "ESQR":
            fit = esqr(m, self.soft)
            return DetectionResult(
                "soft", fit.scores, row_weights=fit.row_weights, cell_weights=fit.cell_weights
            )
        fit = zrec(m, self.soft)
        return DetectionResult("soft", fit.scores, row_weights=fit.row_weights)
