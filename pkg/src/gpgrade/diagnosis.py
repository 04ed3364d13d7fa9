"""Map regression outputs to clinical referral decisions.

Two rules: binarize the continuous grade at a threshold (default 1.5),
then flip negatives whose posterior standard deviation is strictly above
a second threshold (default 0.84).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import InputError
from .gp import Prediction

GRADE_THRESHOLD_DEFAULT = 1.5
STD_THRESHOLD_DEFAULT = 0.84


@dataclass(frozen=True)
class Decision:
    """Binary referral decision for one sample."""

    referable: bool
    flipped: bool
    mean: float
    std: float


def grade_to_referable(grade: int) -> bool:
    """True for grades 2..4 (referable), False for 0 and 1."""
    if isinstance(grade, bool) or int(grade) != grade:
        raise InputError(f"grade must be an integer, got {grade!r}")
    grade = int(grade)
    if grade < 0 or grade > 4:
        raise InputError(f"grade must be in 0..4, got {grade}")
    return grade >= 2


def binarize(pred: Prediction, grade_threshold: float = GRADE_THRESHOLD_DEFAULT) -> Decision:
    """Referable iff the posterior mean is >= the grade threshold."""
    if pred.std < 0:
        raise InputError(f"prediction std must be >= 0, got {pred.std}")
    return Decision(
        referable=pred.mean >= grade_threshold,
        flipped=False,
        mean=pred.mean,
        std=pred.std,
    )


def apply_uncertainty_flip(
    d: Decision, std_threshold: float = STD_THRESHOLD_DEFAULT
) -> Decision:
    """Flip a negative decision to positive when std is strictly above the threshold.

    Positives and already-flipped decisions pass through unchanged, so the
    rule is idempotent.
    """
    if not d.referable and d.std > std_threshold:
        return replace(d, referable=True, flipped=True)
    return d
