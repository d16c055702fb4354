"""Multi-dimensional anomaly-based intrusion detection."""

from ._mdids import (
    FormatVersionError,
    IncompleteMessageError,
    IntegrityError,
    MdidsError,
    Model,
    ParseError,
    TrainingError,
    detect,
    evaluate,
    feedback,
    fragment,
    pca_report,
    reassemble,
    simulate,
    train,
)

__all__ = [
    "FormatVersionError",
    "IncompleteMessageError",
    "IntegrityError",
    "MdidsError",
    "Model",
    "ParseError",
    "TrainingError",
    "detect",
    "evaluate",
    "feedback",
    "fragment",
    "pca_report",
    "reassemble",
    "simulate",
    "train",
]
