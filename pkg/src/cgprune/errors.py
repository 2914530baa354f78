"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError and TrainingError are
usage-level problems (exit 2), FormatError/AlignmentError are malformed or
misaligned input files (exit 3), NumericError is a numeric abort (exit 4).
"""


class CgpruneError(Exception):
    """Base class for all toolkit errors."""


class FormatError(CgpruneError):
    """Malformed input file: bad JSON line, bad magic, bad version, truncation."""


class DuplicateEdgeError(FormatError):
    """A (caller, callee, offset) triple appeared twice in one graph."""


class AlignmentError(CgpruneError):
    """Edge-ordinal-aligned data does not match the graph it is paired with."""


class ConfigError(CgpruneError):
    """Invalid configuration value or flag combination."""


class TrainingError(CgpruneError):
    """Training cannot proceed (empty dataset, unlabeled edges, ...)."""


class NumericError(CgpruneError):
    """Non-finite value encountered where finiteness is an invariant."""
