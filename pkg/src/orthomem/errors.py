"""Exception types shared across the package.

The CLI maps these onto its stable exit codes: ValueError-family errors
(including ConfigError and FormatError) exit 2, OSError exits 3, and
RankDeficientError exits 4.
"""


class RankDeficientError(ValueError):
    """A computation required a full-rank matrix and did not get one."""


class UndefinedMetricError(ValueError):
    """A metric is undefined for the given input (e.g. hd95 of an empty mask)."""


class ConfigError(ValueError):
    """An experiment configuration failed strict validation."""


class FormatError(ValueError):
    """A binary or text input did not match its declared format."""
