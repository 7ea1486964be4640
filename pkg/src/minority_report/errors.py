"""Exception types shared across the package.

The CLI maps these onto exit codes: InputError -> 2, NumericError -> 3,
OSError -> 4. Everything else is a plain bug and surfaces as a traceback.
"""


class MinorityReportError(Exception):
    """Base class for package errors."""


class InputError(MinorityReportError):
    """Bad user input: corpus, config, checkpoint, or infeasible data."""


class CheckpointError(InputError):
    """Checkpoint file is malformed, truncated, or has the wrong version."""


class NumericError(MinorityReportError):
    """A non-finite parameter or statistic was produced during training."""


class PipelineError(MinorityReportError):
    """Wraps a stage failure with the stage name attached."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
