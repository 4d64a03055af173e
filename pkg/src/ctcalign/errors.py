"""Exception types shared across the package."""


class FormatError(ValueError):
    """A file does not conform to one of the documented on-disk formats."""


class AlignmentInfeasibleError(Exception):
    """The probability sequence is too short to traverse the transcription.

    Carries the minimal number of time steps an accepting path needs and
    the number of steps actually available.
    """

    def __init__(self, required_steps: int, available_steps: int):
        self.required_steps = required_steps
        self.available_steps = available_steps
        super().__init__(
            f"alignment infeasible: shortest accepting path needs "
            f"{required_steps} steps, only {available_steps} available"
        )


class NumericallyInfeasibleError(Exception):
    """Every token died (all scores -inf); no accepting path has mass."""


class EnumerationLimitError(ValueError):
    """Instance exceeds the exhaustive-enumeration guard."""


class UndefinedMetricError(ValueError):
    """Metric denominator is empty (e.g. empty ground truth)."""
