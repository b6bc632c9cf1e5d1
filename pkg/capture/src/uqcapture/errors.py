class UqcaptureError(Exception):
    """Base class for capture-harness errors."""


class ModelLoadError(UqcaptureError):
    pass


class CaptureConfigError(UqcaptureError):
    pass


class DatasetFormatError(UqcaptureError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class JudgeUnavailable(UqcaptureError):
    pass
