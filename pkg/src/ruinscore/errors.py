"""Exception hierarchy. Every failure the engine raises derives from RuinscoreError."""

from __future__ import annotations


class RuinscoreError(Exception):
    """Base class for all ruinscore failures."""

    # set by the CLI when a failure is tied to one manifest entry
    image_id: str | None = None


class MissingFile(RuinscoreError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"file not found: {path}")


class SchemaViolation(RuinscoreError):
    def __init__(self, field: str, detail: str = ""):
        self.field = field
        msg = f"schema violation at {field}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class DuplicateImageId(RuinscoreError):
    def __init__(self, image_id: str):
        self.duplicate_id = image_id
        super().__init__(f"duplicate image id: {image_id!r}")


class BadLine(RuinscoreError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class UnknownClass(RuinscoreError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown class name: {name!r}")


class BackendUnavailable(RuinscoreError):
    pass


class MissingEvidence(RuinscoreError):
    def __init__(self, task: str, detail: str = ""):
        self.task = task
        msg = f"no evidence source for task {task!r}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ProcessExited(RuinscoreError):
    def __init__(self, returncode: int | None):
        self.returncode = returncode
        super().__init__(f"backend process exited with code {returncode}")


class ProtocolViolation(RuinscoreError):
    def __init__(self, detail: str):
        self.detail = detail
        super().__init__(f"wire protocol violation: {detail}")


class Timeout(RuinscoreError):
    def __init__(self, seconds: float):
        self.seconds = seconds
        super().__init__(f"backend did not answer within {seconds} s")


class MissingMeta(RuinscoreError):
    def __init__(self, mode: str):
        self.mode = mode
        super().__init__(f"decision mode {mode!r} requires meta-model probabilities")


class DimensionMismatch(RuinscoreError):
    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"expected feature dimension {expected}, got {got}")


class NonFiniteLoss(RuinscoreError):
    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(
            f"loss became non-finite at iteration {iteration} "
            "(learning rate is probably too large)"
        )


class DegenerateData(RuinscoreError):
    pass


class EmptyMatrix(RuinscoreError):
    def __init__(self) -> None:
        super().__init__("confusion matrix has no entries")


class NoGroundTruth(RuinscoreError):
    def __init__(self) -> None:
        super().__init__("no assessment has ground truth in the manifest")


class IoFailure(RuinscoreError):
    def __init__(self, detail: str):
        super().__init__(detail)
