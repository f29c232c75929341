"""Exception types shared across the toolkit.

Every error that a caller is expected to catch and act on gets its own
class; plumbing failures (bad paths, broken JSON) reuse the stdlib
exceptions where those are unambiguous.
"""

from __future__ import annotations


class RapidNerError(Exception):
    """Base class for all toolkit errors."""


class FileNotReadable(RapidNerError):
    def __init__(self, path: str, reason: str = ""):
        self.path = path
        super().__init__(f"cannot read {path}" + (f": {reason}" if reason else ""))


class MalformedRow(RapidNerError):
    """A CSV row that does not fit the expected layout. Carries the 1-based line number."""

    def __init__(self, line_no: int, detail: str):
        self.line_no = line_no
        self.detail = detail
        super().__init__(f"line {line_no}: {detail}")


class TopicNotFound(RapidNerError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"no item with label {label!r}")


class AmbiguousTopic(RapidNerError):
    def __init__(self, label: str, ids: list[int]):
        self.label = label
        self.ids = ids
        super().__init__(
            f"label {label!r} matches {len(ids)} items ({ids}); pass an explicit item id"
        )


class UnknownTypeInPriority(RapidNerError):
    pass


class EmptyDictionarySet(RapidNerError):
    pass


class NoIntroSection(RapidNerError):
    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        super().__init__(f"document {doc_id!r} has no introduction section")


class MarkupMismatch(RapidNerError):
    pass


class MalformedMarkup(RapidNerError):
    pass


class SpanTokenMisalignment(RapidNerError):
    def __init__(self, sent_id: str, start: int, end: int):
        self.sent_id = sent_id
        self.start = start
        self.end = end
        super().__init__(
            f"span ({start}, {end}) in sentence {sent_id!r} does not cover whole tokens"
        )


class MalformedBIO(RapidNerError):
    pass


class BadRatios(RapidNerError):
    pass


class LengthMismatch(RapidNerError):
    pass


class EmptyInput(RapidNerError):
    pass


class RowSumMismatch(RapidNerError):
    pass


class TooFewRaters(RapidNerError):
    pass


class SentenceSetMismatch(RapidNerError):
    pass


class UnknownSentence(RapidNerError):
    def __init__(self, sent_id: str):
        self.sent_id = sent_id
        super().__init__(f"no such sentence: {sent_id!r}")


class OverlapViolation(RapidNerError):
    pass


class MisalignedSpan(RapidNerError):
    pass


class StaleRevision(RapidNerError):
    def __init__(self, sent_id: str, expected: int, got: int):
        self.sent_id = sent_id
        self.expected = expected
        self.got = got
        super().__init__(
            f"sentence {sent_id!r} is at revision {expected}, client sent {got}"
        )


class PathExists(RapidNerError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"{path} already exists (use force to overwrite)")


class ConfigError(RapidNerError):
    """Project configuration failed validation. Carries per-field diagnostics."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))
