"""Exception taxonomy shared by the drafting pipeline, evaluator, and statistics."""


class SpecForgeError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(SpecForgeError):
    """A guarded precondition or a type invariant was violated."""


class BackendUnavailable(SpecForgeError):
    """The chat/embedding endpoint could not be reached after retries."""


class ResponseEmpty(SpecForgeError):
    """The model returned a blank completion."""


class DimensionMismatch(SpecForgeError):
    """The embedding backend returned a vector of the wrong length."""


class MockScriptError(SpecForgeError):
    """The scripted mock backend had no response for a request."""


class PrivacyViolation(SpecForgeError):
    """An outgoing search query shares an 8-gram with confidential claim text."""


class NoResults(SpecForgeError):
    """The search provider returned no document."""


class ParseFailure(SpecForgeError):
    """Model output did not match the expected wire format after retries."""


class DraftFailure(SpecForgeError):
    """A template section could not be drafted; the document run aborts."""


class SkipItem(SpecForgeError):
    """A technical section could not be drafted; the item is skipped."""


class MissingSection(SpecForgeError):
    """A planned template section is absent at assembly time."""


class ZeroVector(SpecForgeError):
    """A pooled embedding has zero norm; cosine similarity is undefined."""


class EmptyGroup(SpecForgeError):
    """Score aggregation was asked about a method with no records."""


class NoOverlap(SpecForgeError):
    """Two methods share no (annotator, source) ranking comparisons."""


class DegenerateInput(SpecForgeError):
    """An agreement statistic is undefined for this input (e.g. constant ratings)."""
