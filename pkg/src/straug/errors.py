"""Exception hierarchy shared by all modules."""


class StrError(Exception):
    """Base class for every error raised by this package."""


class ManifestError(StrError):
    pass


class MissingColumn(ManifestError):
    def __init__(self, path, lineno, n_fields, expected):
        self.path = path
        self.lineno = lineno
        super().__init__(
            f"{path}:{lineno}: expected {expected} fields, got {n_fields}"
        )


class DuplicateId(ManifestError):
    pass


class EmptyManifest(ManifestError):
    pass


class WriteError(ManifestError):
    pass


class AlignmentError(StrError):
    pass


class MissingTier(AlignmentError):
    pass


class MalformedTextGrid(AlignmentError):
    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = f"{path}:{lineno}: " if path is not None else ""
        super().__init__(where + message)


class NonMonotonicIntervals(AlignmentError):
    pass


class MalformedLine(AlignmentError):
    pass


class NegativeDuration(AlignmentError):
    pass


class TaggingError(StrError):
    pass


class MissingSentId(TaggingError):
    pass


class MalformedRow(TaggingError):
    pass


class InconsistentInputs(StrError):
    pass


class AudioError(StrError):
    pass


class UnsupportedFormat(AudioError):
    pass


class CorruptHeader(AudioError):
    pass


class RateMismatch(AudioError):
    pass


class SegmentOutOfBounds(AudioError):
    pass


class TooShort(StrError):
    pass


class TranslationError(StrError):
    pass


class BackendUnavailable(TranslationError):
    pass


class MissingTranslation(TranslationError):
    def __init__(self, text):
        self.text = text
        super().__init__(f"no translation for {text!r}")


class LengthMismatch(TranslationError):
    pass


class MalformedStats(StrError):
    pass
