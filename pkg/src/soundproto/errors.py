"""Exception hierarchy shared by all soundproto modules."""


class SoundProtoError(Exception):
    """Base class for all soundproto errors."""


# --- embedding store ---

class ZeroVector(SoundProtoError):
    """Vector norm below the degenerate threshold (e.g. silent audio upstream)."""


class DimMismatch(SoundProtoError):
    pass


class FormatError(SoundProtoError):
    """Malformed store file. Carries the byte offset at which parsing failed."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


# --- prototypes ---

class ModalityError(SoundProtoError):
    pass


class EmptyPromptSet(SoundProtoError):
    pass


class PoolTooSmall(SoundProtoError):
    pass


class NoSamplesForClass(SoundProtoError):
    pass


# --- profiles ---

class VocabularyMismatch(SoundProtoError):
    pass


class TauOutOfRange(SoundProtoError):
    pass


class EmptyProfile(SoundProtoError):
    pass


class EmptyInput(SoundProtoError):
    pass


# --- soundscape ---

class EmptySegment(SoundProtoError):
    pass


class SilentForeground(SoundProtoError):
    pass


class SilentBackground(SoundProtoError):
    pass


class SampleRateMismatch(SoundProtoError):
    pass


class ForegroundTooLong(SoundProtoError):
    pass


class InsufficientClasses(SoundProtoError):
    pass


class AnnotationOutOfBounds(SoundProtoError):
    pass


class EmptySet(SoundProtoError):
    pass


# --- eval ---

class IdMismatch(SoundProtoError):
    pass


class UnknownClass(SoundProtoError):
    pass


class EmptyGrid(SoundProtoError):
    pass


class MissingProvenance(SoundProtoError):
    pass


# --- oracle ---

class DimTooSmall(SoundProtoError):
    pass


class EmptyComponents(SoundProtoError):
    pass


# --- config ---

class ConfigError(SoundProtoError):
    """One or more experiment-config violations. Carries the full error list."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
