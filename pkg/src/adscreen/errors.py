"""Exception hierarchy shared across the package.

Every error raised on a documented failure path derives from
:class:`AdscreenError`, so callers can catch one base type at API
boundaries (CLI, HTTP service) and map it to an exit code or status.
"""


class AdscreenError(Exception):
    """Base class for all package-specific errors."""


# -- transcript parsing ------------------------------------------------------

class MalformedLineError(AdscreenError):
    """A transcript line violates the supported CHAT subset."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EmptyDocumentError(AdscreenError):
    """Document contains no speaker lines."""


# -- feature extraction ------------------------------------------------------

class EmptyCorpusError(AdscreenError):
    """No tokens available to fit a vocabulary."""


class NonPositiveAudioLengthError(AdscreenError):
    """Audio length missing or not strictly positive."""


class MissingDemographicsError(AdscreenError):
    """Age or gender absent where demographic features are required."""


class SchemaMismatchError(AdscreenError):
    """Feature vector, schema, and model do not agree."""


# -- embedding / model training ----------------------------------------------

class DivergenceDetectedError(AdscreenError):
    """Training objective became non-finite."""


class AllTokensOOVError(AdscreenError):
    """No token of the input is covered by the fitted vocabulary."""


class EmptySequenceError(AdscreenError):
    """An operation requiring at least one token got none."""


class DimensionMismatchError(AdscreenError):
    """Layer representations and mixing weights disagree in shape."""


# -- classifiers -------------------------------------------------------------

class SingleClassTrainingError(AdscreenError):
    """Supervised training requires both classes present."""


class NonFiniteFeaturesError(AdscreenError):
    """Feature matrix contains NaN or infinity."""


# -- evaluation --------------------------------------------------------------

class LengthMismatchError(AdscreenError):
    """Paired sequences differ in length."""


class SingleClassLabelsError(AdscreenError):
    """A ranking metric needs both classes in the label vector."""


class TooFewSamplesError(AdscreenError):
    """Dataset too small to split as requested."""


# -- screening service -------------------------------------------------------

class EmptyTextError(AdscreenError):
    """Submitted description is empty after cleaning."""


class ModelNotLoadedError(AdscreenError):
    """Scoring requested before a model container was loaded."""
