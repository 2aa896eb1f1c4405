"""Exception hierarchy shared by the engine and the CLI."""


class SunnPestError(Exception):
    """Base class for all sunnpest errors."""


class InputError(SunnPestError, ValueError):
    """Bad input data or arguments. The CLI maps these to exit status 1."""


class ClimateFormatError(InputError):
    """Climate CSV cannot be read (header, encoding, no rows)."""


class LabelFormatError(InputError):
    """Label CSV cannot be read."""


class EmptyDatasetError(InputError):
    """Nothing left to train or evaluate on."""


class InsufficientHistoryError(InputError):
    """Accumulation cannot be rebuilt from the cycle start for the requested days."""


class FeatureArityError(InputError):
    """Feature vector length does not match the model's feature set."""


class BundleError(InputError):
    """Model bundle is missing, corrupt, or inconsistent."""


class BundleVersionError(BundleError):
    """Model bundle was written with an unsupported format version."""
