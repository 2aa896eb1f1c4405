"""sunnpest - Sunn Pest phase and nymphal-stage forecasting from climate data."""

try:
    from importlib.metadata import version, PackageNotFoundError

    try:
        __version__ = version('sunnpest')
    except PackageNotFoundError:
        __version__ = '0.0.0+unknown'
except ImportError:
    __version__ = '0.0.0+unknown'
