"""Exception hierarchy shared across the package."""


class SirenError(Exception):
    """Base class for every error raised deliberately by siren."""


class InvalidUrlError(SirenError, ValueError):
    pass


class DatasetError(SirenError):
    pass


class SplitError(SirenError, ValueError):
    pass


class TrainingDiverged(SirenError):
    pass


class ModelFormatError(SirenError):
    """Model file has a bad magic, version, layout hash or checksum."""


class EntropyExhausted(SirenError):
    pass


class KeyGenerationError(SirenError):
    pass


class MessageTooLarge(SirenError, ValueError):
    pass


class WeatherError(SirenError):
    pass


class WeatherAuthError(WeatherError):
    pass


class WeatherQuotaError(WeatherError):
    pass


class WeatherHttpError(WeatherError):
    pass


class WeatherParseError(WeatherError):
    pass


class ControlCommandError(SirenError, ValueError):
    pass
