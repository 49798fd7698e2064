class ConfigError(ValueError):
    """Invalid configuration file or parameter set."""


class GeometryError(ValueError):
    """Position outside the domain of the requested link model."""


class CertificateError(RuntimeError):
    """An optimality certificate failed beyond its declared tolerance."""
