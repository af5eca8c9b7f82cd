class ConfigurationError(ValueError):
    """A parameter set or configuration document that cannot be simulated."""
