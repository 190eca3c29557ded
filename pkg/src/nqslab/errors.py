"""Exception types shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
NumericalError -> 3, ResourceCapError -> 4.  Plain ValueError is used for
domain errors on individual operations (bad arguments, out-of-range
parameters) and also exits with code 3 when it escapes a subcommand.
"""


class ConfigError(Exception):
    """Invalid experiment configuration (bad field, missing block, ...)."""


class NumericalError(Exception):
    """A numerical consistency check failed (residual gate, negative
    variance beyond noise, non-finite sampler state, ...)."""


class ResourceCapError(Exception):
    """Requested computation exceeds a configured resource cap."""
