"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An argument violates a documented precondition or invariant."""


class OutOfDomain(ValueError):
    """A sample coordinate lies outside the valid domain (no implicit wrap/clamp)."""


class HeightmapFormatError(ValueError):
    """A heightmap file or its sidecar is malformed; message names the offending field."""


class WeldConsistencyError(RuntimeError):
    """Two vertices share a canonical key but disagree on world position (upstream seam bug)."""


class ConfigError(ValueError):
    """A run configuration is missing, malformed, or carries unknown fields."""
