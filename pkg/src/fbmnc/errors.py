"""Exception types raised by the analytical and simulation modules."""


class FbmncError(Exception):
    """Base class for all package errors."""


class DomainError(FbmncError, ValueError):
    """An argument lies outside the domain of a formula."""


class InstabilityError(FbmncError, ValueError):
    """The server rate does not exceed the mean arrival rate."""


class InfeasibleError(FbmncError, ValueError):
    """No parameterization satisfies the rate/probability constraints."""


class ComposabilityError(FbmncError, ValueError):
    """An overflow profile is not integrable, so it cannot be relaxed."""


class OptimizationError(FbmncError, RuntimeError):
    """The objective was non-finite at every probed point."""


class ConfigError(FbmncError, ValueError):
    """Malformed or inconsistent scenario configuration."""

    def __init__(self, message, *, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class ResourceGuardError(FbmncError, RuntimeError):
    """A requested simulation exceeds the configured work budget."""
