"""Custom exceptions for the fractional critical lab."""

from __future__ import annotations

from typing import Any


class FraclabError(Exception):
    """Base exception for lab errors."""

    exit_code: int = 1

    def __init__(self, message: str, exit_code: int | None = None, details: dict | None = None):
        super().__init__(message)
        self.message = message
        if exit_code is not None:
            self.exit_code = exit_code
        self.details = details or {}

    def __str__(self) -> str:
        if self.exit_code:
            return f"[{self.exit_code}] {self.message}"
        return self.message


class DomainError(FraclabError):
    """Parameters outside the admissible range (s not in (0,1), N <= 2s, ...)."""

    exit_code = 2


class ConfigError(FraclabError):
    """Malformed run configuration or unknown key."""

    exit_code = 1


class FieldFormatError(FraclabError):
    """Field file could not be parsed."""

    exit_code = 1


class InvalidField(FraclabError):
    """Field values with the wrong shape or non-finite entries."""

    exit_code = 1


class NonHermitianInput(FraclabError):
    """Spectral coefficients whose inverse transform is not real."""

    def __init__(self, message: str, imaginary_ratio: float | None = None, **kwargs: Any):
        super().__init__(message, **kwargs)
        self.imaginary_ratio = imaginary_ratio


class ZeroField(FraclabError):
    """Operation undefined on the zero field."""


class NotOnManifold(FraclabError):
    """Field is not on the Nehari manifold to the required tolerance."""

    def __init__(self, message: str, nehari_value: float | None = None, **kwargs: Any):
        super().__init__(message, **kwargs)
        self.nehari_value = nehari_value


class Diverged(FraclabError):
    """Descent energy blew up."""

    exit_code = 3


class DegenerateIterate(FraclabError):
    """Descent iterate collapsed to the zero field."""

    exit_code = 3


class AssumptionViolated(FraclabError):
    """Group fails an orbit, witness or character check."""

    def __init__(self, message: str, point: tuple[float, ...] | None = None, **kwargs: Any):
        super().__init__(message, **kwargs)
        self.point = point


class RadiusTooLarge(FraclabError):
    """Ball radius exceeds half the box, so the ball would wrap."""


class DeltaOutOfRange(FraclabError):
    """Requested concentration mass outside (0, total mass)."""


class NoDecayWarning(UserWarning):
    """Field has not decayed at the box boundary; truncation error is significant."""
