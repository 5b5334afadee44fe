"""Shared exception types."""


class PilotwaveError(Exception):
    """Base class for simulator errors."""


class BlowUpError(PilotwaveError):
    """Wave field exceeded the stability guard (instability or gamma > gamma_F)."""


class DomainExitError(PilotwaveError):
    """Droplet position left the computational domain."""


class GeometryError(PilotwaveError):
    """Invalid or inconsistent geometry specification."""


class CalibrationError(PilotwaveError):
    """Faraday-threshold calibration could not converge."""


class NodalPointError(PilotwaveError):
    """Wave function magnitude underflowed near a nodal point."""
