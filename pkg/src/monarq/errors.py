"""Exception types shared across the package."""


class MonarqError(Exception):
    """Base class for all package errors."""


class CapacityError(MonarqError):
    """A circuit or pipeline needs more qubits than the simulator allows."""


class DomainError(MonarqError, ValueError):
    """A value lies outside the interval a codec or builder accepts."""


class MissingAddressError(MonarqError, KeyError):
    """No shots were recorded for a requested address."""

    def __init__(self, address):
        super().__init__(address)
        self.address = address

    def __str__(self):
        return f"no shots recorded for address {self.address!r}"


class DegenerateCalibrationError(MonarqError, ValueError):
    """Calibration cannot be fitted (e.g. every measured value is zero)."""


class IncompleteResultError(MonarqError):
    """Stitching was attempted with results missing for some tiles."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"missing results for tiles {self.missing}")


class DataFormatError(MonarqError, ValueError):
    """An input file could not be parsed."""
