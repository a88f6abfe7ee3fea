from enum import Enum
from typing import Optional


class ParkOptErrorCodes(Enum):
    unknown_error = 997000

    capacity_violation = 997101
    bound_violation = 997102
    invalid_config = 997103
    infeasible = 997104
    unbounded = 997105

    share_mismatch = 997201
    rank_deficient = 997202
    insufficient_data = 997203
    degenerate_denominator = 997204

    invariant_broken = 997301
    no_convergence = 997302

    not_converged = 997401
    grid_too_large = 997402

    schema_error = 997501
    unit_error = 997502
    negative_value = 997503
    price_order = 997504
    io_error = 997505


class ParkOptError(Exception):
    """
    Base class of every error raised by parkopt.  Each subclass
    carries an :code:`error_code` from :class:`ParkOptErrorCodes`.
    """

    error_code: ParkOptErrorCodes = ParkOptErrorCodes.unknown_error

    def __init__(self, description: str, *, error_code=None):
        super().__init__(description)
        self.description = description
        if error_code is not None:
            self.error_code = error_code

    def __str__(self):
        return f"[{self.error_code.value}] {self.description}"


# park model


class CapacityViolation(ParkOptError):
    error_code = ParkOptErrorCodes.capacity_violation


class BoundViolation(ParkOptError):
    error_code = ParkOptErrorCodes.bound_violation


class InvalidConfig(ParkOptError):
    error_code = ParkOptErrorCodes.invalid_config

    def __init__(self, description: str, *, field: Optional[str] = None):
        if field:
            description = f"{field}: {description}"
        super().__init__(description)
        self.field = field


class Infeasible(ParkOptError):
    error_code = ParkOptErrorCodes.infeasible


class Unbounded(ParkOptError):
    error_code = ParkOptErrorCodes.unbounded


# incentive


class ShareMismatch(ParkOptError):
    error_code = ParkOptErrorCodes.share_mismatch


class RankDeficient(ParkOptError):
    error_code = ParkOptErrorCodes.rank_deficient


class InsufficientData(ParkOptError):
    error_code = ParkOptErrorCodes.insufficient_data


class DegenerateDenominator(ParkOptError):
    error_code = ParkOptErrorCodes.degenerate_denominator


# scheduler


class InvariantBroken(ParkOptError):
    error_code = ParkOptErrorCodes.invariant_broken


class NoConvergence(ParkOptError):
    error_code = ParkOptErrorCodes.no_convergence

    def __init__(self, description: str, *, result=None):
        super().__init__(description)
        self.result = result


# oracle


class NotConverged(ParkOptError):
    error_code = ParkOptErrorCodes.not_converged


class GridTooLarge(ParkOptError):
    error_code = ParkOptErrorCodes.grid_too_large


# scenario and reports


class SchemaError(ParkOptError):
    error_code = ParkOptErrorCodes.schema_error

    def __init__(self, description: str, *, column: Optional[str] = None):
        super().__init__(description)
        self.column = column


class PriceOrderError(SchemaError):
    error_code = ParkOptErrorCodes.price_order

    def __init__(self, description: str, *, slot: int):
        super().__init__(description, column="p_o")
        self.slot = slot


class UnitError(ParkOptError):
    error_code = ParkOptErrorCodes.unit_error


class NegativeValue(ParkOptError):
    error_code = ParkOptErrorCodes.negative_value

    def __init__(self, description: str, *, column: str, slot: int):
        super().__init__(description)
        self.column = column
        self.slot = slot


class IoError(ParkOptError):
    error_code = ParkOptErrorCodes.io_error
