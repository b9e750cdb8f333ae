"""Exception types raised across the package."""


class CaloricError(Exception):
    """Base class for all package errors."""


class OrderTooHigh(CaloricError, ValueError):
    pass


class MalformedSpec(CaloricError, ValueError):
    pass


class OutsideValidity(CaloricError, ValueError):
    pass


class MeshTooCoarse(CaloricError, ValueError):
    pass


class AllColumnsDegenerate(CaloricError, ValueError):
    pass


class DomainViolation(CaloricError, ValueError):
    """Raised when a heat-side value leaves the domain of the inverse map.

    ``point`` holds the offending space-time point when known.
    """

    def __init__(self, message, point=None, value=None):
        super().__init__(message)
        self.point = point
        self.value = value


class MapMismatch(CaloricError, ValueError):
    pass


class DictionaryTooSmall(CaloricError):
    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors


class BudgetMissed(CaloricError):
    def __init__(self, message, step=None, achieved=None, budget=None):
        super().__init__(message)
        self.step = step
        self.achieved = achieved
        self.budget = budget


class BlockExhausted(CaloricError):
    def __init__(self, message, target_index=None, achieved=None):
        super().__init__(message)
        self.target_index = target_index
        self.achieved = achieved


class UnsupportedDimension(CaloricError, ValueError):
    pass


class NotNested(CaloricError, ValueError):
    pass


class PoleInsideK(CaloricError, ValueError):
    pass
