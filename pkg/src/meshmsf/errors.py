class MeshError(Exception):
    """Base class for simulator and algorithm errors."""


class ConfigurationError(MeshError, ValueError):
    pass


class CapacityExceeded(MeshError):
    """A processor or a routing destination would hold too many records."""


class BoundaryError(MeshError):
    """A rule tried to send a word across the edge of its view."""


class ContractError(MeshError):
    """A primitive was called with input violating its precondition."""


class ConsistencyError(MeshError):
    """Internal bookkeeping disagrees with itself (a bug, not bad input)."""
