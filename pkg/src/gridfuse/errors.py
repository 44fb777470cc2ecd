"""Exception hierarchy. Every error raised by the package derives from GridFuseError."""


class GridFuseError(Exception):
    pass


class ParseError(GridFuseError, ValueError):
    pass


class DimensionError(GridFuseError, ValueError):
    pass


class ParameterError(GridFuseError, ValueError):
    pass


class DomainError(GridFuseError, ValueError):
    pass


class UnsupportedPattern(GridFuseError, ValueError):
    pass


class EmptyInput(GridFuseError, ValueError):
    pass


class IncompleteObservation(GridFuseError, ValueError):
    pass


class InfeasibleRounds(GridFuseError):
    """The threshold interval is empty: too few rounds for the requested confidence."""

    def __init__(self, n, n_required, c_low=None, c_high=None):
        self.n = n
        self.n_required = n_required
        self.c_low = c_low
        self.c_high = c_high
        msg = f"{n} rounds give an empty threshold interval (need N >= {n_required})"
        if c_low is not None:
            msg += f"; c_low={c_low:.6f} > c_high={c_high:.6f}"
        super().__init__(msg)
