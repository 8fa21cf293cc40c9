"""Exception and warning types shared by the solvers."""


class SolverFault(RuntimeError):
    """Internal failure of a solver (non-finite update, exhausted budget)."""


class UnderResolvedWarning(UserWarning):
    """A smoothing scale is too small for the grid it is applied on."""
