"""Exception types shared across the package."""


class FormctlError(Exception):
    """Base class for all package errors."""


class TopologyError(FormctlError):
    """Invalid communication topology or graph precondition failure."""


class LinalgError(FormctlError):
    """Numerical kernel failure (singular system, divergence, bad input)."""


class PlacementError(LinalgError):
    """Pole placement could not match the requested spectrum."""


class SynthesisError(FormctlError):
    """Gain synthesis infeasible (detectability/stabilizability failure)."""


class FormationError(FormctlError):
    """Inconsistent formation specification."""


class ProtocolError(FormctlError):
    """Regime/topology mismatch or protocol precondition failure."""


class DivergenceError(FormctlError):
    """Simulation state left the finite envelope.

    Carries the abort time and, when available, the partial result.
    """

    def __init__(self, message, t_abort=None, partial=None):
        super().__init__(message)
        self.t_abort = t_abort
        self.partial = partial


class ScenarioError(FormctlError):
    """Scenario file violates the schema or is internally inconsistent."""
