"""Exception hierarchy shared by the library and the experiment runner."""

from typing import Any, Dict, List, Optional


class VarspaceError(Exception):
    """Base error; `exit_code` is what the runner returns for it"""

    exit_code = 1
    error_type = "error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_payload(self) -> Dict[str, Any]:
        """Machine-readable error body"""
        return {
            "status": "error",
            "error_type": self.error_type,
            "message": self.message,
            "errors": [],
            "details": self.details,
        }


class ConfigurationError(VarspaceError):
    """Invalid configuration; `errors` holds (loc, msg) pairs with dotted field paths"""

    exit_code = 2
    error_type = "configuration"

    def __init__(self, message: str, errors: Optional[List[Dict[str, str]]] = None, loc: Optional[str] = None):
        super().__init__(message)
        self.errors = list(errors or [])
        if loc is not None:
            self.errors.append({"loc": loc, "msg": message})

    def to_payload(self) -> Dict[str, Any]:
        payload = super().to_payload()
        payload["errors"] = self.errors
        return payload


class ContractViolation(VarspaceError, ValueError):
    """Caller broke a precondition (mismatched quadratures, invalid atoms, ...)"""

    error_type = "contract"


class SamplingError(VarspaceError, ValueError):
    """A sampled function returned a non-finite value"""

    error_type = "sampling"

    def __init__(self, message: str, node: Any = None, value: Any = None):
        super().__init__(message, {"node": node, "value": value})
        self.node = node
        self.value = value


class QuadratureError(VarspaceError):
    """A numerical integral or refinement did not converge"""

    error_type = "quadrature"


class SolverFailure(VarspaceError):
    """The solver stopped without meeting its target; `result` keeps the best-so-far"""

    error_type = "solver"

    def __init__(self, message: str, result: Any = None, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details)
        self.result = result


class CheckFailure(VarspaceError):
    """An experiment ran but its acceptance check did not hold"""

    error_type = "check"
