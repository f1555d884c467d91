"""Exception hierarchy.

Every error carries a short machine-readable ``code`` so the CLI can emit a
single parseable failure line.
"""


class UpaQuantError(ValueError):
    code = "error"

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field

    def as_dict(self):
        out = {"error": self.code, "message": str(self)}
        if self.field is not None:
            out["field"] = self.field
        return out


class DimensionError(UpaQuantError):
    code = "invalid-dimension"


class InvalidInputError(UpaQuantError):
    code = "invalid-input"


class ConfigurationError(UpaQuantError):
    code = "configuration"


class DegenerateBeamsetError(UpaQuantError):
    code = "degenerate-beamset"


class ExhaustedCodebookError(UpaQuantError):
    code = "exhausted-codebook"


class InsufficientBeamsError(UpaQuantError):
    code = "insufficient-beams"


class NumericalDomainError(UpaQuantError):
    code = "numerical-domain"


class InfeasiblePackingError(UpaQuantError):
    code = "infeasible-packing"


class InfeasibleBudgetError(UpaQuantError):
    code = "infeasible-budget"
