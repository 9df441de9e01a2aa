"""Error types shared by all modules. Each carries a short machine-readable kind."""


class GwlabError(Exception):
    kind = "error"


class InvalidParameter(GwlabError):
    kind = "invalid-parameter"


class InvalidInput(GwlabError):
    kind = "invalid-input"


class ResourceLimit(GwlabError):
    kind = "resource-limit"


class AssumptionViolation(GwlabError):
    kind = "assumption-violation"


class InternalConsistencyError(GwlabError):
    kind = "internal-consistency"


class ClassViolation(GwlabError):
    kind = "class-violation"


class DomainExceeded(GwlabError):
    kind = "domain-exceeded"


class DensityError(GwlabError):
    kind = "density-error"
