"""Exception types raised across mtdlab.

Validation problems derive from ``ValueError`` so the CLI can map them to
exit code 1; filesystem problems surface as ``OSError`` (exit code 2).
"""


class MtdlabError(Exception):
    """Base class for all mtdlab errors."""


class SutSpecError(MtdlabError, ValueError):
    """A SUT specification is malformed."""


class SchemaError(SutSpecError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DuplicateParameterError(SutSpecError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"duplicate parameter name {name!r}")


class InadmissibleSecureSettingError(SutSpecError):
    def __init__(self, name: str, secure):
        self.name = name
        self.secure = secure
        super().__init__(f"secure setting {secure!r} is not admissible for parameter {name!r}")


class MissingAssignmentError(MtdlabError, ValueError):
    """A configuration does not assign exactly the SUT's parameters."""


class UnknownParameterError(MtdlabError, KeyError):
    pass


class FitnessRangeError(MtdlabError, ValueError):
    pass


class InvalidPlanError(MtdlabError, ValueError):
    pass


class IncomparableResultsError(MtdlabError, ValueError):
    pass
