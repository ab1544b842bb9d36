class WfanetError(Exception):
    """Base error. `exit_code` drives the CLI, `status_code` the HTTP app."""

    exit_code = 3
    status_code = 500
    kind = "error"

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigError(WfanetError):
    exit_code = 1
    status_code = 400
    kind = "config"


class DimensionError(WfanetError):
    exit_code = 2
    status_code = 422
    kind = "dimension"


class FormatError(WfanetError):
    exit_code = 2
    status_code = 400
    kind = "format"


class RasterValidationError(WfanetError):
    exit_code = 2
    status_code = 422
    kind = "validation"


class ContractError(WfanetError):
    exit_code = 3
    status_code = 500
    kind = "contract"


class NumericError(WfanetError):
    exit_code = 3
    status_code = 500
    kind = "numeric"


class ComputationError(WfanetError):
    exit_code = 3
    status_code = 422
    kind = "computation"
