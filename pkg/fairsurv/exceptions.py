from fairsurv import consts


class FairsurvError(Exception):
    exit_code = consts.EXIT_FAILURE


class FieldException(FairsurvError):
    exit_code = consts.EXIT_CONFIG


class ConfigError(FairsurvError):
    exit_code = consts.EXIT_CONFIG

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors or {}


class InvalidArgumentError(FairsurvError, ValueError):
    exit_code = consts.EXIT_CONFIG


class SpecError(InvalidArgumentError):
    pass


class SchemaError(FairsurvError):
    exit_code = consts.EXIT_DATA


class DataValidationError(FairsurvError):
    exit_code = consts.EXIT_DATA

    def __init__(self, message, rows=None):
        super().__init__(message)
        self.rows = list(rows or [])


class DegenerateColumnError(DataValidationError):
    pass


class ModelEvaluationError(FairsurvError):
    exit_code = consts.EXIT_NUMERICAL


class UndefinedConcordanceError(ModelEvaluationError):
    pass


class ConvergenceError(ModelEvaluationError):
    pass


class CalibrationError(ModelEvaluationError):

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class RankDeficiencyError(ModelEvaluationError):

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction


class InfeasibleTargetError(FairsurvError):
    exit_code = consts.EXIT_INFEASIBLE


class EmptyScopeError(InfeasibleTargetError):
    pass


class OutputError(FairsurvError):
    exit_code = consts.EXIT_FAILURE


FIELD_REQUIRED = FieldException(
    'This field is required.')
FIELD_WRONG_FORMAT = FieldException(
    'This field is not following the right format.')
FIELD_UNKNOWN = FieldException(
    'This field is not part of the schema.')
FIELD_EXCLUSIVE = FieldException(
    'Exactly one of these fields should be provided.')
