"""
Exception classes for the valuecast library
"""


# --- Top Level ---
class ValueCastError(Exception):
    """
    Base class for errors specific to valuecast operation.
    """

    def suggest(self, *args):
        """
        regenerate the exception with additional arguments

        :param args: addition arguments
        :return: a new exception of the same type with the additional arguments
        """
        error = self.__class__(*(self.args + args))
        error.__dict__.update(self.__dict__)
        return error


# --- Second Level ---
class SolverError(ValueCastError):
    """
    Errors arising in the LP / MILP solvers
    """


class DispatchError(ValueCastError):
    """
    Errors arising from dispatch models that cannot be built or settled
    """


class ModelError(ValueCastError):
    """
    Errors arising from forecasting models, losses and checkpoints
    """


class TrainingError(ValueCastError):
    """
    Errors arising in the training loops
    """


class DataError(ValueCastError):
    """
    Errors arising from dataset ingestion and transforms
    """


class EvaluationError(ValueCastError):
    """
    Errors arising when comparing evaluation reports
    """


class ConfigError(ValueCastError):
    """
    Invalid library setting or experiment configuration
    """


# --- Third Level: SolverErrors ---
class MalformedProblem(SolverError):
    """
    Dimensions of the objective, rows and bounds are inconsistent
    """


class NumericalFailure(SolverError):
    """
    The simplex method did not converge within its iteration cap
    """


class InfeasibleProblem(SolverError):
    """
    A mixed-integer problem has no integer-feasible point
    """


class NodeBudgetExceeded(SolverError):
    """
    Branch and bound ran out of nodes. The best incumbent, if any, is attached.
    """

    def __init__(self, *args, solution=None):
        super().__init__(*args)
        self.solution = solution


class ScaleExceeded(SolverError):
    """
    Problem size beyond the dense solver's supported scale
    """


# --- Third Level: DispatchErrors ---
class InfeasibleByConstruction(DispatchError):
    """
    Forecast or load rejected before building: thermal capacity cannot serve the net load
    """


class DispatchInfeasible(DispatchError):
    """
    The day-ahead dispatch LP has no feasible schedule (e.g. binding ramps)
    """


class BalancingInfeasible(DispatchError):
    """
    Real-time deviation exceeds the flexible capacity
    """

    def __init__(self, *args, deficit=None, day=None, hour=None):
        super().__init__(*args)
        self.deficit = deficit
        self.day = day
        self.hour = hour


class IdentityViolation(DispatchError):
    """
    Dual reconstruction of the operating cost misses the primal cost
    """


# --- Third Level: ModelErrors ---
class DimensionMismatch(ModelError):
    """
    Feature dimension does not match the model input
    """


class ShapeMismatch(ModelError):
    """
    Gradient or parameter shapes are not congruent
    """


class InvalidQuantile(ModelError):
    """
    Quantile level outside (0, 1)
    """


class DegeneratePrices(ModelError):
    """
    Real-time up and down prices coincide
    """


class OutOfRange(ModelError):
    """
    Day-ahead price outside the real-time price interval
    """


class CheckpointError(ModelError):
    """
    Checkpoint cannot be encoded or decoded
    """


# --- Third Level: TrainingErrors ---
class CapacityAuditFailed(TrainingError):
    """
    Flexible capacity cannot cover the worst-case deviation of the dataset
    """

    def __init__(self, *args, report=None):
        super().__init__(*args)
        self.report = report


# --- Third Level: DataErrors ---
class ParseError(DataError):
    """
    A CSV field cannot be parsed or violates a record invariant
    """

    def __init__(self, *args, line=None, column=None):
        super().__init__(*args)
        self.line = line
        self.column = column


class SchemaMismatch(DataError):
    """
    CSV header does not match the expected schema
    """


class TimestampOrder(DataError):
    """
    Timestamps are not strictly increasing hourly
    """


class TooSmall(DataError):
    """
    Dataset too small to split as requested
    """


class EmptyTrainSet(DataError):
    """
    Scenario sampling requested from an empty training set
    """


class EmptyDataset(DataError):
    """
    Operation requires a nonempty dataset
    """


# --- Third Level: EvaluationErrors ---
class GridMismatch(EvaluationError):
    """
    Reports do not cover identical (day, hour) grids
    """
