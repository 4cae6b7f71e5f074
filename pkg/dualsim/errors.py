# FILE: dualsim/errors.py
# CONTRACT: one hierarchy; UsageError -> CLI exit 1, SimulationError -> CLI exit 2


class DualsimError(Exception):
    """Base class for every error raised by dualsim."""


class UsageError(DualsimError):
    """Bad input: parameters, configuration, formulas."""


class SimulationError(DualsimError):
    """Failure while building or running a model."""


def _hint(suggestion):
    return f" (did you mean {suggestion!r}?)" if suggestion else ""


# parameters / states


class InvalidParameter(UsageError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class NegativeParameter(InvalidParameter):
    def __init__(self, field, value, bound="must be >= 0"):
        self.value = value
        super().__init__(field, f"{bound}, got {value!r}")


class ZeroDenominator(InvalidParameter):
    def __init__(self, field):
        super().__init__(field, "is used as a denominator and must be > 0")


class NegativeState(UsageError):
    def __init__(self, species, value):
        self.species = species
        self.value = value
        super().__init__(f"population {species} is negative ({value!r})")


class DivisionByZero(SimulationError):
    pass


# numerics


class NonFiniteState(SimulationError):
    def __init__(self, time, hint="try a smaller dt"):
        self.time = time
        super().__init__(f"non-finite state at t={time:g} days; {hint}")


class StepUnderflow(SimulationError):
    pass


class DriftMismatch(SimulationError):
    def __init__(self, model, species, expected, got, state):
        self.model = model
        self.species = species
        super().__init__(
            f"{model}: transition drift for {species} is {got!r}, ODE says {expected!r} at state {state}"
        )


# scenarios / stats / output


class UnknownScenario(UsageError):
    def __init__(self, name, suggestion=None):
        self.name = name
        self.suggestion = suggestion
        super().__init__(f"unknown scenario {name!r}{_hint(suggestion)}")


class EmptySample(UsageError):
    pass


class GridMismatch(UsageError):
    pass


class NoSuchSeries(UsageError):
    def __init__(self, name, available=()):
        self.name = name
        tail = f"; available: {', '.join(available)}" if available else ""
        super().__init__(f"no series {name!r}{tail}")


# config / grammar


class ConfigSyntaxError(UsageError):
    def __init__(self, message, line, column):
        self.line = line
        self.column = column
        super().__init__(f"config syntax error at line {line}, column {column}: {message}")


class UnknownKey(UsageError):
    def __init__(self, key, suggestion=None):
        self.key = key
        self.suggestion = suggestion
        super().__init__(f"unknown key {key!r}{_hint(suggestion)}")


class MissingRequired(UsageError):
    def __init__(self, field):
        self.field = field
        super().__init__(f"missing required {field}")


class UndeclaredSpecies(UsageError):
    def __init__(self, species, where):
        self.species = species
        super().__init__(f"{where} refers to undeclared species {species!r}")


class RateSyntaxError(UsageError):
    def __init__(self, message, column, text=""):
        self.column = column
        self.text = text
        super().__init__(f"{message} at column {column}" + (f" in {text!r}" if text else ""))


class UnboundIdentifier(UsageError):
    def __init__(self, name, suggestion=None):
        self.name = name
        super().__init__(f"unbound identifier {name!r}{_hint(suggestion)}")


# experiments


class ExperimentError(DualsimError):
    """Wraps any failure with the scenario it happened in."""

    def __init__(self, scenario, cause):
        self.scenario = scenario
        self.cause = cause
        super().__init__(f"[{scenario}] {cause}")
