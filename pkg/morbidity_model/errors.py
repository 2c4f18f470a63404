"""Exception hierarchy for the morbidity model engine."""

from typing import Optional


class MorbidityModelError(Exception):
    """Root of every error raised by the engine."""


# Data validation

class DataValidationError(MorbidityModelError):
    """Input files or records violate the documented schema."""


class MalformedRow(DataValidationError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"malformed row at line {line}: {reason}")


class IndexOutOfRange(DataValidationError):
    def __init__(self, field: str, line: int, value: Optional[int] = None, bound: Optional[int] = None):
        self.field = field
        self.line = line
        self.value = value
        self.bound = bound
        detail = ""
        if value is not None and bound is not None:
            detail = f" ({value} not in [0, {bound}))"
        super().__init__(f"field '{field}' out of range at line {line}{detail}")


class MissingValue(DataValidationError):
    def __init__(self, field: str, line: int):
        self.field = field
        self.line = line
        super().__init__(f"missing value for '{field}' at line {line}")


class AgeOutOfRange(DataValidationError):
    def __init__(self, age: float, low: float, high: float):
        self.age = age
        super().__init__(f"age {age} outside configured range [{low}, {high}]")


class NonpositiveSpan(DataValidationError):
    def __init__(self, span: float):
        self.span = span
        super().__init__(f"age span must be positive, got {span}")


class AsymmetricMatrix(DataValidationError):
    def __init__(self, m: int, l: int, l_prime: int):
        self.m, self.l, self.l_prime = m, l, l_prime
        super().__init__(f"distance matrix {m} asymmetric at ({l}, {l_prime})")


class NonzeroDiagonal(DataValidationError):
    def __init__(self, m: int, l: int):
        self.m, self.l = m, l
        super().__init__(f"distance matrix {m} has nonzero diagonal at location {l}")


class InvalidDistance(DataValidationError):
    def __init__(self, m: int, l: int, l_prime: int):
        self.m, self.l, self.l_prime = m, l, l_prime
        super().__init__(f"distance matrix {m} has a negative or non-finite entry at ({l}, {l_prime})")


class DanglingAdjacency(DataValidationError):
    def __init__(self, l: int, l_prime: int):
        self.l, self.l_prime = l, l_prime
        super().__init__(f"adjacency {l} -> {l_prime} has no reverse edge or is invalid")


class IncompletePartition(DataValidationError):
    def __init__(self, l: int):
        self.l = l
        super().__init__(f"location {l} is not assigned to exactly one region")


class MismatchedPoints(DataValidationError):
    def __init__(self, reason: str):
        super().__init__(f"reports are not comparable: {reason}")


# Configuration

class ConfigError(MorbidityModelError):
    """Configuration file or object failed validation."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(message)


class UnknownProfileField(ConfigError):
    def __init__(self, field: str):
        super().__init__(f"unknown profile field '{field}'", key=field)


# Numerics

class NumericalError(MorbidityModelError):
    """A numerical routine could not produce a valid result."""


class NotPositiveDefinite(NumericalError):
    def __init__(self, max_jitter: float):
        self.max_jitter = max_jitter
        super().__init__(f"matrix not positive definite after jitter up to {max_jitter:.3g}")


class ZeroDegreeNeighbor(NumericalError):
    def __init__(self, l: int, l_prime: int):
        super().__init__(f"locations {l} and {l_prime} are neighbours but one has degree 0")


class ConstraintViolation(NumericalError):
    def __init__(self, parameter: str, reason: str = "outside support"):
        self.parameter = parameter
        super().__init__(f"parameter '{parameter}' {reason}")


class NonFiniteDensity(NumericalError):
    def __init__(self, value: float):
        self.value = value
        super().__init__(f"log density is not finite ({value})")


# Sampling

class SamplerError(MorbidityModelError):
    """The sampler failed to produce usable draws."""


class AllChainsDiverged(SamplerError):
    def __init__(self, fractions):
        self.fractions = list(fractions)
        rates = ", ".join(f"{f:.1%}" for f in self.fractions)
        super().__init__(f"every chain diverged on more than half its iterations ({rates})")


class InitializationFailed(SamplerError):
    def __init__(self, chain: int, attempts: int):
        super().__init__(f"chain {chain}: no finite initial point after {attempts} attempts")


# Evaluation

class EvaluationError(MorbidityModelError):
    """Model comparison or predictive checks could not be computed."""


class InsufficientDraws(EvaluationError):
    def __init__(self, per_split: int):
        super().__init__(f"need at least 4 draws per split chain, got {per_split}")


class DegenerateDraws(EvaluationError):
    def __init__(self):
        super().__init__("fewer than two draws and zero variance in every column")


class TailTooSmall(EvaluationError):
    def __init__(self, num_draws: int, tail: int):
        super().__init__(f"{num_draws} draws too few for a Pareto tail of {tail}")


class EmptyGroup(EvaluationError):
    def __init__(self, group):
        self.group = group
        super().__init__(f"group {group} has no respondents")


# Simulation

class SimulationError(MorbidityModelError):
    """Synthetic data could not be generated as configured."""


class InsufficientCrossing(SimulationError):
    def __init__(self, reason: str):
        super().__init__(f"cohort/age design has no overlap: {reason}")
