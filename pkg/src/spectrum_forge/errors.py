"""Exception hierarchy shared across the pipeline."""


class SpectrumForgeError(Exception):
    """Base class for all pipeline errors."""


class ParseError(SpectrumForgeError):
    """No function definition could be delimited in the IR text."""


class DimensionMismatch(SpectrumForgeError):
    """Vector lengths disagree with the configured dimensionality."""


class DimensionNotDivisible(SpectrumForgeError):
    """Full dimension is not an exact multiple of the subspace count."""


class EmptyTrainingSet(SpectrumForgeError):
    """Codebook training was given no vectors."""


class IdOutOfRange(SpectrumForgeError):
    """A compositional code id falls outside [0, k_star)."""


class TooFewPrograms(SpectrumForgeError):
    """Fewer feature vectors than requested clusters."""


class BinaryNotFound(SpectrumForgeError):
    """The optimizer binary does not exist or is not executable."""


class OptimizerCrash(SpectrumForgeError):
    """Optimizer exited nonzero; carries its stderr."""

    def __init__(self, message: str, stderr: str = ""):
        super().__init__(message)
        self.stderr = stderr


class OptimizerTimeout(SpectrumForgeError):
    """Optimizer exceeded the configured wall-clock budget."""


class NondeterministicOptimizer(SpectrumForgeError):
    """Two identical invocations produced different output bytes."""


class AllPassesFailed(SpectrumForgeError):
    """Every candidate pass crashed or timed out during labeling."""


class ZeroInstructionProgram(SpectrumForgeError):
    """A relative-reduction label is undefined for an empty program."""


class MissingLabel(SpectrumForgeError):
    """A prediction record has no matching ground-truth label."""


class ConfigError(SpectrumForgeError):
    """A run-config field failed validation."""
