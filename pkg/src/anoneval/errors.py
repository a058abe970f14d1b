"""Exception hierarchy.

Every error is either an :class:`InputError` (bad files, bad arguments; CLI
exit code 1) or a :class:`DomainError` (inputs parse fine but the requested
quantity is undefined; CLI exit code 2).
"""


class AnonEvalError(Exception):
    exit_code = 1


class InputError(AnonEvalError):
    exit_code = 1


class DomainError(AnonEvalError):
    exit_code = 2


# metrics
class EmptyClass(DomainError):
    """No target or no nontarget trials."""


class EmptyReference(InputError):
    """A reference transcript has zero tokens."""


class OutOfDomain(DomainError):
    """A rate or trade-off weight lies outside its admissible interval."""


class DegenerateInput(DomainError):
    """Too few points or zero variance."""


# pitch
class TooShort(InputError):
    """Audio is shorter than one analysis window."""


class UndefinedCorrelation(DomainError):
    """Pitch correlation cannot be computed for this pair."""


class NoValidPairs(DomainError):
    """Every pair in a corpus had an undefined pitch correlation."""


# selection / simulation
class EmptyInput(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NoEligibleTarget(DomainError):
    pass


class ParamsExceedPool(DomainError):
    pass


class InvalidConfig(InputError):
    pass


# file formats
class MalformedLine(InputError):
    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}:{lineno}: {message}")


class UnknownLabel(MalformedLine):
    pass


class MissingScore(InputError):
    pass


class DuplicateScore(MalformedLine):
    pass


class OrphanScore(MalformedLine):
    pass


class DuplicateUttId(MalformedLine):
    pass


class OrphanHypothesis(MalformedLine):
    pass


class UnsupportedFormat(InputError):
    pass


class SilentAudio(DomainError):
    pass


class ZeroWeightSum(DomainError):
    pass
