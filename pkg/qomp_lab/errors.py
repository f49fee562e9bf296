from typing import Optional


class QompLabError(Exception):
    """Base error carrying the fields of the common error format."""

    recovery_suggestion: Optional[str] = None

    def __init__(
        self,
        detail: str,
        recovery_suggestion: Optional[str] = None,
        criticality: str = "critical",
    ):
        super().__init__(detail)
        self.detail = detail
        if recovery_suggestion is not None:
            self.recovery_suggestion = recovery_suggestion
        self.criticality = criticality


class InvalidParameter(QompLabError):
    recovery_suggestion = "Check the documented range of the parameter"


class InvalidInstance(QompLabError):
    recovery_suggestion = "Check the instance file against the documented format"


class ZeroColumn(QompLabError):
    recovery_suggestion = "Remove or replace the zero column before normalizing"

    def __init__(self, column: int):
        super().__init__(f"Column {column} has zero norm")
        self.column = column


class ZeroVector(QompLabError):
    pass


class TooFewAtoms(QompLabError):
    recovery_suggestion = "Provide a dictionary with at least two atoms"


class EmptyMatrix(QompLabError):
    pass


class IndexOutOfRange(QompLabError):
    pass


class CombinatorialBlowup(QompLabError):
    recovery_suggestion = "Lower the support size bound or the number of atoms"


class RankDeficient(QompLabError):
    pass


class DimensionMismatch(QompLabError):
    pass


class EmptySet(QompLabError):
    pass


class ZeroAlpha(QompLabError):
    pass


class ConstructionFailed(QompLabError):
    pass


class PrecisionInsufficient(QompLabError):
    recovery_suggestion = "Use a more precise block-encoding or relax the target precision"


class GammaTooLarge(QompLabError):
    recovery_suggestion = "Pick gamma at most the smallest nonzero singular value"


class ZeroProjection(QompLabError):
    pass


class IllConditioned(QompLabError):
    pass


class NormTooSmall(QompLabError):
    recovery_suggestion = "Rescale the signal so that its norm is at least 1"


class AtomAlreadySelected(QompLabError):
    pass


class EmptyComplement(QompLabError):
    pass


class GuaranteeNotApplicable(QompLabError):
    def __init__(self, detail: str):
        super().__init__(detail, criticality="non-critical")


class ThresholdViolated(QompLabError):
    pass


class NonTerminating(QompLabError):
    pass
