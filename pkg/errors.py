"""Hiérarchie des exceptions de la boîte à outils"""


class GeneoError(Exception):
    """Erreur de base"""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self):
        return self.message

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": self.message}


class DegreeMismatch(GeneoError):
    def __init__(self, left: int, right: int):
        super().__init__(f"degree mismatch: {left} != {right}")
        self.left = left
        self.right = right


class InvalidPermutation(GeneoError):
    pass


class GroupTooLarge(GeneoError):
    def __init__(self, cap: int):
        super().__init__(f"group too large: closure exceeded {cap} elements")
        self.cap = cap


class DegreeTooLarge(GeneoError):
    def __init__(self, degree: int, limit: int):
        super().__init__(f"degree too large: {degree} > {limit}")
        self.degree = degree
        self.limit = limit


class NotTransitive(GeneoError):
    def __init__(self, orbit_size: int, degree: int):
        super().__init__(
            "group does not act transitively on X "
            f"(orbit of point 0 has {orbit_size} of {degree} points); "
            "recovering a permutant measure requires a transitive action"
        )
        self.orbit_size = orbit_size
        self.degree = degree


class NotEquivariant(GeneoError):
    def __init__(self, witness, row: int, col: int, deviation: float):
        super().__init__(
            f"matrix does not commute with P(g) for g = {witness.cycle_string()} "
            f"(entry ({row}, {col}) deviates by {deviation:.3e})"
        )
        self.witness = witness
        self.row = row
        self.col = col
        self.deviation = deviation


class LineSumViolation(GeneoError):
    def __init__(self, kind: str, index: int, value: float, expected: float):
        super().__init__(
            f"not line-constant: {kind} {index} sums to {value!r}, expected {expected!r}"
        )
        self.kind = kind
        self.index = index
        self.value = value
        self.expected = expected


class NegativeEntry(GeneoError):
    def __init__(self, row: int, col: int, value: float):
        super().__init__(f"negative entry {value!r} at ({row}, {col})")
        self.row = row
        self.col = col
        self.value = value


class NoPerfectMatching(GeneoError):
    def __init__(self, rows: list[int]):
        super().__init__(f"no perfect matching: Hall condition fails on rows {rows}")
        self.rows = rows


class CertificationFailed(GeneoError):
    pass


class InvalidWeights(GeneoError):
    pass


class PcaConvergenceError(GeneoError):
    def __init__(self, component: int, iterations: int):
        super().__init__(
            f"power iteration did not converge for component {component} after {iterations} iterations"
        )
        self.component = component
        self.iterations = iterations


class DegenerateTrainingSet(GeneoError):
    pass


class DatasetFormatError(GeneoError):
    pass


class MatrixFormatError(GeneoError):
    pass
