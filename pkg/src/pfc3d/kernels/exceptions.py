"""Exceptions shared by the pure and compiled smoother kernels."""


class SingularLocalSystemError(ArithmeticError):
    """The pointwise 3x3 smoother system had a vanishing determinant."""

    def __init__(self, ijk, det):
        self.ijk = ijk
        self.det = det
        if ijk is None:
            where = "at an unknown cell (parallel sweep)"
        else:
            where = f"at cell {tuple(int(c) + 1 for c in ijk)}"
        super().__init__(f"singular local smoother system {where}: det={det!r}")
