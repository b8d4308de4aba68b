# -*- coding: utf-8 -*-
"""
reebpa/errors.py

Exception hierarchy shared by every module.

Everything raised deliberately by the package derives from ReebPAError so the
CLI can map it to exit code 1. Where a builtin category fits (ValueError,
ArithmeticError, ...) the error also derives from it, so callers outside the
package can catch the usual builtin.
"""


class ReebPAError(Exception):
    """Base class for all package errors."""


# ── Expressions ──────────────────────────────────────────────────────────────
class ExprSyntaxError(ReebPAError, ValueError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text


class ExprDomainError(ReebPAError, ArithmeticError):
    pass


class UnboundVariableError(ReebPAError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unbound variable '{self.name}'"


# ── Contact forms ────────────────────────────────────────────────────────────
class NonContactPoint(ReebPAError, ArithmeticError):
    def __init__(self, point, density: float):
        super().__init__(f"volume density {density:.3e} <= 0 at {tuple(point)}")
        self.point = tuple(point)
        self.density = density


class NoEpsilonFound(ReebPAError):
    def __init__(self, ladder: int, last_report=None):
        super().__init__(f"no smoothing amplitude passed among {ladder} ladder steps")
        self.ladder = ladder
        self.last_report = last_report


# ── Flows ────────────────────────────────────────────────────────────────────
class StepFailure(ReebPAError, RuntimeError):
    pass


class NoReturn(ReebPAError):
    def __init__(self, horizon: float):
        super().__init__(f"no return to the section before horizon {horizon}")
        self.horizon = horizon


class NonTransversalSection(ReebPAError, ValueError):
    pass


class NonConvergence(ReebPAError, RuntimeError):
    def __init__(self, seed):
        super().__init__(f"Newton iteration did not converge from seed {tuple(seed)}")
        self.seed = tuple(seed)


# ── Lefschetz ────────────────────────────────────────────────────────────────
class DegenerateCircle(ReebPAError, ArithmeticError):
    def __init__(self, radius: float):
        super().__init__(f"displacement vanishes on the probing circle (radius {radius:g})")
        self.radius = radius


class Degenerate(ReebPAError, ArithmeticError):
    def __init__(self, determinant: float):
        super().__init__(f"det(J - I) = {determinant:.3e} is numerically zero")
        self.determinant = determinant


# ── Census / chain bookkeeping ───────────────────────────────────────────────
class IncompleteCensus(ReebPAError):
    def __init__(self, requested: float, available: float):
        super().__init__(f"census complete only up to {available}, requested {requested}")
        self.requested = requested
        self.available = available


class InsufficientRange(ReebPAError, ValueError):
    pass


class MixedClass(ReebPAError):
    def __init__(self, key, types):
        super().__init__(f"class {key} mixes incompatible orbit types: {sorted(types)}")
        self.key = key
        self.types = tuple(sorted(types))


class CaseMismatch(ReebPAError):
    pass


class NonPrimitive(ReebPAError, ValueError):
    pass


class LatticeOverflow(ReebPAError, OverflowError):
    pass


class SmithNonTermination(ReebPAError, RuntimeError):
    def __init__(self, matrix):
        super().__init__(f"Smith normal form of {matrix} did not terminate")
        self.matrix = matrix


# ── Configuration ────────────────────────────────────────────────────────────
class ConfigError(ReebPAError, ValueError):
    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"
