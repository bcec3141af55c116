"""Exception hierarchy shared by every module."""


class FrameForgeError(Exception):
    """Base class for all library errors."""

    def to_dict(self) -> dict:
        out = {"error": type(self).__name__, "message": str(self)}
        out.update(getattr(self, "details", {}) or {})
        return out


class InvalidArgument(FrameForgeError, ValueError):
    pass


class EmptySpectrum(FrameForgeError, ValueError):
    pass


class RankDeficiency(FrameForgeError):
    def __init__(self, k: int, ratio: float):
        super().__init__(f"basis function {k} is numerically dependent (norm ratio {ratio:.3e})")
        self.details = {"k": k, "ratio": ratio}


class CompletenessFailure(FrameForgeError):
    """Least squares did not reach the requested residual within the size cap."""

    def __init__(self, best_residual: float, n_terms: int, eta: float, approximation=None):
        super().__init__(
            f"residual {best_residual:.6g} with N={n_terms} terms did not reach eta={eta:.6g}"
        )
        self.approximation = approximation
        self.details = {"best_residual": best_residual, "n_terms": n_terms, "eta": eta}


class CorrectionInfeasible(FrameForgeError):
    """No verified correction polynomial within the degree cap."""

    def __init__(self, message: str, achieved: dict, min_degree: float | None = None):
        super().__init__(message)
        self.achieved = achieved
        self.min_degree = min_degree
        self.details = {"achieved": achieved, "min_degree": min_degree}


class DecompositionFailure(FrameForgeError):
    def __init__(self, l: int, achieved: float, eps: float):
        super().__init__(f"partial sum {l}: best |B| = {achieved:.6g} not below eps = {eps:.6g}")
        self.details = {"l": l, "achieved": achieved, "eps": eps}


class ParameterCollapse(FrameForgeError):
    pass


class IllConditionedSystem(FrameForgeError):
    def __init__(self, cond: float):
        super().__init__(f"Gram matrix condition number {cond:.3e} exceeds limit")
        self.details = {"condition": cond}


class DependencyError(FrameForgeError):
    pass


class DegenerateWeight(FrameForgeError):
    pass


class UndefinedRatio(FrameForgeError, ZeroDivisionError):
    pass


class InductionAborted(FrameForgeError):
    """A step of the induction violated one of its inequalities."""

    def __init__(self, k: int, check: str, achieved: dict):
        super().__init__(f"step {k}: {check} failed ({achieved})")
        self.details = {"k": k, "check": check, "achieved": achieved}


class ConfigError(FrameForgeError):
    pass
