"""Robust-design problem definitions.

A problem bundles the design space, the random input variables driven by the
design vector, the (vectorized) black-box model, and the weights/constants
that turn statistical moments into an objective and constraints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr

TRUNCATED_GAUSSIAN = "truncated_gaussian"
UNIFORM = "uniform"

# Half-width of the default truncation window, in standard deviations.
TRUNCATION_SIGMAS = 3.0


class ProblemError(ValueError):
    """Raised for invalid problem definitions or evaluation inputs."""


@dataclass(frozen=True)
class Marginal:
    """One independent input random variable.

    The mean is either a fixed scalar (``mean``) or tied to a design variable
    (``design_index``); exactly one of the two must be given.  Truncated
    Gaussians default to a symmetric window of +-3 standard deviations around
    the mean, clipped to the driving design variable's global bounds.  Uniform
    marginals use ``lower``/``upper`` as their support; when design-driven the
    support keeps its width and re-centers on the design value.
    """

    kind: str
    std_dev: float | None = None
    mean: float | None = None
    design_index: int | None = None
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (TRUNCATED_GAUSSIAN, UNIFORM):
            raise ProblemError(f"unknown marginal kind {self.kind!r}")
        if (self.mean is None) == (self.design_index is None):
            raise ProblemError("exactly one of mean/design_index must be set")
        if self.design_index is not None and self.design_index < 0:
            raise ProblemError("design_index must be non-negative")
        if self.kind == TRUNCATED_GAUSSIAN:
            if self.std_dev is None or not (self.std_dev > 0):
                raise ProblemError("truncated Gaussian needs std_dev > 0")
            if (self.lower is None) != (self.upper is None):
                raise ProblemError("give both truncation bounds or neither")
            if self.lower is not None:
                if self.design_index is not None:
                    raise ProblemError(
                        "explicit truncation bounds require a fixed mean "
                        "(design-driven marginals use mean +- 3 sigma)"
                    )
                self._check_bounds(self.lower, self.upper)
                mass = ndtr((self.upper - self.mean) / self.std_dev) - ndtr(
                    (self.lower - self.mean) / self.std_dev
                )
                if not mass > 0.0:
                    raise ProblemError("no probability mass inside truncation bounds")
        else:
            if self.lower is None or self.upper is None:
                raise ProblemError("uniform marginal needs lower and upper")
            self._check_bounds(self.lower, self.upper)

    @staticmethod
    def _check_bounds(lower: float, upper: float) -> None:
        if not (np.isfinite(lower) and np.isfinite(upper) and lower < upper):
            raise ProblemError("bounds must be finite with lower < upper")

    def mean_at(self, design: np.ndarray) -> float:
        if self.design_index is not None:
            return float(design[self.design_index])
        return float(self.mean)

    def support(self, design: np.ndarray, space: "DesignSpace") -> tuple[float, float]:
        """Support/truncation interval at the given design vector."""
        mean = self.mean_at(design)
        if self.kind == UNIFORM:
            if self.design_index is None:
                return float(self.lower), float(self.upper)
            half = 0.5 * (self.upper - self.lower)
            return mean - half, mean + half
        if self.lower is not None:
            return float(self.lower), float(self.upper)
        lo = mean - TRUNCATION_SIGMAS * self.std_dev
        hi = mean + TRUNCATION_SIGMAS * self.std_dev
        if self.design_index is not None:
            k = self.design_index
            lo = max(lo, float(space.lower[k]))
            hi = min(hi, float(space.upper[k]))
        return lo, hi


@dataclass(frozen=True)
class DesignSpace:
    """Axis-aligned box of admissible design vectors."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ProblemError("lower/upper must be 1-d arrays of equal length")
        if not np.all(np.isfinite(lower)) or not np.all(np.isfinite(upper)):
            raise ProblemError("design bounds must be finite")
        if not np.all(lower < upper):
            raise ProblemError("every design bound must satisfy lower < upper")

    @property
    def size(self) -> int:
        return self.lower.shape[0]

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, design: np.ndarray, tol: float = 1e-9) -> bool:
        d = np.asarray(design, dtype=float)
        return bool(
            d.shape == self.lower.shape
            and np.all(d >= self.lower - tol)
            and np.all(d <= self.upper + tol)
        )

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)


class CountingEvaluator:
    """Wraps a vectorized model and counts successfully evaluated rows.

    The wrapped callable must map an ``(L, N)`` input matrix to an ``(L, R)``
    response matrix and must be safe for concurrent invocation; the counter
    itself is only incremented after a successful call, so the count equals
    the number of response rows actually obtained from the true model.
    """

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], n_responses: int):
        self._fn = fn
        self.n_responses = int(n_responses)
        self.calls = 0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.asarray(self._fn(x), dtype=float)
        if out.ndim == 1:
            out = out[:, None]
        if out.shape != (x.shape[0], self.n_responses):
            raise ProblemError(
                f"model returned shape {out.shape}, expected "
                f"({x.shape[0]}, {self.n_responses})"
            )
        self.calls += x.shape[0]
        return out


def vectorize_model(fn: Callable, n_responses: int = 1) -> Callable[[np.ndarray], np.ndarray]:
    """Adapt a per-point model (x -> scalar or vector) to the matrix contract."""

    def wrapped(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        rows = [np.atleast_1d(np.asarray(fn(row), dtype=float)) for row in x]
        return np.stack(rows, axis=0)

    wrapped.n_responses = n_responses  # type: ignore[attr-defined]
    return wrapped


@dataclass(frozen=True)
class RdoProblem:
    """A robust design optimization problem.

    ``model`` maps an ``(L, N)`` matrix of input realizations to an
    ``(L, K+1)`` response matrix; column 0 is the objective response, columns
    1..K feed the constraints.  ``normalizers`` holds the frozen
    (initial-design mean, initial-design std) pair used to scale the
    objective; it is set once at the start of a run via
    :meth:`with_normalizers`.  Instances are immutable and safe to share
    across threads.
    """

    design_space: DesignSpace
    marginals: tuple[Marginal, ...]
    model: Callable[[np.ndarray], np.ndarray]
    weights: tuple[float, float] = (0.5, 0.5)
    alphas: tuple[float, ...] = ()
    normalizers: tuple[float, float] | None = None
    name: str = "custom"

    def __post_init__(self) -> None:
        object.__setattr__(self, "marginals", tuple(self.marginals))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        m = self.design_space.size
        if len(self.marginals) < m:
            raise ProblemError("need at least as many marginals as design variables")
        driven = set()
        for marg in self.marginals:
            if marg.design_index is not None:
                if marg.design_index >= m:
                    raise ProblemError(
                        f"marginal references design index {marg.design_index} "
                        f"outside 0..{m - 1}"
                    )
                driven.add(marg.design_index)
        if driven != set(range(m)):
            missing = sorted(set(range(m)) - driven)
            raise ProblemError(f"design variables {missing} drive no marginal")
        w1, w2 = self.weights
        if w1 < 0 or w2 < 0 or abs(w1 + w2 - 1.0) > 1e-12:
            raise ProblemError("weights must be non-negative and sum to 1")
        if any(a < 0 for a in self.alphas):
            raise ProblemError("constraint alphas must be non-negative")
        if self.normalizers is not None:
            mu0, sigma0 = self.normalizers
            if mu0 == 0 or sigma0 == 0 or not (math.isfinite(mu0) and math.isfinite(sigma0)):
                raise ProblemError("normalizers must be finite and non-zero")

    @property
    def n_inputs(self) -> int:
        return len(self.marginals)

    @property
    def n_design(self) -> int:
        return self.design_space.size

    @property
    def n_constraints(self) -> int:
        return len(self.alphas)

    @property
    def n_responses(self) -> int:
        return len(self.alphas) + 1

    def with_normalizers(self, mu0: float, sigma0: float) -> "RdoProblem":
        return replace(self, normalizers=(float(mu0), float(sigma0)))

    def mean_inputs(self, design: np.ndarray) -> np.ndarray:
        """Input vector obtained by setting every marginal to its mean."""
        design = np.asarray(design, dtype=float)
        return np.array([marg.mean_at(design) for marg in self.marginals])


def evaluate_objective(mean: float, std_dev: float, problem: RdoProblem) -> float:
    """Weighted sum of the normalized response mean and standard deviation."""
    if not (math.isfinite(mean) and math.isfinite(std_dev)):
        raise ProblemError("objective inputs must be finite")
    if std_dev < 0:
        raise ProblemError("std_dev must be non-negative")
    if problem.normalizers is None:
        raise ProblemError("problem normalizers are not set")
    mu0, sigma0 = problem.normalizers
    w1, w2 = problem.weights
    return w1 * mean / mu0 + w2 * std_dev / sigma0


def evaluate_constraint(mean: float, std_dev: float, alpha: float) -> float:
    """Robustness constraint value; <= 0 means feasible."""
    if not (math.isfinite(mean) and math.isfinite(std_dev) and math.isfinite(alpha)):
        raise ProblemError("constraint inputs must be finite")
    if std_dev < 0 or alpha < 0:
        raise ProblemError("std_dev and alpha must be non-negative")
    return alpha * std_dev - mean


def rastrigin(x: np.ndarray) -> np.ndarray | float:
    """Rastrigin test function, summed over the last axis."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    value = 10.0 * n + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x), axis=-1)
    return float(value) if value.ndim == 0 else value


def _rastrigin_model(x: np.ndarray) -> np.ndarray:
    return np.asarray(rastrigin(np.atleast_2d(x)))[:, None]


def make_rastrigin_problem(
    n_dims: int,
    sigma: float = 1.0 / 300.0,
    weights: tuple[float, float] = (0.5, 0.5),
) -> RdoProblem:
    """Rastrigin benchmark: each input is a truncated Gaussian centered on a
    design variable, with bounds -5.12 <= d_k <= 5.12."""
    bound = 5.12
    space = DesignSpace(np.full(n_dims, -bound), np.full(n_dims, bound))
    marginals = tuple(
        Marginal(TRUNCATED_GAUSSIAN, std_dev=sigma, design_index=i) for i in range(n_dims)
    )
    return RdoProblem(
        design_space=space,
        marginals=marginals,
        model=_rastrigin_model,
        weights=weights,
        name=f"rastrigin{n_dims}d",
    )


def _bowl_model(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    return np.sum((x - 1.0) ** 2, axis=-1)[:, None]


def make_bowl_problem(
    n_dims: int = 2,
    sigma: float = 0.05,
    weights: tuple[float, float] = (0.5, 0.5),
) -> RdoProblem:
    """Smooth convex sanity problem with its optimum at all-ones."""
    space = DesignSpace(np.full(n_dims, -4.0), np.full(n_dims, 6.0))
    marginals = tuple(
        Marginal(TRUNCATED_GAUSSIAN, std_dev=sigma, design_index=i) for i in range(n_dims)
    )
    return RdoProblem(
        design_space=space,
        marginals=marginals,
        model=_bowl_model,
        weights=weights,
        name=f"bowl{n_dims}d",
    )


def _double_well_model(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
    well = ((x1 - 0.8) * (x1 - 2.0)) ** 2 - 0.6 * np.exp(-(((x1 - 2.0) / 0.25) ** 2))
    y0 = 1.0 + well + 0.5 * (x2 - 1.0) ** 2 + 0.5 * (x3 - 1.0) ** 2
    y1 = 1.2 - x1
    return np.stack([y0, y1], axis=1)


def make_double_well_problem(
    sigma: float = 0.02,
    weights: tuple[float, float] = (0.5, 0.5),
) -> RdoProblem:
    """Constrained multi-response problem with two design variables.

    The objective response has a deep well near d_0 = 2 and a shallow one near
    d_0 = 0.8; the constraint response makes the deep well infeasible, so a
    correct solver must settle in the shallow basin.  The second design
    variable drives two input variables, exercising the many-inputs-per-design
    mapping.
    """
    space = DesignSpace(np.array([0.0, 0.0]), np.array([3.0, 3.0]))
    marginals = (
        Marginal(TRUNCATED_GAUSSIAN, std_dev=sigma, design_index=0),
        Marginal(TRUNCATED_GAUSSIAN, std_dev=sigma, design_index=1),
        Marginal(TRUNCATED_GAUSSIAN, std_dev=sigma, design_index=1),
    )
    return RdoProblem(
        design_space=space,
        marginals=marginals,
        model=_double_well_model,
        weights=weights,
        alphas=(3.0,),
        name="doublewell3d",
    )


BUILTIN_PROBLEMS: dict[str, Callable[..., RdoProblem]] = {
    "rastrigin2d": lambda **kw: make_rastrigin_problem(2, **kw),
    "rastrigin10d": lambda **kw: make_rastrigin_problem(10, **kw),
    "bowl2d": lambda **kw: make_bowl_problem(2, **kw),
    "doublewell3d": make_double_well_problem,
}


def get_builtin_problem(name: str, **kwargs) -> RdoProblem:
    try:
        factory = BUILTIN_PROBLEMS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_PROBLEMS))
        raise ProblemError(f"unknown problem {name!r}; built-ins: {known}") from None
    return factory(**kwargs)
