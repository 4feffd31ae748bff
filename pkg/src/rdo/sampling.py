"""Deterministic sample generators and the uniform-to-physical transform.

All generators are pure functions of their parameters and seed; repeated
calls with the same arguments return identical matrices.  The reference
uniform space is fixed to the unit cube, so a Sobol sample can be reused
across design iterations and mapped into physical space with
:func:`inverse_transform`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import qmc

from .problem import TRUNCATED_GAUSSIAN, UNIFORM, ProblemError, RdoProblem

UNIT_CUBE = "unit_cube"
U_SPACE = "u_space"
X_SPACE = "x_space"

_DOMAINS = (UNIT_CUBE, U_SPACE, X_SPACE)


class SamplingError(ValueError):
    """Raised for invalid sampling parameters."""


@dataclass(frozen=True)
class SampleMatrix:
    """Sample points tagged with the space they live in."""

    points: np.ndarray
    domain: str = X_SPACE

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)
        if self.domain not in _DOMAINS:
            raise SamplingError(f"unknown sample domain {self.domain!r}")
        if self.domain == UNIT_CUBE and pts.size:
            if pts.min() < -1e-12 or pts.max() > 1.0 + 1e-12:
                raise SamplingError("unit-cube samples must lie in [0, 1]")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _as_bounds(bounds) -> np.ndarray:
    arr = np.asarray(bounds, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise SamplingError("bounds must be an (n_dims, 2) array of intervals")
    if not np.all(np.isfinite(arr)):
        raise SamplingError("bounds must be finite")
    if not np.all(arr[:, 0] < arr[:, 1]):
        raise SamplingError("every interval must satisfy lower < upper")
    return arr


def lhs_sample(n: int, bounds, seed: int, domain: str = X_SPACE) -> SampleMatrix:
    """Latin hypercube sample: one point per axis-aligned stratum per
    dimension, scaled to the given per-dimension intervals."""
    if n < 1:
        raise SamplingError("need at least one sample")
    box = _as_bounds(bounds)
    sampler = qmc.LatinHypercube(d=box.shape[0], seed=seed)
    unit = sampler.random(n)
    points = box[:, 0] + unit * (box[:, 1] - box[:, 0])
    return SampleMatrix(points, domain)


def sobol_sample(n: int, dim: int, seed: int | None = None) -> SampleMatrix:
    """First ``n`` points of a Sobol sequence on the unit cube.

    ``seed=None`` yields the plain (unscrambled) sequence starting at the
    origin; an integer seed applies Owen scrambling.
    """
    if dim < 1:
        raise SamplingError("dimension must be >= 1")
    if n < 0:
        raise SamplingError("sample count must be non-negative")
    try:
        engine = qmc.Sobol(d=dim, scramble=seed is not None, seed=seed)
    except ValueError as exc:
        raise SamplingError(
            f"Sobol dimension {dim} exceeds the available direction numbers"
        ) from exc
    if n == 0:
        return SampleMatrix(np.empty((0, dim)), UNIT_CUBE)
    points = engine.random_base2(max(0, math.ceil(math.log2(n))))[:n]
    # Scrambling can round to exactly 1.0 in float32 space; keep inside the cube.
    return SampleMatrix(np.clip(points, 0.0, np.nextafter(1.0, 0.0)), UNIT_CUBE)


def _check_trunc_args(std: float, lower: float, upper: float) -> tuple[float, float, float]:
    if not std > 0:
        raise SamplingError("std must be positive")
    if not lower < upper:
        raise SamplingError("truncation bounds must satisfy lower < upper")
    return float(std), float(lower), float(upper)


def trunc_gauss_cdf(x, mean: float, std: float, lower: float, upper: float):
    """CDF of a Gaussian truncated to [lower, upper]."""
    std, lower, upper = _check_trunc_args(std, lower, upper)
    z_lo = ndtr((lower - mean) / std)
    mass = ndtr((upper - mean) / std) - z_lo
    if not mass > 0.0:
        raise SamplingError("no probability mass inside truncation bounds")
    x = np.asarray(x, dtype=float)
    p = (ndtr((np.clip(x, lower, upper) - mean) / std) - z_lo) / mass
    p = np.clip(p, 0.0, 1.0)
    return float(p) if p.ndim == 0 else p


def trunc_gauss_inv_cdf(p, mean: float, std: float, lower: float, upper: float):
    """Inverse CDF of a truncated Gaussian; maps p=0/1 to the bounds exactly."""
    std, lower, upper = _check_trunc_args(std, lower, upper)
    p = np.asarray(p, dtype=float)
    if p.size and (p.min() < -1e-12 or p.max() > 1.0 + 1e-12):
        raise SamplingError("probabilities must lie in [0, 1]")
    z_lo = ndtr((lower - mean) / std)
    mass = ndtr((upper - mean) / std) - z_lo
    if not mass > 0.0:
        raise SamplingError("no probability mass inside truncation bounds")
    with np.errstate(divide="ignore", invalid="ignore"):
        x = mean + std * ndtri(z_lo + np.clip(p, 0.0, 1.0) * mass)
    x = np.clip(x, lower, upper)
    return float(x) if x.ndim == 0 else x


def _marginal_params(problem: RdoProblem, design: np.ndarray):
    """Resolved (kind, mean, std, lower, upper) per input at a design."""
    design = np.asarray(design, dtype=float)
    if design.shape != (problem.n_design,):
        raise ProblemError(
            f"design vector has shape {design.shape}, expected ({problem.n_design},)"
        )
    out = []
    for marg in problem.marginals:
        lo, hi = marg.support(design, problem.design_space)
        out.append((marg.kind, marg.mean_at(design), marg.std_dev, lo, hi))
    return out


def inverse_transform(u, design, problem: RdoProblem):
    """Map uniform-space points on [0, 1]^N to physical space at a design.

    Accepts a single vector or an (L, N) matrix; each coordinate goes through
    the inverse CDF of its marginal with the mean taken from the design
    vector where the marginal is design-driven.
    """
    u_arr = np.asarray(u, dtype=float)
    single = u_arr.ndim == 1
    u_mat = np.atleast_2d(u_arr)
    if u_mat.shape[1] != problem.n_inputs:
        raise SamplingError(
            f"expected {problem.n_inputs} columns, got {u_mat.shape[1]}"
        )
    if u_mat.size and (u_mat.min() < -1e-12 or u_mat.max() > 1.0 + 1e-12):
        raise SamplingError("uniform-space samples must lie in [0, 1]")
    x = np.empty_like(u_mat)
    for i, (kind, mean, std, lo, hi) in enumerate(_marginal_params(problem, design)):
        p = np.clip(u_mat[:, i], 0.0, 1.0)
        if kind == TRUNCATED_GAUSSIAN:
            x[:, i] = trunc_gauss_inv_cdf(p, mean, std, lo, hi)
        else:
            x[:, i] = lo + p * (hi - lo)
    return x[0] if single else x


def forward_transform(x, design, problem: RdoProblem):
    """Inverse of :func:`inverse_transform`: physical points to [0, 1]^N."""
    x_arr = np.asarray(x, dtype=float)
    single = x_arr.ndim == 1
    x_mat = np.atleast_2d(x_arr)
    if x_mat.shape[1] != problem.n_inputs:
        raise SamplingError(
            f"expected {problem.n_inputs} columns, got {x_mat.shape[1]}"
        )
    u = np.empty_like(x_mat)
    for i, (kind, mean, std, lo, hi) in enumerate(_marginal_params(problem, design)):
        if kind == TRUNCATED_GAUSSIAN:
            u[:, i] = trunc_gauss_cdf(x_mat[:, i], mean, std, lo, hi)
        else:
            u[:, i] = np.clip((x_mat[:, i] - lo) / (hi - lo), 0.0, 1.0)
    return u[0] if single else u


def sample_inputs(problem: RdoProblem, design, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` pseudorandom input realizations at a design vector."""
    if n < 1:
        raise SamplingError("need at least one sample")
    rng = np.random.default_rng(seed)
    u = rng.random((n, problem.n_inputs))
    return inverse_transform(u, design, problem)
