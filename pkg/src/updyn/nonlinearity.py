"""Bounded Lipschitz nonlinearity descriptors with randomized spot checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Nonlinearity:
    """Evaluator together with its declared sup bound and Lipschitz constant.

    ``func`` maps arrays of shape (..., dim) to arrays of the same shape;
    the declared constants are claims about the map on all of R^dim and are
    only spot-checked, never inferred.
    """

    func: Callable[[np.ndarray], np.ndarray]
    bound: float
    lipschitz: float
    name: str = ""

    def __post_init__(self):
        if not (self.bound > 0.0):
            raise DomainError("declared sup bound must be positive")
        if self.lipschitz < 0.0:
            raise DomainError("declared Lipschitz constant must be non-negative")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.func(np.asarray(x, dtype=float))

    @staticmethod
    def zero(dim: int) -> "Nonlinearity":
        def z(x):
            return np.zeros_like(np.asarray(x, dtype=float))
        return Nonlinearity(z, bound=np.finfo(float).tiny, lipschitz=0.0, name="zero")


@dataclass(frozen=True)
class SpotCheck:
    """Worst observed violations of the declared constants on random pairs."""

    pairs: int
    bound_excess: float
    lipschitz_excess: float

    @property
    def bound_ok(self) -> bool:
        return self.bound_excess <= 1e-9

    @property
    def lipschitz_ok(self) -> bool:
        return self.lipschitz_excess <= 1e-9


def spot_check(nl: Nonlinearity, dim: int, pairs: int = 1000, seed: int = 1404,
               scale: float = 3.0) -> SpotCheck:
    """Test |f| <= bound and the Lipschitz estimate on ``pairs`` random pairs."""
    rng = np.random.default_rng(seed)
    x = scale * rng.standard_normal((pairs, dim))
    y = scale * rng.standard_normal((pairs, dim))
    fx, fy = nl(x), nl(y)
    norm_f = np.linalg.norm(np.concatenate([fx, fy]), axis=1)
    gap = np.linalg.norm(fx - fy, axis=1) - nl.lipschitz * np.linalg.norm(x - y, axis=1)
    return SpotCheck(
        pairs=pairs,
        bound_excess=float(norm_f.max() - nl.bound),
        lipschitz_excess=float(gap.max()),
    )
