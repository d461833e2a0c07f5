"""Chaotic scalar source and grid-sampled function carriers.

The logistic map at r = 3.91 supplies the scalar orbit that drives every
construction in this package.  Filtering the orbit's piecewise-constant
interpolant through a decaying exponential yields a bounded, uniformly
continuous scalar function; the truncated weighted sup-metric compares
grid functions on symmetric windows around the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridMismatchError

LOGISTIC_R = 3.91
DEFAULT_SEED = 0.41
DEFAULT_BURN_IN = 1000
WARMUP_UNITS = 20
_EPS = float(np.finfo(float).eps)


def logistic_step(x: float, r: float = LOGISTIC_R) -> float:
    """One step of the logistic map x -> r*x*(1-x) on [0, 1]."""
    if not (0.0 <= x <= 1.0) or not math.isfinite(x):
        raise DomainError(f"logistic state must lie in [0, 1], got {x!r}")
    if not (0.0 < r <= 4.0):
        raise DomainError(f"logistic parameter must lie in (0, 4], got {r!r}")
    return r * x * (1.0 - x)


@dataclass(frozen=True)
class ScalarOrbit:
    """Finite window of a real-valued orbit with values in [0, 1].

    ``values[k]`` is the state at integer index ``base_index + k``.
    """

    base_index: int
    values: np.ndarray
    r: float = LOGISTIC_R

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise DomainError("orbit values must form a nonempty 1-d array")
        if not np.all(np.isfinite(vals)) or vals.min() < 0.0 or vals.max() > 1.0:
            raise DomainError("orbit values must lie in [0, 1]")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.size

    @property
    def end_index(self) -> int:
        """One past the last recorded index."""
        return self.base_index + len(self)

    def indices(self) -> np.ndarray:
        return self.base_index + np.arange(len(self))

    def value_at(self, i: int) -> float:
        k = i - self.base_index
        if not 0 <= k < len(self):
            raise DomainError(f"index {i} outside orbit window [{self.base_index}, {self.end_index})")
        return float(self.values[k])

    def rebased(self, base_index: int) -> "ScalarOrbit":
        """Same values re-anchored at a different starting index."""
        return ScalarOrbit(int(base_index), self.values, self.r)

    def recurrence_residuals(self) -> np.ndarray:
        """|v_{k+1} - r*v_k*(1 - v_k)| for every recorded pair."""
        v = self.values
        return np.abs(v[1:] - self.r * v[:-1] * (1.0 - v[:-1]))

    def validate(self) -> None:
        res = self.recurrence_residuals()
        if res.size and res.max() > 4.0 * _EPS:
            raise DomainError(f"orbit violates the logistic recurrence by {res.max():.3e}")


def logistic_orbit(seed: float, burn_in: int = DEFAULT_BURN_IN, length: int = 1000,
                   r: float = LOGISTIC_R) -> ScalarOrbit:
    """Forward logistic orbit: discard ``burn_in`` iterates, record ``length``.

    The recorded window starts at index 0 with the post-burn-in state.
    Seeds 0 and 1 are rejected since their orbits collapse immediately.
    """
    if not (0.0 < seed < 1.0):
        raise DomainError(f"seed must lie strictly inside (0, 1), got {seed!r}")
    if burn_in < 0:
        raise DomainError("burn_in must be non-negative")
    if length < 1:
        raise DomainError("length must be at least 1")
    x = float(seed)
    for _ in range(int(burn_in)):
        x = r * x * (1.0 - x)
    out = np.empty(int(length))
    for k in range(int(length)):
        out[k] = x
        x = r * x * (1.0 - x)
    return ScalarOrbit(0, out, r)


@dataclass(frozen=True)
class PiecewiseConstantFunction:
    """Right-continuous step function equal to ``levels[i]`` on [i, i+1)."""

    base_index: int
    levels: np.ndarray

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        if lv.ndim != 1 or lv.size == 0:
            raise DomainError("levels must form a nonempty 1-d array")
        object.__setattr__(self, "levels", lv)

    @classmethod
    def from_orbit(cls, orbit: ScalarOrbit) -> "PiecewiseConstantFunction":
        return cls(orbit.base_index, orbit.values)

    @property
    def t_start(self) -> float:
        return float(self.base_index)

    @property
    def t_end(self) -> float:
        return float(self.base_index + self.levels.size)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.floor(t).astype(int) - self.base_index
        if np.any(k < 0) or np.any(k >= self.levels.size):
            raise DomainError("evaluation time outside the recorded window")
        return self.levels[k]


@dataclass(frozen=True)
class GridFunction:
    """Uniformly sampled vector function: sample ``k`` sits at ``t_start + k*step``."""

    t_start: float
    step: float
    samples: np.ndarray

    def __post_init__(self):
        if not (self.step > 0.0) or not math.isfinite(self.step):
            raise DomainError(f"grid step must be positive, got {self.step!r}")
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise DomainError("samples must form a nonempty (n, m) array")
        if not np.all(np.isfinite(arr)):
            raise DomainError("grid samples must all be finite")
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def t_end(self) -> float:
        return self.t_start + (len(self) - 1) * self.step

    def times(self) -> np.ndarray:
        return self.t_start + self.step * np.arange(len(self))

    def norms(self) -> np.ndarray:
        """Euclidean norm of every sample."""
        return np.linalg.norm(self.samples, axis=1)

    def sup_norm(self) -> float:
        return float(self.norms().max())

    def index_at(self, t: float) -> int:
        j = round((t - self.t_start) / self.step)
        if abs(self.t_start + j * self.step - t) > 1e-6 * self.step or not 0 <= j < len(self):
            raise DomainError(f"time {t!r} is not a grid node of this function")
        return int(j)

    def value_at(self, t: float) -> np.ndarray:
        return self.samples[self.index_at(t)]

    def restrict(self, t0: float, t1: float) -> "GridFunction":
        """Restriction to [t0, t1]; both endpoints must be grid nodes."""
        i0, i1 = self.index_at(t0), self.index_at(t1)
        if i1 < i0:
            raise DomainError("empty restriction window")
        return GridFunction(self.t_start + i0 * self.step, self.step, self.samples[i0:i1 + 1])

    def same_grid(self, other: "GridFunction") -> bool:
        return (len(self) == len(other)
                and abs(self.t_start - other.t_start) <= 1e-9 * max(1.0, abs(self.t_start))
                and abs(self.step - other.step) <= 1e-12 * self.step)

    def require_same_grid(self, other: "GridFunction") -> None:
        if not self.same_grid(other):
            raise GridMismatchError("grid functions do not share a sampling grid")


@dataclass(frozen=True)
class ExponentialFilter:
    """Exact evaluator of the exponentially filtered step interpolant of an orbit.

    With decay a and node values h_i, the filtered signal obeys
    h(i + u) = exp(-a*u)*h_i + (kappa_i/a)*(1 - exp(-a*u)) on each unit
    interval, which this class evaluates in closed form.  The left edge is
    initialised at the steady value kappa_0/a; after ``WARMUP_UNITS`` units
    the influence of that choice is below 1e-17.
    """

    orbit: ScalarOrbit
    decay: float
    node_values: np.ndarray

    @classmethod
    def from_orbit(cls, orbit: ScalarOrbit, decay: float = 2.0) -> "ExponentialFilter":
        if not decay > 0.0:
            raise DomainError("decay rate must be positive")
        kappa = orbit.values
        n = kappa.size
        nodes = np.empty(n + 1)
        nodes[0] = kappa[0] / decay
        fade = math.exp(-decay)
        gain = (1.0 - fade) / decay
        acc = nodes[0]
        for i in range(n):
            acc = fade * acc + gain * kappa[i]
            nodes[i + 1] = acc
        return cls(orbit, float(decay), nodes)

    @property
    def t_start(self) -> float:
        return float(self.orbit.base_index)

    @property
    def t_end(self) -> float:
        return float(self.orbit.end_index)

    @property
    def usable_start(self) -> float:
        """Left edge of the window unaffected by the steady-state warm start."""
        return self.t_start + WARMUP_UNITS

    def eval(self, t) -> np.ndarray:
        """Closed-form values at arbitrary times inside the orbit window."""
        t = np.asarray(t, dtype=float)
        rel = t - self.t_start
        n = len(self.orbit)
        if np.any(rel < -1e-9) or np.any(rel > n + 1e-9):
            raise DomainError("evaluation time outside the filtered window")
        i = np.clip(np.floor(rel).astype(int), 0, n - 1)
        u = rel - i
        damp = np.exp(-self.decay * u)
        return damp * self.node_values[i] + (self.orbit.values[i] / self.decay) * (1.0 - damp)


def convolve_exponential(orbit: ScalarOrbit, decay: float = 2.0, step: float = 0.05,
                         warmup: int = WARMUP_UNITS) -> GridFunction:
    """Filter the orbit's step interpolant through exp(-decay*t) on a grid.

    Returns the scalar grid function on [base + warmup, base + n]; the warm-up
    prefix absorbs the steady-state initialisation of the infinite past.
    ``step`` must divide the unit interval exactly.
    """
    per_unit = round(1.0 / step)
    if per_unit < 1 or abs(per_unit * step - 1.0) > 1e-9:
        raise DomainError(f"step {step!r} does not divide the unit interval")
    n = len(orbit)
    if n <= warmup:
        raise DomainError(f"orbit spans {n} units, shorter than the {warmup}-unit warm-up")
    filt = ExponentialFilter.from_orbit(orbit, decay)
    t0 = orbit.base_index + warmup
    count = (n - warmup) * per_unit + 1
    times = t0 + step * np.arange(count)
    return GridFunction(float(t0), float(step), filt.eval(times))


def quadrature_oracle(filt: ExponentialFilter, t: float, depth: float = 40.0) -> float:
    """Independent evaluation of the filtering integral by adaptive quadrature.

    Integrates exp(-decay*(t-s)) * mu(s) over [t - depth, t] with the step
    interpolant mu as a black box; the omitted tail is exponentially small.
    Used as the cross-check for the closed-form recurrence, never as its
    replacement.
    """
    from scipy.integrate import quad

    mu = PiecewiseConstantFunction.from_orbit(filt.orbit)
    lo = t - depth
    if lo < filt.t_start - 1e-9 or t > filt.t_end + 1e-9:
        raise DomainError("oracle window leaves the recorded orbit")
    top = filt.t_end - 1e-9

    def integrand(s):
        return math.exp(-filt.decay * (t - s)) * float(mu(min(s, top)))

    breaks = [float(b) for b in range(math.ceil(lo), math.floor(t) + 1) if lo < b < t]
    value, _ = quad(integrand, lo, t, points=breaks or None,
                    limit=max(200, 4 * len(breaks)), epsabs=1e-13, epsrel=1e-12)
    return float(value)


def bebutov_distance(u: GridFunction, v: GridFunction, terms: int) -> float:
    """Truncated weighted sup-metric sum_{j=1..terms} 2^-j * min(1, sup_{|s|<=j} |u-v|).

    Both functions must share one grid covering [-terms, terms].
    """
    if terms < 1:
        raise DomainError("terms must be at least 1")
    u.require_same_grid(v)
    if u.t_start > -terms + 1e-9 or u.t_end < terms - 1e-9:
        raise DomainError(f"grid [{u.t_start}, {u.t_end}] does not cover [-{terms}, {terms}]")
    dist = np.linalg.norm(u.samples - v.samples, axis=1)
    total = 0.0
    for j in range(1, terms + 1):
        lo = max(0, math.ceil((-j - u.t_start) / u.step - 1e-9))
        hi = min(len(u) - 1, math.floor((j - u.t_start) / u.step + 1e-9))
        total += 0.5 ** j * min(1.0, float(dist[lo:hi + 1].max()))
    return total
