"""Finite-horizon evidence for recurrence, separation, decay and sensitivity.

Nothing here proves a definitional property: the definitions quantify over
infinite index sets, while these scans cover a recorded window and say so.
Every report carries the scanned horizon, and every reported event can be
re-verified independently from the raw data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .chaos import GridFunction
from .constructs import VectorSequence
from .discrete import DiscreteSystemSpec, iterate
from .errors import DomainError, ResolutionError

DEFAULT_LADDER = (0.2, 0.1, 0.05, 0.02)
SEQUENCE_HORIZON = 10 ** 6
FUNCTION_HORIZON = 10 ** 4


@dataclass(frozen=True)
class NearReturn:
    """A shift under which the window re-approaches itself below ``target``."""

    target: float
    shift: int | None
    achieved: float | None
    window: int

    @property
    def found(self) -> bool:
        return self.shift is not None


@dataclass(frozen=True)
class SeparationEvent:
    """An offset at which the shifted signal separates by at least epsilon0."""

    shift: int
    offset: int
    separation: float
    center_time: float | None = None


@dataclass(frozen=True)
class UnpredictabilityEvidence:
    """Finite-horizon record of near returns and separations.

    Shifts and offsets count grid positions from the window start; for grid
    functions ``time_step`` converts them to times and ``interval_halfwidth``
    is the half-width over which the separation bound held at every node.
    """

    kind: str
    base_index: int
    return_times: tuple
    separation_times: tuple
    epsilon0_estimate: float
    scanned_horizon: int
    anchor: int = 0
    epsilon0_requested: float = 0.0
    time_step: float | None = None
    interval_halfwidth: float | None = None

    def found_shifts(self) -> list[int]:
        return [r.shift for r in self.return_times if r.found]

    def validate(self) -> None:
        shifts = self.found_shifts()
        if any(b <= a for a, b in zip(shifts, shifts[1:])):
            raise DomainError("recorded shifts must increase strictly")
        targets = [r.target for r in self.return_times]
        if any(b >= a for a, b in zip(targets, targets[1:])):
            raise DomainError("closeness ladder must decrease strictly")
        if self.separation_times:
            worst = min(s.separation for s in self.separation_times)
            if worst < self.epsilon0_estimate - 1e-12:
                raise DomainError("a recorded separation undercuts the epsilon0 estimate")


@dataclass(frozen=True)
class DecayReport:
    """First positions after which the running tail sup stays below each rung."""

    ladder: tuple
    monotone_tail_sup: tuple
    start: float
    spacing: float

    def crossing(self, epsilon: float) -> float | None:
        for rung, where in self.ladder:
            if rung == epsilon:
                return where
        raise DomainError(f"{epsilon!r} is not a ladder rung")


@dataclass(frozen=True)
class DivergenceReport:
    """Sensitivity probe: did two nearby starts separate past the threshold."""

    diverged: bool
    index: int | None
    slope: float | None
    threshold: float
    perturbation: float
    horizon: int


def _norm_rows(arr: np.ndarray) -> np.ndarray:
    return np.linalg.norm(arr, axis=1)


def _validate_ladder(ladder: Sequence[float]) -> list[float]:
    rungs = [float(r) for r in ladder]
    if not rungs or any(r <= 0 for r in rungs):
        raise DomainError("ladder rungs must be positive")
    if any(b >= a for a, b in zip(rungs, rungs[1:])):
        raise DomainError("ladder must decrease strictly")
    return rungs


def find_near_returns(seq: VectorSequence, window: int, ladder: Sequence[float],
                      horizon: int = SEQUENCE_HORIZON, chunk: int = 4096) -> list[NearReturn]:
    """Smallest strictly increasing shifts meeting each closeness rung.

    A shift z qualifies for rung delta when the whole comparison window
    satisfies max_{0<=i<=window} |seq_{i+z} - seq_i| < delta.  Rungs not met
    inside the horizon are reported with ``shift=None``.
    """
    rungs = _validate_ladder(ladder)
    values = seq.values
    n = len(seq)
    if window < 0 or window >= n - 1:
        raise DomainError("window must leave room for at least one shift")
    cap = min(int(horizon), n - 1 - window)
    head = values[:window + 1]
    anchor_gap = _norm_rows(values[1:cap + 1] - values[0])

    results: list[NearReturn] = []
    prev = 0
    offsets = np.arange(window + 1)
    for target in rungs:
        candidates = np.nonzero(anchor_gap[prev:] < target)[0] + prev + 1
        hit = None
        for lo in range(0, candidates.size, chunk):
            batch = candidates[lo:lo + chunk]
            if batch.size == 0:
                break
            gather = values[batch[:, None] + offsets[None, :]] - head[None, :, :]
            worst = np.sqrt((gather * gather).sum(-1)).max(1)
            ok = np.nonzero(worst < target)[0]
            if ok.size:
                hit = int(batch[ok[0]])
                achieved = float(worst[ok[0]])
                break
        if hit is None:
            results.append(NearReturn(target=target, shift=None, achieved=None, window=window))
        else:
            results.append(NearReturn(target=target, shift=hit, achieved=achieved, window=window))
            prev = hit
    return results


def find_separations(seq: VectorSequence, shifts: Sequence[int], epsilon0: float,
                     horizon: int = SEQUENCE_HORIZON) -> list[SeparationEvent]:
    """For each shift, the smallest offset with |seq_{shift+o} - seq_o| >= epsilon0."""
    if not epsilon0 > 0.0:
        raise DomainError("epsilon0 must be positive")
    values = seq.values
    n = len(seq)
    events = []
    for z in shifts:
        z = int(z)
        if not 1 <= z < n:
            raise DomainError(f"shift {z} outside the recorded window")
        cap = min(int(horizon), n - z - 1)
        gap = _norm_rows(values[z:z + cap + 1] - values[:cap + 1])
        hits = np.nonzero(gap >= epsilon0)[0]
        if hits.size:
            events.append(SeparationEvent(shift=z, offset=int(hits[0]),
                                          separation=float(gap[hits[0]])))
    return events


def separation_at(seq: VectorSequence, shift: int, offset: int) -> float:
    """Re-evaluate one separation directly from the data."""
    return float(np.linalg.norm(seq.values[offset + shift] - seq.values[offset]))


def collect_evidence(seq: VectorSequence, window: int = 20,
                     ladder: Sequence[float] = DEFAULT_LADDER, epsilon0: float = 0.3,
                     horizon: int = SEQUENCE_HORIZON) -> UnpredictabilityEvidence:
    """Run both scans and assemble the evidence record for a sequence."""
    returns = find_near_returns(seq, window, ladder, horizon)
    seps = find_separations(seq, [r.shift for r in returns if r.found], epsilon0, horizon)
    estimate = min((s.separation for s in seps), default=0.0)
    return UnpredictabilityEvidence(
        kind="sequence",
        base_index=seq.base_index,
        return_times=tuple(returns),
        separation_times=tuple(seps),
        epsilon0_estimate=float(estimate),
        scanned_horizon=int(horizon),
        anchor=0,
        epsilon0_requested=float(epsilon0),
    )


def evidence_for_function(phi: GridFunction, window: Sequence[float],
                          ladder: Sequence[float] = DEFAULT_LADDER, epsilon0: float = 0.2,
                          delta: float = 0.2, horizon: float = FUNCTION_HORIZON,
                          min_shift: float = 0.0) -> UnpredictabilityEvidence:
    """Grid analogue of the sequence scans with shifts on grid multiples.

    Near returns compare the compact span ``window`` (absolute times) under
    shifted copies; a separation event requires the bound to hold at every
    grid node of [u - delta, u + delta].  The grid must resolve delta with at
    least four nodes per half-width.  ``min_shift`` excludes the trivially
    small shifts a continuous signal always admits.
    """
    if phi.step > delta / 4.0 + 1e-12:
        raise ResolutionError(f"grid step {phi.step} exceeds delta/4 = {delta / 4.0}")
    rungs = _validate_ladder(ladder)
    w0, w1 = float(window[0]), float(window[1])
    j0, j1 = phi.index_at(w0), phi.index_at(w1)
    if j1 <= j0:
        raise DomainError("empty comparison span")
    values = phi.samples
    n = len(phi)
    cap = min(int(round(horizon / phi.step)), n - 1 - j1)
    if cap < 1:
        raise DomainError("no admissible shifts inside the grid")

    head = values[j0:j1 + 1]
    anchor_gap = _norm_rows(values[j0 + 1:j0 + cap + 1] - values[j0])
    offsets = np.arange(j0, j1 + 1)

    returns: list[NearReturn] = []
    prev = max(0, int(round(min_shift / phi.step)) - 1)
    for target in rungs:
        candidates = np.nonzero(anchor_gap[prev:] < target)[0] + prev + 1
        hit = None
        for lo in range(0, candidates.size, 4096):
            batch = candidates[lo:lo + 4096]
            if batch.size == 0:
                break
            gather = values[batch[:, None] + offsets[None, :]] - head[None, :, :]
            worst = np.sqrt((gather * gather).sum(-1)).max(1)
            ok = np.nonzero(worst < target)[0]
            if ok.size:
                hit = int(batch[ok[0]])
                achieved = float(worst[ok[0]])
                break
        if hit is None:
            returns.append(NearReturn(target=target, shift=None, achieved=None, window=j1 - j0))
        else:
            returns.append(NearReturn(target=target, shift=hit, achieved=achieved, window=j1 - j0))
            prev = hit

    half = int(round(delta / phi.step))
    run = 2 * half + 1
    seps: list[SeparationEvent] = []
    for ret in returns:
        if not ret.found:
            continue
        z = ret.shift
        gap = _norm_rows(values[z:] - values[:n - z])
        good = (gap >= epsilon0).astype(int)
        if good.size >= run:
            streak = np.convolve(good, np.ones(run, dtype=int), mode="valid")
            centers = np.nonzero(streak == run)[0]
            if centers.size:
                u = int(centers[0]) + half
                seps.append(SeparationEvent(
                    shift=z, offset=u, separation=float(gap[u]),
                    center_time=float(phi.t_start + u * phi.step)))
    estimate = min((s.separation for s in seps), default=0.0)
    return UnpredictabilityEvidence(
        kind="function",
        base_index=0,
        return_times=tuple(returns),
        separation_times=tuple(seps),
        epsilon0_estimate=float(estimate),
        scanned_horizon=int(cap),
        anchor=j0,
        epsilon0_requested=float(epsilon0),
        time_step=phi.step,
        interval_halfwidth=half * phi.step,
    )


def verify_evidence(data: Union[VectorSequence, GridFunction],
                    evidence: UnpredictabilityEvidence) -> bool:
    """Plain re-check of every recorded event straight from the raw data."""
    values = data.values if isinstance(data, VectorSequence) else data.samples
    for ret in evidence.return_times:
        if not ret.found:
            continue
        worst = 0.0
        for i in range(evidence.anchor, evidence.anchor + ret.window + 1):
            worst = max(worst, float(np.linalg.norm(values[i + ret.shift] - values[i])))
        if not worst < ret.target:
            return False
        if abs(worst - ret.achieved) > 1e-12:
            return False
    for sep in evidence.separation_times:
        gap = float(np.linalg.norm(values[sep.offset + sep.shift] - values[sep.offset]))
        if abs(gap - sep.separation) > 1e-12 or gap < evidence.epsilon0_estimate - 1e-12:
            return False
    if evidence.kind == "function" and evidence.interval_halfwidth is not None:
        half = int(round(evidence.interval_halfwidth / evidence.time_step))
        for sep in evidence.separation_times:
            lo, hi = sep.offset - half, sep.offset + half
            if lo < 0 or hi + sep.shift >= len(values):
                return False
            for i in range(lo, hi + 1):
                if np.linalg.norm(values[i + sep.shift] - values[i]) < evidence.epsilon0_requested - 1e-12:
                    return False
    evidence.validate()
    return True


def decay_test(tail: Union[VectorSequence, GridFunction],
               ladder: Sequence[float]) -> DecayReport:
    """Locate, per rung, the first position whose running tail sup stays below it."""
    rungs = _validate_ladder(ladder)
    if isinstance(tail, VectorSequence):
        norms = tail.norms()
        start, spacing = float(tail.base_index), 1.0
    else:
        norms = tail.norms()
        start, spacing = tail.t_start, tail.step
    suffix = np.maximum.accumulate(norms[::-1])[::-1]
    entries = []
    for rung in rungs:
        hit = np.nonzero(suffix < rung)[0]
        entries.append((rung, start + spacing * int(hit[0]) if hit.size else None))
    stride = max(1, suffix.size // 512)
    profile = tuple(float(x) for x in suffix[::stride])
    return DecayReport(ladder=tuple(entries), monotone_tail_sup=profile,
                       start=start, spacing=spacing)


def sensitivity_demo(generator: Union[Callable[[float], float], DiscreteSystemSpec],
                     x0, perturbation: float, threshold: float,
                     horizon: int = FUNCTION_HORIZON) -> DivergenceReport:
    """Iterate two trajectories from nearby starts and watch their gap.

    ``generator`` is a scalar map or a discrete system spec.  The report
    gives the first index whose separation reaches the threshold and the
    least-squares slope of log separation up to that index; staying together
    for the whole horizon is a valid outcome.
    """
    if not 0.0 <= perturbation < threshold:
        raise DomainError("perturbation must be non-negative and below the threshold")
    if isinstance(generator, DiscreteSystemSpec):
        steps = min(int(horizon), len(generator.forcing) - 1)
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        shifted = x0 + perturbation / math.sqrt(x0.size)
        a = iterate(generator, x0, steps)
        b = iterate(generator, shifted, steps)
        gaps = np.linalg.norm(a.values - b.values, axis=1)
    else:
        steps = int(horizon)
        gaps = np.empty(steps + 1)
        x, y = float(x0), float(x0) + perturbation
        for j in range(steps + 1):
            gaps[j] = abs(x - y)
            x, y = generator(x), generator(y)

    hits = np.nonzero(gaps >= threshold)[0]
    if hits.size == 0:
        return DivergenceReport(False, None, None, threshold, perturbation, steps)
    k = int(hits[0])
    slope = None
    mask = gaps[:k + 1] > 0.0
    if mask.sum() >= 2:
        t = np.nonzero(mask)[0]
        slope = float(np.polyfit(t, np.log(gaps[t]), 1)[0])
    return DivergenceReport(True, k, slope, threshold, perturbation, steps)
