"""Ingestion of interval-censored observations and the reduced time grid.

Raw data are intervals ``(L, R]`` with ``0 <= L < R <= inf``.  Intervals whose
left endpoint lies below the smallest right endpoint (the set called
``left_set`` here) force ``log F(L) = -inf`` at the maximiser, so those left
endpoints are dropped from the grid.  What remains is the finite grid
``tau[0] < ... < tau[m-1]`` and, for every distinct interval, a pair of
1-based grid indices ``(l, r)`` with ``l = 0`` meaning "below tau_1" and
``r = m + 1`` meaning ``+inf``.
"""
from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .exceptions import InvalidInterval

INF = math.inf


class ObsClass(enum.IntEnum):
    """Membership of an observation in the left set / right-censored set."""

    LEFT_ONLY = 0  # l = 0, r <= m: contributes w * phi_r
    RIGHT_ONLY = 1  # l >= 1, r = m + 1: contributes w * log(1 - e^{phi_l})
    INTERIOR = 2  # l >= 1, r <= m: contributes w * log(e^{phi_r} - e^{phi_l})
    BOTH = 3  # l = 0, r = m + 1: contributes nothing


@dataclass(frozen=True, order=True)
class IntervalObservation:
    """A distinct censoring interval ``(left, right]`` seen ``weight`` times."""

    left: float
    right: float
    weight: int = 1

    def __post_init__(self):
        _check_interval(self.left, self.right)
        if self.weight < 1:
            raise InvalidInterval(f"weight must be >= 1, got {self.weight}")

    @property
    def right_censored(self) -> bool:
        return self.right == INF


def _check_interval(left, right):
    if math.isnan(left) or math.isnan(right):
        raise InvalidInterval(f"NaN endpoint in ({left}, {right}]")
    if left < 0:
        raise InvalidInterval(f"negative left endpoint in ({left}, {right}]")
    if not left < right:
        raise InvalidInterval(f"need left < right, got ({left}, {right}]")
    if left == INF:
        raise InvalidInterval("left endpoint cannot be infinite")
    if left == 0 and right == INF:
        raise InvalidInterval("(0, inf] carries no information")


def dedupe(raw: Iterable[tuple[float, float]]) -> list[IntervalObservation]:
    """Collapse repeated intervals into weighted distinct observations.

    Parameters
    ----------
    raw : iterable of (left, right)
        Interval endpoints; ``right`` may be ``math.inf``.

    Returns
    -------
    list of IntervalObservation
        Sorted by ``(left, right)``; weights sum to the number of input rows.
    """
    counts: Counter = Counter()
    for left, right in raw:
        left, right = float(left), float(right)
        _check_interval(left, right)
        counts[left, right] += 1
    if not counts:
        raise InvalidInterval("no observations given")
    return [IntervalObservation(l, r, w) for (l, r), w in sorted(counts.items())]


@dataclass(frozen=True)
class ReducedData:
    """Reduced problem: finite grid plus per-observation index pairs.

    Attributes
    ----------
    tau : ndarray of shape (m,)
        Strictly increasing finite grid.
    left_idx, right_idx : ndarray of int
        1-based grid indices; ``left_idx == 0`` below the grid,
        ``right_idx == m + 1`` for right-censored observations.
    weight : ndarray of float
        Multiplicities.
    obs_class : ndarray of int
        :class:`ObsClass` code per observation.
    s_star : int
        Number of distinct left endpoints removed from the grid.
    """

    tau: np.ndarray
    left_idx: np.ndarray
    right_idx: np.ndarray
    weight: np.ndarray
    obs_class: np.ndarray
    s_star: int
    observations: tuple[IntervalObservation, ...] = field(repr=False, default=())

    def __post_init__(self):
        for name in ("tau", "left_idx", "right_idx", "weight", "obs_class"):
            getattr(self, name).setflags(write=False)
        cls = self.obs_class
        # per-class slices used by the likelihood kernels
        lo = cls == ObsClass.LEFT_ONLY
        ro = cls == ObsClass.RIGHT_ONLY
        it = cls == ObsClass.INTERIOR
        object.__setattr__(self, "_lo_r", self.right_idx[lo])
        object.__setattr__(self, "_lo_w", self.weight[lo])
        object.__setattr__(self, "_ro_l", self.left_idx[ro])
        object.__setattr__(self, "_ro_w", self.weight[ro])
        object.__setattr__(self, "_in_l", self.left_idx[it])
        object.__setattr__(self, "_in_r", self.right_idx[it])
        object.__setattr__(self, "_in_w", self.weight[it])

    @property
    def m(self) -> int:
        return len(self.tau)

    @property
    def n(self) -> int:
        return len(self.weight)

    @property
    def total_weight(self) -> float:
        return float(self.weight.sum())

    def interval(self, i: int) -> tuple[float, float]:
        """Grid reconstruction of observation ``i``; ``-inf`` marks 'below tau_1'."""
        ext = np.concatenate(([-INF], self.tau, [INF]))
        return float(ext[self.left_idx[i]]), float(ext[self.right_idx[i]])


def build_reduced(obs: Sequence[IntervalObservation]) -> ReducedData:
    """Build the reduced grid and index structure from deduplicated data."""
    if len(obs) == 0:
        raise InvalidInterval("no observations given")
    left = np.array([o.left for o in obs], dtype=float)
    right = np.array([o.right for o in obs], dtype=float)
    weight = np.array([o.weight for o in obs], dtype=float)

    in_left_set = left < right.min()
    removed = np.unique(left[in_left_set])
    pts = np.concatenate((left[~in_left_set], right))
    tau = np.unique(pts[np.isfinite(pts)])
    m = len(tau)

    left_idx = np.where(in_left_set, 0, np.searchsorted(tau, left) + 1)
    right_idx = np.where(np.isfinite(right), np.searchsorted(tau, right) + 1, m + 1)
    in_right_set = right_idx == m + 1

    cls = np.full(len(obs), ObsClass.INTERIOR, dtype=np.int64)
    cls[in_left_set & ~in_right_set] = ObsClass.LEFT_ONLY
    cls[~in_left_set & in_right_set] = ObsClass.RIGHT_ONLY
    cls[in_left_set & in_right_set] = ObsClass.BOTH

    return ReducedData(
        tau=tau,
        left_idx=left_idx.astype(np.int64),
        right_idx=right_idx.astype(np.int64),
        weight=weight,
        obs_class=cls,
        s_star=len(removed),
        observations=tuple(obs),
    )


def reduce_intervals(raw: Iterable[tuple[float, float]]) -> ReducedData:
    """Shorthand for ``build_reduced(dedupe(raw))``."""
    return build_reduced(dedupe(raw))
