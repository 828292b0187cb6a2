"""Piecewise-linear drive schedules Omega(t), delta(t) with truncation."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class SweepSchedule:
    """Ordered breakpoints (t_us, omega_MHz, delta_MHz), linear in between.

    An optional truncation time ``t_off`` models the abrupt switch-off of the
    excitation laser: Omega == 0 for t > t_off while delta holds its value at
    t_off.  The evaluation domain stays [0, duration].
    """

    breakpoints: np.ndarray       # (B, 3) float
    t_off: float | None = None

    def __post_init__(self):
        bp = np.atleast_2d(np.asarray(self.breakpoints, dtype=float))
        object.__setattr__(self, "breakpoints", bp)
        t = bp[:, 0]
        if len(t) < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("breakpoint times must be strictly increasing")
        if t[0] != 0.0:
            raise ValueError("schedule must start at t = 0")
        if np.any(bp[:, 1] < 0):
            raise ValueError("Omega must be >= 0 everywhere")
        if self.t_off is not None and not (0.0 <= self.t_off <= t[-1]):
            raise ValueError("t_off must lie within [0, duration]")

    @property
    def duration(self) -> float:
        return float(self.breakpoints[-1, 0])

    def evaluate(self, t: float) -> tuple[float, float]:
        """(Omega, delta) in MHz at time t; respects truncation."""
        if not (0.0 <= t <= self.duration * (1 + 1e-12)):
            raise ValueError(f"t = {t} outside schedule domain [0, {self.duration}]")
        t = min(t, self.duration)
        if self.t_off is not None and t > self.t_off:
            return 0.0, self._interp(self.t_off)[1]
        return self._interp(t)

    def _interp(self, t: float) -> tuple[float, float]:
        bp = self.breakpoints
        omega = float(np.interp(t, bp[:, 0], bp[:, 1]))
        delta = float(np.interp(t, bp[:, 0], bp[:, 2]))
        return omega, delta

    def truncate(self, t_off: float) -> "SweepSchedule":
        """Schedule with the laser switched off at ``t_off`` (idempotent:
        re-truncating at a later time keeps the earlier cut)."""
        if self.t_off is not None:
            t_off = min(t_off, self.t_off)
        if not (0.0 <= t_off <= self.duration):
            raise ValueError("t_off must lie within [0, duration]")
        return replace(self, t_off=t_off)

    @property
    def end_time(self) -> float:
        """Last time at which the drive can still change the occupation
        statistics (t_off if truncated, else the full duration)."""
        return self.duration if self.t_off is None else self.t_off

    def to_dict(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(),
                "t_off_us": self.t_off}

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSchedule":
        return cls(np.asarray(d["breakpoints"], dtype=float),
                   d.get("t_off_us"))


def canonical_sweep(kind: str, durations, omega_max: float,
                    delta_initial: float, delta_final: float,
                    t_off: float | None = None) -> SweepSchedule:
    """Three-segment rise / detuning-sweep / fall schedule.

    ``durations`` = (rise, sweep, fall) in us.  Zero-length segments collapse;
    when two breakpoints land on the same time the later one wins, so a zero
    sweep segment degenerates into a triangle-shaped Omega with a delta step.
    ``kind`` records the intent: "square-AF", "tri-1/3" and "tri-2/3" share
    the shape and differ only through the supplied detuning levels.
    """
    if kind not in ("square-AF", "tri-1/3", "tri-2/3"):
        raise ValueError(f"unknown sweep kind {kind!r}")
    t1, t2, t3 = durations
    if min(t1, t2, t3) < 0 or t1 + t2 + t3 <= 0:
        raise ValueError("durations must be >= 0 with positive total")
    points = [
        (0.0, 0.0, delta_initial),
        (t1, omega_max, delta_initial),
        (t1 + t2, omega_max, delta_final),
        (t1 + t2 + t3, 0.0, delta_final),
    ]
    dedup: list[tuple[float, float, float]] = []
    for p in points:
        if dedup and np.isclose(p[0], dedup[-1][0]):
            dedup[-1] = p
        else:
            dedup.append(p)
    return SweepSchedule(np.array(dedup), t_off=t_off)


def benchmark_sweep(total_us: float, t_off: float | None = None,
                    omega_max: float = 1.4, delta_initial: float = -8.0,
                    delta_final: float = 2.0) -> SweepSchedule:
    """Square-AF sweep scaled to ``total_us``: Omega rises to 1.4 MHz at
    delta = -8 MHz, delta sweeps to +2 MHz at constant Omega, then Omega
    falls to zero.  Segment split (1, 7, 4)/12: a fast rise, a long detuning
    ramp and a slower switch-off, mirroring the production pulse shapes."""
    frac = np.array([1.0, 7.0, 4.0]) / 12.0
    return canonical_sweep("square-AF", tuple(frac * total_us), omega_max,
                           delta_initial, delta_final, t_off=t_off)
