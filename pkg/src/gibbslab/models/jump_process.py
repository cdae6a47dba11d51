"""Immigration-death path as a deterministic transform of elementary inputs.

The process jumps by +1 at rate lam (immigration) and by -1 at rate
x * mu (per-capita death). Feeding the recursion a fixed sequence of unit
exponentials (interarrival scales) and uniforms (event types) makes the whole
path a deterministic function of (inputs, rates), which is the noncentered
view of the process: the inputs are a priori independent of the rates.

    tau_i = tau_{i-1} + z_i / (lam + x * mu)
    x    += 2 * 1{u_i <= lam / (lam + x * mu)} - 1

Death is impossible at zero population because its rate vanishes there; with
lam = 0 the path is monotone nonincreasing and absorbs at zero, after which
no further inputs are consumed.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import (
    InsufficientLengthError,
    InvalidParameterError,
    LengthMismatchError,
    NonpositiveRatesError,
    OutOfRangeError,
)

__all__ = ["JumpPath", "simulate_jump_transform"]


@dataclass(frozen=True)
class JumpPath:
    """Piecewise-constant population path on [0, t_end]."""

    times: np.ndarray   # event times, strictly inside (0, t_end]
    states: np.ndarray  # population immediately after each event
    x0: int
    t_end: float
    consumed: int       # input pairs inspected, including a final overshoot

    def state_at(self, t: float) -> int:
        if t < 0.0 or t > self.t_end:
            raise OutOfRangeError(f"time {t} outside [0, {self.t_end}]")
        k = bisect.bisect_right(self.times, t)
        return self.x0 if k == 0 else int(self.states[k - 1])

    @property
    def terminal(self) -> int:
        return self.x0 if self.times.size == 0 else int(self.states[-1])

    @property
    def birth_count(self) -> int:
        if self.times.size == 0:
            return 0
        d = np.diff(np.concatenate(([self.x0], self.states)))
        return int(np.sum(d > 0))


def simulate_jump_transform(xtilde, theta: Tuple[float, float], t_end: float,
                            x0: int = 0) -> JumpPath:
    """Run the recursion until t_end, absorption, or input exhaustion.

    ``xtilde`` is a pair (z, u) of equal-length arrays: unit-exponential
    interarrival scales and uniform event-type variables. Exhausting the
    inputs before the horizon raises; hitting total rate zero (lam = 0 at
    population zero) freezes the path, which is then valid to any horizon.
    """
    lam, mu = float(theta[0]), float(theta[1])
    if lam < 0.0 or mu < 0.0 or (lam == 0.0 and mu == 0.0):
        raise NonpositiveRatesError(
            f"need lam, mu >= 0 with at least one positive, got ({lam}, {mu})"
        )
    if not t_end > 0.0:
        raise InvalidParameterError("horizon must be positive")
    if x0 < 0 or int(x0) != x0:
        raise InvalidParameterError("initial population must be a nonnegative integer")
    z = np.asarray(xtilde[0], dtype=float)
    u = np.asarray(xtilde[1], dtype=float)
    if z.shape != u.shape or z.ndim != 1:
        raise LengthMismatchError("z and u inputs must be equal-length vectors")
    if np.any(z < 0.0):
        raise InvalidParameterError("exponential inputs must be nonnegative")
    if np.any((u < 0.0) | (u > 1.0)):
        raise InvalidParameterError("uniform inputs must lie in [0, 1]")

    x = int(x0)
    t = 0.0
    times = []
    states = []
    i = 0
    while True:
        rate = lam + x * mu
        if rate <= 0.0:
            break  # absorbed: constant for the rest of the horizon
        if i >= z.size:
            raise InsufficientLengthError(
                f"inputs exhausted after {i} events at time {t:.6g} < {t_end}"
            )
        t_next = t + z[i] / rate
        i += 1
        if t_next > t_end:
            break
        x += 1 if u[i - 1] <= lam / rate else -1
        times.append(t_next)
        states.append(x)
        t = t_next
    return JumpPath(
        times=np.asarray(times, dtype=float),
        states=np.asarray(states, dtype=int),
        x0=int(x0),
        t_end=float(t_end),
        consumed=i,
    )
