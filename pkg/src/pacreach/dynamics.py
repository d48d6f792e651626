"""System interface, the Duffing benchmark, and i.i.d. terminal-state sampling.

Trajectories are integrated with fixed-step classical RK4.  Sampling is
vectorised across rows, and every row draws its random inputs from a fixed
slice of one counter-based (Philox) stream.  That makes a batch of ``n``
rows an exact prefix of a batch of ``n + m`` rows with the same seed.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.special import ndtri

from .errors import DomainError, SimulationDiverged

__all__ = [
    "SystemSpec",
    "UniformBall",
    "UniformBox",
    "Gaussian",
    "SamplingSpec",
    "SampleBatch",
    "duffing",
    "duffing_sampling",
    "simulate",
    "draw_samples",
    "derive_seed",
]

VectorField = Callable[[np.ndarray, Optional[np.ndarray], float], np.ndarray]


@dataclass(frozen=True)
class SystemSpec:
    """Continuous-time system x' = f(x, d, t) integrated from t0 to t1.

    ``vector_field`` must broadcast over leading axes: it receives states of
    shape ``(..., n_x)`` and disturbances of shape ``(..., n_d)`` (or None).
    """

    n_x: int
    vector_field: VectorField
    t0: float = 0.0
    t1: float = 1.0
    h: float = 1e-3
    n_d: int = 0

    def __post_init__(self):
        if self.n_x < 1:
            raise DomainError("n_x must be positive")
        if not self.h > 0:
            raise DomainError("integrator step h must be positive")
        if not self.t1 > self.t0:
            raise DomainError("t1 must exceed t0")

    @property
    def n_steps(self):
        return max(1, math.ceil((self.t1 - self.t0) / self.h - 1e-9))

    def step_sizes(self):
        n = self.n_steps
        steps = np.full(n, self.h)
        steps[-1] = self.t1 - (self.t0 + (n - 1) * self.h)
        return steps


def duffing(zeta=0.3, t0=0.0, t1=2.0, h=1e-3):
    """Unforced Duffing oscillator x1' = x2, x2' = -2 zeta x2 + x1 - x1^3 (+ d).

    A scalar disturbance, when supplied, enters the velocity equation
    additively.
    """

    def field(x, d, t):
        x1 = x[..., 0]
        x2 = x[..., 1]
        dx2 = -2.0 * zeta * x2 + x1 - x1**3
        if d is not None:
            dx2 = dx2 + d[..., 0]
        return np.stack([x2, dx2], axis=-1)

    return SystemSpec(n_x=2, vector_field=field, t0=t0, t1=t1, h=h, n_d=1)


# -- distributions -----------------------------------------------------------
#
# Each distribution declares how many uniforms one row consumes and maps an
# (n, width) block of open-interval uniforms to samples.


@dataclass(frozen=True)
class UniformBall:
    center: tuple
    radius: float

    def width(self, dim):
        return dim + 1

    def transform(self, u):
        dim = len(self.center)
        z = ndtri(u[:, :dim])
        norms = np.linalg.norm(z, axis=1, keepdims=True)
        r = self.radius * u[:, dim:dim + 1] ** (1.0 / dim)
        return np.asarray(self.center, dtype=float) + r * z / norms


@dataclass(frozen=True)
class UniformBox:
    low: tuple
    high: tuple

    def width(self, dim):
        return dim

    def transform(self, u):
        low = np.asarray(self.low, dtype=float)
        high = np.asarray(self.high, dtype=float)
        return low + (high - low) * u


@dataclass(frozen=True)
class Gaussian:
    mean: tuple
    cov: tuple

    def width(self, dim):
        return dim

    def transform(self, u):
        chol = np.linalg.cholesky(np.asarray(self.cov, dtype=float))
        return np.asarray(self.mean, dtype=float) + ndtri(u) @ chol.T


Distribution = Union[UniformBall, UniformBox, Gaussian]


@dataclass(frozen=True)
class SamplingSpec:
    """Initial-state distribution, optional per-step disturbance box, seed."""

    initial: Distribution
    disturbance: Optional[UniformBox] = None
    seed: int = 0


def duffing_sampling(seed=0):
    """Placeholder initial set: uniform disc of radius 0.5 about (0.5, 0)."""
    return SamplingSpec(initial=UniformBall(center=(0.5, 0.0), radius=0.5), seed=seed)


def derive_seed(seed, *stream):
    """64-bit child seed for a named sub-stream, e.g. ``derive_seed(s, 1, run)``."""
    ss = np.random.SeedSequence([int(seed), *(int(x) for x in stream)])
    return int(ss.generate_state(1, np.uint64)[0])


def _uniforms(seed, n, width):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    # one 64-bit draw per value, filled row-major: rows are prefix-stable
    bits = rng.integers(0, 1 << 53, size=(n, width), dtype=np.int64)
    return (bits + 0.5) * 2.0**-53


# -- batches ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """N terminal states stacked as an (N, n_x) array."""

    states: np.ndarray = field(repr=False)

    def __post_init__(self):
        states = np.array(self.states, dtype=float)
        if states.ndim == 1:
            states = states[None, :]
        if states.ndim != 2 or states.shape[0] == 0:
            raise DomainError("a sample batch needs at least one row")
        if not np.all(np.isfinite(states)):
            raise DomainError("sample batch contains NaN or Inf")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    def __len__(self):
        return self.states.shape[0]

    @property
    def n_x(self):
        return self.states.shape[1]

    def to_csv(self, path=None):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"x{i + 1}" for i in range(self.n_x)])
        for row in self.states:
            writer.writerow([format(v, ".17g") for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise DomainError(f"{path}: empty file")
        header, body = rows[0], [r for r in rows[1:] if r]
        expected = [f"x{i + 1}" for i in range(len(header))]
        if header != expected:
            raise DomainError(f"{path}: header must be {','.join(expected)}")
        return cls(np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header)))


# -- integration ---------------------------------------------------------------


def _rk4(sys, x, d):
    f = sys.vector_field
    for i, h in enumerate(sys.step_sizes()):
        t = sys.t0 + i * sys.h
        di = None if d is None else d[..., i, :]
        k1 = f(x, di, t)
        k2 = f(x + 0.5 * h * k1, di, t + 0.5 * h)
        k3 = f(x + 0.5 * h * k2, di, t + 0.5 * h)
        k4 = f(x + h * k3, di, t + h)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise SimulationDiverged(t + h)
    return x


def simulate(sys, x0, d=None):
    """Terminal state Phi(t1; t0, x0, d).

    ``d`` is a piecewise-constant disturbance with one row per integrator
    step, shape ``(n_steps, n_d)``.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.n_x,):
        raise DomainError(f"x0 must have shape ({sys.n_x},), got {x0.shape}")
    if d is not None:
        d = np.asarray(d, dtype=float).reshape(sys.n_steps, sys.n_d)
    return _rk4(sys, x0, d)


def draw_samples(sys, samp, n):
    """Draw ``n`` i.i.d. terminal states under ``samp``."""
    if int(n) != n or n < 1:
        raise DomainError(f"sample count must be a positive integer, got {n!r}")
    n = int(n)
    w0 = samp.initial.width(sys.n_x)
    wd = 0 if samp.disturbance is None else sys.n_steps * sys.n_d
    u = _uniforms(samp.seed, n, w0 + wd)
    x0 = samp.initial.transform(u[:, :w0])
    d = None
    if samp.disturbance is not None:
        d = samp.disturbance.transform(u[:, w0:].reshape(n * sys.n_steps, sys.n_d))
        d = d.reshape(n, sys.n_steps, sys.n_d)
    return SampleBatch(_rk4(sys, x0, d))
