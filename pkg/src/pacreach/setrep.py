"""Ellipsoidal reachable-set estimates.

An estimate is the sublevel set ``{x : ||A x + b||^2 - 1 <= level}``.  The
minimum-volume enclosing ellipsoid of a batch is computed with Khachiyan's
barycentric coordinate ascent, using the Todd-Yildirim away steps so that
the returned weights also satisfy approximate complementary slackness.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .dynamics import SampleBatch
from .errors import ConvergenceError, DegenerateDataError, DomainError, EmptySetError

__all__ = ["Ellipsoid", "fit_mvee", "unit_ball_volume"]


def unit_ball_volume(n):
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """Set ``{x : score(x) <= level}`` with ``score(x) = ||A x + b||^2 - 1``."""

    A: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    level: float = 0.0

    def __post_init__(self):
        A = _frozen(self.A)
        b = _frozen(self.b).reshape(-1)
        n = b.shape[0]
        if A.shape != (n, n):
            raise DomainError(f"A must be {n}x{n}, got {A.shape}")
        if not np.allclose(A, A.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise DomainError("A must be symmetric")
        try:
            np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            raise DomainError("A must be positive definite") from None
        level = float(self.level)
        if not (level > -1.0 and math.isfinite(level)):
            raise EmptySetError(f"level={level} leaves an empty set")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "level", level)

    @property
    def n_x(self):
        return self.b.shape[0]

    @property
    def center(self):
        return -np.linalg.solve(self.A, self.b)

    def score(self, x):
        """Nonconformity score g(x) = ||A x + b||^2 - 1 for one state or a batch."""
        if isinstance(x, SampleBatch):
            x = x.states
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n_x:
            raise DomainError(f"state dimension {x.shape[-1]} != {self.n_x}")
        y = x @ self.A.T + self.b
        s = np.einsum("...i,...i->...", y, y) - 1.0
        return float(s) if s.ndim == 0 else s

    def contains(self, x):
        return np.asarray(self.score(x)) <= self.level

    def volume(self):
        n = self.n_x
        return unit_ball_volume(n) * (1.0 + self.level) ** (n / 2.0) / float(np.linalg.det(self.A))

    def with_level(self, q):
        """Same score function, new sublevel threshold ``q``."""
        q = float(q)
        if not q > -1.0:
            raise EmptySetError(f"level {q} <= -1 gives an empty set")
        return Ellipsoid(self.A, self.b, q)

    def boundary(self, num=200):
        """Points on the boundary curve of a 2-D ellipsoid, shape (num, 2)."""
        if self.n_x != 2:
            raise DomainError("boundary curves are only drawn for n_x = 2")
        t = np.linspace(0.0, 2.0 * np.pi, num)
        circle = math.sqrt(1.0 + self.level) * np.stack([np.cos(t), np.sin(t)], axis=1)
        return np.linalg.solve(self.A, (circle - self.b).T).T

    def to_dict(self):
        return {
            "n_x": self.n_x,
            "A": [float(v) for v in self.A.reshape(-1)],
            "b": [float(v) for v in self.b],
            "level": self.level,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data):
        n = int(data["n_x"])
        return cls(np.asarray(data["A"], dtype=float).reshape(n, n), data["b"], data.get("level", 0.0))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


# Above this dimension hull vertex counts can explode; skip the reduction.
_HULL_MAX_DIM = 6


def _hull_points(points):
    """Convex-hull vertices, which determine the enclosing ellipsoid."""
    d = points.shape[1]
    if d == 1:
        return points[[points.argmin(), points.argmax()]] if len(points) > 2 else points
    if d > _HULL_MAX_DIM or len(points) <= 4 * (d + 1):
        return points
    try:
        return points[ConvexHull(points).vertices]
    except QhullError:
        return points


def fit_mvee(batch, tol=1e-7, max_iter=1_000_000):
    """(1 + tol)-approximate minimum-volume ellipsoid enclosing every sample.

    The dual weights are optimised until both the largest lifted Mahalanobis
    distance and the smallest one over weighted points are within ``tol`` of
    ``n_x + 1``.  The resulting ellipsoid is rescaled so the farthest sample
    sits exactly on the boundary.
    """
    points = batch.states if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)
    N, d = points.shape
    if not tol > 0:
        raise DomainError("tol must be positive")
    if N < d + 1 or np.linalg.matrix_rank(points - points.mean(axis=0)) < d:
        raise DegenerateDataError(f"{N} samples do not span {d} dimensions")

    hull = _hull_points(points)
    N = hull.shape[0]
    Q = np.hstack([hull, np.ones((N, 1))])
    u = np.full(N, 1.0 / N)
    target = d + 1.0
    for _ in range(max_iter):
        X = Q.T @ (u[:, None] * Q)
        kappa = np.einsum("ij,ji->i", Q, np.linalg.solve(X, Q.T))
        j = int(np.argmax(kappa))
        support = np.flatnonzero(u > 0)
        i = int(support[np.argmin(kappa[support])])
        gap_up = kappa[j] / target - 1.0
        gap_down = 1.0 - kappa[i] / target
        if max(gap_up, gap_down) <= tol:
            break
        if gap_up >= gap_down:
            step = (kappa[j] - target) / (target * (kappa[j] - 1.0))
            u *= 1.0 - step
            u[j] += step
        else:
            # away step, clipped so u[i] stays nonnegative
            step = max((kappa[i] - target) / (target * (kappa[i] - 1.0)), -u[i] / (1.0 - u[i]))
            u *= 1.0 - step
            u[i] += step
            if u[i] <= 1e-300:
                u[i] = 0.0
    else:
        raise ConvergenceError(f"MVEE did not converge in {max_iter} iterations", gap=max(gap_up, gap_down))

    c = hull.T @ u
    cov = (hull.T * u) @ hull - np.outer(c, c)
    shape = np.linalg.inv(cov) / d
    diff = points - c
    shape /= np.einsum("ij,jk,ik->i", diff, shape, diff).max()
    shape = 0.5 * (shape + shape.T)
    w, V = np.linalg.eigh(shape)
    A = (V * np.sqrt(w)) @ V.T
    A = 0.5 * (A + A.T)
    return Ellipsoid(A, -A @ c, 0.0)
