"""B-spline networks for control-derivative estimation.

A network maps the steering input ``u`` to a scalar ``weights . b(u)``,
where ``b`` is the vector of clamped B-spline basis functions.  One network
is kept per body axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STEER_LIMIT = 0.12


def clamped_knot_vector(breakpoints, degree: int) -> np.ndarray:
    bp = np.asarray(breakpoints, dtype=float)
    return np.concatenate([np.full(degree, bp[0]), bp, np.full(degree, bp[-1])])


def basis_functions(u: float, knots: np.ndarray, degree: int) -> tuple[int, np.ndarray]:
    """Nonzero basis values at ``u`` by the Cox-de Boor triangle.

    Returns the knot-span index ``i`` and the ``degree + 1`` values of
    ``B_{i-degree}, ..., B_i``.  ``u`` must lie inside the knot range.
    """
    n = len(knots) - degree - 1
    if u >= knots[n]:
        i = n - 1
    else:
        i = int(np.searchsorted(knots, u, side="right")) - 1
    vals = [1.0] + [0.0] * degree
    left = [0.0] * (degree + 1)
    right = [0.0] * (degree + 1)
    for j in range(1, degree + 1):
        left[j] = u - knots[i + 1 - j]
        right[j] = knots[i + j] - u
        saved = 0.0
        for r in range(j):
            tmp = vals[r] / (right[r + 1] + left[j - r])
            vals[r] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        vals[j] = saved
    return i, np.array(vals)


@dataclass
class SplineNetwork:
    """Clamped B-spline network on ``[breakpoints[0], breakpoints[-1]]``.

    ``breakpoints`` are the distinct, strictly ascending knots; the number of
    weights is ``len(breakpoints) - 1 + degree``.
    """

    breakpoints: np.ndarray
    degree: int = 2
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        self.breakpoints = np.asarray(self.breakpoints, dtype=float)
        if self.breakpoints.ndim != 1 or len(self.breakpoints) < 2:
            raise ValueError("need at least two breakpoints")
        if np.any(np.diff(self.breakpoints) <= 0.0):
            raise ValueError("breakpoints must be strictly ascending")
        if self.degree < 0:
            raise ValueError("degree must be non-negative")
        self.knots = clamped_knot_vector(self.breakpoints, self.degree)
        if self.weights is None:
            self.weights = np.zeros(self.n_basis)
        self.weights = np.array(self.weights, dtype=float)
        if self.weights.shape != (self.n_basis,):
            raise ValueError(f"expected {self.n_basis} weights, got {self.weights.shape}")

    @classmethod
    def uniform(cls, n_basis: int = 10, degree: int = 2, lo: float = -STEER_LIMIT,
                hi: float = STEER_LIMIT, weights=None) -> "SplineNetwork":
        if n_basis < degree + 1:
            raise ValueError("n_basis must exceed the degree")
        return cls(np.linspace(lo, hi, n_basis - degree + 1), degree, weights)

    @property
    def n_basis(self) -> int:
        return len(self.breakpoints) - 1 + self.degree

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def clamp(self, u: float) -> tuple[float, bool]:
        lo, hi = self.domain
        if u < lo:
            return lo, True
        if u > hi:
            return hi, True
        return float(u), False

    def evaluate_basis(self, u: float) -> tuple[np.ndarray, bool]:
        """Full basis vector at ``u`` and whether ``u`` had to be clamped."""
        uc, clamped = self.clamp(u)
        i, vals = basis_functions(uc, self.knots, self.degree)
        b = np.zeros(self.n_basis)
        b[i - self.degree:i + 1] = vals
        return b, clamped

    def basis(self, u: float) -> np.ndarray:
        return self.evaluate_basis(u)[0]

    def output(self, u: float) -> float:
        return float(self.weights @ self.basis(u))

    def greville(self) -> np.ndarray:
        """Greville abscissae (knot averages), one per basis function."""
        p = self.degree
        if p == 0:
            return 0.5 * (self.knots[:-1] + self.knots[1:])
        return np.array([self.knots[j + 1:j + p + 1].mean() for j in range(self.n_basis)])

    def copy(self) -> "SplineNetwork":
        return SplineNetwork(self.breakpoints.copy(), self.degree, self.weights.copy())
