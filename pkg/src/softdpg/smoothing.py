"""Gaussian smoothing of scalar fields and the zeroth-order gradient estimator.

For f : R^m -> R and sigma > 0 the smoothed field is

    f_sigma(x) = E_{w ~ N(0, I_m)}[ f(x + sigma * w) ]

and its gradient admits the evaluation-only form

    grad f_sigma(x) = E_{w ~ N(0, I_m)}[ f(x + sigma * w) * w / sigma ].

Both expectations are computed either by Monte Carlo or by Gauss-Hermite
quadrature. The physicists' Hermite rule integrates against exp(-t^2); the
change of variables w = sqrt(2) * t and division of the weights by sqrt(pi)
turn it into a rule for the standard normal, so an n-point rule is exact for
polynomial integrands up to degree 2n - 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SmoothingError",
    "SmoothingConfig",
    "Quadrature",
    "gauss_hermite",
    "smooth_eval",
    "smooth_grad",
]


class SmoothingError(ValueError):
    """Raised when an integrand evaluates to a non-finite value.

    The offending probe point is kept on the ``point`` attribute.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


@dataclass(frozen=True)
class Quadrature:
    """Nodes and weights for expectations against the standard normal.

    weights are nonnegative and sum to one; nodes are symmetric about zero.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ValueError("quadrature weights must sum to 1 within 1e-12")
        if not np.allclose(self.nodes, -self.nodes[::-1], atol=1e-12):
            raise ValueError("quadrature nodes must be symmetric about 0")


@dataclass(frozen=True)
class SmoothingConfig:
    """How to evaluate smoothing expectations.

    scheme is "monte_carlo" (num_samples fresh draws) or "gauss_hermite"
    (deterministic, nodes must be odd and >= 3 so that 0 is a node).
    """

    sigma: float
    scheme: str = "gauss_hermite"
    num_samples: int = 1000
    nodes: int = 21

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if self.scheme not in ("monte_carlo", "gauss_hermite"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.scheme == "gauss_hermite" and (self.nodes < 3 or self.nodes % 2 == 0):
            raise ValueError("gauss_hermite needs an odd node count >= 3")


def gauss_hermite(nodes: int) -> Quadrature:
    """Gauss-Hermite rule rescaled to integrate against N(0, 1).

    Returns nodes z_i = sqrt(2) * t_i and weights u_i / sqrt(pi), where
    (t_i, u_i) is the physicists' rule, so sum_i w_i g(z_i) approximates
    E_{w ~ N(0,1)}[g(w)] and is exact for polynomials of degree <= 2n - 1.
    """
    if nodes < 3 or nodes % 2 == 0:
        raise ValueError("node count must be odd and >= 3")
    t, u = np.polynomial.hermite.hermgauss(nodes)
    return Quadrature(nodes=np.sqrt(2.0) * t, weights=u / np.sqrt(np.pi))


def _probe_matrix(cfg: SmoothingConfig, m: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Noise probes (n, m) and weights (n,) for the configured scheme.

    Gauss-Hermite uses a tensor product for m <= 2; for higher m it falls
    back to Monte Carlo, which needs an rng.
    """
    if cfg.scheme == "gauss_hermite" and m <= 2:
        quad = gauss_hermite(cfg.nodes)
        if m == 1:
            return quad.nodes[:, None], quad.weights
        zz0, zz1 = np.meshgrid(quad.nodes, quad.nodes, indexing="ij")
        ww = np.outer(quad.weights, quad.weights)
        return np.stack([zz0.ravel(), zz1.ravel()], axis=1), ww.ravel()
    if rng is None:
        raise ValueError("monte_carlo smoothing requires an rng")
    w = rng.standard_normal((cfg.num_samples, m))
    return w, np.full(cfg.num_samples, 1.0 / cfg.num_samples)


def _evaluate(f, points: np.ndarray) -> np.ndarray:
    """Evaluate a vectorized scalar field on (n, m) probe points."""
    values = np.asarray(f(points), dtype=float)
    if values.shape != (points.shape[0],):
        raise ValueError(
            f"integrand returned shape {values.shape}, expected {(points.shape[0],)}"
        )
    if not np.all(np.isfinite(values)):
        bad = points[int(np.argmax(~np.isfinite(values)))]
        raise SmoothingError(f"integrand non-finite at point {bad}", point=bad)
    return values


def smooth_eval(f, x, cfg: SmoothingConfig, rng=None) -> float:
    """E_{w ~ N(0, I)}[f(x + sigma * w)].

    f must accept an (n, m) array of points and return (n,) values.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    noise, weights = _probe_matrix(cfg, x.shape[0], rng)
    values = _evaluate(f, x[None, :] + cfg.sigma * noise)
    return float(weights @ values)


def smooth_grad(f, x, cfg: SmoothingConfig, rng=None) -> np.ndarray:
    """Zeroth-order gradient estimate E[f(x + sigma * w) * w / sigma].

    Deterministic under gauss_hermite; under monte_carlo it is the unbiased
    single-sample estimator averaged over num_samples draws.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    noise, weights = _probe_matrix(cfg, x.shape[0], rng)
    values = _evaluate(f, x[None, :] + cfg.sigma * noise)
    return (weights * values) @ noise / cfg.sigma
