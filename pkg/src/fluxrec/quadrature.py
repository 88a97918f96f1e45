"""Gauss-Legendre and Gauss-Lobatto quadrature rules on [-1, 1].

Volume/flux cubature uses Gauss-Legendre (GL) nodes; grid (mapping) nodes
use Gauss-Legendre-Lobatto (GLL) nodes.  Nodes are found by Newton
iteration on the Legendre polynomials with Chebyshev initial guesses.
"""

from dataclasses import dataclass

import numpy as np

_NEWTON_TOL = 1e-15
_NEWTON_MAXIT = 100

_cache: dict[tuple[str, int], "QuadratureRule"] = {}


@dataclass(frozen=True)
class QuadratureRule:
    """A 1D quadrature rule: `kind` is "gl" or "gll", `n` the node count."""

    kind: str
    n: int
    nodes: np.ndarray
    weights: np.ndarray


def _legendre_and_deriv(n, x):
    """Evaluate P_n(x) and P_n'(x) by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for k in range(1, n):
        p_next = ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
        p_prev, p = p, p_next
    denom = x * x - 1.0
    interior = denom != 0.0
    dp = np.zeros_like(x)
    dp[interior] = n * (x[interior] * p[interior] - p_prev[interior]) / denom[interior]
    # At x = +-1 the derivative is n(n+1)/2 * (+-1)^(n+1).
    dp[~interior] = 0.5 * n * (n + 1) * np.sign(x[~interior]) ** (n + 1)
    return p, dp


def gl_rule(n):
    """Gauss-Legendre rule with `n` nodes, exact for degree 2n-1."""
    if n < 1:
        raise ValueError(f"gl_rule needs n >= 1, got {n}")
    key = ("gl", n)
    if key in _cache:
        return _cache[key]
    if n == 1:
        rule = QuadratureRule("gl", 1, np.array([0.0]), np.array([2.0]))
        _cache[key] = rule
        return rule
    # Chebyshev guess for the roots of P_n, then Newton.
    k = np.arange(1, n + 1)
    x = -np.cos((2 * k - 1) * np.pi / (2 * n))
    for _ in range(_NEWTON_MAXIT):
        p, dp = _legendre_and_deriv(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    _, dp = _legendre_and_deriv(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    rule = QuadratureRule("gl", n, x, w)
    _cache[key] = rule
    return rule


def gll_rule(n):
    """Gauss-Legendre-Lobatto rule with `n` nodes (endpoints included),
    exact for degree 2n-3."""
    if n < 2:
        raise ValueError(f"gll_rule needs n >= 2, got {n}")
    key = ("gll", n)
    if key in _cache:
        return _cache[key]
    if n == 2:
        rule = QuadratureRule(
            "gll", 2, np.array([-1.0, 1.0]), np.array([1.0, 1.0])
        )
        _cache[key] = rule
        return rule
    # Interior nodes are the roots of P_{n-1}'.  Newton on P_{n-1}' with the
    # second derivative from the Legendre ODE:
    #   (1-x^2) P'' = 2x P' - m(m+1) P,  m = n-1.
    m = n - 1
    j = np.arange(1, n - 1)
    x = -np.cos(np.pi * j / m)  # Chebyshev-Lobatto interior guess
    for _ in range(_NEWTON_MAXIT):
        p, dp = _legendre_and_deriv(m, x)
        d2p = (2.0 * x * dp - m * (m + 1) * p) / (1.0 - x * x)
        dx = dp / d2p
        x = x - dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    nodes = np.concatenate(([-1.0], x, [1.0]))
    p, _ = _legendre_and_deriv(m, nodes)
    w = 2.0 / (m * n * p * p)
    rule = QuadratureRule("gll", n, nodes, w)
    _cache[key] = rule
    return rule


if __name__ == "__main__":
    for n in range(1, 9):
        r = gl_rule(n)
        print(f"GL  n={n}: nodes {np.round(r.nodes, 6)}")
    for n in range(2, 9):
        r = gll_rule(n)
        print(f"GLL n={n}: nodes {np.round(r.nodes, 6)}")
