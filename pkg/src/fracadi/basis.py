"""Legendre-Galerkin machinery on mapped rectangles.

One-dimensional pieces: Legendre evaluation, Gauss-Legendre rules, and
the Dirichlet difference basis phi_i = L_i - L_{i+2} whose mass matrix
is pentadiagonal (with only even couplings) and whose stiffness matrix
is diagonal.  Two-dimensional fields are tensor products with modal
coefficient matrices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

NEWTON_TOL = 1e-14
NEWTON_MAX_ITER = 100


def legendre_table(nmax, x):
    """Values of L_0..L_nmax at x, shape (nmax + 1,) + x.shape."""
    x = np.asarray(x, dtype=float)
    table = np.empty((nmax + 1,) + x.shape)
    table[0] = 1.0
    if nmax >= 1:
        table[1] = x
    for n in range(1, nmax):
        table[n + 1] = ((2 * n + 1) * x * table[n] - n * table[n - 1]) / (n + 1)
    return table


def legendre_eval(n, x):
    """L_n(x) by the three-term recurrence; x scalar or array."""
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.ones_like(x)
    prev, cur = np.ones_like(x), x.copy()
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1) * x * cur - k * prev) / (k + 1)
    return cur


def legendre_deriv_table(nmax, x):
    """Values of L_0'..L_nmax' at x, via (1-x^2) L_n' = n (L_{n-1} - x L_n)."""
    x = np.asarray(x, dtype=float)
    table = legendre_table(nmax, x)
    out = np.empty_like(table)
    out[0] = 0.0
    one_minus = 1.0 - x * x
    safe = np.where(one_minus == 0.0, 1.0, one_minus)
    for n in range(1, nmax + 1):
        out[n] = n * (table[n - 1] - x * table[n]) / safe
    if np.any(one_minus == 0.0):
        # endpoint values L_n'(+-1) = (+-1)^{n-1} n (n+1) / 2
        for n in range(1, nmax + 1):
            endpoint = n * (n + 1) / 2.0
            out[n] = np.where(x == 1.0, endpoint, out[n])
            out[n] = np.where(x == -1.0, endpoint * (-1.0) ** (n - 1), out[n])
    return out


def gauss_legendre(n):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].

    Damped Newton iteration on L_n from the Chebyshev initial guesses;
    converges to |L_n(x)| <= 1e-14 in a handful of steps.
    """
    if n < 1:
        raise ValueError("need at least one node")
    i = np.arange(n)
    x = np.cos(np.pi * (i + 0.75) / (n + 0.5))
    for _ in range(NEWTON_MAX_ITER):
        table = legendre_table(n, x)
        ln = table[n]
        dln = n * (table[n - 1] - x * table[n]) / (1.0 - x * x)
        dx = ln / dln
        # keep the iterates strictly inside (-1, 1)
        limit = 0.5 * np.minimum(1.0 - x, x + 1.0)
        dx = np.clip(dx, -limit, limit)
        x = x - dx
        if np.max(np.abs(dx)) <= NEWTON_TOL:
            break
    else:
        raise RuntimeError("Gauss-Legendre iteration failed to converge")
    table = legendre_table(n, x)
    dln = n * (table[n - 1] - x * table[n]) / (1.0 - x * x)
    w = 2.0 / ((1.0 - x * x) * dln * dln)
    order = np.argsort(x)
    return x[order], w[order]


@dataclass(frozen=True)
class SpectralBasis1D:
    """Dirichlet Legendre basis on one mapped interval.

    dim = degree - 1 functions phi_i = L_i - L_{i+2} (reference
    variable), mass[i][j] = (phi_j, phi_i) and diagonal stiffness
    stiffness[i][i] = (phi_i', phi_i') on the reference interval;
    interval maps x = offset + jacobian * xi.
    """

    degree: int
    interval: tuple
    jacobian: float
    offset: float
    mass: np.ndarray
    stiffness: np.ndarray
    quad_nodes: np.ndarray
    quad_weights: np.ndarray
    basis_at_quad: np.ndarray  # (dim, len(quad_nodes))

    def __post_init__(self):
        for arr in (self.mass, self.stiffness, self.quad_nodes, self.quad_weights, self.basis_at_quad):
            arr.flags.writeable = False

    @property
    def dim(self):
        return self.degree - 1

    @property
    def quad_count(self):
        return len(self.quad_nodes)

    @property
    def nodes(self):
        """Quadrature nodes mapped to the physical interval."""
        return self.offset + self.jacobian * self.quad_nodes

    def basis_values(self, x_physical):
        """phi_i at physical points, shape (dim, npts)."""
        xi = (np.asarray(x_physical, dtype=float) - self.offset) / self.jacobian
        table = legendre_table(self.degree, xi)
        return table[: self.dim] - table[2 : self.dim + 2]


def shen_mass_matrix(dim):
    mass = np.zeros((dim, dim))
    i = np.arange(dim, dtype=float)
    np.fill_diagonal(mass, 2.0 / (2.0 * i + 1.0) + 2.0 / (2.0 * i + 5.0))
    off = -2.0 / (2.0 * i[:-2] + 5.0)
    mass[np.arange(dim - 2), np.arange(2, dim)] = off
    mass[np.arange(2, dim), np.arange(dim - 2)] = off
    return mass


def shen_stiffness_diagonal(dim):
    i = np.arange(dim, dtype=float)
    return 4.0 * i + 6.0


def build_basis(degree, interval, quad_count=None):
    """Dirichlet basis of polynomial degree `degree` on `interval`.

    quad_count defaults to degree + 8, enough to integrate products of
    basis functions exactly with headroom for smooth data.
    """
    if degree < 4:
        raise ValueError("degree must be at least 4")
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise ValueError("interval must have positive length")
    if quad_count is None:
        quad_count = degree + 8
    if quad_count < degree + 1:
        raise ValueError("quadrature rule too short for the basis degree")
    nodes, weights = gauss_legendre(quad_count)
    dim = degree - 1
    table = legendre_table(degree, nodes)
    return SpectralBasis1D(
        degree=degree,
        interval=(a, b),
        jacobian=(b - a) / 2.0,
        offset=(a + b) / 2.0,
        mass=shen_mass_matrix(dim),
        stiffness=np.diag(shen_stiffness_diagonal(dim)),
        quad_nodes=nodes,
        quad_weights=weights,
        basis_at_quad=table[:dim] - table[2 : dim + 2],
    )


@dataclass
class ModalField2D:
    """coeffs[i][j] multiplies phi_i(x) phi_j(y)."""

    coeffs: np.ndarray
    basis_x: SpectralBasis1D
    basis_y: SpectralBasis1D


def evaluate_field(field, x, y):
    """Field values on the tensor grid x cross y, shape (len(x), len(y))."""
    px = field.basis_x.basis_values(x)
    py = field.basis_y.basis_values(y)
    return px.T @ field.coeffs @ py


def project_source(f, basis_x, basis_y):
    """Matrix of inner products (f, phi_i psi_j) over the physical rectangle.

    f is a vectorized function of physical (x, y); the mapped-quadrature
    Jacobian factors are included.
    """
    fx = f(basis_x.nodes[:, None], basis_y.nodes[None, :])
    fx = np.broadcast_to(fx, (basis_x.quad_count, basis_y.quad_count))
    wx = basis_x.quad_weights * basis_x.jacobian
    wy = basis_y.quad_weights * basis_y.jacobian
    return (basis_x.basis_at_quad * wx) @ fx @ (basis_y.basis_at_quad * wy).T


def _error_rule(basis):
    """Quadrature rule fine enough for error integrals on one direction."""
    need = basis.degree + 8
    if basis.quad_count >= need:
        return basis.quad_nodes, basis.quad_weights, basis.basis_at_quad
    nodes, weights = gauss_legendre(need)
    table = legendre_table(basis.degree, nodes)
    return nodes, weights, table[: basis.dim] - table[2 : basis.dim + 2]


def l2_error(field, exact):
    """L2 distance between the field and a vectorized exact(x, y)."""
    nx, wxr, px = _error_rule(field.basis_x)
    ny, wyr, py = _error_rule(field.basis_y)
    bx, by = field.basis_x, field.basis_y
    xphys = bx.offset + bx.jacobian * nx
    yphys = by.offset + by.jacobian * ny
    vals = px.T @ field.coeffs @ py
    target = np.broadcast_to(
        exact(xphys[:, None], yphys[None, :]), (len(xphys), len(yphys))
    )
    diff2 = (vals - target) ** 2
    wx = wxr * bx.jacobian
    wy = wyr * by.jacobian
    return float(np.sqrt(wx @ diff2 @ wy))


def l2_norm(coeffs, basis_x, basis_y):
    """L2 norm of a modal coefficient matrix (exact, via mass matrices)."""
    quad = basis_x.jacobian * basis_y.jacobian * np.sum(
        coeffs * (basis_x.mass @ coeffs @ basis_y.mass)
    )
    # tiny negative round-off can appear for near-zero fields
    return float(np.sqrt(max(quad, 0.0)))


class ShenSystemSolver:
    """Factored solver for (a * mass + b * stiffness) in one direction.

    Even and odd basis indices never couple, so the system splits into
    two symmetric positive definite tridiagonal problems; both are
    Cholesky-factored in banded form once and reused for every solve.
    """

    def __init__(self, basis, mass_coef, stiff_coef):
        if mass_coef <= 0.0 or stiff_coef < 0.0:
            raise ValueError("need mass_coef > 0 and stiff_coef >= 0")
        self.basis = basis
        self.mass_coef = mass_coef
        self.stiff_coef = stiff_coef
        dim = basis.dim
        matrix = mass_coef * basis.mass + stiff_coef * basis.stiffness
        self._parts = []
        for start in (0, 1):
            idx = np.arange(start, dim, 2)
            sub = matrix[np.ix_(idx, idx)]
            n = len(idx)
            banded = np.zeros((2, n))
            banded[1] = np.diag(sub)
            if n > 1:
                banded[0, 1:] = np.diag(sub, 1)
            self._parts.append((idx, cholesky_banded(banded, lower=False)))

    def solve(self, rhs):
        """Solve along axis 0 of rhs (vector or matrix)."""
        rhs = np.asarray(rhs, dtype=float)
        out = np.empty_like(rhs)
        for idx, factor in self._parts:
            out[idx] = cho_solve_banded((factor, False), rhs[idx])
        return out

    def matrix(self):
        return self.mass_coef * self.basis.mass + self.stiff_coef * self.basis.stiffness
