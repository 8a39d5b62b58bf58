"""Independent reference paths used to check the production solver.

Everything here is deliberately structured differently from the code it
validates: dense pivoted LU instead of factored banded sweeps, direct
endpoint-averaged weight sums instead of telescoped pair sums, library
quadrature instead of the closed Gamma forms, and an external
Gauss-Legendre rule for the matrix entries.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.linalg import lu_factor, lu_solve

from .basis import legendre_deriv_table, legendre_table
from .solver import project_time_series
from .weights import shifted_weights


def dense_step_matrix(mass_coef, grad_coef, basis_x, basis_y, cross_coef=None):
    """The full Kronecker step matrix, row-major vec ordering (x outer).

    With cross_coef set this is the factored ADI left side including the
    splitting perturbation; without it, the unsplit scheme's left side.
    """
    jx, jy = basis_x.jacobian, basis_y.jacobian
    mx, my = basis_x.mass, basis_y.mass
    sx, sy = basis_x.stiffness, basis_y.stiffness
    a = mass_coef * jx * jy * np.kron(mx, my)
    a += grad_coef * ((jy / jx) * np.kron(sx, my) + (jx / jy) * np.kron(mx, sy))
    if cross_coef is not None:
        a += (cross_coef / (jx * jy)) * np.kron(sx, sy)
    return a


def dense_kronecker_solve(step_coeffs, basis_x, basis_y, rhs):
    """Solve one ADI step as a single dense pivoted-LU system."""
    a = dense_step_matrix(
        step_coeffs.mass_coef,
        step_coeffs.grad_coef,
        basis_x,
        basis_y,
        cross_coef=step_coeffs.cross_coef,
    )
    flat = lu_solve(lu_factor(a), np.asarray(rhs, dtype=float).ravel())
    return flat.reshape(basis_x.dim, basis_y.dim)


def half_sum_coefficients(lam, k):
    """Coefficients c_m of u^m in (D^{k+1} + D^k)/2, m = 0..k+1.

    Straight from the definition of the shifted sums at the two levels;
    no telescoping.
    """
    upper = lam[: k + 2][::-1]  # lam_{k+1} ... lam_0
    lower = np.concatenate([lam[: k + 1][::-1], [0.0]])  # lam_k ... lam_0, 0
    return 0.5 * (upper + lower)


class UnsplitReference:
    """Dense reference march of the reduced problem, no splitting term.

    The production scheme adds a perturbation of the size of the cross
    coefficient; the gap between the two marches must shrink at second
    order in the step.
    """

    def __init__(self, tp, basis_x, basis_y, tau, steps, source_mode="auto"):
        self.tp = tp
        self.basis_x = basis_x
        self.basis_y = basis_y
        self.tau = float(tau)
        self.steps = steps
        self._lam = {}
        for b in tuple(tp.betas) + (-tp.beta,):
            self._lam[b] = shifted_weights(b, steps + 1).weights
        mass_coef = 1.0
        for b, a in zip(tp.betas, tp.coeffs):
            mass_coef += a * tau ** (1.0 - b) * 0.5 * self._lam[b][0]
        grad_coef = tp.mu * tau ** (1.0 + tp.beta) * 0.5 * self._lam[-tp.beta][0]
        self._factor = lu_factor(
            dense_step_matrix(mass_coef, grad_coef, basis_x, basis_y)
        )
        _, self.source_hat, self.half_source_norms = project_time_series(
            tp, basis_x, basis_y, tau, steps, source_mode
        )
        self.u = np.zeros((steps + 1, basis_x.dim, basis_y.dim))
        self.count = 1

    def _mass_apply(self, mat):
        bx, by = self.basis_x, self.basis_y
        return bx.jacobian * by.jacobian * (bx.mass @ mat @ by.mass)

    def _stiff_apply(self, mat):
        bx, by = self.basis_x, self.basis_y
        return (by.jacobian / bx.jacobian) * (bx.stiffness @ mat @ by.mass) + (
            bx.jacobian / by.jacobian
        ) * (bx.mass @ mat @ by.stiffness)

    def rhs(self, k):
        tau = self.tau
        out = self._mass_apply(self.u[k])
        out += tau * 0.5 * (self.source_hat[k] + self.source_hat[k + 1])
        hist = self.u[: k + 1]
        for b, a in zip(self.tp.betas, self.tp.coeffs):
            c = half_sum_coefficients(self._lam[b], k)[: k + 1]
            mem = np.tensordot(c, hist, axes=(0, 0))
            out -= a * tau ** (1.0 - b) * self._mass_apply(mem)
        c = half_sum_coefficients(self._lam[-self.tp.beta], k)[: k + 1]
        mem = np.tensordot(c, hist, axes=(0, 0))
        out -= self.tp.mu * tau ** (1.0 + self.tp.beta) * self._stiff_apply(mem)
        return out

    def step_once(self):
        k = self.count - 1
        flat = lu_solve(self._factor, self.rhs(k).ravel())
        self.u[k + 1] = flat.reshape(self.basis_x.dim, self.basis_y.dim)
        self.count += 1

    def march(self):
        while self.count <= self.steps:
            self.step_once()
        return self.u


def direct_caputo(order, t, exponent=None, derivative=None):
    """Caputo derivative at time t by an independent route.

    Either a power function (exponent set, closed Gamma form with the
    vanishing cases handled) or a smooth function given through its
    ceil(order)-th derivative, integrated adaptively with the
    endpoint-singular weight split off.
    """
    if order < 0.0:
        raise ValueError("Caputo order must be nonnegative")
    if t <= 0.0:
        raise ValueError("evaluation time must be positive")
    if (exponent is None) == (derivative is None):
        raise ValueError("give exactly one of exponent or derivative")
    if exponent is not None:
        n = math.ceil(order) if order > 0 else 0
        if float(exponent).is_integer() and exponent <= n - 1:
            return 0.0
        if exponent <= n - 1:
            raise ValueError("power too weak for the Caputo order")
        lg = math.lgamma(exponent + 1.0) - math.lgamma(exponent + 1.0 - order)
        return math.exp(lg) * t ** (exponent - order)
    if float(order).is_integer():
        return float(derivative(t))
    n = math.ceil(order)
    weight_exponent = n - order - 1.0  # in (-1, 0)
    val, err = quad(
        derivative,
        0.0,
        t,
        weight="alg",
        wvar=(0.0, weight_exponent),
        epsabs=1e-12,
        epsrel=1e-12,
        limit=200,
    )
    if err > 1e-9:
        raise RuntimeError(f"Caputo quadrature did not converge (err {err:.2e})")
    return val / math.gamma(n - order)


def quadrature_matrix_check(basis):
    """Max deviation of the closed-form matrices from brute quadrature.

    Uses numpy's Gauss-Legendre rule at twice the degree, so both the
    rule and the matrix entries are independently derived.
    """
    nodes, weights = leggauss(2 * basis.degree)
    table = legendre_table(basis.degree, nodes)
    deriv = legendre_deriv_table(basis.degree, nodes)
    phi = table[: basis.dim] - table[2 : basis.dim + 2]
    dphi = deriv[: basis.dim] - deriv[2 : basis.dim + 2]
    mass_dev = np.max(np.abs((phi * weights) @ phi.T - basis.mass))
    stiff_dev = np.max(np.abs((dphi * weights) @ dphi.T - basis.stiffness))
    return max(float(mass_dev), float(stiff_dev))


def gauss_rule_deviation(n):
    """Max node/weight gap between the built-in rule and numpy's."""
    from .basis import gauss_legendre

    x, w = gauss_legendre(n)
    xref, wref = leggauss(n)
    return max(float(np.max(np.abs(x - xref))), float(np.max(np.abs(w - wref))))
