"""Second-order ADI time stepping for the reduced multi-term problem.

The wave-type equation is first integrated to order beta = alpha - 1 in
time, turning every Caputo term into a shifted Grunwald-Letnikov sum
applied to u itself and moving the diffusion term under a fractional
integral.  One step then solves two families of one-dimensional
tridiagonal systems (the alternating sweeps); the splitting
perturbation and all memory sums live on the right-hand side.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .basis import ModalField2D, SpectralBasis1D, ShenSystemSolver, build_basis, l2_error
from .problems import ProblemSpec, SeparableTerm, evaluate_terms
from .weights import (
    apply_gl,
    build_correction_set,
    rl_power,
    shifted_weights,
)


@dataclass(frozen=True)
class TransformedProblem:
    """The reduced first-order-in-time problem the stepper integrates.

    d/dt u + sum_i coeffs_i D^{betas_i} u = mu D^{-beta} Laplacian(u) + g,
    with u(0) = 0; `lift` holds the subtracted initial value (added back
    for physical output) and `exact` is the reduced exact solution.
    """

    name: str
    beta: float
    betas: tuple
    coeffs: tuple
    mu: float
    domain: object
    g: callable = None  # closed-form reduced source
    f: callable = None  # original forcing (sampled-integral path)
    g_smooth: callable = None  # reduced-source part outside the integral of f
    exact: callable = None
    lift: callable = None

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("reduced order beta must lie in (0, 1)")
        if any(not -1.0 <= b <= 1.0 for b in self.betas):
            raise ValueError("memory orders must lie in [-1, 1]")
        if self.g is None and self.f is None:
            raise ValueError("need a closed-form reduced source or a forcing to sample")


def reduce_order(problem):
    """Rewrite a wave-type problem as the reduced integro-differential one.

    Applies the fractional integral of order beta = alpha - 1, shifts by
    the initial value g1 (forcing picks up mu * Laplacian(g1)), and
    folds the initial-velocity terms into the source.  Power-law forcing
    integrates in closed form; otherwise only the sampled path remains.
    """
    beta = problem.alpha - 1.0
    betas = tuple(a - problem.alpha + 1.0 for a in problem.alphas)

    terms = list(problem.forcing_terms)
    if problem.g1 is not None:
        if problem.g1.laplacian is None:
            raise ValueError("initial value needs a Laplacian to shift the forcing")
        terms.append(
            SeparableTerm(problem.mu, 0.0, type(problem.g1)(values=problem.g1.laplacian))
        )

    # velocity contributions: g2 plus one t^{alpha - alpha_j} term per
    # order above one (orders <= 1 carry no initial-velocity data)
    velocity_parts = []
    if problem.g2 is not None:
        velocity_parts.append((1.0, 0.0))
        for a_j, c_j in zip(problem.alphas, problem.coeffs):
            if a_j > 1.0:
                e = problem.alpha - a_j
                velocity_parts.append((c_j / math.gamma(e + 1.0), e))

    g2_values = problem.g2.values if problem.g2 is not None else None

    def g_smooth(x, y, t):
        if g2_values is None:
            return np.zeros(np.broadcast(x, y).shape)
        base = g2_values(x, y)
        out = 0.0
        for c, e in velocity_parts:
            out = out + c * t**e * base
        return out

    integrated = tuple(
        SeparableTerm(
            term.coefficient
            * math.exp(math.lgamma(term.exponent + 1.0) - math.lgamma(term.exponent + 1.0 + beta)),
            term.exponent + beta,
            term.profile,
        )
        for term in terms
    )

    def g_closed(x, y, t):
        return g_smooth(x, y, t) + evaluate_terms(integrated, x, y, t)

    f_shifted = None
    if terms:
        def f_shifted(x, y, t):
            return evaluate_terms(terms, x, y, t)

    exact_reduced = None
    lift = None
    if problem.g1 is not None:
        lift = problem.g1.values
    if problem.has_exact:
        if lift is None:
            exact_reduced = problem.exact
        else:
            def exact_reduced(x, y, t):
                return problem.exact(x, y, t) - lift(x, y)

    return TransformedProblem(
        name=problem.name,
        beta=beta,
        betas=betas,
        coeffs=tuple(problem.coeffs),
        mu=problem.mu,
        domain=problem.domain,
        g=g_closed,
        f=f_shifted,
        g_smooth=g_smooth,
        exact=exact_reduced,
        lift=lift,
    )


@dataclass(frozen=True)
class StepCoefficients:
    """Scalar coefficients of one time step of size tau.

    mass_coef multiplies the implicit mass term (1 plus half the lead
    weights of the memory sums), grad_coef the implicit stiffness term,
    and cross_coef = grad_coef**2 / mass_coef scales the splitting
    perturbation.
    """

    tau: float
    mass_coef: float
    grad_coef: float

    @property
    def cross_coef(self):
        return self.grad_coef**2 / self.mass_coef


def step_coefficients(tp, tau):
    if tau <= 0.0:
        raise ValueError("step must be positive")
    if tau >= 1.0:
        warnings.warn("step >= 1 is outside the stability analysis", stacklevel=2)
    mass = 1.0
    for b, a in zip(tp.betas, tp.coeffs):
        mass += 0.5 * a * (1.0 + b / 2.0) * tau ** (1.0 - b)
    grad = 0.5 * tp.mu * (1.0 - tp.beta / 2.0) * tau ** (1.0 + tp.beta)
    return StepCoefficients(tau=tau, mass_coef=mass, grad_coef=grad)


def fractional_integral_of_f(samples, order, step):
    """Fractional integral of sampled data at the newest sample time.

    samples = f(t_0), ..., f(t_{k+1}); second-order shifted GL rule for
    the integral of positive order `order`.
    """
    if order <= 0.0:
        raise ValueError("integral order must be positive")
    return apply_gl(-order, step, samples)


def project_time_series(tp, basis_x, basis_y, tau, steps, mode="auto"):
    """Modal projections of the reduced source at every time level.

    Returns (mode, source_hat, half_source_norms) with source_hat[n] the
    inner products of g(t_n) against the tensor basis and
    half_source_norms[k] = ||(g(t_k) + g(t_{k+1})) / 2|| in L2.  The
    sampled mode reconstructs the fractional integral of f on the
    quadrature grid with the shifted GL rule before projecting.
    """
    if mode not in ("auto", "analytic", "sampled"):
        raise ValueError(f"unknown source mode {mode!r}")
    if mode == "auto":
        mode = "analytic" if tp.g is not None else "sampled"
    if mode == "analytic" and tp.g is None:
        raise ValueError("problem has no closed-form reduced source")
    if mode == "sampled" and tp.f is None:
        raise ValueError("problem has no forcing to sample")

    bx, by = basis_x, basis_y
    x, yv = bx.nodes[:, None], by.nodes[None, :]
    wx = bx.quad_weights * bx.jacobian
    wy = by.quad_weights * by.jacobian
    px = bx.basis_at_quad * wx
    py = by.basis_at_quad * wy
    shape = (bx.quad_count, by.quad_count)
    n_levels = steps + 1
    times = tau * np.arange(n_levels)

    if mode == "sampled":
        f_grid = np.empty((n_levels,) + shape)
        for n, t in enumerate(times):
            f_grid[n] = np.broadcast_to(tp.f(x, yv, t), shape)
        lam = shifted_weights(-tp.beta, steps).weights

    source_hat = np.empty((n_levels, bx.dim, by.dim))
    half_source_norms = np.empty(steps)
    prev = None
    for n, t in enumerate(times):
        if mode == "analytic":
            vals = np.broadcast_to(tp.g(x, yv, t), shape)
        else:
            acc = np.tensordot(lam[n::-1], f_grid[: n + 1], axes=(0, 0))
            vals = tau**tp.beta * acc
            if tp.g_smooth is not None:
                vals = vals + np.broadcast_to(tp.g_smooth(x, yv, t), shape)
        source_hat[n] = px @ vals @ py.T
        if prev is not None:
            half = 0.5 * (prev + vals)
            half_source_norms[n - 1] = math.sqrt(float(wx @ half**2 @ wy))
        prev = vals
    return mode, source_hat, half_source_norms


class AdiSolver:
    """Marches the reduced problem on one tensor basis.

    Holds the factored sweep operators, the precomputed source
    projections, the weight tables, and the full modal history (the
    memory terms need it anyway).
    """

    def __init__(
        self,
        tp,
        basis_x,
        basis_y,
        tau,
        steps,
        correction_terms=0,
        exponents=None,
        starting_values=None,
        source_mode="auto",
    ):
        if steps < 1:
            raise ValueError("need at least one step")
        self.tp = tp
        self.basis_x = basis_x
        self.basis_y = basis_y
        self.tau = float(tau)
        self.steps = steps
        self.coeffs = step_coefficients(tp, self.tau)

        self.m = int(correction_terms)
        if self.m < 0:
            raise ValueError("correction_terms must be nonnegative")
        if self.m and exponents is None:
            raise ValueError("corrected runs need exponents")
        if self.m and steps <= self.m:
            raise ValueError("need more steps than correction terms")

        dx, dy = basis_x.dim, basis_y.dim
        self.u = np.zeros((steps + 1, dx, dy))
        self.count = 1
        if starting_values is not None:
            for j, val in enumerate(starting_values, start=1):
                self.u[j] = val
            self.count = 1 + len(starting_values)

        # lam tables up to index steps + 1 (pair sums need one extra)
        self._orders = tuple(tp.betas) + (-tp.beta,)
        self._lam = {
            b: shifted_weights(b, steps + 1).weights for b in set(self._orders)
        }
        self._pairs = {b: lam[1:] + lam[:-1] for b, lam in self._lam.items()}

        p = math.sqrt(self.coeffs.mass_coef)
        q = self.coeffs.grad_coef
        jx, jy = basis_x.jacobian, basis_y.jacobian
        self.sweep_x = ShenSystemSolver(basis_x, p * jx, q / (p * jx))
        self.sweep_y = ShenSystemSolver(basis_y, p * jy, q / (p * jy))
        self._sx = np.diag(basis_x.stiffness).copy()
        self._sy = np.diag(basis_y.stiffness).copy()

        self.corrections = None
        if self.m:
            self.corrections = build_correction_set(self._orders, exponents, steps)

        self._prepare_source(source_mode)

    # -- source handling ------------------------------------------------

    def _prepare_source(self, mode):
        self.source_mode, self.source_hat, self.half_source_norms = project_time_series(
            self.tp, self.basis_x, self.basis_y, self.tau, self.steps, mode
        )

    # -- one step ---------------------------------------------------------

    def _mass_apply(self, mat):
        bx, by = self.basis_x, self.basis_y
        return bx.jacobian * by.jacobian * (bx.mass @ mat @ by.mass)

    def _stiff_apply(self, mat):
        bx, by = self.basis_x, self.basis_y
        rx = (by.jacobian / bx.jacobian) * (self._sx[:, None] * (mat @ by.mass))
        ry = (bx.jacobian / by.jacobian) * ((bx.mass @ mat) * self._sy[None, :])
        return rx + ry

    def _cross_apply(self, mat):
        bx, by = self.basis_x, self.basis_y
        return (self._sx[:, None] * mat * self._sy[None, :]) / (bx.jacobian * by.jacobian)

    def assemble_rhs(self, k):
        """Right-hand side of the step from t_k to t_{k+1} (no corrections)."""
        if not 0 <= k < self.steps:
            raise ValueError("step index out of range")
        tau = self.tau
        uk = self.u[k]
        rhs = self._mass_apply(uk)
        rhs += tau * 0.5 * (self.source_hat[k] + self.source_hat[k + 1])
        rhs += self.coeffs.cross_coef * self._cross_apply(uk)
        hist = self.u[: k + 1]
        for b, a in zip(self.tp.betas, self.tp.coeffs):
            pair = self._pairs[b]
            mem = np.tensordot(pair[k::-1], hist, axes=(0, 0))
            rhs -= 0.5 * a * tau ** (1.0 - b) * self._mass_apply(mem)
        pair = self._pairs[-self.tp.beta]
        mem = np.tensordot(pair[k::-1], hist, axes=(0, 0))
        rhs -= 0.5 * self.tp.mu * tau ** (1.0 + self.tp.beta) * self._stiff_apply(mem)
        return rhs

    def correction_load(self, k):
        """Starting-weight additions to the right-hand side at step k."""
        cs = self.corrections
        if cs is None:
            raise ValueError("solver built without corrections")
        if k < self.m:
            raise ValueError("corrected stepping starts at k = m")
        tau = self.tau
        diffs = self.u[1 : self.m + 1] - self.u[0]
        # mass-type loads: first-difference family plus one GL family per
        # memory order; frac rows (k, k-1) average the endpoint systems
        coef = cs.delta[k].copy()
        for b, a in zip(self.tp.betas, self.tp.coeffs):
            rows = cs.frac[b]
            coef += 0.5 * a * tau ** (1.0 - b) * (rows[k] + rows[k - 1])
        load = -self._mass_apply(np.tensordot(coef, diffs, axes=(0, 0)))
        rows = cs.frac[-self.tp.beta]
        coef = 0.5 * self.tp.mu * tau ** (1.0 + self.tp.beta) * (rows[k] + rows[k - 1])
        load -= self._stiff_apply(np.tensordot(coef, diffs, axes=(0, 0)))
        load -= self.coeffs.cross_coef * self._cross_apply(
            np.tensordot(cs.perturb[k], diffs, axes=(0, 0))
        )
        return load

    def sweep_solve(self, rhs):
        """Apply the two factored one-dimensional solves."""
        half = self.sweep_x.solve(rhs)
        return self.sweep_y.solve(half.T).T

    def step_once(self):
        k = self.count - 1
        rhs = self.assemble_rhs(k)
        if self.corrections is not None:
            rhs += self.correction_load(k)
        self.u[k + 1] = self.sweep_solve(rhs)
        self.count += 1

    def march(self):
        while self.count <= self.steps:
            self.step_once()
        return self.u


def adi_step(solver, k):
    """One uncorrected step: assemble at level k, sweep, return u^{k+1}."""
    return solver.sweep_solve(solver.assemble_rhs(k))


def corrected_step(solver, k):
    """One corrected step (starting weights included), return u^{k+1}."""
    return solver.sweep_solve(solver.assemble_rhs(k) + solver.correction_load(k))


def bootstrap_starting_values(tp, basis_x, basis_y, tau, count, ratio=100, source_mode="auto"):
    """First `count` coarse-grid values from a fine uncorrected run.

    Integrates from 0 to count * tau with step tau / ratio and returns
    the values at the coarse times tau, 2 tau, ..., count * tau.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if count == 0:
        return []
    if ratio < 1:
        raise ValueError("ratio must be at least one")
    if ratio == 1:
        fine = AdiSolver(tp, basis_x, basis_y, tau, count, source_mode=source_mode)
    else:
        fine = AdiSolver(
            tp, basis_x, basis_y, tau / ratio, count * ratio, source_mode=source_mode
        )
    fine.march()
    return [fine.u[j * ratio].copy() for j in range(1, count + 1)]


@dataclass
class RunResult:
    """Trajectory and diagnostics of one march."""

    tp: TransformedProblem
    basis_x: SpectralBasis1D
    basis_y: SpectralBasis1D
    tau: float
    times: np.ndarray
    coeffs: np.ndarray  # (steps + 1, dim_x, dim_y)
    norms: np.ndarray
    half_source_norms: np.ndarray
    stability_ratio: float
    correction_terms: int
    exponents: tuple
    errors: np.ndarray = None
    error_final: float = None
    error_max: float = None
    wall_time: float = 0.0

    def field(self, n=-1):
        return ModalField2D(self.coeffs[n], self.basis_x, self.basis_y)

    def stability_bound(self, n):
        """Right side of the a-priori estimate for ||u^n||^2."""
        t_final = self.times[-1]
        return math.exp(2.0 * t_final) * 2.0 * self.tau * float(
            np.sum(self.half_source_norms[:n] ** 2)
        )


def _initial_only(tp, basis_x, basis_y):
    """Zero-step trajectory: the (zero) transformed initial state alone."""
    coeffs = np.zeros((1, basis_x.dim, basis_y.dim))
    errors = error_final = error_max = None
    if tp.exact is not None:
        field = ModalField2D(coeffs[0], basis_x, basis_y)
        e0 = l2_error(field, lambda x, y: tp.exact(x, y, 0.0))
        errors = np.array([e0])
        error_final = error_max = float(e0)
    return RunResult(
        tp=tp,
        basis_x=basis_x,
        basis_y=basis_y,
        tau=0.0,
        times=np.zeros(1),
        coeffs=coeffs,
        norms=np.zeros(1),
        half_source_norms=np.zeros(0),
        stability_ratio=0.0,
        correction_terms=0,
        exponents=(),
        errors=errors,
        error_final=error_final,
        error_max=error_max,
    )


def _error_tables(basis):
    from .basis import gauss_legendre, legendre_table

    need = basis.degree + 8
    if basis.quad_count >= need:
        return basis.quad_nodes, basis.quad_weights, basis.basis_at_quad
    nodes, weights = gauss_legendre(need)
    table = legendre_table(basis.degree, nodes)
    return nodes, weights, table[: basis.dim] - table[2 : basis.dim + 2]


def run(
    problem,
    degree,
    steps,
    final_time,
    correction_terms=0,
    exponents=None,
    bootstrap_ratio=100,
    quad_count=None,
    source_mode="auto",
    starting_values=None,
):
    """March one configuration and collect errors and diagnostics.

    problem may be a ProblemSpec (reduced automatically) or an already
    reduced TransformedProblem.  With correction_terms m > 0 the first m
    values come from `starting_values` or a fine bootstrap run, and all
    later steps use the starting-weight corrections.
    """
    if final_time <= 0.0:
        raise ValueError("final time must be positive")
    tp = reduce_order(problem) if isinstance(problem, ProblemSpec) else problem
    basis_x = build_basis(degree, tp.domain.x_interval, quad_count)
    basis_y = build_basis(degree, tp.domain.y_interval, quad_count)
    if steps == 0:
        return _initial_only(tp, basis_x, basis_y)
    tau = final_time / steps

    t0 = time.perf_counter()
    m = int(correction_terms)
    if m and starting_values is None:
        starting_values = bootstrap_starting_values(
            tp, basis_x, basis_y, tau, m, ratio=bootstrap_ratio, source_mode=source_mode
        )
    solver = AdiSolver(
        tp,
        basis_x,
        basis_y,
        tau,
        steps,
        correction_terms=m,
        exponents=exponents,
        starting_values=starting_values if m else None,
        source_mode=source_mode,
    )
    solver.march()
    wall = time.perf_counter() - t0

    times = tau * np.arange(steps + 1)
    jxjy = basis_x.jacobian * basis_y.jacobian
    mass_u = np.einsum("nij,nij->n", solver.u, (basis_x.mass @ solver.u) @ basis_y.mass)
    norms = np.sqrt(np.maximum(jxjy * mass_u, 0.0))

    ratio = 0.0
    acc = 0.0
    factor = math.exp(2.0 * final_time) * 2.0 * tau
    for n in range(1, steps + 1):
        acc += solver.half_source_norms[n - 1] ** 2
        bound = factor * acc
        if bound > 0.0:
            ratio = max(ratio, norms[n] ** 2 / bound)

    errors = error_final = error_max = None
    if tp.exact is not None:
        nx, wxq, px = _error_tables(basis_x)
        ny, wyq, py = _error_tables(basis_y)
        xphys = basis_x.offset + basis_x.jacobian * nx
        yphys = basis_y.offset + basis_y.jacobian * ny
        wx = wxq * basis_x.jacobian
        wy = wyq * basis_y.jacobian
        shape = (len(xphys), len(yphys))
        errors = np.empty(steps + 1)
        for n, t in enumerate(times):
            target = np.broadcast_to(tp.exact(xphys[:, None], yphys[None, :], t), shape)
            diff2 = (px.T @ solver.u[n] @ py - target) ** 2
            errors[n] = math.sqrt(float(wx @ diff2 @ wy))
        error_final = float(errors[-1])
        error_max = float(np.max(errors))

    return RunResult(
        tp=tp,
        basis_x=basis_x,
        basis_y=basis_y,
        tau=tau,
        times=times,
        coeffs=solver.u,
        norms=norms,
        half_source_norms=solver.half_source_norms,
        stability_ratio=ratio,
        correction_terms=m,
        exponents=tuple(exponents) if exponents else (),
        errors=errors,
        error_final=error_final,
        error_max=error_max,
        wall_time=wall,
    )
