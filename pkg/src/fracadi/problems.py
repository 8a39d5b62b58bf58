"""Model problems for the multi-term time-fractional solver.

Each problem states C D^alpha u + sum_j a_j C D^{alpha_j} u =
mu Laplacian(u) + f on a rectangle with homogeneous Dirichlet data,
u(0) = g1 and u_t(0) = g2.  Separable power-law structure
(sum of c * t^gamma * s(x, y) terms) is carried explicitly where known
so fractional integrals of the forcing have closed forms and the PDE
residual can be checked pointwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Rectangle:
    ax: float
    bx: float
    ay: float
    by: float

    def __post_init__(self):
        if not (self.bx > self.ax and self.by > self.ay):
            raise ValueError("rectangle must have positive side lengths")

    @property
    def x_interval(self):
        return (self.ax, self.bx)

    @property
    def y_interval(self):
        return (self.ay, self.by)


@dataclass(frozen=True)
class SpatialProfile:
    """A spatial factor and (when known) its Laplacian, both vectorized."""

    values: callable
    laplacian: callable = None


@dataclass(frozen=True)
class SeparableTerm:
    """One c * t^exponent * profile(x, y) contribution."""

    coefficient: float
    exponent: float
    profile: SpatialProfile

    def __post_init__(self):
        if self.exponent < 0.0:
            raise ValueError("time exponents must be nonnegative")


def evaluate_terms(terms, x, y, t):
    total = 0.0
    for term in terms:
        total = total + term.coefficient * t**term.exponent * term.profile.values(x, y)
    return total


def caputo_power_factor(order, exponent):
    """(coefficient, new exponent) of the Caputo derivative of t^exponent.

    Returns None when the derivative vanishes identically (exponent an
    integer not exceeding ceil(order) - 1, constants included).
    """
    if order < 0.0:
        raise ValueError("caputo_power_factor expects a nonnegative order")
    n = math.ceil(order) if order > 0.0 else 0
    if exponent < 0.0:
        raise ValueError("exponent must be nonnegative")
    if float(exponent).is_integer() and exponent <= n - 1:
        return None
    if exponent <= n - 1:
        raise ValueError(
            f"Caputo derivative of t^{exponent} undefined for order {order}"
        )
    coef = math.exp(math.lgamma(exponent + 1.0) - math.lgamma(exponent + 1.0 - order))
    return coef, exponent - order


@dataclass(frozen=True)
class ProblemSpec:
    """One model problem; orders sorted as alpha > alpha_1 > ... > alpha_Q."""

    name: str
    alpha: float
    alphas: tuple
    coeffs: tuple
    mu: float
    domain: Rectangle
    forcing_terms: tuple = ()
    exact_terms: tuple = ()
    g1: SpatialProfile = None
    g2: SpatialProfile = None
    qualitative_only: bool = False
    description: str = ""

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise ValueError("leading order must lie in (1, 2)")
        orders = (self.alpha,) + tuple(self.alphas)
        if any(b <= a for a, b in zip(orders[1:], orders)):
            raise ValueError("orders must be strictly decreasing after alpha")
        if self.alphas and self.alphas[-1] <= 0.0:
            raise ValueError("lower orders must be positive")
        if len(self.alphas) != len(self.coeffs):
            raise ValueError("one coefficient per lower-order term")
        if any(a < 0.0 for a in self.coeffs):
            raise ValueError("lower-order coefficients must be nonnegative")
        if self.mu <= 0.0:
            raise ValueError("diffusion coefficient must be positive")

    def f(self, x, y, t):
        return evaluate_terms(self.forcing_terms, x, y, t)

    def exact(self, x, y, t):
        if not self.exact_terms:
            raise ValueError(f"problem {self.name} has no exact solution")
        return evaluate_terms(self.exact_terms, x, y, t)

    @property
    def has_exact(self):
        return bool(self.exact_terms)

    def initial_value(self, x, y):
        if self.g1 is None:
            return np.zeros(np.broadcast(x, y).shape)
        return self.g1.values(x, y)

    def initial_velocity(self, x, y):
        if self.g2 is None:
            return np.zeros(np.broadcast(x, y).shape)
        return self.g2.values(x, y)


def pde_residual(problem, x, y, t):
    """Pointwise residual of the exact solution in the strong equation.

    Needs exact_terms with Laplacians; Caputo derivatives of each power
    term come from the Gamma-function formula.
    """
    if not problem.has_exact:
        raise ValueError("residual needs an exact solution")
    res = -problem.f(x, y, t)
    for term in problem.exact_terms:
        if term.profile.laplacian is None:
            raise ValueError("every exact term needs a Laplacian for the residual")
        res = res - problem.mu * term.coefficient * t**term.exponent * term.profile.laplacian(x, y)
        for order, coef in zip(
            (problem.alpha,) + tuple(problem.alphas), (1.0,) + tuple(problem.coeffs)
        ):
            fact = caputo_power_factor(order, term.exponent)
            if fact is None:
                continue
            res = res + coef * term.coefficient * fact[0] * t ** fact[1] * term.profile.values(x, y)
    return res


def boundary_mismatch(problem, t, samples=201):
    """Largest |exact| on the four edges at time t (Dirichlet defect)."""
    if not problem.has_exact:
        return 0.0
    d = problem.domain
    xs = np.linspace(d.ax, d.bx, samples)
    ys = np.linspace(d.ay, d.by, samples)
    worst = 0.0
    for edge in (
        (xs, np.full_like(xs, d.ay)),
        (xs, np.full_like(xs, d.by)),
        (np.full_like(ys, d.ax), ys),
        (np.full_like(ys, d.bx), ys),
    ):
        worst = max(worst, float(np.max(np.abs(problem.exact(edge[0], edge[1], t)))))
    return worst


def _gaussian_bump():
    def values(x, y):
        return np.exp(-(x**2 + y**2))

    def laplacian(x, y):
        return (4.0 * (x**2 + y**2) - 4.0) * np.exp(-(x**2 + y**2))

    return SpatialProfile(values=values, laplacian=laplacian)


def _sine_product(kx=1.0, ky=1.0, factor=np.pi):
    fx = factor * kx
    fy = factor * ky

    def values(x, y):
        return np.sin(fx * x) * np.sin(fy * y)

    def laplacian(x, y):
        return -(fx**2 + fy**2) * np.sin(fx * x) * np.sin(fy * y)

    return SpatialProfile(values=values, laplacian=laplacian)


def example_6_1():
    """Smooth manufactured solution t^3 exp(-(x^2+y^2)).

    The Gaussian does not vanish on the boundary of the printed domain,
    so the Dirichlet solver only reproduces it qualitatively; the
    mismatch is reported, not hidden.
    """
    bump = _gaussian_bump()
    g = math.gamma(4.0)
    forcing = (
        SeparableTerm(g / math.gamma(2.5), 1.5, bump),
        SeparableTerm(3.0, 2.0, bump),
        SeparableTerm(g / math.gamma(3.6), 2.6, bump),
        SeparableTerm(
            2.0,
            3.0,
            SpatialProfile(
                values=lambda x, y: (4.0 - 4.0 * (x**2 + y**2)) * np.exp(-(x**2 + y**2)),
                laplacian=None,
            ),
        ),
    )
    return ProblemSpec(
        name="example_6_1",
        alpha=1.5,
        alphas=(1.0, 0.4),
        coeffs=(1.0, 1.0),
        mu=2.0,
        domain=Rectangle(-2.0, 1.0, -1.0, 2.0),
        forcing_terms=forcing,
        exact_terms=(SeparableTerm(1.0, 3.0, bump),),
        qualitative_only=True,
        description="smooth Gaussian bump, boundary data only approximately zero",
    )


_NONSMOOTH_POWERS = tuple(1.0 + 0.1 * k for k in range(1, 7))


def _nonsmooth_terms(profile):
    terms = [SeparableTerm(1.0 / (k + 1.0), 1.0 + 0.1 * k, profile) for k in range(1, 7)]
    terms.append(SeparableTerm(2.0, 0.0, profile))
    return tuple(terms)


def _nonsmooth_forcing(profile, alpha, alphas, coeffs, mu, lap_factor):
    """Forcing for u = (sum_k t^{1+0.1k}/(k+1) + 2) * profile.

    lap_factor is the constant with Laplacian(profile) = lap_factor * profile.
    """
    terms = []
    for k in range(1, 7):
        c = 1.0 / (k + 1.0)
        gamma = 1.0 + 0.1 * k
        for order, a in zip((alpha,) + tuple(alphas), (1.0,) + tuple(coeffs)):
            fact = caputo_power_factor(order, gamma)
            if fact is None:
                continue
            terms.append(SeparableTerm(a * c * fact[0], fact[1], profile))
    # -mu * Laplacian(u): every exact term contributes, including the constant
    for k in range(1, 7):
        terms.append(SeparableTerm(-mu * lap_factor / (k + 1.0), 1.0 + 0.1 * k, profile))
    terms.append(SeparableTerm(-mu * lap_factor * 2.0, 0.0, profile))
    return tuple(terms)


def example_6_2():
    """Low-regularity solution with nonzero initial value, printed domain.

    u = (sum_{k=1}^{6} t^{1+0.1k}/(k+1) + 2) sin x sin y on
    (-2, 1) x (-1, 2); sin x sin y does not vanish on that boundary, so
    this is registered for qualitative runs only.
    """
    profile = _sine_product(factor=1.0)
    alpha, alphas, coeffs, mu = 1.1, (1.0, 0.1), (1.0, 1.0), 2.0
    return ProblemSpec(
        name="example_6_2",
        alpha=alpha,
        alphas=alphas,
        coeffs=coeffs,
        mu=mu,
        domain=Rectangle(-2.0, 1.0, -1.0, 2.0),
        forcing_terms=_nonsmooth_forcing(profile, alpha, alphas, coeffs, mu, -2.0),
        exact_terms=_nonsmooth_terms(profile),
        g1=SpatialProfile(
            values=lambda x, y: 2.0 * np.sin(x) * np.sin(y),
            laplacian=lambda x, y: -4.0 * np.sin(x) * np.sin(y),
        ),
        qualitative_only=True,
        description="non-smooth powers of t, nonzero initial value",
    )


def compatible_smooth():
    """Smooth solution t^3 sin(pi x) sin(pi y) on (-1, 1)^2.

    Same fractional orders as the Gaussian example but with exact
    homogeneous Dirichlet data, so quantitative convergence rates are
    meaningful.
    """
    profile = _sine_product()
    mu = 2.0
    g = math.gamma(4.0)
    forcing = (
        SeparableTerm(g / math.gamma(2.5), 1.5, profile),
        SeparableTerm(3.0, 2.0, profile),
        SeparableTerm(g / math.gamma(3.6), 2.6, profile),
        SeparableTerm(2.0 * mu * np.pi**2, 3.0, profile),
    )
    return ProblemSpec(
        name="compatible_smooth",
        alpha=1.5,
        alphas=(1.0, 0.4),
        coeffs=(1.0, 1.0),
        mu=mu,
        domain=Rectangle(-1.0, 1.0, -1.0, 1.0),
        forcing_terms=forcing,
        exact_terms=(SeparableTerm(1.0, 3.0, profile),),
        description="smooth separable solution with exact boundary data",
    )


def compatible_nonsmooth():
    """Low-regularity powers with exact boundary data on (-1, 1)^2.

    u = (sum_{k=1}^{6} t^{1+0.1k}/(k+1) + 2) sin(pi x) sin(pi y) with the
    same orders as the printed low-regularity example; the t^{1.1}
    leading power caps the uncorrected scheme near first order and is
    what the starting corrections are for.
    """
    profile = _sine_product()
    alpha, alphas, coeffs, mu = 1.1, (1.0, 0.1), (1.0, 1.0), 2.0
    return ProblemSpec(
        name="compatible_nonsmooth",
        alpha=alpha,
        alphas=alphas,
        coeffs=coeffs,
        mu=mu,
        domain=Rectangle(-1.0, 1.0, -1.0, 1.0),
        forcing_terms=_nonsmooth_forcing(profile, alpha, alphas, coeffs, mu, -2.0 * np.pi**2),
        exact_terms=_nonsmooth_terms(profile),
        g1=SpatialProfile(
            values=lambda x, y: 2.0 * np.sin(np.pi * x) * np.sin(np.pi * y),
            laplacian=lambda x, y: -2.0 * np.pi**2 * 2.0 * np.sin(np.pi * x) * np.sin(np.pi * y),
        ),
        description="non-smooth powers of t with exact boundary data",
    )


_REGISTRY = {
    "example_6_1": example_6_1,
    "example_6_2": example_6_2,
    "compatible_smooth": compatible_smooth,
    "compatible_nonsmooth": compatible_nonsmooth,
}

PROBLEM_IDS = tuple(sorted(_REGISTRY))


def get_problem(name):
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise KeyError(
            f"unknown problem {name!r}; available: {', '.join(PROBLEM_IDS)}"
        ) from None
