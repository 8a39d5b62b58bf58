"""Command-line driver: single runs, convergence studies, verification.

Configuration comes from an INI-style file ([run] section, optional
inline [problem] section) with command-line flags taking precedence.
Outputs are CSV rate tables, whitespace-delimited plot data, and a
key-value diagnostics record; every float is written with 15
significant digits so identical configurations reproduce identical
files.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 I/O failure.
"""
from __future__ import annotations

import argparse
import configparser
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import ShenSystemSolver, build_basis, evaluate_field
from .oracle import (
    dense_kronecker_solve,
    gauss_rule_deviation,
    quadrature_matrix_check,
)
from .problems import (
    PROBLEM_IDS,
    ProblemSpec,
    Rectangle,
    SeparableTerm,
    SpatialProfile,
    boundary_mismatch,
    get_problem,
)
from .solver import StepCoefficients, run
from .weights import (
    binomial_weights,
    history_quadratic_form,
    rl_power,
    shifted_weights,
    starting_weights_delta,
    starting_weights_frac,
    starting_weights_perturb,
)

MAX_M = 6
SNAPSHOT_POINTS = 101


class ConfigError(Exception):
    """Invalid run configuration; messages name the offending fields."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


def fmt(value):
    """15-significant-digit text for any real number."""
    return f"{value:.15g}"


def default_sigmas(m):
    return tuple(1.1 + 0.1 * p for p in range(m))


@dataclass
class RunConfig:
    """One resolved run or study request."""

    problem: str = None
    custom: dict = None
    N: int = None
    M: int = None
    T: float = 1.0
    m: int = 0
    sigma: tuple = None
    bootstrap_ratio: int = 100
    study_param: str = "tau"
    levels: tuple = None
    quad_count: int = None
    source_mode: str = "auto"
    output: str = "."

    def validate(self, need_study=False):
        errors = []
        if self.problem is None and self.custom is None:
            errors.append("problem: no problem id given and no [problem] section defined")
        if self.problem is not None and self.custom is not None:
            errors.append("problem: both a registry id and an inline [problem] section given")
        if self.problem is not None and self.custom is None and self.problem not in PROBLEM_IDS:
            errors.append(
                f"problem: unknown id {self.problem!r}; available: {', '.join(PROBLEM_IDS)}"
            )
        if not (need_study and self.study_param == "N"):
            if self.N is None:
                errors.append("N: polynomial degree is required")
            elif self.N < 4:
                errors.append(f"N: degree must be at least 4, got {self.N}")
        if need_study:
            if self.study_param not in ("tau", "N"):
                errors.append(f"study_param: must be 'tau' or 'N', got {self.study_param!r}")
            if self.levels is None or len(self.levels) < 2:
                errors.append("levels: a study needs at least two refinement levels")
            elif any(v < 1 for v in self.levels):
                errors.append("levels: refinement levels must be positive integers")
            elif self.study_param == "N" and any(v < 4 for v in self.levels):
                errors.append("levels: N levels must be at least 4")
            if self.study_param == "N" and self.M is None:
                errors.append("M: an N-study needs a fixed step count")
        elif self.M is None:
            errors.append("M: step count is required")
        elif self.M < 0:
            errors.append(f"M: step count must be nonnegative, got {self.M}")
        if self.T <= 0.0:
            errors.append(f"T: final time must be positive, got {fmt(self.T)}")
        if not 0 <= self.m <= MAX_M:
            errors.append(f"m: correction count must lie in 0..{MAX_M}, got {self.m}")
        if self.sigma is not None:
            if self.m and len(self.sigma) != self.m:
                errors.append(
                    f"sigma: expected {self.m} exponents for m = {self.m}, got {len(self.sigma)}"
                )
            if any(s <= 0.0 for s in self.sigma):
                errors.append("sigma: exponents must be positive")
            if any(b <= a for a, b in zip(self.sigma, self.sigma[1:])):
                errors.append("sigma: exponents must be strictly increasing")
        if self.bootstrap_ratio < 1:
            errors.append(f"bootstrap_ratio: must be at least 1, got {self.bootstrap_ratio}")
        if self.source_mode not in ("auto", "analytic", "sampled"):
            errors.append(
                f"source_mode: must be auto, analytic or sampled, got {self.source_mode!r}"
            )
        if self.quad_count is not None and self.N is not None and self.quad_count < self.N + 1:
            errors.append(f"quad_count: need at least N + 1 = {self.N + 1}, got {self.quad_count}")
        if self.custom is not None:
            try:
                build_custom_problem(self.custom)
            except ConfigError as exc:
                errors.extend(exc.messages)
        if errors:
            raise ConfigError(errors)

    def sigmas(self):
        if self.m == 0:
            return ()
        return self.sigma if self.sigma is not None else default_sigmas(self.m)

    def make_problem(self):
        if self.custom is not None:
            return build_custom_problem(self.custom)
        return get_problem(self.problem)


# -- custom problems from config ------------------------------------------

_SPEC_FIELD_BY_MESSAGE = {
    "leading order must lie in (1, 2)": "alpha",
    "orders must be strictly decreasing after alpha": "alphas",
    "lower orders must be positive": "alphas",
    "one coefficient per lower-order term": "coeffs",
    "lower-order coefficients must be nonnegative": "coeffs",
    "diffusion coefficient must be positive": "mu",
}


def _parse_floats(text, count=None):
    parts = [p for p in text.replace(",", " ").split() if p]
    vals = tuple(float(p) for p in parts)
    if count is not None and len(vals) != count:
        raise ValueError(f"expected {count} numbers, got {len(vals)}")
    return vals


def _sine_mode(kx, ky, domain):
    """Mode sin(kx pi (x-ax)/Lx) sin(ky pi (y-ay)/Ly): zero on the boundary."""
    fx = kx * math.pi / (domain.bx - domain.ax)
    fy = ky * math.pi / (domain.by - domain.ay)
    ax, ay = domain.ax, domain.ay

    def values(x, y):
        return np.sin(fx * (x - ax)) * np.sin(fy * (y - ay))

    def laplacian(x, y):
        return -(fx**2 + fy**2) * values(x, y)

    return SpatialProfile(values=values, laplacian=laplacian)


def build_custom_problem(section):
    """ProblemSpec from an inline [problem] config section.

    Forcing is a sum of sine modes of the rectangle, each with a list of
    (coefficient, exponent) power-law time factors:
    forcing_mode_<kx>_<ky> = c1 e1, c2 e2, ...
    Custom problems carry no exact solution; runs report norms only.
    """
    errors = []
    data = dict(section)
    name = data.pop("name", "custom")

    def grab(key, count=None):
        raw = data.pop(key, None)
        if raw is None:
            errors.append(f"problem.{key}: missing required key")
            return None
        try:
            return _parse_floats(raw, count)
        except ValueError as exc:
            errors.append(f"problem.{key}: {exc}")
            return None

    alpha = grab("alpha", 1)
    alphas = grab("alphas") or () if "alphas" in data else ()
    coeffs = grab("coeffs") or () if "coeffs" in data else ()
    mu = grab("mu", 1)
    domain_vals = grab("domain", 4)

    domain = None
    if domain_vals is not None:
        try:
            domain = Rectangle(*domain_vals)
        except ValueError as exc:
            errors.append(f"problem.domain: {exc}")

    forcing = []
    for key in sorted(data):
        if not key.startswith("forcing_mode_"):
            errors.append(f"problem.{key}: unknown key")
            continue
        tail = key[len("forcing_mode_") :].split("_")
        if len(tail) != 2 or not all(p.isdigit() and int(p) > 0 for p in tail):
            errors.append(f"problem.{key}: expected forcing_mode_<kx>_<ky> with positive integers")
            continue
        if domain is None:
            continue
        profile = _sine_mode(int(tail[0]), int(tail[1]), domain)
        for pair in data[key].split(","):
            if not pair.strip():
                continue
            try:
                c, e = _parse_floats(pair, 2)
                forcing.append(SeparableTerm(c, e, profile))
            except ValueError as exc:
                errors.append(f"problem.{key}: {exc}")

    if errors:
        raise ConfigError(errors)
    try:
        return ProblemSpec(
            name=name,
            alpha=alpha[0],
            alphas=alphas,
            coeffs=coeffs,
            mu=mu[0],
            domain=domain,
            forcing_terms=tuple(forcing),
            qualitative_only=True,
            description="user-defined power-law forcing",
        )
    except ValueError as exc:
        fieldname = _SPEC_FIELD_BY_MESSAGE.get(str(exc), "problem")
        raise ConfigError([f"problem.{fieldname}: {exc}"]) from None


# -- config file / flag merging --------------------------------------------


def load_config_file(path):
    parser = configparser.ConfigParser()
    parser.optionxform = str  # M (steps) and m (corrections) must not collide
    try:
        with open(path, "r", encoding="utf-8") as handle:
            parser.read_file(handle)
    except configparser.Error as exc:
        raise ConfigError([f"config: {exc}"]) from None
    run_section = dict(parser["run"]) if parser.has_section("run") else {}
    problem_section = dict(parser["problem"]) if parser.has_section("problem") else None
    return run_section, problem_section


def _parse_levels(text):
    return tuple(int(v) for v in text.replace(",", " ").split())


_INT_KEYS = {"N", "M", "m", "bootstrap_ratio", "quad_count"}
_STR_KEYS = {"problem", "study_param", "source_mode", "output"}


def build_run_config(args):
    """Merge the config file (if any) with command-line overrides."""
    cfg = RunConfig()
    errors = []
    if getattr(args, "config", None):
        run_section, problem_section = load_config_file(args.config)
        cfg.custom = problem_section
        for key, raw in run_section.items():
            try:
                if key in _INT_KEYS:
                    setattr(cfg, key, int(raw))
                elif key in _STR_KEYS:
                    setattr(cfg, key, raw.strip())
                elif key == "T":
                    cfg.T = float(raw)
                elif key == "sigma":
                    cfg.sigma = _parse_floats(raw)
                elif key == "levels":
                    cfg.levels = _parse_levels(raw)
                else:
                    errors.append(f"run.{key}: unknown key")
            except ValueError as exc:
                errors.append(f"run.{key}: {exc}")
    if errors:
        raise ConfigError(errors)

    for attr in (
        "problem",
        "N",
        "M",
        "T",
        "m",
        "bootstrap_ratio",
        "study_param",
        "quad_count",
        "source_mode",
        "output",
    ):
        value = getattr(args, attr, None)
        if value is not None:
            setattr(cfg, attr, value)
    if getattr(args, "sigma", None) is not None:
        cfg.sigma = tuple(args.sigma)
    if getattr(args, "levels", None) is not None:
        cfg.levels = tuple(args.levels)
    return cfg


# -- rate tables ------------------------------------------------------------


def convergence_rates(errors, params):
    """rate[i] = log(e[i-1]/e[i]) / log(h[i-1]/h[i]); first entry None."""
    if len(errors) != len(params):
        raise ValueError("one error per refinement level")
    rates = [None]
    for i in range(1, len(errors)):
        rates.append(math.log(errors[i - 1] / errors[i]) / math.log(params[i - 1] / params[i]))
    return rates


@dataclass
class RateTable:
    """Error/rate rows of one refinement study.

    `params` labels the rows (1/tau or N); `hs` is the refined parameter
    the rate formula divides by (tau itself for temporal studies).
    """

    param_name: str
    params: tuple
    l2_errors: tuple
    max_errors: tuple
    hs: tuple = None

    rates: tuple = field(init=False)
    max_rates: tuple = field(init=False)

    def __post_init__(self):
        hs = self.hs if self.hs is not None else self.params
        self.rates = tuple(convergence_rates(self.l2_errors, hs))
        self.max_rates = tuple(convergence_rates(self.max_errors, hs))

    def header(self):
        return f"{self.param_name}, l2_error, rate, max_l2_error, max_rate"

    def csv_lines(self):
        lines = [self.header()]
        for p, e, r, em, rm in zip(
            self.params, self.l2_errors, self.rates, self.max_errors, self.max_rates
        ):
            rs = fmt(r) if r is not None else ""
            rms = fmt(rm) if rm is not None else ""
            lines.append(f"{fmt(p)}, {fmt(e)}, {rs}, {fmt(em)}, {rms}")
        return lines


def parse_rate_csv(path):
    """Read a rates.csv back as (header, rows of float-or-None)."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle]
    rows = []
    for line in lines[1:]:
        cells = [c.strip() for c in line.split(",")]
        rows.append(tuple(float(c) if c else None for c in cells))
    return lines[0], rows


# -- output files ------------------------------------------------------------


def write_lines(path, lines):
    with open(path, "w", encoding="utf-8") as handle:
        for line in lines:
            handle.write(line + "\n")


def snapshot_lines(result, points=SNAPSHOT_POINTS):
    """Uniform-grid 'x y value' triplets of u = u_reduced + lifted g1."""
    domain = result.tp.domain
    xs = np.linspace(domain.ax, domain.bx, points)
    ys = np.linspace(domain.ay, domain.by, points)
    values = np.zeros((points, points))
    # basis functions vanish identically on the boundary rows/columns
    values[1:-1, 1:-1] = evaluate_field(result.field(-1), xs[1:-1], ys[1:-1])
    if result.tp.lift is not None:
        values = values + result.tp.lift(xs[:, None], ys[None, :])
    lines = []
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            lines.append(f"{fmt(x)} {fmt(y)} {fmt(values[i, j])}")
    return lines


def diagnostics_lines(cfg, problem, result):
    lines = [
        "command = run",
        f"problem = {problem.name}",
        f"N = {cfg.N}",
        f"M = {cfg.M}",
        f"T = {fmt(cfg.T)}",
        f"m = {cfg.m}",
        f"sigma = {' '.join(fmt(s) for s in cfg.sigmas())}",
        f"bootstrap_ratio = {cfg.bootstrap_ratio}",
        f"source_mode = {cfg.source_mode}",
        f"tau = {fmt(result.tau)}",
        f"final_l2_norm = {fmt(result.norms[-1])}",
        f"max_l2_norm = {fmt(np.max(result.norms))}",
        f"stability_ratio = {fmt(result.stability_ratio)}",
    ]
    if result.error_final is not None:
        lines.append(f"final_l2_error = {fmt(result.error_final)}")
        lines.append(f"max_l2_error = {fmt(result.error_max)}")
    if problem.has_exact:
        lines.append(f"boundary_mismatch = {fmt(boundary_mismatch(problem, cfg.T))}")
    return lines


# -- subcommands -------------------------------------------------------------


def _execute(cfg, problem, steps, degree):
    return run(
        problem,
        degree,
        steps,
        cfg.T,
        correction_terms=cfg.m,
        exponents=cfg.sigmas() or None,
        bootstrap_ratio=cfg.bootstrap_ratio,
        quad_count=cfg.quad_count,
        source_mode=cfg.source_mode,
    )


def _ensure_outdir(path):
    outdir = Path(path)
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


def cmd_run(args, out=sys.stdout):
    cfg = build_run_config(args)
    cfg.validate()
    problem = cfg.make_problem()
    result = _execute(cfg, problem, cfg.M, cfg.N)

    outdir = _ensure_outdir(cfg.output)
    diag = diagnostics_lines(cfg, problem, result)
    write_lines(outdir / "diagnostics.txt", diag)
    write_lines(outdir / "surface.dat", snapshot_lines(result))
    for line in diag:
        print(line, file=out)
    print(f"wall_time_s = {result.wall_time:.3f}", file=out)
    print(f"wrote {outdir / 'diagnostics.txt'}", file=out)
    print(f"wrote {outdir / 'surface.dat'}", file=out)
    return 0


def cmd_study(args, out=sys.stdout):
    cfg = build_run_config(args)
    cfg.validate(need_study=True)
    problem = cfg.make_problem()
    if not problem.has_exact:
        raise ConfigError(["problem: a study needs a problem with an exact solution"])

    if cfg.study_param == "tau":
        jobs = [(cfg.N, int(level)) for level in cfg.levels]
        params = tuple(level / cfg.T for level in cfg.levels)  # 1/tau
        hs = tuple(cfg.T / level for level in cfg.levels)
        param_name = "one_over_tau"
    else:
        jobs = [(int(level), cfg.M) for level in cfg.levels]
        params = tuple(float(level) for level in cfg.levels)
        hs = params
        param_name = "N"

    # levels are independent jobs; each builds its own bases and solver
    with ThreadPoolExecutor(max_workers=min(4, len(jobs))) as pool:
        results = list(pool.map(lambda nm: _execute(cfg, problem, nm[1], nm[0]), jobs))

    table = RateTable(
        param_name=param_name,
        params=params,
        l2_errors=tuple(r.error_final for r in results),
        max_errors=tuple(r.error_max for r in results),
        hs=hs,
    )
    outdir = _ensure_outdir(cfg.output)
    write_lines(outdir / "rates.csv", table.csv_lines())
    conv = [f"# {param_name} l2_error"]
    conv += [f"{fmt(p)} {fmt(e)}" for p, e in zip(table.params, table.l2_errors)]
    write_lines(outdir / "convergence.dat", conv)
    for line in table.csv_lines():
        print(line, file=out)
    print(f"wrote {outdir / 'rates.csv'}", file=out)
    print(f"wrote {outdir / 'convergence.dat'}", file=out)
    return 0


def cmd_weights(args, out=sys.stdout):
    order = args.order
    if not -1.0 <= order <= 1.0:
        raise ConfigError([f"order: must lie in [-1, 1], got {fmt(order)}"])
    if args.count < 0:
        raise ConfigError([f"count: must be nonnegative, got {args.count}"])
    raw = binomial_weights(order, args.count)
    lam = shifted_weights(order, args.count).weights
    print("# j g_j lambda_j", file=out)
    for j in range(args.count + 1):
        print(f"{j} {fmt(raw[j])} {fmt(lam[j])}", file=out)
    if args.sigma:
        sig = tuple(args.sigma)
        if any(s <= 0.0 for s in sig) or any(b <= a for a, b in zip(sig, sig[1:])):
            raise ConfigError(["sigma: exponents must be positive and strictly increasing"])
        print(f"# frac rows, order {fmt(order)}, sigma {' '.join(map(fmt, sig))}", file=out)
        for k in range(1, args.rows + 1):
            w = starting_weights_frac(order, sig, k)
            print(f"{k} " + " ".join(fmt(v) for v in w), file=out)
        print("# delta rows", file=out)
        for k in range(1, args.rows + 1):
            w = starting_weights_delta(sig, k)
            print(f"{k} " + " ".join(fmt(v) for v in w), file=out)
        print("# perturb rows", file=out)
        for k in range(1, args.rows + 1):
            w = starting_weights_perturb(sig, k)
            print(f"{k} " + " ".join(fmt(v) for v in w), file=out)
    return 0


# -- verification -------------------------------------------------------------


def weight_identity_residual(order, exponents, row):
    """Largest defect of the three starting-weight identities at one row.

    The corrected GL sum must reproduce the Riemann-Liouville derivative
    of t^sigma at t_{row+1}; the averaged difference quotient must hit
    (t^sigma)' at the half point; the perturbation weights must cancel
    the forward difference of t^sigma.  All with unit step.

    The sums are evaluated in extended precision: for clustered
    exponents the weights reach O(1e3) with alternating signs, so a
    double-precision evaluation would measure its own rounding rather
    than the defect of the weights as shipped.
    """
    ld = np.longdouble
    sig = tuple(exponents)
    j = np.arange(1, len(sig) + 1, dtype=ld)
    grid = np.arange(row + 2, dtype=ld)
    lam = shifted_weights(order, row + 1).weights.astype(ld)
    w_frac = starting_weights_frac(order, sig, row).astype(ld)
    w_pert = starting_weights_perturb(sig, row).astype(ld)
    w_delta = None
    if row >= 1 or min(sig) >= 1.0:
        w_delta = starting_weights_delta(sig, row).astype(ld)
    worst = ld(0.0)
    for s in sig:
        powers = grid ** ld(s)
        jp = j ** ld(s)
        target = ld(rl_power(order, s, float(row + 1)))
        # same contraction as apply_gl with unit step, kept in extended
        # precision (apply_gl works in double)
        corrected = lam[::-1] @ powers + w_frac @ jp
        worst = max(worst, abs(corrected - target) / max(ld(1.0), abs(target)))
        diff = powers[row + 1] - powers[row]
        worst = max(worst, abs(diff + w_pert @ jp))
        if w_delta is not None:
            half = ld(0.5) * ld(s) * (grid[row] ** ld(s - 1.0) + grid[row + 1] ** ld(s - 1.0))
            worst = max(worst, abs(diff + w_delta @ jp - half))
    return float(worst)


def _verify_checks():
    """Deterministic oracle cross-checks; yields (name, ok, metric)."""
    for n in (8, 24, 64):
        dev = gauss_rule_deviation(n)
        yield f"gauss_rule_n{n}", dev <= 1e-13, dev
    for n in (8, 16, 24):
        dev = quadrature_matrix_check(build_basis(n, (-1.0, 1.0)))
        yield f"matrix_quadrature_N{n}", dev <= 1e-11, dev

    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(10):
        degree = int(rng.integers(6, 13))
        ax = float(rng.uniform(-2.0, 1.0))
        ay = float(rng.uniform(-2.0, 1.0))
        bx = build_basis(degree, (ax, ax + float(rng.uniform(0.5, 3.0))))
        by = build_basis(degree, (ay, ay + float(rng.uniform(0.5, 3.0))))
        p2 = 1.0 + float(rng.uniform(0.0, 2.0))
        q = float(rng.uniform(0.05, 1.0))
        coeffs = StepCoefficients(tau=0.1, mass_coef=p2, grad_coef=q)
        p = math.sqrt(p2)
        sweep_x = ShenSystemSolver(bx, p * bx.jacobian, q / (p * bx.jacobian))
        sweep_y = ShenSystemSolver(by, p * by.jacobian, q / (p * by.jacobian))
        rhs = rng.standard_normal((bx.dim, by.dim))
        via_sweeps = sweep_y.solve(sweep_x.solve(rhs).T).T
        dense = dense_kronecker_solve(coeffs, bx, by, rhs)
        worst = max(worst, float(np.abs(via_sweeps - dense).max() / np.abs(dense).max()))
    yield "adi_sweeps_vs_kronecker", worst <= 1e-10, worst

    worst = 0.0
    for order in (-0.5, 0.1, 0.9):
        for m in (1, 2, 3):
            sig = default_sigmas(m)
            for k in (1, 5, 20, 60):
                worst = max(worst, weight_identity_residual(order, sig, k))
    yield "starting_weight_identities", worst <= 1e-12, worst

    rng = np.random.default_rng(7)
    worst = -math.inf
    for order in (-0.9, 0.5, 1.0):
        for _ in range(50):
            v = rng.standard_normal(48)
            qf = history_quadratic_form(order, v)
            worst = max(worst, -qf / float(v @ v))
    yield "memory_quadratic_form", worst <= 1e-12, worst


def cmd_verify(args, out=sys.stdout):
    failures = 0
    for name, ok, metric in _verify_checks():
        status = "PASS" if ok else "FAIL"
        failures += 0 if ok else 1
        print(f"{status} {name} ({metric:.3e})", file=out)
    if failures:
        print(f"{failures} check(s) failed", file=out)
        return 2
    print("all checks passed", file=out)
    return 0


# -- argument parsing ---------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError([f"usage: {message}"])


def _add_common(sub):
    sub.add_argument("--config", help="INI config file ([run] and optional [problem] sections)")
    sub.add_argument("--output", help="output directory (default .)")
    sub.add_argument("--problem", help="registered problem id")
    sub.add_argument("--N", type=int, help="polynomial degree per direction")
    sub.add_argument("--M", type=int, help="number of time steps")
    sub.add_argument("--T", type=float, help="final time (default 1)")
    sub.add_argument("--m", type=int, help="correction terms (default 0)")
    sub.add_argument("--sigma", type=float, nargs="+", help="correction exponents")
    sub.add_argument(
        "--bootstrap-ratio",
        dest="bootstrap_ratio",
        type=int,
        help="fine/coarse step ratio for starting values (default 100)",
    )
    sub.add_argument(
        "--quad-count", dest="quad_count", type=int, help="quadrature points per direction"
    )
    sub.add_argument(
        "--source-mode",
        dest="source_mode",
        choices=("auto", "analytic", "sampled"),
        help="reduced-source evaluation path",
    )


def make_parser():
    parser = _Parser(prog="fracadi", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    run_p = subs.add_parser("run", help="single march: snapshot + diagnostics")
    _add_common(run_p)

    study_p = subs.add_parser("study", help="refinement study: rate table")
    _add_common(study_p)
    study_p.add_argument(
        "--study-param",
        dest="study_param",
        choices=("tau", "N"),
        help="which parameter the levels refine (default tau)",
    )
    study_p.add_argument("--levels", type=int, nargs="+", help="refinement levels (M or N values)")

    weights_p = subs.add_parser("weights", help="dump weight sequences")
    weights_p.add_argument("--order", type=float, required=True, help="operator order in [-1, 1]")
    weights_p.add_argument("--count", type=int, default=12, help="largest index to print")
    weights_p.add_argument("--sigma", type=float, nargs="+", help="also dump starting-weight rows")
    weights_p.add_argument("--rows", type=int, default=6, help="starting-weight rows to print")

    subs.add_parser("verify", help="run oracle cross-checks")
    return parser


_COMMANDS = {"run": cmd_run, "study": cmd_study, "weights": cmd_weights, "verify": cmd_verify}


def main(argv=None):
    try:
        args = make_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        for message in exc.messages:
            print(f"config error: {message}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except (np.linalg.LinAlgError, ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
