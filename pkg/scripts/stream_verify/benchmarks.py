"""
Benchmark problems with closed-form stream functions.

square-poly:     u = lambda x^2 (1-x)^2 y^2 (1-y)^2 on the unit square
lshape-grisvard: the singular biharmonic stream function at the reentrant
                 corner of (-1,1)^2 minus the first quadrant, cut off by
                 (x^2-1)^2 (y^2-1)^2

Sources f = lap^2 u - div(lap u curl u) are derived symbolically with sympy on
first use and lambdified to numpy.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import sympy
from scipy.optimize import brentq
from sympy.utilities.lambdify import implemented_function

from .assembly import DEFAULT_SOURCE_ORDER, MeshRule, SourceTerm
from .config import MAX_NDOF, OUTPUT_DIR, SINGULAR_RADIUS, THETA, TOL_EIG, TOL_EIG_J
from .errors import SingularPointError

BENCHMARKS = ('square-poly', 'lshape-grisvard')
SQUARE_LAMBDAS = (1.0, 10.0, 100.0)
GRISVARD_OMEGA = 1.5 * math.pi
GRISVARD_QUADRATURE_ORDER = DEFAULT_SOURCE_ORDER

X, Y = sympy.symbols('x y', real=True)


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form u with its gradient (ux, uy) and Hessian (uxx, uxy, uyy) callables."""

    value: Callable
    gradient: Callable
    hessian: Callable
    degree: Optional[int] = None
    order: int = DEFAULT_SOURCE_ORDER
    singular_point: Optional[tuple] = None

    def rule(self, mesh) -> MeshRule:
        """Rule for |||u - v|||^2 with v piecewise of degree <= 3."""
        degree = 2 * max(self.degree - 2, 1) if self.degree is not None else self.order
        return MeshRule(mesh, degree, self.singular_point)


@dataclass(frozen=True)
class Benchmark:
    name: str
    domain: str
    solution: ExactSolution
    source: SourceTerm
    lam: float = 1.0
    sigma_reg: Optional[float] = None


@dataclass
class BenchmarkConfig:
    benchmark: str = 'square-poly'
    lam: float = 1.0
    strategy: str = 'uniform'
    theta: float = THETA
    max_ndof: int = MAX_NDOF
    tol_eig: float = TOL_EIG
    tol_eig_J: float = TOL_EIG_J
    output_dir: Path = OUTPUT_DIR
    export_matrices: bool = False
    verbose: bool = True

    def __post_init__(self):
        if self.benchmark not in BENCHMARKS:
            raise ValueError(f"unknown benchmark {self.benchmark!r}; expected one of {BENCHMARKS}")
        if self.benchmark == 'square-poly' and float(self.lam) not in SQUARE_LAMBDAS:
            raise ValueError(f"lambda must be one of {SQUARE_LAMBDAS} for square-poly, got {self.lam}")
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if self.max_ndof <= 0:
            raise ValueError(f"max_ndof must be positive, got {self.max_ndof}")
        self.output_dir = Path(self.output_dir)

    def build(self) -> Benchmark:
        if self.benchmark == 'square-poly':
            return square_poly_benchmark(self.lam)
        return grisvard_benchmark()

    @property
    def run_name(self) -> str:
        suffix = f"_lambda{self.lam:g}" if self.benchmark == 'square-poly' else ''
        return f"{self.benchmark}{suffix}_{self.strategy}"


# ----------------------------------------------------------------------
# Symbolic helpers
# ----------------------------------------------------------------------

def laplacian(u):
    return sympy.diff(u, X, 2) + sympy.diff(u, Y, 2)


def convection(u):
    """div(lap u curl u) with curl u = (u_y, -u_x)."""
    lap = laplacian(u)
    return sympy.diff(lap * sympy.diff(u, Y), X) - sympy.diff(lap * sympy.diff(u, X), Y)


def stream_source(u):
    return laplacian(laplacian(u)) - convection(u)


def _numeric(expr, modules) -> Callable:
    fn = sympy.lambdify((X, Y), expr, modules=modules, cse=True)

    def evaluate(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return np.broadcast_to(np.asarray(fn(x, y), dtype=float), np.broadcast(x, y).shape)

    return evaluate


def _derivatives(u, modules, prepare=lambda e: e):
    ux, uy = sympy.diff(u, X), sympy.diff(u, Y)
    value = _numeric(prepare(u), modules)
    grads = [_numeric(prepare(ux), modules), _numeric(prepare(uy), modules)]
    hess = [_numeric(prepare(e), modules) for e in (sympy.diff(ux, X), sympy.diff(ux, Y), sympy.diff(uy, Y))]
    return value, (lambda x, y: tuple(g(x, y) for g in grads)), (lambda x, y: tuple(h(x, y) for h in hess))


# ----------------------------------------------------------------------
# Square benchmark
# ----------------------------------------------------------------------

def square_poly_u():
    return X ** 2 * (1 - X) ** 2 * Y ** 2 * (1 - Y) ** 2


@lru_cache(maxsize=None)
def square_poly_parts():
    """Callables (linear, quadratic) with f_lambda = lambda * linear + lambda^2 * quadratic."""
    base = square_poly_u()
    linear = sympy.expand(laplacian(laplacian(base)))
    quadratic = sympy.expand(-convection(base))
    return _numeric(linear, 'numpy'), _numeric(quadratic, 'numpy')


def square_poly_source(lam: float) -> SourceTerm:
    """f for u_lambda; a polynomial of degree 12."""
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    linear, quadratic = square_poly_parts()
    lam = float(lam)
    return SourceTerm(lambda x, y: lam * linear(x, y) + lam ** 2 * quadratic(x, y), degree=12,
                      description=f"square-poly lambda={lam:g}")


@lru_cache(maxsize=None)
def _square_poly_derivatives():
    return _derivatives(sympy.expand(square_poly_u()), 'numpy')


def square_poly_solution(lam: float) -> ExactSolution:
    value, grad, hess = _square_poly_derivatives()
    lam = float(lam)
    return ExactSolution(lambda x, y: lam * value(x, y),
                         lambda x, y: tuple(lam * g for g in grad(x, y)),
                         lambda x, y: tuple(lam * h for h in hess(x, y)),
                         degree=8)


def square_poly_benchmark(lam: float = 1.0) -> Benchmark:
    return Benchmark('square-poly', 'unit_square', square_poly_solution(lam), square_poly_source(lam), float(lam))


# ----------------------------------------------------------------------
# L-shaped benchmark
# ----------------------------------------------------------------------

@lru_cache(maxsize=None)
def grisvard_exponent(omega: float = GRISVARD_OMEGA) -> float:
    """Smallest positive root of sin^2(z omega) = z^2 sin^2(omega), z ~ 0.5444837 for omega = 3 pi / 2."""
    return brentq(lambda z: math.sin(z * omega) - z * abs(math.sin(omega)), 0.5, 0.6, xtol=1e-15)


def grisvard_xi(phi, z: float, omega: float = GRISVARD_OMEGA):
    """Angular factor of the corner singularity; vanishes with its derivative at 0 and omega."""
    sin, cos = (sympy.sin, sympy.cos) if isinstance(phi, sympy.Basic) else (np.sin, np.cos)
    a = math.sin((z - 1) * omega) / (z - 1) - math.sin((z + 1) * omega) / (z + 1)
    b = math.cos((z - 1) * omega) - math.cos((z + 1) * omega)
    return (a * (cos((z - 1) * phi) - cos((z + 1) * phi))
            - (sin((z - 1) * phi) / (z - 1) - sin((z + 1) * phi) / (z + 1)) * b)


def domain_angle(y, x):
    """Polar angle in [pi/2, 5 pi/2); the L-shaped domain is the sector [pi/2, 2 pi]."""
    return np.mod(np.arctan2(y, x) - 0.5 * np.pi, 2.0 * np.pi) + 0.5 * np.pi


def grisvard_u():
    z = grisvard_exponent()
    r = sympy.sqrt(X ** 2 + Y ** 2)
    phi = sympy.atan2(Y, X)
    cutoff = (Y ** 2 - 1) ** 2 * (X ** 2 - 1) ** 2
    return cutoff * r ** (1 + z) * grisvard_xi(phi - sympy.pi / 2, z)


def _guard(fn: Callable) -> Callable:
    def evaluate(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        if np.any(np.hypot(x, y) <= SINGULAR_RADIUS):
            raise SingularPointError(f"evaluation within {SINGULAR_RADIUS:g} of the reentrant corner")
        return fn(x, y)

    return evaluate


# atan2 is swapped for the domain angle only after differentiation
_ANGLE = implemented_function(sympy.Function('domain_angle'), domain_angle)


def _on_domain(expr):
    return expr.subs(sympy.atan2(Y, X), _ANGLE(Y, X))


@lru_cache(maxsize=None)
def _grisvard_derivatives():
    value, grad, hess = _derivatives(grisvard_u(), 'numpy', _on_domain)
    return _guard(value), _guard(grad), _guard(hess)


@lru_cache(maxsize=None)
def _grisvard_f():
    return _guard(_numeric(_on_domain(stream_source(grisvard_u())), 'numpy'))


def grisvard_solution() -> ExactSolution:
    value, grad, hess = _grisvard_derivatives()
    return ExactSolution(value, grad, hess, None, GRISVARD_QUADRATURE_ORDER, (0.0, 0.0))


def grisvard_source() -> SourceTerm:
    return SourceTerm(_grisvard_f(), None, GRISVARD_QUADRATURE_ORDER, (0.0, 0.0),
                      f"lshape-grisvard z={grisvard_exponent():.7f}")


def grisvard_benchmark() -> Benchmark:
    return Benchmark('lshape-grisvard', 'l_shape', grisvard_solution(), grisvard_source(), 1.0,
                     sigma_reg=grisvard_exponent())
