"""Momentum fields p(r) and the operators built on them.

A momentum field assigns to each position a complex vector
p = -i*hbar*grad(psi)/psi.  Constructors cover closed-form harmonic
oscillator eigenstates, caller-supplied wavefunctions, and separable
products of 1-D fields.  On top of the field the module evaluates

    E(r) = p.p/(2m) + U(r) - i*(hbar/2m) div p,

which is position-independent exactly when p derives from an energy
eigenstate, checks the curl-free property, and reconstructs the
wavefunction as psi = A*exp((i/hbar) * integral of p along a path).

Positions where psi vanishes are poles of p.  Fields carry an explicit
pole list; evaluating within ``node_guard`` of a pole raises
NodeEvaluation rather than returning garbage.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .core import DEFAULT_TOLERANCE, NATURAL_UNITS, TolerancePolicy, UnitSystem
from .errors import (
    ConvergenceFailure,
    DimensionTooLow,
    EmptyRegion,
    NodeEvaluation,
    OffAxisEvaluation,
    PathThroughNode,
    UnsupportedLevel,
)

__all__ = [
    "MomentumField",
    "PotentialField",
    "WavefunctionSamples",
    "ScanReport",
    "qho_field",
    "field_from_wavefunction",
    "product_field",
    "harmonic_potential",
    "polynomial_potential",
    "zero_potential",
    "constant_potential",
    "separable_potential",
    "energy_at",
    "energy_constancy_scan",
    "curl_residual",
    "reconstruct_wavefunction",
    "wavefunction_interpolant",
]

# Central-difference steps, relative to (1 + |r|).  Second differences
# divide by h**2, so they need a larger step to stay above the eps/h**2
# rounding floor while Richardson extrapolation removes the h**2 term.
_FIRST_STEP = 1e-5
_SECOND_STEP = 1e-4
_OFF_AXIS_TOL = 1e-12
_MAX_QHO_LEVEL = 10


def _as_points(r, dimension):
    """Coerce positions to an (n, d) complex array.

    Returns (points, kind) where kind records the caller's shape so
    results can be handed back in matching form: "scalar" (single 1-D
    position), "vector" (n separate 1-D positions), "point" (one d-D
    position), or "matrix" (n d-D positions).
    """
    arr = np.asarray(r, dtype=complex)
    if dimension == 1:
        if arr.ndim == 0:
            return arr.reshape(1, 1), "scalar"
        if arr.ndim == 1:
            return arr.reshape(-1, 1), "vector"
        if arr.ndim == 2 and arr.shape[1] == 1:
            return arr, "matrix"
    else:
        if arr.ndim == 1 and arr.shape[0] == dimension:
            return arr.reshape(1, -1), "point"
        if arr.ndim == 2 and arr.shape[1] == dimension:
            return arr, "matrix"
    raise ValueError(f"cannot interpret shape {arr.shape} as positions in {dimension}-D")


def _restore_vector(values, kind):
    # values has shape (n, d)
    if kind == "scalar":
        return complex(values[0, 0])
    if kind == "vector":
        return values[:, 0]
    if kind == "point":
        return values[0]
    return values


def _restore_scalar(values, kind):
    # values has shape (n,)
    if kind in ("scalar", "point"):
        return complex(values[0])
    return values


def _richardson_first(fn, pts, axis, scale=_FIRST_STEP):
    """d(fn)/dx_axis by central differences with one Richardson level.

    ``fn`` may return (n,) scalars or (n, d) vectors.
    """
    h = scale * (1.0 + np.linalg.norm(pts, axis=1).real)
    shift = np.zeros_like(pts)

    def central(step):
        shift[:, axis] = step
        hi = np.asarray(fn(pts + shift))
        lo = np.asarray(fn(pts - shift))
        denom = 2.0 * step
        if hi.ndim == 2:
            denom = denom[:, None]
        return (hi - lo) / denom

    return (4.0 * central(h / 2.0) - central(h)) / 3.0


def _richardson_second(fn, pts, axis, scale=_SECOND_STEP):
    """d2(fn)/dx_axis^2 by second central differences, one Richardson level."""
    h = scale * (1.0 + np.linalg.norm(pts, axis=1).real)
    shift = np.zeros_like(pts)
    f0 = np.asarray(fn(pts))

    def second(step):
        shift[:, axis] = step
        hi = np.asarray(fn(pts + shift))
        lo = np.asarray(fn(pts - shift))
        denom = step * step
        if hi.ndim == 2:
            denom = denom[:, None]
        return (hi - 2.0 * f0 + lo) / denom

    return (4.0 * second(h / 2.0) - second(h)) / 3.0


class MomentumField:
    """Evaluatable complex momentum field with derivative operators.

    Parameters
    ----------
    dimension:
        Spatial dimension, 1 to 3.
    value_fn:
        Maps an (n, d) complex position array to (n, d) momenta.
    jacobian_fn, laplacian_fn:
        Optional closed-form evaluators for d p_i / d x_j (shape
        (n, d, d)) and the componentwise vector Laplacian (shape (n, d)).
        When omitted, Richardson-extrapolated central differences of
        ``value_fn`` are used and ``derivative_kind`` reports it.
    poles:
        (axis, location) pairs marking node hyperplanes x_axis == location
        where the field blows up.
    holomorphic:
        Closed-form fields accept complex positions; numeric fields
        refuse positions off the real axis with OffAxisEvaluation.
    pole_margin:
        Distance from a pole inside which evaluations, while legal, are
        not trustworthy (grid-derived fields lose accuracy within a few
        spacings of a node).  Scans skip this neighborhood.
    """

    def __init__(self, dimension, value_fn, *, jacobian_fn=None, laplacian_fn=None,
                 derivative_kind=None, poles=(), holomorphic=False,
                 tolerance: TolerancePolicy = DEFAULT_TOLERANCE,
                 pole_margin: float = 0.0):
        if dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2, or 3")
        self.dimension = int(dimension)
        self._value_fn = value_fn
        self._jacobian_fn = jacobian_fn
        self._laplacian_fn = laplacian_fn
        numeric = jacobian_fn is None or laplacian_fn is None
        self.derivative_kind = derivative_kind or (
            "numeric-central-difference" if numeric else "closed-form")
        self.poles = tuple((int(axis), float(loc)) for axis, loc in poles)
        self.holomorphic = bool(holomorphic)
        self.tolerance = tolerance
        self.pole_margin = max(float(pole_margin), 10.0 * tolerance.node_guard)

    # -- guarded evaluation -------------------------------------------------

    def pole_distances(self, pts):
        """Distance from each (n, d) point to the nearest pole plane."""
        if not self.poles:
            return np.full(pts.shape[0], np.inf)
        dists = [np.abs(pts[:, axis] - loc) for axis, loc in self.poles]
        return np.min(dists, axis=0)

    def pole_distance(self, r):
        pts, kind = _as_points(r, self.dimension)
        return _restore_scalar(self.pole_distances(pts), kind).real

    def _check(self, pts):
        if not self.holomorphic and np.any(np.abs(pts.imag) > _OFF_AXIS_TOL):
            raise OffAxisEvaluation(
                "numeric field evaluated off the real axis; only closed-form "
                "fields are declared holomorphic")
        if self.poles:
            dist = self.pole_distances(pts)
            if np.any(dist < self.tolerance.node_guard):
                worst = pts[int(np.argmin(dist))]
                raise NodeEvaluation(
                    f"position {worst} lies within node_guard="
                    f"{self.tolerance.node_guard:g} of a field pole")

    def _value_at(self, pts, check=True):
        if check:
            self._check(pts)
        return np.asarray(self._value_fn(pts), dtype=complex)

    def _jacobian_at(self, pts, check=True):
        if check:
            self._check(pts)
        if self._jacobian_fn is not None:
            return np.asarray(self._jacobian_fn(pts), dtype=complex)
        n, d = pts.shape
        jac = np.empty((n, d, d), dtype=complex)
        for j in range(d):
            jac[:, :, j] = _richardson_first(self._value_fn, pts, j)
        return jac

    def _laplacian_at(self, pts, check=True):
        if check:
            self._check(pts)
        if self._laplacian_fn is not None:
            return np.asarray(self._laplacian_fn(pts), dtype=complex)
        out = np.zeros(pts.shape, dtype=complex)
        for j in range(pts.shape[1]):
            out += _richardson_second(self._value_fn, pts, j)
        return out

    # -- public API ----------------------------------------------------------

    def value(self, r):
        """p(r); complex scalar for a scalar 1-D position."""
        pts, kind = _as_points(r, self.dimension)
        return _restore_vector(self._value_at(pts), kind)

    def jacobian(self, r):
        """Matrix J[i, j] = d p_i / d x_j."""
        pts, kind = _as_points(r, self.dimension)
        jac = self._jacobian_at(pts)
        if kind == "scalar":
            return complex(jac[0, 0, 0])
        if kind == "vector":
            return jac[:, 0, 0]
        if kind == "point":
            return jac[0]
        return jac

    def divergence(self, r):
        pts, kind = _as_points(r, self.dimension)
        div = np.trace(self._jacobian_at(pts), axis1=1, axis2=2)
        return _restore_scalar(div, kind)

    def vector_laplacian(self, r):
        pts, kind = _as_points(r, self.dimension)
        return _restore_vector(self._laplacian_at(pts), kind)

    def curl(self, r):
        """Curl of p; scalar in 2-D, vector in 3-D."""
        if self.dimension < 2:
            raise DimensionTooLow("curl needs at least two dimensions")
        pts, kind = _as_points(r, self.dimension)
        jac = self._jacobian_at(pts)
        if self.dimension == 2:
            return _restore_scalar(jac[:, 1, 0] - jac[:, 0, 1], kind)
        c = np.stack([
            jac[:, 2, 1] - jac[:, 1, 2],
            jac[:, 0, 2] - jac[:, 2, 0],
            jac[:, 1, 0] - jac[:, 0, 1],
        ], axis=1)
        return _restore_vector(c, kind)


# -- oscillator eigenstate fields ---------------------------------------------


def _hermite(n, z):
    """Physicists' Hermite polynomial H_n via the three-term recurrence."""
    h_prev = np.ones_like(z)
    if n == 0:
        return h_prev
    h = 2.0 * z
    for k in range(1, n):
        h, h_prev = 2.0 * z * h - 2.0 * k * h_prev, h
    return h


def _hermite_pair(n, z):
    """(H_{n-1}, H_n) from one recurrence pass; n >= 1."""
    h_prev = np.ones_like(z)
    h = 2.0 * z
    for k in range(1, n):
        h, h_prev = 2.0 * z * h - 2.0 * k * h_prev, h
    return h_prev, h


def _hermite_roots(n):
    if n == 0:
        return np.array([])
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    return np.sort(np.polynomial.hermite.hermroots(coeffs))


def qho_field(level: int, units: UnitSystem = NATURAL_UNITS,
              tolerance: TolerancePolicy = DEFAULT_TOLERANCE) -> MomentumField:
    """Closed-form momentum field of the 1-D oscillator eigenstate ``level``.

    With a = m*omega/hbar and psi_n = H_n(sqrt(a) x) exp(-a x**2 / 2),

        p(x)  = -i*hbar * psi_n'/psi_n
              = -i*hbar * (2n sqrt(a) H_{n-1}/H_n - a x)

    which for level 1 reduces to p = -i*hbar*(1/x - m*omega*x/hbar).
    Derivatives are closed-form: the eigenvalue relation supplies
    psi''/psi = a**2 x**2 - (2n+1) a, so with L = psi'/psi

        p'  = -i*hbar * (psi''/psi - L**2)
        p'' = -i*hbar * (2 a**2 x - 2 L (psi''/psi - L**2)).

    The pole list holds the zeros of H_n.  Levels above 10 are not
    tabulated and raise UnsupportedLevel.
    """
    if level < 0 or level != int(level):
        raise ValueError("level must be a non-negative integer")
    if level > _MAX_QHO_LEVEL:
        raise UnsupportedLevel(
            f"closed-form oscillator fields are tabulated for levels 0..{_MAX_QHO_LEVEL}")
    level = int(level)
    a = units.mass * units.omega / units.hbar
    sqrt_a = np.sqrt(a)
    hbar = units.hbar

    def log_deriv(x):
        if level == 0:
            return -a * x
        lo, hi = _hermite_pair(level, sqrt_a * x)
        return 2.0 * level * sqrt_a * lo / hi - a * x

    def curvature(x):  # psi''/psi
        return a * a * x * x - (2 * level + 1) * a

    def value(pts):
        x = pts[:, 0]
        return (-1j * hbar * log_deriv(x))[:, None]

    def jacobian(pts):
        x = pts[:, 0]
        ld = log_deriv(x)
        return (-1j * hbar * (curvature(x) - ld * ld)).reshape(-1, 1, 1)

    def laplacian(pts):
        x = pts[:, 0]
        ld = log_deriv(x)
        d_log = curvature(x) - ld * ld
        return (-1j * hbar * (2.0 * a * a * x - 2.0 * ld * d_log))[:, None]

    poles = tuple((0, root / sqrt_a) for root in _hermite_roots(level))
    return MomentumField(1, value, jacobian_fn=jacobian, laplacian_fn=laplacian,
                         derivative_kind="closed-form", poles=poles,
                         holomorphic=True, tolerance=tolerance)


def field_from_wavefunction(psi, nodes=(), units: UnitSystem = NATURAL_UNITS,
                            dimension: int = 1, psi_prime=None, psi_second=None,
                            tolerance: TolerancePolicy = DEFAULT_TOLERANCE) -> MomentumField:
    """Momentum field p = -i*hbar*grad(psi)/psi from a wavefunction callable.

    For dimension 1 ``psi`` receives a 1-D complex array of positions; for
    higher dimensions it receives (n, d) arrays.  ``nodes`` lists known
    zeros of psi, either as scalars (1-D) or (axis, location) pairs.

    When ``psi_prime`` (and for closed-form derivatives ``psi_second``)
    are supplied they are used directly; otherwise derivatives come from
    Richardson-extrapolated central differences and ``derivative_kind``
    is "numeric-central-difference".  Closed-form derivative callables
    are honored for dimension 1 only.
    """
    hbar = units.hbar

    if dimension == 1:
        def psi_at(pts):
            return np.asarray(psi(pts[:, 0]), dtype=complex)
    else:
        def psi_at(pts):
            return np.asarray(psi(pts), dtype=complex)

    if psi_prime is not None and dimension == 1:
        def value(pts):
            x = pts[:, 0]
            return (-1j * hbar * np.asarray(psi_prime(x), dtype=complex)
                    / np.asarray(psi(x), dtype=complex))[:, None]
    else:
        def value(pts):
            out = np.empty(pts.shape, dtype=complex)
            base = psi_at(pts)
            for j in range(pts.shape[1]):
                out[:, j] = _richardson_first(psi_at, pts, j) / base
            return -1j * hbar * out

    jacobian = None
    laplacian = None
    kind = "numeric-central-difference"
    if psi_prime is not None and psi_second is not None and dimension == 1:
        def jacobian(pts):
            x = pts[:, 0]
            base = np.asarray(psi(x), dtype=complex)
            ld = np.asarray(psi_prime(x), dtype=complex) / base
            curv = np.asarray(psi_second(x), dtype=complex) / base
            return (-1j * hbar * (curv - ld * ld)).reshape(-1, 1, 1)
        kind = "closed-form"

    pole_list = []
    for node in nodes:
        if np.isscalar(node) or isinstance(node, (int, float)):
            pole_list.append((0, float(node)))
        else:
            axis, loc = node
            pole_list.append((int(axis), float(loc)))

    return MomentumField(dimension, value, jacobian_fn=jacobian, laplacian_fn=laplacian,
                         derivative_kind=kind, poles=pole_list,
                         holomorphic=False, tolerance=tolerance)


def product_field(factors, tolerance: TolerancePolicy | None = None) -> MomentumField:
    """Separable field built from independent 1-D fields, one per axis.

    Component k of the product depends only on coordinate k, so the
    Jacobian is diagonal and the curl vanishes identically.
    """
    factors = list(factors)
    d = len(factors)
    if d not in (2, 3):
        raise ValueError("product fields need 2 or 3 one-dimensional factors")
    if any(f.dimension != 1 for f in factors):
        raise ValueError("every factor must be one-dimensional")
    tol = tolerance or factors[0].tolerance

    def value(pts):
        cols = [f._value_at(pts[:, k].reshape(-1, 1), check=False)[:, 0]
                for k, f in enumerate(factors)]
        return np.stack(cols, axis=1)

    def jacobian(pts):
        n = pts.shape[0]
        jac = np.zeros((n, d, d), dtype=complex)
        for k, f in enumerate(factors):
            jac[:, k, k] = f._jacobian_at(pts[:, k].reshape(-1, 1), check=False)[:, 0, 0]
        return jac

    def laplacian(pts):
        cols = [f._laplacian_at(pts[:, k].reshape(-1, 1), check=False)[:, 0]
                for k, f in enumerate(factors)]
        return np.stack(cols, axis=1)

    poles = []
    for k, f in enumerate(factors):
        poles.extend((k, loc) for _axis, loc in f.poles)
    closed = all(f.derivative_kind == "closed-form" for f in factors)
    return MomentumField(d, value, jacobian_fn=jacobian, laplacian_fn=laplacian,
                         derivative_kind="closed-form" if closed else "numeric-central-difference",
                         poles=poles, holomorphic=all(f.holomorphic for f in factors),
                         tolerance=tol)


# -- potentials ----------------------------------------------------------------


class PotentialField:
    """Scalar potential with a gradient evaluator (numeric fallback)."""

    def __init__(self, value_fn, gradient_fn=None, dimension: int = 1):
        self.dimension = int(dimension)
        self._value_fn = value_fn
        self._gradient_fn = gradient_fn

    def _value_at(self, pts):
        return np.asarray(self._value_fn(pts), dtype=complex)

    def _gradient_at(self, pts):
        if self._gradient_fn is not None:
            return np.asarray(self._gradient_fn(pts), dtype=complex)
        out = np.empty(pts.shape, dtype=complex)
        for j in range(pts.shape[1]):
            out[:, j] = _richardson_first(self._value_at, pts, j)
        return out

    def value(self, r):
        pts, kind = _as_points(r, self.dimension)
        return _restore_scalar(self._value_at(pts), kind)

    def gradient(self, r):
        pts, kind = _as_points(r, self.dimension)
        return _restore_vector(self._gradient_at(pts), kind)


def harmonic_potential(units: UnitSystem = NATURAL_UNITS) -> PotentialField:
    """U(x) = m*omega**2*x**2/2 with its closed-form gradient."""
    k = units.mass * units.omega ** 2

    return PotentialField(lambda pts: 0.5 * k * pts[:, 0] ** 2,
                          lambda pts: k * pts[:, 0:1], dimension=1)


def polynomial_potential(coefficients) -> PotentialField:
    """1-D polynomial potential; ``coefficients`` ascending in power."""
    poly = np.polynomial.Polynomial(coefficients)
    dpoly = poly.deriv()
    return PotentialField(lambda pts: poly(pts[:, 0]),
                          lambda pts: dpoly(pts[:, 0])[:, None], dimension=1)


def zero_potential(dimension: int = 1) -> PotentialField:
    return PotentialField(lambda pts: np.zeros(pts.shape[0], dtype=complex),
                          lambda pts: np.zeros(pts.shape, dtype=complex),
                          dimension=dimension)


def constant_potential(value: float, dimension: int = 1) -> PotentialField:
    return PotentialField(lambda pts: np.full(pts.shape[0], value, dtype=complex),
                          lambda pts: np.zeros(pts.shape, dtype=complex),
                          dimension=dimension)


def separable_potential(parts) -> PotentialField:
    """Sum of independent 1-D potentials, one per axis."""
    parts = list(parts)
    d = len(parts)

    def value(pts):
        return sum(p._value_at(pts[:, k].reshape(-1, 1)) for k, p in enumerate(parts))

    def gradient(pts):
        cols = [p._gradient_at(pts[:, k].reshape(-1, 1))[:, 0] for k, p in enumerate(parts)]
        return np.stack(cols, axis=1)

    return PotentialField(value, gradient, dimension=d)


# -- energy --------------------------------------------------------------------


def energy_at(field: MomentumField, potential: PotentialField, r,
              units: UnitSystem = NATURAL_UNITS, divergence_scale: float = 1.0):
    """Complex energy E = p.p/(2m) + U - i*(hbar/2m) div p at ``r``.

    ``p.p`` is the unconjugated dot product: the square of the eigenvalue,
    not |p|**2.  No real projection is applied.  ``divergence_scale``
    multiplies hbar in the divergence term only; setting it to 0 recovers
    the classical p.p/(2m) + U exactly (correspondence-principle toggle).
    """
    pts, kind = _as_points(r, field.dimension)
    p = field._value_at(pts)
    div = np.trace(field._jacobian_at(pts, check=False), axis1=1, axis2=2)
    u = potential._value_at(pts)
    e = ((p * p).sum(axis=1) / (2.0 * units.mass) + u
         - 1j * (divergence_scale * units.hbar / (2.0 * units.mass)) * div)
    return _restore_scalar(e, kind)


@dataclass
class ScanReport:
    """Spatial energy-constancy scan over a 1-D region."""

    region: tuple
    points: np.ndarray
    momenta: np.ndarray
    energies: np.ndarray
    curl_residuals: np.ndarray
    mean_energy: complex
    max_deviation: float
    worst_point: float
    tol: float
    passed: bool
    metadata: dict = dataclass_field(default_factory=dict)


def energy_constancy_scan(field: MomentumField, potential: PotentialField, region,
                          samples: int = 1000, tol: float = 1e-9,
                          units: UnitSystem = NATURAL_UNITS,
                          divergence_scale: float = 1.0) -> ScanReport:
    """Scan E over ``region`` and report the worst deviation from the mean.

    Spatial constancy of the full complex E is the eigenstate signature;
    a mismatched field/potential pair shows an O(1) deviation.  Sample
    points inside the field's pole margin are dropped; if nothing usable
    remains the scan raises EmptyRegion.  Both real and imaginary parts
    are retained and reported without interpretation.
    """
    if field.dimension != 1:
        raise ValueError("energy scans are defined for one-dimensional fields")
    lo, hi = float(region[0]), float(region[1])
    if not (hi > lo) or samples < 2:
        raise EmptyRegion(f"degenerate scan region {region!r}")
    xs = np.linspace(lo, hi, samples)
    pts = xs.reshape(-1, 1).astype(complex)
    dist = field.pole_distances(pts)
    keep = dist > field.pole_margin
    if not np.any(keep):
        raise EmptyRegion("every sample point sits inside a node-guard neighborhood")
    xs = xs[keep]
    pts = pts[keep]

    momenta = field._value_at(pts)
    energies = energy_at(field, potential, pts, units, divergence_scale)
    energies = np.asarray(energies).reshape(-1)
    mean = complex(energies.mean())
    deviations = np.abs(energies - mean)
    worst = int(np.argmax(deviations))
    curls = np.full(xs.shape, np.nan)
    return ScanReport(
        region=(lo, hi), points=xs, momenta=momenta[:, 0], energies=energies,
        curl_residuals=curls, mean_energy=mean,
        max_deviation=float(deviations[worst]), worst_point=float(xs[worst]),
        tol=float(tol), passed=bool(deviations[worst] <= tol))


def curl_residual(field: MomentumField, r) -> float:
    """Norm of curl p at ``r`` using the field's derivative evaluators."""
    c = field.curl(r)
    if field.dimension == 2:
        return float(abs(c))
    return float(np.linalg.norm(np.atleast_1d(c)))


# -- wavefunction reconstruction -------------------------------------------------


@dataclass
class WavefunctionSamples:
    """psi sampled along a path, with the anchoring amplitude."""

    path: np.ndarray
    values: np.ndarray
    amplitude: complex
    phase_integrals: np.ndarray  # cumulative line integral of p


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _segment_integral(field, a, b, rel_tol=1e-12, max_panels=1 << 12):
    """Gauss-Legendre line integral of p . dr along the straight segment a->b.

    Order-8 panels, doubling the panel count until two successive
    estimates agree to ``rel_tol`` (relative).
    """
    delta = b - a

    def estimate(panels):
        edges = np.linspace(0.0, 1.0, panels + 1)
        mids = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 / panels
        s = (mids[:, None] + half * _GL_NODES[None, :]).reshape(-1)
        pts = a[None, :] + s[:, None] * delta[None, :]
        p = field._value_at(pts)
        integrand = p @ delta
        w = np.broadcast_to(_GL_WEIGHTS, (panels, 8)).reshape(-1)
        return complex((integrand * w).sum() * half)

    panels = 1
    prev = estimate(panels)
    while panels < max_panels:
        panels *= 2
        cur = estimate(panels)
        if abs(cur - prev) <= rel_tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise ConvergenceFailure(
        f"segment quadrature did not reach rel_tol={rel_tol:g} within {max_panels} panels")


def _segment_pole_distance(a, b, axis, loc):
    """Min distance of coordinate ``axis`` to ``loc`` along segment a->b."""
    za = complex(a[axis]) - loc
    zb = complex(b[axis]) - loc
    # distance from the origin to the 2-D segment (re, im)(za) -> (re, im)(zb)
    pa = np.array([za.real, za.imag])
    pb = np.array([zb.real, zb.imag])
    d = pb - pa
    denom = float(d @ d)
    t = 0.0 if denom == 0 else float(np.clip(-(pa @ d) / denom, 0.0, 1.0))
    return float(np.linalg.norm(pa + t * d))


def reconstruct_wavefunction(field: MomentumField, path, amplitude: complex = 1.0,
                             units: UnitSystem = NATURAL_UNITS,
                             rel_tol: float = 1e-12) -> WavefunctionSamples:
    """psi = A*exp((i/hbar) * integral of p . dr) accumulated along ``path``.

    ``path`` is an ordered sequence of points joined by straight
    segments; the integral is accumulated segment by segment so values
    are produced at every path node.  With the default A = 1 the
    wavefunction is anchored to psi = 1 at the path start.  A segment
    passing within node_guard of a pole raises PathThroughNode.
    """
    pts, _kind = _as_points(path, field.dimension)
    if pts.shape[0] < 2:
        raise ValueError("path needs at least two nodes")
    guard = field.tolerance.node_guard
    for i in range(pts.shape[0] - 1):
        for axis, loc in field.poles:
            if _segment_pole_distance(pts[i], pts[i + 1], axis, loc) < guard:
                raise PathThroughNode(
                    f"path segment {i} passes within node_guard of the pole "
                    f"x_{axis} = {loc:g}")

    integrals = np.zeros(pts.shape[0], dtype=complex)
    for i in range(pts.shape[0] - 1):
        integrals[i + 1] = integrals[i] + _segment_integral(
            field, pts[i], pts[i + 1], rel_tol=rel_tol)
    values = amplitude * np.exp(1j * integrals / units.hbar)
    path_out = pts[:, 0] if field.dimension == 1 else pts
    return WavefunctionSamples(path=path_out, values=values,
                               amplitude=complex(amplitude),
                               phase_integrals=integrals)


def wavefunction_interpolant(samples: WavefunctionSamples):
    """Cubic-spline callable through 1-D reconstruction samples.

    The spline is a function on the real axis; complex-typed positions
    (as produced by on-axis field evaluation) are projected to their
    real parts.
    """
    from scipy.interpolate import CubicSpline

    xs = np.asarray(samples.path)
    if xs.ndim != 1:
        raise ValueError("interpolation is supported for 1-D paths only")
    if np.any(np.abs(xs.imag) > _OFF_AXIS_TOL):
        raise ValueError("interpolation requires a real path")
    spline = CubicSpline(xs.real, samples.values)
    return lambda x: spline(np.asarray(x).real)
