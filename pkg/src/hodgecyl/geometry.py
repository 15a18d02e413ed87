"""Diagonal metrics on the cylinder S^1 x [0, Z] and pointwise geometric data.

The supported class is E(x1, x2) (dx1)^2 + G(x2) (dx2)^2 where the normal
coefficient G comes from an optional x2-only conformal factor (G = 1 + f,
G(0) = 1).  With G == 1 this is the warped-product form in boundary normal
coordinates; conformal rescaling by an x2-only factor keeps the metric in
class.  All partial derivatives are supplied analytically by the presets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.integrate import quad

from ._series import jet_from_derivatives, series_reciprocal
from .errors import DomainError, JetDepthError, UnsupportedShapeError

TWO_PI = 2.0 * math.pi

# partial suppliers map (a, b, theta, z) -> d^a_theta d^b_z value
PartialFn = Callable[[int, int, np.ndarray, np.ndarray], np.ndarray]


def _as_arrays(theta, z):
    th = np.asarray(theta, dtype=float)
    zz = np.asarray(z, dtype=float)
    return th, zz


@dataclass(frozen=True)
class ConformalFactor:
    """Conformal factor e^{2 phi} = 1 + f with analytic partials of f.

    ``partial(a, b, theta, z)`` returns d^a_theta d^b_z f.  Factors used for
    rescaling must be x2-only (``x2_only=True``); theta-dependent factors may
    be constructed but are rejected by :func:`conformal_rescale`.
    """

    partial: PartialFn
    x2_only: bool = True
    max_order: float = math.inf
    name: str = "factor"

    @staticmethod
    def paper() -> "ConformalFactor":
        """The preset factor f(z) = z e^{-z}."""

        def p(a, b, theta, z):
            th, zz = _as_arrays(theta, z)
            if a > 0:
                return np.zeros(np.broadcast_shapes(th.shape, zz.shape))
            # d^b [z e^{-z}] = (-1)^(b-1) (b - z) e^{-z}
            val = (-1.0) ** (b - 1) * (b - zz) * np.exp(-zz)
            return np.broadcast_to(val, np.broadcast_shapes(th.shape, zz.shape)).copy()

        return ConformalFactor(p, x2_only=True, name="paper")

    @staticmethod
    def identity() -> "ConformalFactor":
        def p(a, b, theta, z):
            th, zz = _as_arrays(theta, z)
            return np.zeros(np.broadcast_shapes(th.shape, zz.shape))

        return ConformalFactor(p, x2_only=True, name="identity")

    @staticmethod
    def from_z_partials(fz: Callable[[int, np.ndarray], np.ndarray],
                        name: str = "factor", max_order: float = math.inf) -> "ConformalFactor":
        def p(a, b, theta, z):
            th, zz = _as_arrays(theta, z)
            if a > 0:
                return np.zeros(np.broadcast_shapes(th.shape, zz.shape))
            return np.broadcast_to(fz(b, zz), np.broadcast_shapes(th.shape, zz.shape)).copy()

        return ConformalFactor(p, x2_only=True, name=name, max_order=max_order)

    # -- values ----------------------------------------------------------

    def f(self, theta, z) -> np.ndarray:
        return self.partial(0, 0, theta, z)

    def scale_partial(self, a: int, b: int, theta, z) -> np.ndarray:
        """Partials of the scale 1 + f."""
        val = self.partial(a, b, theta, z)
        if a == 0 and b == 0:
            return 1.0 + val
        return val

    def tau(self, z) -> np.ndarray:
        """tau = 1/(1 + f) for x2-only factors."""
        return 1.0 / (1.0 + self.partial(0, 0, 0.0, z))

    def tau_prime(self, z) -> np.ndarray:
        fp = self.partial(0, 1, 0.0, z)
        return -fp / (1.0 + self.partial(0, 0, 0.0, z)) ** 2

    def inverse(self) -> "ConformalFactor":
        """Factor g with (1 + g) = 1/(1 + f)."""
        if not self.x2_only:
            raise UnsupportedShapeError("inverse of a theta-dependent factor is unsupported")
        outer = self

        def fz(b, z):
            zz = np.atleast_1d(np.asarray(z, dtype=float))
            derivs = np.stack([outer.scale_partial(0, m, 0.0, zz) for m in range(b + 1)])
            rec = series_reciprocal(jet_from_derivatives(derivs))
            out = rec[b] * math.factorial(b)
            if b == 0:
                out = out - 1.0
            return out.reshape(np.shape(z))

        return ConformalFactor.from_z_partials(fz, name=f"inv({self.name})", max_order=self.max_order)

    def multiply(self, other: "ConformalFactor") -> "ConformalFactor":
        """Factor h with (1 + h) = (1 + f)(1 + g)."""

        def p(a, b, theta, z):
            acc = 0.0
            for i in range(a + 1):
                for j in range(b + 1):
                    acc = acc + (math.comb(a, i) * math.comb(b, j)
                                 * self.scale_partial(i, j, theta, z)
                                 * other.scale_partial(a - i, b - j, theta, z))
            if a == 0 and b == 0:
                acc = acc - 1.0
            return acc

        return ConformalFactor(p, x2_only=self.x2_only and other.x2_only,
                               max_order=min(self.max_order, other.max_order),
                               name=f"{self.name}*{other.name}")


@dataclass(frozen=True)
class MetricField2D:
    """Metric E (dx1)^2 + G (dx2)^2 on S^1 x [0, Z].

    ``base`` supplies partials of the warped coefficient a(x1, x2); the full
    tangential coefficient is E = G * a with G the scale of ``scale`` (G = 1
    when ``scale`` is None).  g11/g22 below always refer to E and G.
    """

    base: PartialFn
    domain_length: float
    scale: ConformalFactor | None = None
    name: str = "metric"
    max_order: float = math.inf
    theta_dependent: bool = False
    parent: "MetricField2D | None" = field(default=None, repr=False, compare=False)
    parent_factor: ConformalFactor | None = field(default=None, repr=False, compare=False)

    # -- coefficient access ------------------------------------------------

    def partial_base(self, a: int, b: int, theta, z) -> np.ndarray:
        if a + b > self.max_order:
            raise JetDepthError(
                f"metric '{self.name}' supplies partials to order {self.max_order}, "
                f"requested ({a},{b})")
        return self.base(a, b, theta, z)

    def partial_g11(self, a: int, b: int, theta, z) -> np.ndarray:
        """d^a_theta d^b_z of the full tangential coefficient E = G * a."""
        if self.scale is None:
            return self.partial_base(a, b, theta, z)
        acc = 0.0
        for j in range(b + 1):
            acc = acc + (math.comb(b, j) * self.scale.scale_partial(0, j, theta, z)
                         * self.partial_base(a, b - j, theta, z))
        return acc

    def partial_g22(self, a: int, b: int, theta, z) -> np.ndarray:
        th, zz = _as_arrays(theta, z)
        shape = np.broadcast_shapes(th.shape, zz.shape)
        if self.scale is None:
            if a == 0 and b == 0:
                return np.ones(shape)
            return np.zeros(shape)
        return np.broadcast_to(self.scale.scale_partial(a, b, theta, z), shape).copy()

    def g11(self, theta, z) -> np.ndarray:
        val = self.partial_g11(0, 0, theta, z)
        if np.any(np.asarray(val) <= 0.0):
            raise DomainError(f"non-positive g11 for metric '{self.name}'")
        return val

    def g22(self, theta, z) -> np.ndarray:
        return self.partial_g22(0, 0, theta, z)

    def sqrt_g11(self, theta, z) -> np.ndarray:
        return np.sqrt(self.g11(theta, z))

    def inv_g11(self, theta, z) -> np.ndarray:
        return 1.0 / self.g11(theta, z)

    def jet(self, theta0: float, n1: int, n2: int) -> np.ndarray:
        """Taylor coefficients c[a, b] of E at (theta0, 0), a <= n1, b <= n2."""
        if n1 + n2 > self.max_order:
            raise JetDepthError(
                f"metric '{self.name}' supplies partials to order {self.max_order}, "
                f"requested jet ({n1},{n2})")
        c = np.zeros((n1 + 1, n2 + 1), dtype=complex)
        for a in range(n1 + 1):
            for b in range(n2 + 1):
                c[a, b] = complex(np.asarray(self.partial_g11(a, b, theta0, 0.0)).reshape(()))
                c[a, b] /= math.factorial(a) * math.factorial(b)
        return c


# -- presets ---------------------------------------------------------------

def flat_metric(Z: float = 12.0) -> MetricField2D:
    def base(a, b, theta, z):
        th, zz = _as_arrays(theta, z)
        shape = np.broadcast_shapes(th.shape, zz.shape)
        return np.ones(shape) if a == 0 and b == 0 else np.zeros(shape)

    return MetricField2D(base, Z, name="flat")


def hyperbolic_metric(Z: float = 12.0) -> MetricField2D:
    """The constant-curvature preset with tangential coefficient e^{-2z}."""

    def base(a, b, theta, z):
        th, zz = _as_arrays(theta, z)
        shape = np.broadcast_shapes(th.shape, zz.shape)
        if a > 0:
            return np.zeros(shape)
        return np.broadcast_to((-2.0) ** b * np.exp(-2.0 * zz), shape).copy()

    return MetricField2D(base, Z, name="hyperbolic")


def conformal_paper_metric(Z: float = 12.0) -> MetricField2D:
    """(1 + z e^{-z}) times the hyperbolic preset."""
    return conformal_rescale(hyperbolic_metric(Z), ConformalFactor.paper(), name="conformal")


def series_metric(coeffs: Sequence[Mapping[int, complex]], Z: float = 12.0,
                  name: str = "series") -> MetricField2D:
    """Metric with tangential coefficient sum_m z^m sum_k c_{m,k} e^{i k theta}.

    ``coeffs[m]`` maps Fourier index k >= 0 to the coefficient of z^m e^{ik theta};
    k > 0 entries are mirrored conjugately so values are real.  The k = 0
    entries must be real.
    """
    table = []
    theta_dep = False
    for m, row in enumerate(coeffs):
        for k, c in row.items():
            if k < 0:
                raise UnsupportedShapeError("supply Fourier indices k >= 0 only")
            if k == 0 and abs(complex(c).imag) > 0:
                raise UnsupportedShapeError("k = 0 series coefficients must be real")
            if k > 0 and c != 0:
                theta_dep = True
            table.append((m, k, complex(c)))

    def base(a, b, theta, z):
        th, zz = _as_arrays(theta, z)
        shape = np.broadcast_shapes(th.shape, zz.shape)
        acc = np.zeros(shape, dtype=float)
        for m, k, c in table:
            if m < b:
                continue
            zpow = math.perm(m, b) * zz ** (m - b)
            if k == 0:
                if a == 0:
                    acc = acc + c.real * zpow
            else:
                phase = (1j * k) ** a * c * np.exp(1j * k * th)
                acc = acc + 2.0 * np.real(phase) * zpow
        return acc

    metric = MetricField2D(base, Z, name=name, theta_dependent=theta_dep)
    _validate_positive(metric)
    return metric


def _validate_positive(metric: MetricField2D, n_probe: int = 7) -> None:
    th = np.linspace(0.0, TWO_PI, 2 * n_probe, endpoint=False)[:, None]
    zz = np.linspace(0.0, metric.domain_length, n_probe)[None, :]
    if np.any(metric.partial_g11(0, 0, th, zz) <= 0):
        raise DomainError(f"metric '{metric.name}' is not positive on the domain")


# -- operations --------------------------------------------------------------

def conformal_rescale(metric: MetricField2D, factor: ConformalFactor,
                      name: str | None = None) -> MetricField2D:
    """Rescale by e^{2 phi} = 1 + f.  Only x2-only factors keep the metric in class."""
    if not factor.x2_only:
        raise UnsupportedShapeError(
            "theta-dependent conformal factors leave the supported metric class")
    zz = np.linspace(0.0, metric.domain_length, 33)
    if np.any(1.0 + factor.f(0.0, zz) <= 0.0):
        raise DomainError("conformal factor has 1 + f <= 0 on the domain")
    scale = factor if metric.scale is None else metric.scale.multiply(factor)
    return MetricField2D(
        metric.base, metric.domain_length, scale=scale,
        name=name or f"{metric.name}*{factor.name}",
        max_order=min(metric.max_order, factor.max_order),
        theta_dependent=metric.theta_dependent,
        parent=metric, parent_factor=factor)


def gaussian_curvature(metric: MetricField2D, theta, z) -> np.ndarray:
    """Gaussian curvature of E (dx1)^2 + G (dx2)^2 at the given points.

    For orthogonal coordinates with G independent of x1 the curvature reduces
    to -1/(2 sqrt(EG)) d_z (d_z E / sqrt(EG)).
    """
    E = metric.partial_g11(0, 0, theta, z)
    Ez = metric.partial_g11(0, 1, theta, z)
    Ezz = metric.partial_g11(0, 2, theta, z)
    G = metric.partial_g22(0, 0, theta, z)
    Gz = metric.partial_g22(0, 1, theta, z)
    if np.any(E <= 0) or np.any(G <= 0):
        raise DomainError("non-positive metric coefficient at curvature stencil")
    return -Ezz / (2.0 * E * G) + Ez * (Ez * G + E * Gz) / (4.0 * E ** 2 * G ** 2)


def reference_curvature_conformal(z) -> np.ndarray:
    """Closed-form curvature of the 'conformal' preset."""
    zz = np.asarray(z, dtype=float)
    num = np.exp(-2 * zz) * (zz + 1 - 3 * zz ** 2) + np.exp(-zz) * (3 - 6 * zz) - 2.0
    return num / (2.0 * (1.0 + zz * np.exp(-zz)) ** 3)


@dataclass(frozen=True)
class BoundaryJet:
    """Fourier data of the normal jets d^l_z g11(x1, 0), l = 0..m_max."""

    jets: tuple  # tuple of complex arrays, one per level, length n_theta each
    n_theta: int

    def values(self, level: int) -> np.ndarray:
        """Nodal values of jet `level` on the equispaced boundary grid."""
        return np.fft.ifft(self.jets[level]) * self.n_theta

    def mean(self, level: int) -> complex:
        return complex(self.jets[level][0])


def boundary_jet(metric: MetricField2D, m_max: int, n_theta: int = 64) -> BoundaryJet:
    """Boundary jets of the tangential coefficient, Fourier-transformed in x1."""
    if m_max > metric.max_order:
        raise JetDepthError(f"m_max={m_max} exceeds available partial order")
    th = TWO_PI * np.arange(n_theta) / n_theta
    jets = []
    for l in range(m_max + 1):
        vals = metric.partial_g11(0, l, th, 0.0)
        jets.append(np.fft.fft(np.asarray(vals, dtype=complex)) / n_theta)
    if np.any(np.real(jets[0][0]) <= 0):
        raise DomainError("boundary metric must be positive")
    return BoundaryJet(tuple(jets), n_theta)


def local_distance(metric: MetricField2D, x, y) -> float:
    """First-order geodesic distance sqrt(E_m dtheta^2 + G_m dz^2) at the midpoint.

    Error is O(|x - y|^2 * curvature scale); adequate for short-range fits.
    """
    th1, z1 = x
    th2, z2 = y
    dth = (th1 - th2 + math.pi) % TWO_PI - math.pi
    dz = z1 - z2
    thm = th2 + 0.5 * dth
    zm = 0.5 * (z1 + z2)
    E = float(metric.g11(thm, zm))
    G = float(metric.g22(thm, zm))
    return math.sqrt(E * dth ** 2 + G * dz ** 2)


@dataclass(frozen=True)
class PseudosphereReport:
    metric_residual: float
    tractrix_residual: float
    profile: tuple  # (z, h(z), r(z)) samples


def _tractrix_x(y: np.ndarray) -> np.ndarray:
    return -np.sqrt(1 - y ** 2) - np.log(y) + np.log(1 + np.sqrt(1 - y ** 2))


def pseudosphere_check(z_samples) -> PseudosphereReport:
    """Check the surface-of-revolution model of the hyperbolic preset.

    The embedding (h(z), e^{-z} cos theta, e^{-z} sin theta) with
    h'(z) = sqrt(1 - e^{-2z}) must induce e^{-2z} dtheta^2 + dz^2, and its
    profile must lie on the tractrix.  z = 0 is excluded from the metric
    residual (h'(0) = 0 is a coordinate degeneracy).
    """
    zz = np.asarray(z_samples, dtype=float)
    if np.any(zz <= 0):
        raise DomainError("z samples must be positive")
    hp2 = 1.0 - np.exp(-2.0 * zz)           # h'(z)^2
    rp = -np.exp(-zz)                        # r'(z) with r = e^{-z}
    # first fundamental form: E_theta = e^{-2z} (exact), E_z = h'^2 + r'^2
    metric_res = float(np.max(np.abs(hp2 + rp ** 2 - 1.0)))
    h = np.array([quad(lambda t: math.sqrt(1.0 - math.exp(-2.0 * t)), 0.0, z)[0] for z in zz])
    tract = float(np.max(np.abs(h - _tractrix_x(np.exp(-zz)))))
    return PseudosphereReport(metric_res, tract, (zz, h, np.exp(-zz)))
