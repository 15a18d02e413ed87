"""Grid-sampled differential forms on S^1 x [0, Z] and the exterior calculus.

Discretization: spectral (Fourier) differentiation in the periodic direction,
4th-order centered finite differences with one-sided closures at z in {0, Z}.
Quadrature is trapezoid in theta x composite Simpson in z; the weights are
stored on the grid so inner products are reproducible bit-for-bit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, UnsupportedShapeError
from .geometry import MetricField2D

TWO_PI = 2.0 * math.pi


def _dz_matrix(n: int, h: float) -> sp.csr_matrix:
    """4th-order first-derivative matrix with one-sided boundary closures."""
    if n < 6:
        raise DomainError("need at least 6 normal nodes")
    D = sp.lil_matrix((n, n))
    c = 1.0 / (12.0 * h)
    D[0, 0:5] = np.array([-25, 48, -36, 16, -3]) * c
    D[1, 0:5] = np.array([-3, -10, 18, -6, 1]) * c
    for i in range(2, n - 2):
        D[i, i - 2:i + 3] = np.array([1, -8, 0, 8, -1]) * c
    D[n - 2, n - 5:n] = np.array([-1, 6, -18, 10, 3]) * c
    D[n - 1, n - 5:n] = np.array([3, -16, 36, -48, 25]) * c
    return D.tocsr()


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights on n equispaced nodes (3/8 correction if n even)."""
    if n < 4:
        raise DomainError("need at least 4 nodes for Simpson quadrature")
    w = np.zeros(n)
    if n % 2 == 1:
        w[0] = w[-1] = 1.0
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= h / 3.0
    else:
        m = n - 3  # Simpson on nodes 0..m-1, 3/8 rule on the last four
        w[:m] = simpson_weights(m, h)
        w[m - 1:] += np.array([1, 3, 3, 1]) * (3.0 * h / 8.0)
    return w


@dataclass(frozen=True)
class Grid:
    """Tensor grid: n_theta equispaced angles x n_z nodes on [0, Z]."""

    n_theta: int
    n_z: int
    Z: float
    theta: np.ndarray = field(init=False, repr=False, compare=False)
    z: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", TWO_PI * np.arange(self.n_theta) / self.n_theta)
        object.__setattr__(self, "z", np.linspace(0.0, self.Z, self.n_z))
        object.__setattr__(self, "_ik", self._wavenumbers())
        object.__setattr__(self, "_Dz", _dz_matrix(self.n_z, self.h))
        object.__setattr__(self, "_wz", simpson_weights(self.n_z, self.h))

    @property
    def h(self) -> float:
        return self.Z / (self.n_z - 1)

    @property
    def w_theta(self) -> float:
        return TWO_PI / self.n_theta

    @property
    def w_z(self) -> np.ndarray:
        return self._wz

    def _wavenumbers(self) -> np.ndarray:
        k = np.fft.fftfreq(self.n_theta, d=1.0 / self.n_theta)
        ik = 1j * k
        if self.n_theta % 2 == 0:
            ik[self.n_theta // 2] = 0.0  # Nyquist mode has no odd derivative
        return ik

    def dtheta(self, F: np.ndarray) -> np.ndarray:
        return np.fft.ifft(self._ik[:, None] * np.fft.fft(F, axis=0), axis=0)

    def dz(self, F: np.ndarray) -> np.ndarray:
        return (self._Dz @ F.T).T

    def quad(self, F: np.ndarray) -> complex:
        return complex(self.w_theta * np.sum(F @ self._wz))

    def quad_theta(self, boundary_row: np.ndarray) -> complex:
        return complex(self.w_theta * np.sum(boundary_row))

    def mesh(self):
        return self.theta[:, None], self.z[None, :]

    def sample(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
        th, zz = self.mesh()
        return np.asarray(fn(th, zz), dtype=complex) * np.ones((self.n_theta, self.n_z))


_N_COMPONENTS = {0: 1, 1: 2, 2: 1}


@dataclass(frozen=True)
class GridForm:
    """Differential form of degree 0, 1 or 2 sampled on a tensor grid.

    Components are complex arrays of shape (n_theta, n_z): a scalar field for
    degree 0, (w1, w2) for w1 dx1 + w2 dx2, and the single dx1^dx2 component
    for degree 2.
    """

    degree: int
    components: tuple
    grid: Grid

    def __post_init__(self):
        if self.degree not in _N_COMPONENTS:
            raise UnsupportedShapeError(f"degree must be 0, 1 or 2, got {self.degree}")
        if len(self.components) != _N_COMPONENTS[self.degree]:
            raise UnsupportedShapeError("component count does not match degree")
        shape = (self.grid.n_theta, self.grid.n_z)
        for c in self.components:
            if c.shape != shape:
                raise UnsupportedShapeError("component arrays must match the grid shape")

    @staticmethod
    def from_components(degree: int, comps, grid: Grid) -> "GridForm":
        return GridForm(degree, tuple(np.asarray(c, dtype=complex) for c in comps), grid)

    @staticmethod
    def from_functions(degree: int, fns, grid: Grid) -> "GridForm":
        return GridForm(degree, tuple(grid.sample(f) for f in fns), grid)

    @staticmethod
    def zero(degree: int, grid: Grid) -> "GridForm":
        n = _N_COMPONENTS[degree]
        return GridForm(degree, tuple(np.zeros((grid.n_theta, grid.n_z), dtype=complex)
                                      for _ in range(n)), grid)

    def __add__(self, other: "GridForm") -> "GridForm":
        self._check_compatible(other)
        return GridForm(self.degree, tuple(a + b for a, b in
                                           zip(self.components, other.components)), self.grid)

    def __sub__(self, other: "GridForm") -> "GridForm":
        self._check_compatible(other)
        return GridForm(self.degree, tuple(a - b for a, b in
                                           zip(self.components, other.components)), self.grid)

    def __mul__(self, c) -> "GridForm":
        return GridForm(self.degree, tuple(c * a for a in self.components), self.grid)

    __rmul__ = __mul__

    def _check_compatible(self, other: "GridForm"):
        if self.degree != other.degree or self.grid is not other.grid:
            raise UnsupportedShapeError("forms live on different grids or degrees")

    def sup_norm(self) -> float:
        return max(float(np.max(np.abs(c))) for c in self.components)


def _metric_fields(metric: MetricField2D, grid: Grid):
    th, zz = grid.mesh()
    E = metric.g11(th, zz) * np.ones((grid.n_theta, grid.n_z))
    G = metric.g22(th, zz) * np.ones((grid.n_theta, grid.n_z))
    return E, G


def exterior_d(form: GridForm) -> GridForm:
    """Exterior derivative; spectral in theta, 4th-order FD in z."""
    g = form.grid
    if form.degree == 0:
        (u,) = form.components
        return GridForm(1, (g.dtheta(u), g.dz(u)), g)
    if form.degree == 1:
        w1, w2 = form.components
        return GridForm(2, (g.dtheta(w2) - g.dz(w1),), g)
    raise UnsupportedShapeError("exterior derivative of a 2-form is not defined in 2D")


def hodge_star(form: GridForm, metric: MetricField2D) -> GridForm:
    """Hodge star for the diagonal metric E (dx1)^2 + G (dx2)^2.

    *dx1 = sqrt(G/E) dx2,  *dx2 = -sqrt(E/G) dx1,  *(dx1^dx2) = 1/sqrt(EG),
    *1 = sqrt(EG) dx1^dx2; reduces to the warped-product formulas when G = 1.
    """
    g = form.grid
    E, G = _metric_fields(metric, g)
    if form.degree == 0:
        (u,) = form.components
        return GridForm(2, (np.sqrt(E * G) * u,), g)
    if form.degree == 1:
        w1, w2 = form.components
        return GridForm(1, (-np.sqrt(E / G) * w2, np.sqrt(G / E) * w1), g)
    (v,) = form.components
    return GridForm(0, (v / np.sqrt(E * G),), g)


def codifferential(form: GridForm, metric: MetricField2D) -> GridForm:
    """delta = -*d* on 1- and 2-forms in 2D ((-1)^{nk+n+1} is -1 for n = 2)."""
    if form.degree == 0:
        raise UnsupportedShapeError("codifferential of a 0-form is not defined")
    out = hodge_star(exterior_d(hodge_star(form, metric)), metric)
    return GridForm(form.degree - 1, tuple(-c for c in out.components), form.grid)


def tangential_trace(form: GridForm, metric: MetricField2D | None = None) -> np.ndarray:
    """Pullback to the x2 = 0 boundary circle (coefficient of dx1 for 1-forms)."""
    if form.degree == 0:
        return form.components[0][:, 0].copy()
    if form.degree == 1:
        return form.components[0][:, 0].copy()
    raise UnsupportedShapeError("tangential trace is defined for degrees 0..n-1")


def normal_trace(form: GridForm, metric: MetricField2D) -> np.ndarray:
    """Pullback of *form to the x2 = 0 boundary (n omega = i^*(* omega))."""
    g = form.grid
    th = g.theta
    if form.degree == 1:
        E0 = metric.g11(th, 0.0)
        G0 = metric.g22(th, 0.0)
        return -form.components[1][:, 0] * np.sqrt(E0 / G0)
    if form.degree == 2:
        E0 = metric.g11(th, 0.0)
        G0 = metric.g22(th, 0.0)
        return form.components[0][:, 0] / np.sqrt(E0 * G0)
    raise UnsupportedShapeError("normal trace is defined for degrees 1..n")


@dataclass(frozen=True)
class TraceData:
    """Fourier coefficients of the tangential and normal traces."""

    degree: int
    t_omega: np.ndarray
    n_omega: np.ndarray

    @staticmethod
    def from_form(form: GridForm, metric: MetricField2D) -> "TraceData":
        n = form.grid.n_theta
        t = (np.fft.fft(tangential_trace(form, metric)) / n
             if form.degree < 2 else np.zeros(n, dtype=complex))
        nn = (np.fft.fft(normal_trace(form, metric)) / n
              if form.degree > 0 else np.zeros(n, dtype=complex))
        return TraceData(form.degree, t, nn)


def inner_product(a: GridForm, b: GridForm, metric: MetricField2D) -> complex:
    """L^2 inner product (a, b) = integral of g(a, conj b) dvol (conjugate-linear in b)."""
    if a.degree != b.degree:
        raise UnsupportedShapeError("inner product needs forms of equal degree")
    g = a.grid
    E, G = _metric_fields(metric, g)
    vol = np.sqrt(E * G)
    if a.degree == 0:
        dens = a.components[0] * np.conj(b.components[0]) * vol
    elif a.degree == 1:
        dens = (a.components[0] * np.conj(b.components[0]) / E
                + a.components[1] * np.conj(b.components[1]) / G) * vol
    else:
        dens = a.components[0] * np.conj(b.components[0]) / (E * G) * vol
    return g.quad(dens)


def norm(a: GridForm, metric: MetricField2D) -> float:
    return math.sqrt(max(inner_product(a, a, metric).real, 0.0))


def boundary_pairing(omega: GridForm, eta: GridForm, metric: MetricField2D) -> complex:
    """Signed boundary term <t omega, n eta> over both ends of the cylinder.

    Computed as the integral of the dx1-component of i^*(omega ^ * conj(eta)),
    with the z = Z circle entering with opposite orientation.
    """
    if eta.degree != omega.degree + 1:
        raise UnsupportedShapeError("pairing needs degrees k and k+1")
    g = omega.grid
    star_eta = hodge_star(eta, metric)
    star_eta = GridForm(star_eta.degree, tuple(np.conj(c) for c in star_eta.components), g)
    if omega.degree == 0:
        alpha1 = omega.components[0] * star_eta.components[0]
    else:  # omega degree 1, *eta degree 0
        alpha1 = star_eta.components[0] * omega.components[0]
    return g.quad_theta(alpha1[:, 0]) - g.quad_theta(alpha1[:, -1])


def stokes_residual(omega: GridForm, eta: GridForm, metric: MetricField2D) -> float:
    """|(d omega, eta) - (omega, delta eta) - <t omega, n eta>|."""
    lhs = inner_product(exterior_d(omega), eta, metric)
    mid = inner_product(omega, codifferential(eta, metric), metric)
    bnd = boundary_pairing(omega, eta, metric)
    return abs(lhs - mid - bnd)


# -- band-limited test data ---------------------------------------------------

def smooth_window(z: np.ndarray, z0: float, z1: float) -> np.ndarray:
    """C^4 window, identically 0 outside [z0, z1], 1 on the middle half."""
    t = np.clip((z - z0) / (z1 - z0), 0.0, 1.0)
    ramp = np.clip(2.0 * np.minimum(t, 1.0 - t), 0.0, 1.0)
    s = ramp ** 5 * (70 * ramp ** 4 - 315 * ramp ** 3 + 540 * ramp ** 2 - 420 * ramp + 126)
    return s


def random_band_limited(grid: Grid, degree: int, rng: np.random.Generator,
                        k_max: int = 6, m_max: int = 3,
                        window: tuple[float, float] | None = None) -> GridForm:
    """Random smooth form: Fourier modes |k| <= k_max times low trig z-profiles."""
    th, zz = grid.mesh()
    comps = []
    for _ in range(_N_COMPONENTS[degree]):
        F = np.zeros((grid.n_theta, grid.n_z), dtype=complex)
        for k in range(-k_max, k_max + 1):
            prof = np.zeros_like(zz, dtype=complex)
            for m in range(1, m_max + 1):
                c1, c2 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
                prof = prof + c1 * np.sin(m * math.pi * zz / grid.Z) \
                            + c2 * np.cos(m * math.pi * zz / grid.Z)
            F = F + np.exp(1j * k * th) * prof
        if window is not None:
            F = F * smooth_window(zz, *window)
        comps.append(F / (2 * k_max + 1))
    return GridForm(degree, tuple(comps), grid)


# -- CSV serialization --------------------------------------------------------

def save_form_csv(form: GridForm, path) -> None:
    """Header (degree, n_theta, n_z, Z), then row-major component dumps."""
    g = form.grid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["degree", "n_theta", "n_z", "Z"])
        w.writerow([form.degree, g.n_theta, g.n_z, repr(g.Z)])
        w.writerow(["component", "i_theta", "i_z", "re", "im"])
        for ci, comp in enumerate(form.components):
            for it in range(g.n_theta):
                for iz in range(g.n_z):
                    v = comp[it, iz]
                    w.writerow([ci, it, iz, repr(v.real), repr(v.imag)])


def load_form_csv(path) -> GridForm:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["degree", "n_theta", "n_z", "Z"]:
            raise UnsupportedShapeError(f"unexpected CSV header: {header}")
        degree, n_theta, n_z, Z = next(r)
        degree, n_theta, n_z, Z = int(degree), int(n_theta), int(n_z), float(Z)
        next(r)  # column names
        grid = Grid(n_theta, n_z, Z)
        comps = [np.zeros((n_theta, n_z), dtype=complex) for _ in range(_N_COMPONENTS[degree])]
        for row in r:
            ci, it, iz, re, im = int(row[0]), int(row[1]), int(row[2]), float(row[3]), float(row[4])
            comps[ci][it, iz] = re + 1j * im
    return GridForm(degree, tuple(comps), grid)
