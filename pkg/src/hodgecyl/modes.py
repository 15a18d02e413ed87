"""Fourier-mode reduction on the cylinder: per-mode operators, eigensolves, BVPs.

Two per-mode realizations are provided for rotationally symmetric metrics:

* ``conjugated`` -- the unitarily conjugated 2x2 operator family for the
  hyperbolic preset and its x2-only conformal rescalings (diagonal
  -d_z(tau d_z) + tau/4 + tau'/2 + tau e^{2z} k^2, coupling (2 tau + tau') e^z i k),
  living in an unweighted L^2 space.

* ``weighted`` -- a Hermitian divergence-form discretization of the mode
  operator for any theta-independent diagonal metric, assembled from the
  Dirichlet energy with midpoint coefficients so the matrix is exactly
  Hermitian in the discrete weighted inner product.

The half-infinite manifold is truncated to [0, Z] with a homogeneous
Dirichlet far condition; mode solutions decay exponentially for k != 0, so
the truncation error is spectrally small (see ``truncation_scan``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import solve_banded

from .errors import SpectralGapError, UnsupportedShapeError
from .geometry import ConformalFactor, MetricField2D


def _check_rotsym(metric: MetricField2D) -> None:
    if metric.theta_dependent:
        raise UnsupportedShapeError(
            "mode reduction requires a rotationally symmetric metric")


def _base_coeffs(metric: MetricField2D):
    """Base warped coefficient a = E/G and tau = 1/G as callables of z."""

    def a(z, order=0):
        # partials of E/G; for our class E = G * base so E/G = base exactly
        return metric.partial_base(0, order, 0.0, z)

    def tau(z):
        return 1.0 / metric.partial_g22(0, 0, 0.0, z)

    def dtau(z):
        G = metric.partial_g22(0, 0, 0.0, z)
        Gz = metric.partial_g22(0, 1, 0.0, z)
        return -Gz / G ** 2

    return a, tau, dtau


class ModeOperator:
    """Per-mode ordinary differential operator on [0, Z].

    ``assemble(n_z)`` returns (H, W, bandwidth): H is the Hermitian matrix of
    the weighted operator on the full node set (Dirichlet conditions are
    applied by the solvers), W the diagonal of the discrete weighted inner
    product.  For the conjugated kind the weight is the plain L^2 weight.
    """

    def __init__(self, degree: int, k: int, kind: str, Z: float,
                 assemble: Callable[[int], tuple], describe: dict):
        self.degree = degree
        self.k = k
        self.kind = kind
        self.Z = Z
        self._assemble = assemble
        self.describe = describe

    def assemble(self, n_z: int):
        return self._assemble(n_z)

    def n_components(self) -> int:
        return 2 if self.degree == 1 else 1


def mode_operator_L(k: int, factor: ConformalFactor | None = None,
                    Z: float = 12.0) -> ModeOperator:
    """Conjugated 1-form mode operator for the hyperbolic preset rescaled by ``factor``.

    With no factor (tau == 1) this is the constant-curvature family with
    diagonal -d_z^2 + 1/4 + e^{2z} k^2 and coupling +-2 i k e^z.
    """
    if factor is None:
        tau = lambda z: np.ones_like(np.asarray(z, dtype=float))
        dtau = lambda z: np.zeros_like(np.asarray(z, dtype=float))
    else:
        if not factor.x2_only:
            raise UnsupportedShapeError("conjugation needs an x2-only factor")
        tau, dtau = factor.tau, factor.tau_prime

    def potential(z):
        return tau(z) / 4.0 + dtau(z) / 2.0 + tau(z) * np.exp(2.0 * z) * k ** 2

    def coupling(z):
        # coefficient of +i in the (1,2) entry
        return (2.0 * tau(z) + dtau(z)) * np.exp(z) * k

    def assemble(n_z: int):
        z = np.linspace(0.0, Z, n_z)
        h = z[1] - z[0]
        zm = 0.5 * (z[1:] + z[:-1])
        tm = tau(zm)
        V = potential(z)
        c = coupling(z)
        n = 2 * n_z
        main = np.zeros(n_z)
        main[:-1] += tm / h ** 2
        main[1:] += tm / h ** 2
        main += V
        off = -tm / h ** 2
        rows, cols, vals = [], [], []
        idx = np.arange(n_z)
        for comp in (0, 1):
            rows += list(2 * idx + comp); cols += list(2 * idx + comp); vals += list(main)
            rows += list(2 * idx[:-1] + comp); cols += list(2 * idx[1:] + comp); vals += list(off)
            rows += list(2 * idx[1:] + comp); cols += list(2 * idx[:-1] + comp); vals += list(off)
        rows += list(2 * idx); cols += list(2 * idx + 1); vals += list(1j * c)
        rows += list(2 * idx + 1); cols += list(2 * idx); vals += list(-1j * c)
        H = sp.csr_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(n, n))
        W = np.repeat(np.ones(n_z), 2)
        return H, W, 3

    describe = dict(tau=tau, dtau=dtau, potential=potential, coupling=coupling)
    return ModeOperator(1, k, "conjugated", Z, assemble, describe)


def conjugate_by_U(metric: MetricField2D, k: int, Z: float | None = None) -> ModeOperator:
    """Unitary conjugation of the 1-form mode operator to an unweighted space.

    Applies to the hyperbolic preset and its x2-only conformal rescalings
    (the base tangential coefficient must be e^{-2z}).
    """
    _check_rotsym(metric)
    z_probe = np.linspace(0.0, metric.domain_length, 17)
    base = metric.partial_base(0, 0, 0.0, z_probe)
    if np.max(np.abs(base * np.exp(2.0 * z_probe) - 1.0)) > 1e-10:
        raise UnsupportedShapeError(
            "conjugation applies to the hyperbolic preset and its x2-only rescalings")
    factor = None
    if metric.scale is not None:
        factor = metric.scale
    return mode_operator_L(k, factor, Z or metric.domain_length)


def _sl_mode_operator(afun: Callable[[np.ndarray], np.ndarray], k: int,
                      Z: float) -> ModeOperator:
    """Scalar 0-form mode operator for tangential coefficient a(z) in normal form.

    Weighted Sturm-Liouville problem -(sqrt(a) u')' + k^2 u / sqrt(a) = 0,
    assembled from the Dirichlet energy with midpoint coefficients.
    """

    def sfun(z):
        return np.sqrt(afun(z))

    def rfun(z):
        return 1.0 / np.sqrt(afun(z))

    def assemble(n_z: int):
        z = np.linspace(0.0, Z, n_z)
        h = z[1] - z[0]
        zm = 0.5 * (z[1:] + z[:-1])
        sm, rm = sfun(zm), rfun(zm)
        # Dirichlet energy: sum h [ s_m |u'|^2 + k^2 r_m |u_mid|^2 ]
        d_main = np.zeros(n_z)
        d_main[:-1] += sm / h ** 2 + k ** 2 * rm / 4.0
        d_main[1:] += sm / h ** 2 + k ** 2 * rm / 4.0
        d_off = -sm / h ** 2 + k ** 2 * rm / 4.0
        H = sp.diags([h * d_off, h * d_main, h * d_off], [-1, 0, 1],
                     format="csr", dtype=complex)
        W = h * sfun(z)
        return H, W, 1

    describe = dict(r=rfun, s=sfun)
    return ModeOperator(0, k, "weighted", Z, assemble, describe)


def weighted_mode_operator(metric: MetricField2D, degree: int, k: int,
                           Z: float | None = None) -> ModeOperator:
    """Hermitian weighted discretization of the mode operator for any
    theta-independent diagonal metric, degrees 0 and 1."""
    _check_rotsym(metric)
    if degree not in (0, 1):
        raise UnsupportedShapeError("weighted mode operators exist for degrees 0 and 1")
    ZZ = Z or metric.domain_length
    a, tau, _ = _base_coeffs(metric)

    def rfun(z):
        return 1.0 / np.sqrt(a(z))

    def sfun(z):
        return np.sqrt(a(z))

    if degree == 0:
        return _sl_mode_operator(lambda z: a(z), k, ZZ)

    def assemble(n_z: int):
        z = np.linspace(0.0, ZZ, n_z)
        h = z[1] - z[0]
        zm = 0.5 * (z[1:] + z[:-1])
        wq = h * tau(zm) * rfun(zm)       # quadrature weight per interval
        rm = rfun(zm)
        s_node = sfun(z)
        n = 2 * n_z
        ni = n_z - 1
        ones = np.ones(ni)
        # local dofs [w1_i, w2_i, w1_{i+1}, w2_{i+1}]; coefficient vectors of
        # the two interval functionals M (curl part) and N (divergence part)
        m = [ones / h, 0.5j * k * ones, -ones / h, 0.5j * k * ones]
        nn = [0.5j * k * rm, -s_node[:-1] / h, 0.5j * k * rm, s_node[1:] / h]
        base = 2 * np.arange(ni)
        dofs = [base, base + 1, base + 2, base + 3]
        rows, cols, vals = [], [], []
        for p in range(4):
            for q in range(4):
                rows.append(dofs[p])
                cols.append(dofs[q])
                vals.append(wq * (np.conj(m[p]) * m[q] + np.conj(nn[p]) * nn[q]))
        H = sp.csr_matrix((np.concatenate(vals),
                           (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
        W = np.empty(n)
        W[0::2] = h * rfun(z)
        W[1::2] = h * sfun(z)
        return H, W, 3

    describe = dict(r=rfun, s=sfun, tau=tau)
    return ModeOperator(1, k, "weighted", ZZ, assemble, describe)


# -- eigensolves ---------------------------------------------------------------

def discrete_spectrum(op: ModeOperator, n_eig: int, n_z: int = 2000) -> np.ndarray:
    """Lowest eigenvalues of the Dirichlet-truncated mode operator.

    Interior Dirichlet restriction at z in {0, Z}; the spectrum is real
    because the discretization is Hermitian in the discrete weighted space.
    """
    H, W, _ = op.assemble(n_z)
    nc = op.n_components()
    keep = np.arange(H.shape[0]).reshape(n_z, nc)[1:-1].ravel()
    Hi = H[np.ix_(keep, keep)].tocsc()
    Wi = sp.diags(W[keep]).tocsc()
    try:
        vals = spla.eigsh(Hi, k=n_eig, M=Wi, sigma=-1.0, which="LM",
                          return_eigenvectors=False)
    except Exception as exc:  # pragma: no cover - eigensolver failure surface
        raise SpectralGapError(f"eigensolve failed: {exc}") from exc
    return np.sort(vals.real)


@dataclass(frozen=True)
class SpectralProbe:
    k_list: tuple
    eigenvalues: dict
    bottom_estimate: float

    @staticmethod
    def run(op_factory: Callable[[int], ModeOperator], k_list: Iterable[int],
            n_eig: int = 4, n_z: int = 2000) -> "SpectralProbe":
        ks = tuple(k_list)
        eigs = {k: discrete_spectrum(op_factory(k), n_eig, n_z) for k in ks}
        bottom = min(float(v[0]) for v in eigs.values())
        return SpectralProbe(ks, eigs, bottom)

    def to_json(self) -> str:
        payload = [{"k": int(k), "eigenvalues": [float(x) for x in self.eigenvalues[k]]}
                   for k in self.k_list]
        return json.dumps({"modes": payload, "bottom_estimate": self.bottom_estimate},
                          indent=2, sort_keys=True)


# -- boundary value solves -----------------------------------------------------

_D1_EDGE = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0  # one-sided, 4th order


@dataclass(frozen=True)
class ModeSolution:
    op: ModeOperator
    z: np.ndarray
    components: tuple          # nc arrays over the full node set
    residual: float            # discrete residual of the solved system

    def boundary_derivative(self, comp: int = 0) -> complex:
        h = self.z[1] - self.z[0]
        vals = self.components[comp][:5]
        return complex(np.dot(_D1_EDGE, vals) / h)


def _banded_from_csr(H: sp.csr_matrix, bw: int) -> np.ndarray:
    n = H.shape[0]
    ab = np.zeros((2 * bw + 1, n), dtype=complex)
    Hc = H.tocoo()
    for r, c, v in zip(Hc.row, Hc.col, Hc.data):
        ab[bw + r - c, c] += v
    return ab


def solve_mode_bvp(op: ModeOperator, boundary_values, n_z: int = 801) -> ModeSolution:
    """Two-point boundary-value solve: given data at z = 0, homogeneous
    Dirichlet at z = Z, via a banded solve of the Hermitian discretization."""
    H, _, bw = op.assemble(n_z)
    nc = op.n_components()
    bc = np.asarray(boundary_values, dtype=complex).reshape(nc)
    x = np.zeros(n_z * nc, dtype=complex)
    x[:nc] = bc
    idx = np.arange(n_z * nc)
    interior = idx[nc:-nc]
    rhs = -(H[np.ix_(interior, idx[:nc])] @ bc)
    Hi = H[np.ix_(interior, interior)].tocsr()
    ab = _banded_from_csr(Hi, bw)
    try:
        sol = solve_banded((bw, bw), ab, rhs)
    except Exception as exc:
        raise SpectralGapError(
            "singular mode system; check 0 is not an eigenvalue via discrete_spectrum"
        ) from exc
    if not np.all(np.isfinite(sol)):
        raise SpectralGapError(
            "non-finite mode solution; check 0 is not an eigenvalue via discrete_spectrum")
    x[interior] = sol
    res = float(np.max(np.abs(Hi @ sol - rhs)) / max(np.max(np.abs(rhs)), 1e-300))
    z = np.linspace(0.0, op.Z, n_z)
    comps = tuple(x[c::nc] for c in range(nc))
    return ModeSolution(op, z, comps, res)


def truncation_scan(metric: MetricField2D, degree: int, k: int, boundary_values,
                    Z_list: Iterable[float], nodes_per_unit: int = 100) -> dict:
    """Boundary derivative of the first component vs truncation length Z.

    Used to validate the Dirichlet stand-in for the decay condition: for
    k != 0 the data must settle exponentially fast in Z.
    """
    out = {}
    for Z in Z_list:
        op = weighted_mode_operator(metric, degree, k, Z=Z)
        n_z = int(round(nodes_per_unit * Z)) + 1
        sol = solve_mode_bvp(op, boundary_values, n_z)
        out[Z] = sol.boundary_derivative(0)
    return out
