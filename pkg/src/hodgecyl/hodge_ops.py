"""Hodge Laplacians on 0-, 1- and 2-forms.

Each Laplacian is assembled two ways: compositionally as d delta + delta d
(the source of truth) and, for warped-product metrics, from the explicit
coordinate coefficients E, F, Q.  The two assemblies are cross-checked at
construction; a disagreement signals a transcription bug in the coefficient
tables and raises ConsistencyError.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConsistencyError, DomainError, UnsupportedShapeError
from .forms import Grid, GridForm, codifferential, exterior_d, inner_product, norm, random_band_limited
from .geometry import MetricField2D


@dataclass(frozen=True)
class CoeffMatrices:
    """First/zeroth-order coefficient fields of the explicit coordinate form.

    For degree 1 the entries are (2, 2, n_theta, n_z) arrays; for degree 2
    scalars fields of shape (n_theta, n_z).  The flat metric has E = F = Q = 0.
    """

    degree: int
    E: np.ndarray
    F: np.ndarray
    Q: np.ndarray


@dataclass(frozen=True)
class AssembledOperator:
    degree: int
    apply: Callable[[GridForm], GridForm]
    provenance: str  # "compositional" | "explicit"

    def __call__(self, form: GridForm) -> GridForm:
        return self.apply(form)


def _inv_g11_partials(metric: MetricField2D, grid: Grid):
    """Partials of b = 1/g11 to order 2 on the grid (normal form only)."""
    th, zz = grid.mesh()
    ones = np.ones((grid.n_theta, grid.n_z))
    E = metric.partial_g11(0, 0, th, zz) * ones
    Et = metric.partial_g11(1, 0, th, zz) * ones
    Ez = metric.partial_g11(0, 1, th, zz) * ones
    Ett = metric.partial_g11(2, 0, th, zz) * ones
    Ezz = metric.partial_g11(0, 2, th, zz) * ones
    Etz = metric.partial_g11(1, 1, th, zz) * ones
    b = 1.0 / E
    bt = -Et / E ** 2
    bz = -Ez / E ** 2
    btt = -Ett / E ** 2 + 2 * Et ** 2 / E ** 3
    bzz = -Ezz / E ** 2 + 2 * Ez ** 2 / E ** 3
    btz = -Etz / E ** 2 + 2 * Et * Ez / E ** 3
    # log b = -log E
    logb_tz = -(Etz / E - Et * Ez / E ** 2)
    logb_zz = -(Ezz / E - (Ez / E) ** 2)
    return dict(b=b, bt=bt, bz=bz, btt=btt, bzz=bzz, btz=btz,
                logb_tz=logb_tz, logb_zz=logb_zz)


def coefficient_matrices(metric: MetricField2D, grid: Grid, degree: int) -> CoeffMatrices:
    """E, F, Q of the explicit coordinate form (warped-product metrics only)."""
    if metric.scale is not None:
        raise UnsupportedShapeError(
            "explicit coefficient tables apply in boundary normal coordinates (g22 = 1)")
    p = _inv_g11_partials(metric, grid)
    b, bt, bz = p["b"], p["bt"], p["bz"]
    if degree == 1:
        shape = b.shape
        E = np.zeros((2, 2) + shape)
        F = np.zeros((2, 2) + shape)
        Q = np.zeros((2, 2) + shape)
        E[0, 0] = -bz / (2 * b)
        E[1, 1] = bz / (2 * b)
        F[0, 0] = -1.5 * bt
        F[0, 1] = bz / b
        F[1, 0] = -bz
        F[1, 1] = -bt / 2
        Q[0, 0] = -p["btt"] / 2
        Q[0, 1] = p["logb_tz"] / 2
        Q[1, 0] = -p["btz"] / 2
        Q[1, 1] = p["logb_zz"] / 2
        return CoeffMatrices(1, E, F, Q)
    if degree == 2:
        E = -bz / (2 * b)
        F = -1.5 * bt
        Q = -p["btt"] / 2 - p["logb_zz"] / 2
        return CoeffMatrices(2, E, F, Q)
    raise UnsupportedShapeError("coefficient tables exist for degrees 1 and 2")


def _compositional(metric: MetricField2D, grid: Grid, degree: int) -> AssembledOperator:
    def apply(form: GridForm) -> GridForm:
        if form.degree != degree:
            raise UnsupportedShapeError("operator degree mismatch")
        if degree == 0:
            return codifferential(exterior_d(form), metric)
        if degree == 2:
            return exterior_d(codifferential(form, metric))
        return (exterior_d(codifferential(form, metric))
                + codifferential(exterior_d(form), metric))

    return AssembledOperator(degree, apply, "compositional")


def _explicit(metric: MetricField2D, grid: Grid, degree: int) -> tuple[AssembledOperator, CoeffMatrices]:
    cm = coefficient_matrices(metric, grid, degree)
    th, zz = grid.mesh()
    b = (metric.inv_g11(th, zz) * np.ones((grid.n_theta, grid.n_z)))

    if degree == 1:
        def apply(form: GridForm) -> GridForm:
            w1, w2 = form.components
            d2w1, d2w2 = grid.dz(grid.dz(w1)), grid.dz(grid.dz(w2))
            d1w1, d1w2 = grid.dtheta(w1), grid.dtheta(w2)
            dzw1, dzw2 = grid.dz(w1), grid.dz(w2)
            r1 = (-d2w1 - b * grid.dtheta(d1w1)
                  + cm.E[0, 0] * dzw1
                  + cm.F[0, 0] * d1w1 + cm.F[0, 1] * d1w2
                  + cm.Q[0, 0] * w1 + cm.Q[0, 1] * w2)
            r2 = (-d2w2 - b * grid.dtheta(d1w2)
                  + cm.E[1, 1] * dzw2
                  + cm.F[1, 0] * d1w1 + cm.F[1, 1] * d1w2
                  + cm.Q[1, 0] * w1 + cm.Q[1, 1] * w2)
            return GridForm(1, (r1, r2), grid)
    else:
        def apply(form: GridForm) -> GridForm:
            (v,) = form.components
            r = (-grid.dz(grid.dz(v)) - b * grid.dtheta(grid.dtheta(v))
                 + cm.E * grid.dz(v) + cm.F * grid.dtheta(v) + cm.Q * v)
            return GridForm(2, (r,), grid)

    return AssembledOperator(degree, apply, "explicit"), cm


def _cross_check(comp: AssembledOperator, expl: AssembledOperator, metric: MetricField2D,
                 grid: Grid, tol: float, n_forms: int = 2, seed: int = 7) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_forms):
        w = random_band_limited(grid, comp.degree, rng, k_max=3, m_max=2)
        a, bform = comp(w), expl(w)
        denom = max(norm(a, metric), 1e-30)
        worst = max(worst, norm(a - bform, metric) / denom)
    if worst > tol:
        raise ConsistencyError(
            f"compositional vs explicit degree-{comp.degree} Laplacian disagree "
            f"(relative residual {worst:.3e} > {tol:.1e}); suspect a coefficient "
            "transcription bug")
    return worst


@dataclass(frozen=True)
class LaplacianPair:
    compositional: AssembledOperator
    explicit: AssembledOperator | None
    coeffs: CoeffMatrices | None
    cross_residual: float | None

    def __call__(self, form: GridForm) -> GridForm:
        return self.compositional(form)


def laplacian0(metric: MetricField2D, grid: Grid) -> AssembledOperator:
    """Hodge Laplacian delta d on 0-forms (compositional)."""
    return _compositional(metric, grid, 0)


def laplacian1(metric: MetricField2D, grid: Grid, cross_check: bool = True,
               check_tol: float = 1e-4) -> LaplacianPair:
    """Hodge Laplacian on 1-forms; compositional primary + explicit cross-check.

    The explicit assembly exists only for warped-product metrics (g22 = 1);
    for rescaled metrics the pair carries the compositional operator alone.
    """
    comp = _compositional(metric, grid, 1)
    if metric.scale is not None:
        return LaplacianPair(comp, None, None, None)
    expl, cm = _explicit(metric, grid, 1)
    res = _cross_check(comp, expl, metric, grid, check_tol) if cross_check else None
    return LaplacianPair(comp, expl, cm, res)


def laplacian2(metric: MetricField2D, grid: Grid, cross_check: bool = True,
               check_tol: float = 1e-4) -> LaplacianPair:
    """Hodge Laplacian d delta on 2-forms; compositional primary + explicit cross-check."""
    comp = _compositional(metric, grid, 2)
    if metric.scale is not None:
        return LaplacianPair(comp, None, None, None)
    expl, cm = _explicit(metric, grid, 2)
    res = _cross_check(comp, expl, metric, grid, check_tol) if cross_check else None
    return LaplacianPair(comp, expl, cm, res)


# -- covariant derivative and the curvature identity --------------------------

def christoffel_fields(metric: MetricField2D, grid: Grid) -> dict:
    """Christoffel symbols of the diagonal metric, from analytic partials."""
    th, zz = grid.mesh()
    ones = np.ones((grid.n_theta, grid.n_z))
    E = metric.partial_g11(0, 0, th, zz) * ones
    Et = metric.partial_g11(1, 0, th, zz) * ones
    Ez = metric.partial_g11(0, 1, th, zz) * ones
    G = metric.partial_g22(0, 0, th, zz) * ones
    Gz = metric.partial_g22(0, 1, th, zz) * ones
    return {
        "111": Et / (2 * E),
        "112": Ez / (2 * E),       # = Gamma^1_{21}
        "211": -Ez / (2 * G),
        "222": Gz / (2 * G),
    }


def covariant_gradient(omega: GridForm, metric: MetricField2D) -> tuple:
    """(nabla omega)_{ij} = d_i omega_j - Gamma^k_{ij} omega_k on the grid."""
    if omega.degree != 1:
        raise UnsupportedShapeError("covariant gradient implemented for 1-forms")
    g = omega.grid
    G = christoffel_fields(metric, g)
    w1, w2 = omega.components
    n11 = g.dtheta(w1) - G["111"] * w1 - G["211"] * w2
    n12 = g.dtheta(w2) - G["112"] * w1
    n21 = g.dz(w1) - G["112"] * w1
    n22 = g.dz(w2) - G["222"] * w2
    return n11, n12, n21, n22


@dataclass(frozen=True)
class BochnerReport:
    grad_energy: float
    dirichlet_energy: float
    curvature_term: float

    @property
    def residual(self) -> float:
        return abs(self.grad_energy - (self.dirichlet_energy - self.curvature_term))


def bochner_residual(omega: GridForm, metric: MetricField2D,
                     support_tol: float = 1e-12) -> BochnerReport:
    """Weitzenboeck-type energy identity for compactly supported 1-forms.

    Returns the three pieces of
        |nabla omega|^2 = |d omega|^2 + |delta omega|^2 - int K |omega|^2 dvol;
    the boundary term vanishes because the support stays away from both ends.
    """
    g = omega.grid
    scale = omega.sup_norm()
    edge = max(np.max(np.abs(np.stack([c[:, :3] for c in omega.components]))),
               np.max(np.abs(np.stack([c[:, -3:] for c in omega.components]))))
    if edge > support_tol * max(scale, 1.0):
        raise DomainError("form support touches the boundary; identity needs compact support")

    th, zz = g.mesh()
    ones = np.ones((g.n_theta, g.n_z))
    E = metric.g11(th, zz) * ones
    Gc = metric.g22(th, zz) * ones
    vol = np.sqrt(E * Gc)

    n11, n12, n21, n22 = covariant_gradient(omega, metric)
    dens = (np.abs(n11) ** 2 / E ** 2 + (np.abs(n12) ** 2 + np.abs(n21) ** 2) / (E * Gc)
            + np.abs(n22) ** 2 / Gc ** 2) * vol
    grad_energy = g.quad(dens).real

    domega = exterior_d(omega)
    delta_omega = codifferential(omega, metric)
    dirichlet = (inner_product(domega, domega, metric).real
                 + inner_product(delta_omega, delta_omega, metric).real)

    from .geometry import gaussian_curvature
    K = gaussian_curvature(metric, th, zz) * ones
    w1, w2 = omega.components
    curv = g.quad(K * (np.abs(w1) ** 2 / E + np.abs(w2) ** 2 / Gc) * vol).real
    return BochnerReport(grad_energy, dirichlet, curv)
