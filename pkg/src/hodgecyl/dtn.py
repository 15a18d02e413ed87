"""Dirichlet-to-Neumann maps for harmonic 0- and 1-forms, mode by mode.

The per-mode block maps Fourier coefficients of the Dirichlet data (f1, f2) =
(t omega, n omega) to the Neumann data (n d omega, t delta omega), with the
trace formulas of boundary normal coordinates at x2 = 0 (the boundary scale
is pinned to G(0) = 1).  For 0-forms the block is the scalar f -> n d omega.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .errors import SpectralGapError, UnsupportedShapeError
from .geometry import MetricField2D
from .modes import (ModeSolution, discrete_spectrum, solve_mode_bvp,
                    weighted_mode_operator, _sl_mode_operator)


def _boundary_data(metric: MetricField2D):
    """Base warped quantities at z = 0 used by the trace formulas."""
    G0 = float(np.asarray(metric.partial_g22(0, 0, 0.0, 0.0)).reshape(()))
    if abs(G0 - 1.0) > 1e-12:
        raise UnsupportedShapeError(
            "boundary traces assume normal coordinates at x2 = 0 (G(0) = 1)")
    a0 = float(np.asarray(metric.partial_base(0, 0, 0.0, 0.0)).reshape(()))
    az0 = float(np.asarray(metric.partial_base(0, 1, 0.0, 0.0)).reshape(()))
    s0 = math.sqrt(a0)
    return dict(s0=s0, r0=1.0 / s0, sz0=az0 / (2.0 * s0))


def _spectral_guard(metric: MetricField2D, degree: int, ks: Iterable[int],
                    Z: float, tol: float = 1e-6) -> None:
    k0 = min(abs(k) for k in ks)
    op = weighted_mode_operator(metric, degree, k0, Z=Z)
    bottom = discrete_spectrum(op, 1, n_z=800)[0]
    if bottom < tol:
        raise SpectralGapError(
            f"mode operator bottom eigenvalue {bottom:.3e} too close to zero "
            f"(degree {degree}, k = {k0}); DtN solve would be unreliable")


@dataclass(frozen=True)
class CauchyData:
    """Boundary 4-tuple (t omega, n omega, n d omega, t delta omega) as Fourier data."""

    degree: int
    t_omega: np.ndarray
    n_omega: np.ndarray
    nd_omega: np.ndarray
    td_omega: np.ndarray


@dataclass(frozen=True)
class DtNMatrix:
    """Mode-indexed DtN blocks with grid/truncation metadata."""

    degree: int
    blocks: dict
    Z: float
    n_z: int
    K_max: int
    metric_name: str = "metric"
    refined: bool = False

    def block(self, k: int) -> np.ndarray:
        return self.blocks[k]

    def apply_mode(self, k: int, f) -> np.ndarray:
        return self.blocks[k] @ np.asarray(f, dtype=complex)

    def max_block_diff(self, other: "DtNMatrix") -> dict:
        ks = sorted(set(self.blocks) & set(other.blocks))
        return {k: float(np.max(np.abs(self.blocks[k] - other.blocks[k]))) for k in ks}

    def to_json(self) -> str:
        items = []
        for k in sorted(self.blocks):
            b = np.atleast_2d(self.blocks[k])
            items.append({"k": int(k),
                          "entries": [[float(v.real), float(v.imag)] for v in b.ravel()]})
        return json.dumps({"degree": self.degree, "Z": self.Z, "n_z": self.n_z,
                           "K_max": self.K_max, "metric": self.metric_name,
                           "blocks": items}, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "DtNMatrix":
        d = json.loads(text)
        blocks = {}
        for item in d["blocks"]:
            flat = np.array([complex(re, im) for re, im in item["entries"]])
            n = int(round(math.sqrt(flat.size)))
            blocks[int(item["k"])] = flat.reshape(n, n)
        return DtNMatrix(d["degree"], blocks, d["Z"], d["n_z"], d["K_max"], d["metric"])


def _neumann_deg1(sol: ModeSolution, bd: dict, k: int) -> np.ndarray:
    """(n d omega, t delta omega) Fourier coefficients of a degree-1 mode solution."""
    w1_0 = sol.components[0][0]
    w2_0 = sol.components[1][0]
    dw1 = sol.boundary_derivative(0)
    dw2 = sol.boundary_derivative(1)
    r0, s0, sz0 = bd["r0"], bd["s0"], bd["sz0"]
    nd = r0 * (1j * k * w2_0 - dw1)
    td = -r0 * (1j * k * r0 * w1_0 + sz0 * w2_0 + s0 * dw2)
    return np.array([nd, td])


def _mode_block_deg1(metric: MetricField2D, k: int, Z: float, n_z: int) -> np.ndarray:
    bd = _boundary_data(metric)
    op = weighted_mode_operator(metric, 1, k, Z=Z)
    cols = []
    for f1, f2 in ((1.0, 0.0), (0.0, 1.0)):
        bc = np.array([f1, -f2 / bd["s0"]], dtype=complex)
        sol = solve_mode_bvp(op, bc, n_z)
        cols.append(_neumann_deg1(sol, bd, k))
    return np.array(cols).T


def _mode_block_deg0(metric: MetricField2D, k: int, Z: float, n_z: int) -> np.ndarray:
    bd = _boundary_data(metric)
    op = weighted_mode_operator(metric, 0, k, Z=Z)
    sol = solve_mode_bvp(op, [1.0], n_z)
    return np.array([[-bd["s0"] * sol.boundary_derivative(0)]])


def _richardson(block_fn, n_z: int):
    coarse = block_fn(n_z)
    fine = block_fn(2 * n_z - 1)
    return (4.0 * fine - coarse) / 3.0


def _dtn0_normal_coordinates(metric: MetricField2D, k: int, Z: float, n_z: int) -> np.ndarray:
    """Independent discretization: re-solve in arc-length normal coordinates.

    The scaled metric F (a dtheta^2 + dz^2) is rewritten as
    g11(ztilde) dtheta^2 + dztilde^2 with dztilde = sqrt(F) dz; the SL solve
    runs on a uniform ztilde grid, so its discretization differs from the
    direct one while converging to the same map.
    """
    zf = np.linspace(0.0, Z, 8193)
    sqrtG = np.sqrt(metric.partial_g22(0, 0, 0.0, zf))
    zt = cumulative_simpson(sqrtG, x=zf, initial=0.0)
    z_of_zt = CubicSpline(zt, zf)
    Zt = float(zt[-1])

    def afun(ztilde):
        zz = z_of_zt(np.clip(ztilde, 0.0, Zt))
        return metric.partial_g11(0, 0, 0.0, zz)

    op = _sl_mode_operator(afun, k, Zt)
    sol = solve_mode_bvp(op, [1.0], n_z)
    s0 = math.sqrt(float(afun(0.0)))
    return np.array([[-s0 * sol.boundary_derivative(0)]])


def dtn0(metric: MetricField2D, K_max: int, Z: float | None = None, n_z: int = 801,
         refine: bool = False, check: bool = True,
         discretization: str = "direct", ks: Iterable[int] | None = None) -> DtNMatrix:
    """DtN blocks f -> n d omega for harmonic 0-forms, modes |k| <= K_max."""
    ZZ = Z or metric.domain_length
    kl = sorted(ks) if ks is not None else list(range(-K_max, K_max + 1))
    if check:
        _spectral_guard(metric, 0, kl, ZZ)
    if discretization not in ("direct", "normal-coords"):
        raise UnsupportedShapeError(f"unknown discretization '{discretization}'")
    blocks = {}
    for k in kl:
        if discretization == "normal-coords":
            fn = lambda n, k=k: _dtn0_normal_coordinates(metric, k, ZZ, n)
        else:
            fn = lambda n, k=k: _mode_block_deg0(metric, k, ZZ, n)
        blocks[k] = _richardson(fn, n_z) if refine else fn(n_z)
    return DtNMatrix(0, blocks, ZZ, n_z, max(abs(k) for k in kl), metric.name, refine)


def dtn1(metric: MetricField2D, K_max: int, Z: float | None = None, n_z: int = 801,
         refine: bool = False, check: bool = True,
         ks: Iterable[int] | None = None) -> DtNMatrix:
    """DtN blocks (f1, f2) -> (n d omega, t delta omega) for harmonic 1-forms."""
    ZZ = Z or metric.domain_length
    kl = sorted(ks) if ks is not None else list(range(-K_max, K_max + 1))
    if check:
        _spectral_guard(metric, 1, kl, ZZ)
    blocks = {}
    for k in kl:
        fn = lambda n, k=k: _mode_block_deg1(metric, k, ZZ, n)
        blocks[k] = _richardson(fn, n_z) if refine else fn(n_z)
    return DtNMatrix(1, blocks, ZZ, n_z, max(abs(k) for k in kl), metric.name, refine)


def nd_delta_variant(metric: MetricField2D, K_max: int) -> dict:
    """The alternative Neumann entry n(delta omega) for 1-forms.

    In two dimensions delta omega is a 0-form, so its normal trace is the
    pullback of a 2-form to the 1-dimensional boundary circle: identically
    zero.  Exposed for completeness next to the (n d, t delta) convention.
    """
    return {k: 0.0 for k in range(-K_max, K_max + 1)}


def a11_from_dtn(dtn: DtNMatrix, metric: MetricField2D) -> dict:
    """lambda(k) = d_z omega_1(0) for solutions with (f1, f2) = (e^{ik theta}, 0).

    Extracted from the DtN blocks: nd omega = -sqrt(g^11(0)) lambda(k) when
    n omega = 0, so lambda(k) = -B_k[0,0] / sqrt(g^11(0)).
    """
    if dtn.degree != 1:
        raise UnsupportedShapeError("a11 extraction needs a degree-1 DtN matrix")
    bd = _boundary_data(metric)
    return {k: complex(-dtn.blocks[k][0, 0] / bd["r0"]) for k in dtn.blocks}


@dataclass(frozen=True)
class CompareReport:
    degree: int
    metric_a: str
    metric_b: str
    per_mode_gap: dict
    max_gap: float
    tolerance: float
    verdict: str
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "degree": self.degree, "metric_a": self.metric_a, "metric_b": self.metric_b,
            "per_mode_gap": {str(k): v for k, v in sorted(self.per_mode_gap.items())},
            "max_gap": self.max_gap, "tolerance": self.tolerance,
            "verdict": self.verdict, "metadata": self.metadata}, indent=2, sort_keys=True)


def cauchy_compare(metric_a: MetricField2D, metric_b: MetricField2D, degree: int,
                   K_max: int, Z: float | None = None, n_z: int = 801,
                   tol: float = 1e-10, refine: bool = False) -> CompareReport:
    """Head-to-head comparison of the Cauchy data of two metrics.

    The verdict is 'indistinguishable' when every per-mode block difference is
    below ``tol`` and 'distinguished' otherwise.  Both metrics are solved on
    identical grids so the comparison is like-for-like.
    """
    Za = Z or metric_a.domain_length
    Zb = Z or metric_b.domain_length
    if abs(Za - Zb) > 0:
        raise UnsupportedShapeError("metrics must be compared on identical domains")
    builder = dtn1 if degree == 1 else dtn0
    if degree not in (0, 1):
        raise UnsupportedShapeError("comparison supports degrees 0 and 1")
    A = builder(metric_a, K_max, Z=Za, n_z=n_z, refine=refine)
    B = builder(metric_b, K_max, Z=Za, n_z=n_z, refine=refine)
    gaps = A.max_block_diff(B)
    max_gap = max(gaps.values())
    verdict = "indistinguishable" if max_gap < tol else "distinguished"
    return CompareReport(degree, metric_a.name, metric_b.name, gaps, max_gap, tol,
                         verdict, {"Z": Za, "n_z": n_z, "K_max": K_max, "refined": refine})
