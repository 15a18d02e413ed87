"""Homogeneous matrix symbols of the first-order factorization operator.

The 1-form Hodge Laplacian in boundary normal coordinates factors as
(D_{x2} I + iE - iA)(D_{x2} I + iA) modulo smoothing, where the full symbol
of A is a sum of terms a_j homogeneous of degree j <= 1 in the tangential
frequency.  The forward recursion computes a_1, a_0, a_{-1}, ... from jets
of the metric; the inverse layer stripping recovers normal jets of the
metric at the boundary from the (1,1) entries of the a_j.

Symbols are represented with split parity: each entry holds an even part
(multiplying |xi|^j) and an odd part (multiplying sgn(xi) |xi|^j), with
coefficients stored as truncated 2D Taylor jets at a boundary point.  Jet
shapes shrink under differentiation, so running out of derivative data is
detected rather than silently truncated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._series import series_reciprocal
from .errors import DomainError, JetDepthError, UnsupportedShapeError
from .geometry import MetricField2D

TWO_PI = 2.0 * math.pi


class Jet2:
    """Truncated 2D Taylor polynomial sum c[a,b] x1^a x2^b at a base point.

    Binary operations intersect shapes; derivatives shrink the corresponding
    axis, which is how remaining validity is tracked.
    """

    __slots__ = ("c",)

    def __init__(self, c: np.ndarray):
        self.c = np.asarray(c, dtype=complex)

    @staticmethod
    def const(value: complex, shape: tuple[int, int]) -> "Jet2":
        c = np.zeros(shape, dtype=complex)
        if shape[0] == 0 or shape[1] == 0:
            raise JetDepthError("empty jet")
        c[0, 0] = value
        return Jet2(c)

    @property
    def shape(self):
        return self.c.shape

    def _common(self, other: "Jet2"):
        n1 = min(self.c.shape[0], other.c.shape[0])
        n2 = min(self.c.shape[1], other.c.shape[1])
        if n1 == 0 or n2 == 0:
            raise JetDepthError("jet depth exhausted in arithmetic")
        return n1, n2

    def __add__(self, other):
        if isinstance(other, Jet2):
            n1, n2 = self._common(other)
            return Jet2(self.c[:n1, :n2] + other.c[:n1, :n2])
        out = self.c.copy()
        out[0, 0] += other
        return Jet2(out)

    def __sub__(self, other):
        return self + (other * -1.0 if isinstance(other, Jet2) else -other)

    def __mul__(self, other):
        if isinstance(other, Jet2):
            n1, n2 = self._common(other)
            out = np.zeros((n1, n2), dtype=complex)
            for a in range(n1):
                for b in range(n2):
                    out[a, b] = np.sum(self.c[:a + 1, :b + 1]
                                       * other.c[a::-1, b::-1])
            return Jet2(out)
        return Jet2(self.c * other)

    __rmul__ = __mul__

    def __neg__(self):
        return Jet2(-self.c)

    def dtheta(self) -> "Jet2":
        if self.c.shape[0] < 2:
            raise JetDepthError("x1-jet depth exhausted")
        a = np.arange(1, self.c.shape[0])
        return Jet2(self.c[1:, :] * a[:, None])

    def dz(self) -> "Jet2":
        if self.c.shape[1] < 2:
            raise JetDepthError("x2-jet depth exhausted")
        b = np.arange(1, self.c.shape[1])
        return Jet2(self.c[:, 1:] * b[None, :])

    def reciprocal(self) -> "Jet2":
        if self.c[0, 0] == 0:
            raise DomainError("jet reciprocal at a zero")
        out = Jet2.const(1.0 / self.c[0, 0], self.c.shape)
        n = max(self.c.shape)
        for _ in range(int(math.ceil(math.log2(n))) + 1 if n > 1 else 0):
            out = out * (Jet2.const(2.0, self.c.shape) - self * out)
        return out

    def sqrt(self) -> "Jet2":
        v = np.sqrt(self.c[0, 0])
        if v == 0:
            raise DomainError("jet sqrt at a zero")
        out = Jet2.const(v, self.c.shape)
        n = max(self.c.shape)
        for _ in range(int(math.ceil(math.log2(n))) + 1 if n > 1 else 0):
            out = (out + self * out.reciprocal()) * 0.5
        return out

    @property
    def value(self) -> complex:
        if self.c.shape[0] == 0 or self.c.shape[1] == 0:
            raise JetDepthError("jet depth exhausted at evaluation")
        return complex(self.c[0, 0])

    def eval_z(self, x2: float) -> complex:
        """Taylor evaluation along x2 at x1 = base point."""
        pw = x2 ** np.arange(self.c.shape[1])
        return complex(self.c[0] @ pw)


def _jmat(entries) -> list:
    return [[entries[0][0], entries[0][1]], [entries[1][0], entries[1][1]]]


def _mat_add(A, B):
    return [[A[i][j] + B[i][j] for j in range(2)] for i in range(2)]


def _mat_neg(A):
    return [[-A[i][j] for j in range(2)] for i in range(2)]


def _mat_mul(A, B):
    return [[A[i][0] * B[0][j] + A[i][1] * B[1][j] for j in range(2)] for i in range(2)]


def _mat_scale(A, s):
    return [[A[i][j] * s for j in range(2)] for i in range(2)]


def _mat_map(A, fn):
    return [[fn(A[i][j]) for j in range(2)] for i in range(2)]


@dataclass
class HomSymbol:
    """2x2 matrix symbol homogeneous of degree ``order`` in xi_1.

    Entry (i,j) equals even[i][j] |xi|^order + odd[i][j] sgn(xi) |xi|^order,
    with jet-valued coefficients over (x1, x2) at the base point.
    """

    order: int
    even: list
    odd: list

    def __add__(self, other: "HomSymbol") -> "HomSymbol":
        if self.order != other.order:
            raise UnsupportedShapeError("cannot add symbols of different homogeneity")
        return HomSymbol(self.order, _mat_add(self.even, other.even),
                         _mat_add(self.odd, other.odd))

    def __sub__(self, other: "HomSymbol") -> "HomSymbol":
        return self + HomSymbol(other.order, _mat_neg(other.even), _mat_neg(other.odd))

    def __mul__(self, scalar) -> "HomSymbol":
        return HomSymbol(self.order, _mat_scale(self.even, scalar),
                         _mat_scale(self.odd, scalar))

    __rmul__ = __mul__

    def matmul(self, other: "HomSymbol") -> "HomSymbol":
        ee = _mat_mul(self.even, other.even)
        oo = _mat_mul(self.odd, other.odd)
        eo = _mat_mul(self.even, other.odd)
        oe = _mat_mul(self.odd, other.even)
        return HomSymbol(self.order + other.order, _mat_add(ee, oo), _mat_add(eo, oe))

    def dxi(self) -> "HomSymbol":
        j = self.order
        return HomSymbol(j - 1, _mat_scale(self.odd, float(j)), _mat_scale(self.even, float(j)))

    def Dx1(self) -> "HomSymbol":
        fn = lambda jet: jet.dtheta() * (-1j)
        return HomSymbol(self.order, _mat_map(self.even, fn), _mat_map(self.odd, fn))

    def dz(self) -> "HomSymbol":
        fn = lambda jet: jet.dz()
        return HomSymbol(self.order, _mat_map(self.even, fn), _mat_map(self.odd, fn))

    def coeff_mul(self, M: list) -> "HomSymbol":
        """Left-multiply by a plain (xi-free) jet matrix."""
        return HomSymbol(self.order, _mat_mul(M, self.even), _mat_mul(M, self.odd))

    def scalar_mul(self, jet: Jet2, order_shift: int = 0) -> "HomSymbol":
        return HomSymbol(self.order + order_shift,
                         _mat_map(self.even, lambda e: e * jet),
                         _mat_map(self.odd, lambda e: e * jet))

    def entry(self, i: int, j: int, xi: float, x2: float = 0.0) -> complex:
        mag = abs(xi) ** self.order
        sgn = 1.0 if xi > 0 else -1.0
        return (self.even[i][j].eval_z(x2) + sgn * self.odd[i][j].eval_z(x2)) * mag

    def max_abs(self) -> float:
        vals = []
        for i in range(2):
            for j in range(2):
                vals += [abs(self.even[i][j].value), abs(self.odd[i][j].value)]
        return max(vals)


def _zero_sym(order: int, shape) -> HomSymbol:
    z = lambda: Jet2.const(0.0, shape)
    return HomSymbol(order, _jmat([[z(), z()], [z(), z()]]), _jmat([[z(), z()], [z(), z()]]))


def _efq_jets(b: Jet2):
    """Jet matrices E, F, Q of the explicit coordinate form, from b = g^{11}."""
    binv = b.reciprocal()
    bt, bz = b.dtheta(), b.dz()
    half_dlogb_z = bz * binv * 0.5
    zero = Jet2.const(0.0, b.shape)
    E = _jmat([[-(bz * binv) * 0.5, zero], [zero, (bz * binv) * 0.5]])
    F = _jmat([[bt * -1.5, bz * binv], [-bz, bt * -0.5]])
    Q = _jmat([[b.dtheta().dtheta() * -0.5, half_dlogb_z.dtheta()],
               [bz.dtheta() * -0.5, half_dlogb_z.dz()]])
    return E, F, Q


@dataclass
class SymbolStack:
    """Symbols a_1 .. a_{-m_max} of the factorization operator at one boundary point."""

    symbols: dict
    m_max: int
    theta0: float
    metric_name: str = "metric"
    _efq: tuple = field(default=None, repr=False)
    _b: Jet2 = field(default=None, repr=False)

    def order_range(self):
        return range(1, -self.m_max - 1, -1)

    def entry_11(self, order: int, xi: float = 1.0) -> complex:
        return self.symbols[order].entry(0, 0, xi)

    def entry_11_parts(self, order: int) -> tuple[complex, complex]:
        s = self.symbols[order]
        return s.even[0][0].value, s.odd[0][0].value

    def predict_a11(self, k: float) -> complex:
        """Sum of the computed homogeneous (1,1) entries at frequency k."""
        return sum(self.symbols[j].entry(0, 0, k) for j in self.order_range())

    def to_json(self, xi_values: Sequence[float] = (1.0, -1.0),
                x2_values: Sequence[float] = (0.0,)) -> str:
        out = []
        for j in self.order_range():
            entries = []
            for i in range(2):
                for jj in range(2):
                    for xi in xi_values:
                        for x2 in x2_values:
                            v = self.symbols[j].entry(i, jj, xi, x2)
                            entries.append({"i": i, "j": jj, "xi": xi, "x2": x2,
                                            "re": v.real, "im": v.imag})
            out.append({"order": j, "entries": entries})
        return json.dumps({"theta0": self.theta0, "metric": self.metric_name,
                           "orders": out}, indent=2, sort_keys=True)


def _forward_from_jet(g11_jet: np.ndarray, m_max: int, theta0: float = 0.0,
                      metric_name: str = "metric") -> SymbolStack:
    g = Jet2(g11_jet)
    b = g.reciprocal()
    rt = b.sqrt()
    E, F, Q = _efq_jets(b)
    shape = g.shape
    zero = lambda: Jet2.const(0.0, shape)

    a1 = _zero_sym(1, shape)
    a1.even[0][0] = -rt
    a1.even[1][1] = -rt
    syms = {1: a1}

    inv2a1 = (rt * (-2.0)).reciprocal()  # even scalar jet of 1/(2 a_1), order -1

    for l in range(1, -m_max, -1):
        # composition terms at homogeneity l from already-known symbols
        sigma = _zero_sym(l, shape)
        for j in range(l, 2):
            for k2 in range(l, 2):
                alpha = j + k2 - l
                if alpha < 0:
                    continue
                left = syms[j]
                right = syms[k2]
                for _ in range(alpha):
                    left = left.dxi()
                    right = right.Dx1()
                sigma = sigma + left.matmul(right) * (1.0 / math.factorial(alpha))
        rhs = syms[l].coeff_mul(E) - syms[l].dz() - sigma
        if l == 1:
            iF = HomSymbol(1, _mat_map(F, lambda j_: j_ * 0.0), _mat_map(F, lambda j_: j_ * 1j))
            rhs = rhs + iF
        elif l == 0:
            Qs = HomSymbol(0, Q, _mat_map(Q, lambda j_: j_ * 0.0))
            rhs = rhs + Qs
        syms[l - 1] = rhs.scalar_mul(inv2a1, order_shift=-1)

    stack = SymbolStack(syms, m_max, theta0, metric_name)
    stack._efq = (E, F, Q)
    stack._b = b
    return stack


def _required_depth(m_max: int) -> int:
    # E, F, Q consume two derivatives, each descent one d_z, and the
    # factorization-residual check needs up to m_max + 1 extra tangential
    # derivatives in its high-alpha composition terms
    return 2 * m_max + 6


def forward_symbols(metric: MetricField2D, m_max: int, theta0: float = 0.0) -> SymbolStack:
    """Forward factorization recursion: symbols a_1 down to a_{-m_max}.

    Metric partials to order ``m_max + 5`` in each variable are required;
    insufficient analytic depth raises JetDepthError up front.
    """
    nd = _required_depth(m_max)
    jet = metric.jet(theta0, nd, nd)
    return _forward_from_jet(jet, m_max, theta0, metric.name)


def factorization_residual(stack: SymbolStack) -> dict:
    """Residual of the symbol-level factorization identity, by homogeneity.

    Composes sum a_j with itself, adds the commutator and E terms, and
    subtracts the full symbol of the Laplacian; degrees >= 1 - m_max must
    vanish, lower degrees form the uncontrolled remainder.
    """
    E, F, Q = stack._efq
    b = stack._b
    shape = b.shape
    syms = stack.symbols
    out = {}
    for l in range(2, -stack.m_max, -1):
        total = _zero_sym(l, shape)
        for j in stack.order_range():
            for k2 in stack.order_range():
                alpha = j + k2 - l
                if alpha < 0:
                    continue
                left, right = syms[j], syms[k2]
                ok = True
                try:
                    for _ in range(alpha):
                        left = left.dxi()
                        right = right.Dx1()
                    term = left.matmul(right) * (1.0 / math.factorial(alpha))
                except JetDepthError:
                    ok = False
                if ok:
                    total = total + term
        if l in syms:
            total = total + syms[l].dz() - syms[l].coeff_mul(E)
        if l == 2:
            g2 = _zero_sym(2, shape)
            g2.even[0][0] = b
            g2.even[1][1] = b
            total = total - g2
        elif l == 1:
            iF = HomSymbol(1, _mat_map(F, lambda j_: j_ * 0.0), _mat_map(F, lambda j_: j_ * 1j))
            total = total - iF
        elif l == 0:
            total = total - HomSymbol(0, Q, _mat_map(Q, lambda j_: j_ * 0.0))
        out[l] = total.max_abs()
    return out


# -- measurement + layer stripping -------------------------------------------

@dataclass(frozen=True)
class MeasuredA11:
    """(1,1) entries of the symbol stack at x2 = 0 over boundary sample angles."""

    thetas: np.ndarray
    orders: tuple
    even: dict   # order -> array over thetas
    odd: dict

    @property
    def m_max(self) -> int:
        return -min(self.orders)


def measure_symbol_11(metric: MetricField2D, m_max: int, n_theta: int = 8) -> MeasuredA11:
    """Run the forward recursion at boundary samples and record the A_11 data."""
    thetas = TWO_PI * np.arange(n_theta) / n_theta
    orders = tuple(range(1, -m_max - 1, -1))
    even = {j: np.zeros(n_theta, dtype=complex) for j in orders}
    odd = {j: np.zeros(n_theta, dtype=complex) for j in orders}
    for i, th in enumerate(thetas):
        st = forward_symbols(metric, m_max, theta0=float(th))
        for j in orders:
            e, o = st.entry_11_parts(j)
            even[j][i] = e
            odd[j][i] = o
    return MeasuredA11(thetas, orders, even, odd)


def boundary_metric_from_principal(measured: MeasuredA11) -> np.ndarray:
    """g11 along the boundary from the principal symbol -sqrt(g^11) |xi|."""
    a1 = measured.even[1]
    if np.max(np.abs(measured.odd[1])) > 1e-12 * max(np.max(np.abs(a1)), 1.0):
        raise UnsupportedShapeError("principal symbol must be even in xi")
    g11_inv = np.real(a1) ** 2
    if np.any(g11_inv <= 0):
        raise DomainError("principal symbol vanishes; metric not recoverable")
    return 1.0 / g11_inv


@dataclass(frozen=True)
class JetEstimate:
    """Recovered boundary jets of g^11 (and g11) with per-level residuals."""

    thetas: np.ndarray
    g11_inv_jets: tuple     # arrays over thetas, levels 0..m_max+1
    g11_jets: tuple
    residuals: tuple        # per recovered level: max odd/parasitic mismatch

    def level(self, l: int) -> np.ndarray:
        return self.g11_inv_jets[l]

    def mean_g11_level(self, l: int) -> complex:
        return complex(np.mean(self.g11_jets[l]))


def _partial_jet(fourier_jets: list, theta: float, shape: tuple[int, int]) -> np.ndarray:
    """2D Taylor coefficients at (theta, 0) of the truncated g^11 series."""
    n1, n2 = shape
    n = fourier_jets[0].size
    kk = np.fft.fftfreq(n, d=1.0 / n)
    c = np.zeros((n1, n2), dtype=complex)
    for b, jb in enumerate(fourier_jets):
        if b >= n2:
            break
        for a in range(n1):
            val = np.sum((1j * kk) ** a * jb * np.exp(1j * kk * theta))
            c[a, b] = val / (math.factorial(a) * math.factorial(b))
    return c


def recover_jets(measured: MeasuredA11, g11_boundary: np.ndarray, m_max: int) -> JetEstimate:
    """Layer stripping: recover d^l_z g^11(x1, 0) for l = 1 .. m_max + 1.

    At level l the forward recursion is re-run on the partially known metric
    (known jets below l, zero above); the measured-minus-predicted (1,1)
    entry of order 1 - l isolates the level-l jet through the linear relation
    with prefactor -1/(2 sqrt(g^11) |xi|)^{l-1} / (2 g^11).
    """
    if m_max + 1 > measured.m_max + 1:
        raise UnsupportedShapeError("measured symbols are too shallow for m_max")
    thetas = measured.thetas
    n = thetas.size
    ginv0 = 1.0 / np.asarray(g11_boundary, dtype=complex)
    jets = [ginv0]
    residuals = []
    nd = _required_depth(m_max)
    for l in range(1, m_max + 2):
        fourier = [np.fft.fft(j) / n for j in jets]
        diff_e = np.zeros(n, dtype=complex)
        diff_o = np.zeros(n, dtype=complex)
        for i, th in enumerate(thetas):
            cginv = _partial_jet(fourier, float(th), (nd, nd))
            g11jet = Jet2(cginv).reciprocal().c
            st = _forward_from_jet(g11jet, l - 1 if l - 1 >= 0 else 0, float(th))
            e, o = st.entry_11_parts(1 - l)
            diff_e[i] = measured.even[1 - l][i] - e
            diff_o[i] = measured.odd[1 - l][i] - o
        pref = (2.0 * np.sqrt(ginv0)) ** (l - 1) * 2.0 * ginv0
        jets.append(-diff_e * pref)
        residuals.append(float(np.max(np.abs(diff_o))))
    g11_jets = _invert_jet_table(jets)
    return JetEstimate(thetas, tuple(jets), tuple(g11_jets), tuple(residuals))


def _invert_jet_table(jets: list) -> list:
    """Normal derivatives of 1/f from normal derivatives of f, per theta sample."""
    L = len(jets)
    derivs = np.stack(jets)                      # (levels, thetas)
    fact = np.array([math.factorial(m) for m in range(L)], dtype=float)
    coeff = derivs / fact[:, None]
    inv = series_reciprocal(coeff)
    return list(inv * fact[:, None])


# -- numeric fit from DtN data -------------------------------------------------

@dataclass(frozen=True)
class SymbolFit:
    coeffs: dict
    residual: float
    cond: float
    orders: tuple

    def coeff(self, order: int) -> complex:
        return self.coeffs[order]


def fit_symbol_from_dtn(lambda_map: Mapping[int, complex],
                        orders: Iterable[int] = (1, 0, -1),
                        weight: str = "k") -> SymbolFit:
    """Least-squares fit lambda(k) ~ sum_j c_j |k|^j over the sampled modes.

    c_1 estimates the principal coefficient -sqrt(g^11(0)), c_0 the
    subprincipal a_{0,11}(0), and so on.  k = 0 must be excluded (the
    homogeneous calculus degenerates at xi_1 = 0).
    """
    orders = tuple(orders)
    ks = sorted(lambda_map)
    if 0 in ks:
        raise DomainError("k = 0 must be excluded from symbol fits")
    if len(ks) < len(orders):
        raise DomainError("fewer samples than fit coefficients")
    kk = np.array([abs(k) for k in ks], dtype=float)
    y = np.array([lambda_map[k] for k in ks], dtype=complex)
    M = np.stack([kk ** j for j in orders], axis=1)
    w = kk if weight == "k" else np.ones_like(kk)
    sol, *_ = np.linalg.lstsq(M * w[:, None], y * w, rcond=None)
    resid = float(np.max(np.abs(M @ sol - y)))
    cond = float(np.linalg.cond(M * w[:, None]))
    return SymbolFit({j: complex(c) for j, c in zip(orders, sol)}, resid, cond, orders)
