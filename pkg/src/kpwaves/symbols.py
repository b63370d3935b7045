"""Exact rational symbol algebra for the anisotropic convolution kernels.

The kernels handled by this package have Fourier multipliers of the form
P(xi) / (|xi|^2 + xi_1^4)^q with a sparse polynomial numerator P.  This
module keeps the numerators exact (Fraction coefficients keyed by
exponent vectors) so that repeated differentiation stays loss-free; the
coefficients grow combinatorially with the derivative order and would be
corrupted by floating point long before the orders we need.

The composed Riesz multiplier xi_1^2/|xi|^2 is supported through the same
machinery via an alternative denominator base.
"""

import json
import threading
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .accel import rational_eval

# Denominator bases: the anisotropic KP base |xi|^2 + xi_1^4 and the
# isotropic Riesz base |xi|^2.
DENOM_KP = "kp"
DENOM_RIESZ = "riesz"


class SingularPointError(ValueError):
    """Raised when a symbol is evaluated at the origin."""


class MultiIndexPoly:
    """Sparse polynomial in N variables with exact rational coefficients.

    Terms map exponent tuples to nonzero Fraction coefficients.  Instances
    are immutable; arithmetic returns new objects.
    """

    __slots__ = ("dim", "terms", "_arrays")

    def __init__(self, dim, terms=None):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = int(dim)
        clean = {}
        for exps, c in (terms or {}).items():
            c = Fraction(c)
            if c == 0:
                continue
            exps = tuple(int(e) for e in exps)
            if len(exps) != dim or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent vector {exps!r} for dim {dim}")
            clean[exps] = c
        # lexicographic order keeps printing/serialization reproducible
        self.terms = dict(sorted(clean.items()))
        self._arrays = None

    @classmethod
    def monomial(cls, dim, exps, coeff=1):
        return cls(dim, {tuple(exps): Fraction(coeff)})

    @classmethod
    def zero(cls, dim):
        return cls(dim, {})

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return isinstance(other, MultiIndexPoly) and self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        return hash((self.dim, tuple(self.terms.items())))

    def __add__(self, other):
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, Fraction(0)) + c
        return MultiIndexPoly(self.dim, terms)

    def __mul__(self, other):
        if isinstance(other, MultiIndexPoly):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            terms = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    terms[e] = terms.get(e, Fraction(0)) + c1 * c2
            return MultiIndexPoly(self.dim, terms)
        return MultiIndexPoly(self.dim, {e: c * Fraction(other) for e, c in self.terms.items()})

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1) * other

    def diff(self, axis):
        """Partial derivative along ``axis`` (0-based)."""
        terms = {}
        for e, c in self.terms.items():
            if e[axis] == 0:
                continue
            ne = list(e)
            ne[axis] -= 1
            terms[tuple(ne)] = terms.get(tuple(ne), Fraction(0)) + c * e[axis]
        return MultiIndexPoly(self.dim, terms)

    def degree(self):
        return max((sum(e) for e in self.terms), default=-1)

    def min_degree(self):
        return min((sum(e) for e in self.terms), default=-1)

    def eval_exact(self, point):
        """Exact evaluation at a point of Fractions/ints."""
        total = Fraction(0)
        for e, c in self.terms.items():
            t = c
            for x, k in zip(point, e):
                t *= Fraction(x) ** k
            total += t
        return total

    def arrays(self):
        """(exps, coeffs) float64/int64 arrays for batch evaluation."""
        if self._arrays is None:
            if self.terms:
                exps = np.array(list(self.terms), dtype=np.int64)
                coeffs = np.array([float(c) for c in self.terms.values()])
            else:
                exps = np.zeros((0, self.dim), dtype=np.int64)
                coeffs = np.zeros(0)
            self._arrays = (exps, coeffs)
        return self._arrays

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms.items():
            mono = "*".join(f"xi{a + 1}^{k}" for a, k in enumerate(e) if k)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def denominator_poly(dim, base=DENOM_KP):
    """The denominator base polynomial: |xi|^2 + xi_1^4, or |xi|^2."""
    terms = {}
    for a in range(dim):
        e = [0] * dim
        e[a] = 2
        terms[tuple(e)] = Fraction(1)
    if base == DENOM_KP:
        e = [0] * dim
        e[0] = 4
        terms[tuple(e)] = Fraction(1)
    elif base != DENOM_RIESZ:
        raise ValueError(f"unknown denominator base {base!r}")
    return MultiIndexPoly(dim, terms)


@dataclass(frozen=True)
class KernelSymbol:
    """A rational Fourier symbol P(xi)/(|xi|^2 + xi_1^4)^q.

    ``denom_base`` selects the anisotropic default or the isotropic
    |xi|^2 used by the composed Riesz multiplier.
    """

    numerator: MultiIndexPoly
    denom_power: int
    dim: int
    denom_base: str = DENOM_KP

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("symbols are defined for dimension N >= 2")
        if self.denom_power < 1:
            raise ValueError("denominator power must be >= 1")
        if self.numerator.dim != self.dim:
            raise ValueError("numerator dimension mismatch")

    @property
    def denominator(self):
        return denominator_poly(self.dim, self.denom_base)

    def eval_exact(self, point):
        """Exact rational value at a nonzero rational point."""
        if all(Fraction(x) == 0 for x in point):
            raise SingularPointError("symbol is undefined at the origin")
        den = self.denominator.eval_exact(point)
        return self.numerator.eval_exact(point) / den**self.denom_power

    def eval(self, points, out=None):
        """Float evaluation at one point or a (K, N) batch of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] != self.dim:
            raise ValueError("point dimension mismatch")
        if np.any(np.all(pts == 0.0, axis=1)):
            raise SingularPointError("symbol is undefined at the origin")
        nexps, ncoeffs = self.numerator.arrays()
        dexps, dcoeffs = self.denominator.arrays()
        vals = rational_eval(nexps, ncoeffs, dexps, dcoeffs, self.denom_power, pts, out)
        if np.ndim(points) == 1:
            return float(vals[0])
        return vals

    def parity(self):
        """Total numerator degree parity: 0 -> real kernel, 1 -> i * real."""
        degs = {sum(e) % 2 for e in self.numerator.terms}
        if len(degs) > 1:
            raise ValueError("mixed-parity numerator")
        return degs.pop() if degs else 0

    def axis_parities(self):
        """Per-axis exponent parity, or None when mixed along an axis."""
        out = []
        for a in range(self.dim):
            par = {e[a] % 2 for e in self.numerator.terms}
            out.append(par.pop() if len(par) == 1 else None)
        return out

    def to_json(self):
        doc = {
            "dim": self.dim,
            "denom_power": self.denom_power,
            "terms": [
                {"exps": list(e), "num": str(c.numerator), "den": str(c.denominator)}
                for e, c in self.numerator.terms.items()
            ],
        }
        if self.denom_base != DENOM_KP:
            doc["denom_base"] = self.denom_base
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        dim = int(doc["dim"])
        terms = {
            tuple(t["exps"]): Fraction(int(t["num"]), int(t["den"]))
            for t in doc["terms"]
        }
        return cls(
            numerator=MultiIndexPoly(dim, terms),
            denom_power=int(doc["denom_power"]),
            dim=dim,
            denom_base=doc.get("denom_base", DENOM_KP),
        )


def monomial_symbol(dim, d, denom_base=DENOM_KP):
    """Base symbol prod_j xi_j^{d_j} / (|xi|^2 + xi_1^4).

    The named kernels are d=(1,0,...) for H0, d=(2,0,...) for K0, and K0's
    exponents with d_k incremented for K_k.
    """
    if dim < 2:
        raise ValueError("dimension must be >= 2")
    d = tuple(int(x) for x in d)
    if len(d) != dim:
        raise ValueError("exponent vector length must equal dim")
    if any(x < 0 for x in d):
        raise ValueError("exponents must be non-negative")
    return KernelSymbol(
        numerator=MultiIndexPoly.monomial(dim, d),
        denom_power=1,
        dim=dim,
        denom_base=denom_base,
    )


def h0_symbol(dim):
    return monomial_symbol(dim, (1,) + (0,) * (dim - 1))


def k0_symbol(dim):
    return monomial_symbol(dim, (2,) + (0,) * (dim - 1))


def kk_symbol(dim, k):
    """K_k multiplier xi_k * xi_1^2 / (|xi|^2 + xi_1^4), k in 1..N."""
    if not 1 <= k <= dim:
        raise ValueError("axis out of range")
    d = [0] * dim
    d[0] = 2
    d[k - 1] += 1
    return monomial_symbol(dim, d)


def riesz11_symbol(dim):
    """Composed Riesz multiplier xi_1^2 / |xi|^2."""
    return monomial_symbol(dim, (2,) + (0,) * (dim - 1), denom_base=DENOM_RIESZ)


class DerivativeTable:
    """Cache of the pure partial derivatives of a base symbol.

    Entry (j, p) is d^p/dxi_j^p of the base, stored as
    P_{j,p}/(denom)^{p+1} where P is produced by the exact recursion

        P_{j,p+1} = D * dP_{j,p}/dxi_j - 2(p+1) * (dD/dxi_j / 2) ... i.e.
        P_{j,p+1} = D * dP/dxi_j - (p+1) * dD/dxi_j * P,

    with D the denominator base.  For D = |xi|^2 + xi_1^4 this is the
    recursion P_{j,p+1} = D dP - 2(p+1)(xi_j + 2 delta_{j1} xi_1^3) P.
    Thread-safe; entries are immutable once created.
    """

    def __init__(self, base):
        self.base = base
        self._entries = {}
        self._lock = threading.Lock()
        ddiffs = [base.denominator.diff(a) for a in range(base.dim)]
        self._ddiffs = ddiffs

    def derivative(self, axis, order):
        """d^order/dxi_axis^order of the base symbol; axis is 1-based."""
        if not 1 <= axis <= self.base.dim:
            raise ValueError("axis out of range")
        if order < 0:
            raise ValueError("order must be >= 0")
        if order == 0:
            return self.base
        key = (axis, order)
        with self._lock:
            if key in self._entries:
                return self._entries[key]
        prev = self.derivative(axis, order - 1)
        a = axis - 1
        dterm = prev.numerator.diff(a) * self.base.denominator
        lower = prev.denom_power * self._ddiffs[a] * prev.numerator
        sym = KernelSymbol(
            numerator=dterm - lower,
            denom_power=prev.denom_power + 1,
            dim=self.base.dim,
            denom_base=self.base.denom_base,
        )
        with self._lock:
            self._entries.setdefault(key, sym)
            return self._entries[key]


def derive_symbol(table, axis, order):
    """The derivative symbol d^order/dxi_axis^order from a table."""
    return table.derivative(axis, order)


def eval_symbol(symbol, xi):
    """Float value of the symbol at a nonzero point."""
    return symbol.eval(np.asarray(xi, dtype=np.float64))


@dataclass(frozen=True)
class ExponentRecord:
    """Predicted singularity/integrability exponents of a derivative symbol.

    ``origin_exponent``: the derivative blows up at most like
    |xi|^{-origin_exponent} near 0.  ``lq_threshold``: the derivative is
    in L^q outside the unit ball for q strictly above this value.
    ``bounded``: whether it is bounded outside the unit ball.
    """

    origin_exponent: int
    lq_threshold: Fraction
    bounded: bool


def predicted_exponents(d, axis, order, dim=None):
    """Exponent predictions for d^order/dxi_axis^order of a base monomial symbol."""
    d = tuple(int(x) for x in d)
    dim = dim if dim is not None else len(d)
    if not 1 <= axis <= dim:
        raise ValueError("axis out of range")
    if order < 0:
        raise ValueError("order must be >= 0")
    d1 = d[0]
    dperp = sum(d[1:])
    total = d1 + dperp
    if axis == 1:
        thresh = Fraction(2 * dim - 1, order + 4 - d1 - 2 * dperp) if order + 4 - d1 - 2 * dperp > 0 else Fraction(0)
        bounded = order >= d1 + 2 * dperp - 4
    else:
        denom = 2 * order + 4 - d1 - 2 * dperp
        thresh = Fraction(2 * dim - 1, denom) if denom > 0 else Fraction(0)
        bounded = 2 * order >= d1 + 2 * dperp - 4
    return ExponentRecord(
        origin_exponent=order + 2 - total,
        lq_threshold=thresh,
        bounded=bounded,
    )
