"""Exact arithmetic kernel: Gaussian rationals, univariate rational functions,
and fraction-based linear algebra.

Coefficients are duck-typed field elements: anything supporting +, -, *, /,
==, bool works (``fractions.Fraction``, :class:`GaussianRational`).  Rational
functions are kept reduced with a monic denominator, so equality is plain
coefficient comparison.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence


class GaussianRational:
    """Element of Q(i): a complex number with exact rational real/imag parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is Fraction else Fraction(re)
        self.im = im if type(im) is Fraction else Fraction(im)

    def mul_i(self):
        """self * i without any multiplication."""
        return GaussianRational(-self.im, self.re)

    def __add__(self, other):
        other = _try_gauss(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _try_gauss(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return _coerce_gauss(other) - self

    def __mul__(self, other):
        other = _try_gauss(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussianRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _try_gauss(other)
        if other is NotImplemented:
            return NotImplemented
        d = other.re * other.re + other.im * other.im
        if d == 0:
            raise ZeroDivisionError("division by zero GaussianRational")
        return GaussianRational(
            (self.re * other.re + self.im * other.im) / d,
            (self.im * other.re - self.re * other.im) / d,
        )

    def __rtruediv__(self, other):
        return _coerce_gauss(other) / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __eq__(self, other):
        try:
            other = _coerce_gauss(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if not self.im:
            return str(self.re)
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


def _coerce_gauss(x):
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, (int, Fraction)):
        return GaussianRational(x)
    if isinstance(x, complex):
        # exact only for ints-as-floats; used in tests, never silently
        re, im = Fraction(x.real), Fraction(x.imag)
        return GaussianRational(re, im)
    raise TypeError(f"cannot coerce {type(x).__name__} to GaussianRational")


def _try_gauss(x):
    if isinstance(x, (GaussianRational, int, Fraction, complex)):
        return _coerce_gauss(x)
    return NotImplemented


GAUSS_I = GaussianRational(0, 1)


# ---------------------------------------------------------------------------
# dense univariate polynomials over a field
# ---------------------------------------------------------------------------

def poly_trim(coeffs: Sequence) -> tuple:
    """Drop trailing zero coefficients; coeffs[k] multiplies x**k."""
    n = len(coeffs)
    while n > 0 and not coeffs[n - 1]:
        n -= 1
    return tuple(coeffs[:n])


def poly_add(p, q):
    n = max(len(p), len(q))
    return poly_trim([
        (p[k] if k < len(p) else 0) + (q[k] if k < len(q) else 0)
        for k in range(n)
    ])


def poly_neg(p):
    return tuple(-c for c in p)


def poly_sub(p, q):
    return poly_add(p, poly_neg(q))


def poly_mul(p, q):
    if not p or not q:
        return ()
    out = [p[0] * q[0] * 0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if not a:
            continue
        for j, b in enumerate(q):
            out[i + j] = out[i + j] + a * b
    return poly_trim(out)


def poly_scale(p, s):
    return poly_trim([c * s for c in p])


def poly_divmod(p, q):
    """Polynomial division over the coefficient field."""
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    rem = list(p)
    lead = q[-1]
    dq = len(q) - 1
    quot = [rem[0] * 0] * max(0, len(p) - dq)
    while len(poly_trim(rem)) - 1 >= dq and poly_trim(rem):
        rem = list(poly_trim(rem))
        k = len(rem) - 1 - dq
        c = rem[-1] / lead
        quot[k] = c
        for j in range(dq + 1):
            rem[k + j] = rem[k + j] - c * q[j]
    return poly_trim(quot), poly_trim(rem)


def poly_gcd(p, q):
    """Monic gcd via the Euclidean algorithm."""
    a, b = poly_trim(p), poly_trim(q)
    while b:
        a, b = b, poly_divmod(a, b)[1]
    if not a:
        return ()
    return poly_scale(a, _one_like(a[-1]) / a[-1])


def poly_eval(p, x):
    acc = 0
    for c in reversed(p):
        acc = acc * x + c
    return acc


class RationalFunction:
    """Reduced ratio of polynomials over a field, monic denominator.

    The symbol is purely presentational; arithmetic never mixes symbols, so
    the constructor rejects mismatches.
    """

    __slots__ = ("num", "den", "symbol")

    def __init__(self, num, den=(1,), symbol="x"):
        num = poly_trim(_coerce_coeffs(num if isinstance(num, (tuple, list)) else (num,)))
        den = poly_trim(_coerce_coeffs(den if isinstance(den, (tuple, list)) else (den,)))
        if not den:
            raise ZeroDivisionError("rational function with zero denominator")
        if num:
            g = poly_gcd(num, den)
            if len(g) > 1:
                num = poly_divmod(num, g)[0]
                den = poly_divmod(den, g)[0]
            lead = den[-1]
            num = poly_scale(num, _one_like(lead) / lead)
            den = poly_scale(den, _one_like(lead) / lead)
        else:
            den = (_one_like(den[-1]),)
        self.num = num
        self.den = den
        self.symbol = symbol

    # -- constructors
    @classmethod
    def constant(cls, value, symbol="x"):
        return cls((Fraction(value),) if isinstance(value, (int, Fraction)) else (value,),
                   symbol=symbol)

    @classmethod
    def variable(cls, symbol="x"):
        return cls((Fraction(0), Fraction(1)), symbol=symbol)

    # -- field ops
    def _check(self, other):
        if isinstance(other, RationalFunction):
            if other.symbol != self.symbol:
                raise ValueError(f"symbol mismatch: {self.symbol} vs {other.symbol}")
            return other
        return RationalFunction.constant(other, symbol=self.symbol) \
            if isinstance(other, (int, Fraction, GaussianRational)) else NotImplemented

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return NotImplemented
        return RationalFunction(
            poly_add(poly_mul(self.num, other.den), poly_mul(other.num, self.den)),
            poly_mul(self.den, other.den), self.symbol)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return NotImplemented
        return RationalFunction(
            poly_sub(poly_mul(self.num, other.den), poly_mul(other.num, self.den)),
            poly_mul(self.den, other.den), self.symbol)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return NotImplemented
        return RationalFunction(poly_mul(self.num, other.num),
                                poly_mul(self.den, other.den), self.symbol)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return NotImplemented
        if not other.num:
            raise ZeroDivisionError("division by zero rational function")
        return RationalFunction(poly_mul(self.num, other.den),
                                poly_mul(self.den, other.num), self.symbol)

    def __rtruediv__(self, other):
        other = self._check(other)
        return other / self

    def __neg__(self):
        return RationalFunction(poly_neg(self.num), self.den, self.symbol)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = RationalFunction.constant(other, symbol=self.symbol)
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __bool__(self):
        return bool(self.num)

    # -- structure queries
    @property
    def degree(self):
        """max(deg num, deg den); 0 for constants, -1 for zero."""
        if not self.num:
            return -1
        return max(len(self.num) - 1, len(self.den) - 1)

    def is_constant(self):
        return len(self.num) <= 1 and len(self.den) == 1

    def constant_value(self):
        if not self.is_constant():
            raise ValueError(f"{self!r} is not constant")
        if not self.num:
            return Fraction(0)
        return self.num[0] / self.den[0]

    def eval(self, x):
        return poly_eval(self.num, x) / poly_eval(self.den, x)

    def __repr__(self):
        def fmt(p):
            if not p:
                return "0"
            parts = []
            for k, c in enumerate(p):
                if not c:
                    continue
                if k == 0:
                    parts.append(str(c))
                elif k == 1:
                    parts.append(f"{c}*{self.symbol}" if c != 1 else self.symbol)
                else:
                    parts.append(f"{c}*{self.symbol}^{k}" if c != 1
                                 else f"{self.symbol}^{k}")
            return " + ".join(parts).replace("+ -", "- ")
        if self.den == (Fraction(1),) or self.den == (_one_like(self.den[-1]),):
            return fmt(self.num)
        return f"({fmt(self.num)})/({fmt(self.den)})"


def _one_like(x):
    if isinstance(x, GaussianRational):
        return GaussianRational(1)
    return Fraction(1)


def _coerce_coeffs(coeffs):
    return tuple(Fraction(c) if isinstance(c, int) else c for c in coeffs)


# ---------------------------------------------------------------------------
# exact linear algebra over any field
# ---------------------------------------------------------------------------

def rref(rows: Iterable[Sequence], zero=Fraction(0)) -> list[list]:
    """Reduced row echelon form; returns the nonzero rows (pivots = 1).

    Works over any exact field.  Input rows are copied.
    """
    mat = [list(r) for r in rows]
    if not mat:
        return []
    ncols = len(mat[0])
    pivot_rows: list[list] = []
    pivot_cols: list[int] = []
    for row in mat:
        row = _reduce_against(row, pivot_rows, pivot_cols)
        col = _first_nonzero(row)
        if col is None:
            continue
        inv = row[col]
        row = [c / inv for c in row]
        for prow in pivot_rows:
            c = prow[col]
            if c:
                for k in range(ncols):
                    prow[k] = prow[k] - c * row[k]
        pivot_rows.append(row)
        pivot_cols.append(col)
    order = sorted(range(len(pivot_rows)), key=lambda i: pivot_cols[i])
    return [pivot_rows[i] for i in order]


def _first_nonzero(row):
    for k, c in enumerate(row):
        if c:
            return k
    return None


def _reduce_against(row, pivot_rows, pivot_cols):
    row = list(row)
    for prow, pcol in zip(pivot_rows, pivot_cols):
        c = row[pcol]
        if c:
            for k in range(len(row)):
                row[k] = row[k] - c * prow[k]
    return row


class Span:
    """Incrementally built linear span with RREF-maintained basis."""

    def __init__(self, ncols, zero=Fraction(0)):
        self.ncols = ncols
        self.zero = zero
        self.rows: list[list] = []
        self.pivot_cols: list[int] = []

    @property
    def dim(self):
        return len(self.rows)

    def residual(self, vec):
        """vec reduced against the current basis (a copy)."""
        return _reduce_against(vec, self.rows, self.pivot_cols)

    def contains(self, vec):
        return _first_nonzero(self.residual(vec)) is None

    def add(self, vec) -> bool:
        """Insert vec; True if it enlarged the span."""
        row = self.residual(vec)
        col = _first_nonzero(row)
        if col is None:
            return False
        inv = row[col]
        row = [c / inv for c in row]
        for prow in self.rows:
            c = prow[col]
            if c:
                for k in range(self.ncols):
                    prow[k] = prow[k] - c * row[k]
        self.rows.append(row)
        self.pivot_cols.append(col)
        return True

    def canonical_rows(self):
        order = sorted(range(len(self.rows)), key=lambda i: self.pivot_cols[i])
        return tuple(tuple(self.rows[i]) for i in order)


def exact_matrix_inverse(rows):
    """Inverse of a square matrix over a field; raises ZeroDivisionError if singular."""
    n = len(rows)
    aug = [list(r) + [_one_like(rows[0][0]) if i == j else rows[0][0] * 0
                      for j in range(n)] for i, r in enumerate(rows)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col]), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = aug[col][col]
        aug[col] = [c / inv for c in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                c = aug[r][col]
                aug[r] = [a - c * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def exact_rank(rows) -> int:
    """Rank of a list of vectors over their coefficient field."""
    if not rows:
        return 0
    return len(rref(rows))
