"""
Noncommutative polynomials, hermitization and selfadjoint linearization.

A polynomial ``P`` in letters ``x_j`` and ``x_j^*`` is turned into an affine
pencil ``L = C + sum_j (E_j x_j + E_j^* x_j^*)`` with hermitian ``C`` such
that, for every ``b`` with positive imaginary part, the top-left 2x2 block of
``(b (+) 0 - L)^{-1}`` equals ``(b - [[0, P], [P^*, 0]])^{-1}``.

Monomials of degree ``k >= 2`` are linearized by the ``(4k - 2)``-sized
anti-diagonal construction built from the 2x2 blocks ``Y = diag(x, 1)``,
the hermitized innermost letter and ``-1`` blocks; sums are obtained by
stacking those pencils around a shared 2x2 corner.
"""

from dataclasses import dataclass, field
import re

import numpy as np

from .ovcauchy import Summand

__all__ = [
    "Letter",
    "NCPolynomial",
    "Hermitization",
    "Linearization",
    "ParseError",
    "EmptyWord",
    "parse_polynomial",
    "hermitize",
    "linearize_monomial",
    "linearize_polynomial",
    "split_by_variable",
]


class ParseError(ValueError):
    def __init__(self, text, pos, message):
        self.text, self.pos = text, pos
        super().__init__(f"{message} at column {pos + 1}\n  {text}\n  {' ' * pos}^")


class EmptyWord(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Letter:
    var: int
    star: bool = False

    def adjoint(self):
        return Letter(self.var, not self.star)

    def __str__(self):
        return f"x{self.var}" + ("^*" if self.star else "")


def _word(letters):
    return tuple(l if isinstance(l, Letter) else Letter(*l) for l in letters)


@dataclass(frozen=True)
class NCPolynomial:
    """
    Finite sum of ``coefficient * word``; the empty word is the constant term.

    Terms with equal words are merged and zero coefficients dropped.
    """

    terms: tuple = ()

    def __post_init__(self):
        acc = {}
        order = []
        for c, w in self.terms:
            w = _word(w)
            if w not in acc:
                acc[w] = 0j
                order.append(w)
            acc[w] += complex(c)
        merged = tuple((acc[w], w) for w in order if acc[w] != 0)
        object.__setattr__(self, "terms", merged)

    @classmethod
    def variable(cls, j, star=False):
        return cls(((1.0, (Letter(j, star),)),))

    @classmethod
    def constant(cls, c):
        return cls(((c, ()),))

    def __add__(self, other):
        other = _coerce(other)
        return NCPolynomial(self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return NCPolynomial(tuple((-c, w) for c, w in self.terms))

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        return NCPolynomial(tuple((c1 * c2, w1 + w2)
                                  for c1, w1 in self.terms for c2, w2 in other.terms))

    def __rmul__(self, other):
        return _coerce(other) * self

    def __truediv__(self, scalar):
        return NCPolynomial(tuple((c / complex(scalar), w) for c, w in self.terms))

    def __pow__(self, k):
        out = NCPolynomial.constant(1.0)
        for _ in range(int(k)):
            out = out * self
        return out

    def adjoint(self):
        """Reverse every word, star every letter, conjugate the coefficients."""
        return NCPolynomial(tuple((np.conj(c), tuple(l.adjoint() for l in reversed(w)))
                                  for c, w in self.terms))

    @property
    def variables(self):
        return sorted({l.var for _, w in self.terms for l in w})

    @property
    def degree(self):
        return max((len(w) for _, w in self.terms), default=0)

    @property
    def constant_term(self):
        for c, w in self.terms:
            if not w:
                return c
        return 0j

    def check_indices(self):
        vs = self.variables
        if vs and vs != list(range(1, len(vs) + 1)):
            raise ValueError(f"variable indices must be 1..k, got {vs}")

    def evaluate(self, subst):
        """Evaluate with ``subst[j]`` an ``N x N`` array standing for ``x_j``."""
        n = next(iter(subst.values())).shape[0]
        out = np.zeros((n, n), dtype=complex)
        for c, w in self.terms:
            m = np.eye(n, dtype=complex)
            for l in w:
                x = subst[l.var]
                m = m @ (x.conj().T if l.star else x)
            out += c * m
        return out

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for c, w in self.terms:
            coef = _fmt_complex(c)
            if not w:
                parts.append(coef)
            elif c == 1:
                parts.append("*".join(map(str, w)))
            else:
                parts.append(coef + "*" + "*".join(map(str, w)))
        return " + ".join(parts)


def _fmt_complex(c):
    c = complex(c)
    if c.imag == 0:
        return f"{c.real:.17g}"
    if c.real == 0:
        return f"{c.imag:.17g}i"
    return f"({c.real:.17g}{c.imag:+.17g}i)"


def _coerce(obj):
    if isinstance(obj, NCPolynomial):
        return obj
    return NCPolynomial.constant(complex(obj))


# -- parser ------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<num>(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?i?)
  | (?P<imag>i)
  | (?P<var>x(?P<idx>\d+))
  | (?P<adj>\^\*)
  | (?P<pow>\^(?P<exp>\d+))
  | (?P<op>[-+*/()])
  | (?P<ws>\s+)
""", re.VERBOSE)


def _tokenize(text):
    pos, toks = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(text, pos, f"unexpected character {text[pos]!r}")
        if m.group("ws") is None:
            kind = next(k for k in ("num", "imag", "var", "adj", "pow", "op")
                        if m.group(k) is not None)
            toks.append((kind, m, pos))
        pos = m.end()
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def error(self, msg):
        raise ParseError(self.text, self.peek()[2], msg)

    def is_op(self, sym):
        kind, m, _ = self.peek()
        return kind == "op" and m.group() == sym

    def parse(self):
        if not self.toks:
            raise ParseError(self.text, 0, "empty polynomial")
        p = self.expr()
        if self.i != len(self.toks):
            self.error("unexpected token")
        return p

    def expr(self):
        sign = 1
        if self.is_op("-") or self.is_op("+"):
            sign = -1 if self.take()[1].group() == "-" else 1
        p = self.term() * sign
        while self.is_op("+") or self.is_op("-"):
            op = self.take()[1].group()
            t = self.term()
            p = p + t if op == "+" else p - t
        return p

    def term(self):
        p = self.power()
        while self.is_op("*") or self.is_op("/"):
            op = self.take()[1].group()
            if op == "*":
                p = p * self.power()
            else:
                kind, m, pos = self.peek()
                q = self.power()
                if q.degree > 0 or not q.terms:
                    raise ParseError(self.text, pos, "can only divide by a nonzero scalar")
                p = p / q.constant_term
        return p

    def power(self):
        p = self.atom()
        while True:
            kind, m, _ = self.peek()
            if kind == "adj":
                self.take()
                p = p.adjoint()
            elif kind == "pow":
                self.take()
                p = p ** int(m.group("exp"))
            else:
                return p

    def atom(self):
        kind, m, pos = self.peek()
        if kind == "num":
            self.take()
            s = m.group()
            if s.endswith("i"):
                return NCPolynomial.constant(1j * float(s[:-1]))
            return NCPolynomial.constant(float(s))
        if kind == "imag":
            self.take()
            return NCPolynomial.constant(1j)
        if kind == "var":
            self.take()
            j = int(m.group("idx"))
            if j < 1:
                raise ParseError(self.text, pos, "variable indices start at 1")
            return NCPolynomial.variable(j)
        if kind == "op" and m.group() == "(":
            self.take()
            p = self.expr()
            if not self.is_op(")"):
                self.error("expected ')'")
            self.take()
            return p
        if kind == "op" and m.group() == "-":
            self.take()
            return -self.power()
        self.error("expected a number, 'i', a variable or '('")


def parse_polynomial(text):
    """
    Parse text such as ``"(2+3i)*x1*x2^* + x3 - 1"``.

    ``^*`` takes the adjoint of the preceding factor, ``^n`` a power; products
    are noncommutative and fully expanded.
    """
    return _Parser(text).parse()


# -- hermitization -----------------------------------------------------------

@dataclass(frozen=True)
class Hermitization:
    """Formal block ``[[0, P], [P^*, 0]]``."""

    upper: NCPolynomial
    lower: NCPolynomial

    def evaluate(self, subst):
        p = self.upper.evaluate(subst)
        q = self.lower.evaluate(subst)
        z = np.zeros_like(p)
        return np.block([[z, p], [q, z]])


def hermitize(p):
    return Hermitization(p, p.adjoint())


# -- linearization -----------------------------------------------------------

@dataclass(frozen=True)
class Linearization:
    """
    Selfadjoint affine pencil ``constant + sum_j (E_j x_j + E_j^* x_j^*)``.

    ``corner`` lists the row/column indices of the marked 2x2 output block.
    """

    dim: int
    constant: np.ndarray
    var_coeffs: dict
    corner: tuple = (0, 1)
    polynomial: NCPolynomial = field(default=None, compare=False)

    def __post_init__(self):
        c = np.asarray(self.constant, dtype=complex)
        if c.shape != (self.dim, self.dim):
            raise ValueError("constant has wrong shape")
        if np.abs(c - c.conj().T).max(initial=0.0) > 1e-12:
            raise ValueError("constant matrix is not hermitian")
        object.__setattr__(self, "constant", c)

    @property
    def variables(self):
        return sorted(self.var_coeffs)

    def evaluate(self, subst):
        """Pencil with ``subst[j]`` (``N x N``) substituted; returns ``mN x mN``."""
        n = next(iter(subst.values())).shape[0]
        out = np.kron(self.constant, np.eye(n))
        for j, e in self.var_coeffs.items():
            x = subst[j]
            out = out + np.kron(e, x) + np.kron(e.conj().T, x.conj().T)
        return out

    def corner_resolvent(self, b, subst):
        """Top-left ``2N x 2N`` block of ``(b (+) 0 - L(subst))^{-1}`` (``b`` is 2x2)."""
        n = next(iter(subst.values())).shape[0]
        big = -self.evaluate(subst)
        big[: 2 * n, : 2 * n] += np.kron(b, np.eye(n))
        return np.linalg.inv(big)[: 2 * n, : 2 * n]


def _add_letter(coeffs, dim, letter, row, col, value):
    """Record ``value * letter`` at ``(row, col)`` (its adjoint lands at ``(col, row)``)."""
    e = coeffs.setdefault(letter.var, np.zeros((dim, dim), dtype=complex))
    if letter.star:
        e[col, row] += np.conj(value)
    else:
        e[row, col] += value


def _monomial_blocks(coeff, word, dim, offset, const, coeffs):
    """
    Write the anti-diagonal pencil of ``coeff * word`` (length ``k >= 2``).

    Block ``0`` is the shared corner; blocks ``1 .. 2k - 2`` start at row
    ``offset`` (in units of scalars).
    """
    k = len(word)
    n = 2 * k - 1

    def pos(blk):
        return 0 if blk == 0 else offset + 2 * (blk - 1)

    for i in range(k - 1):
        r, c = pos(i), pos(n - 1 - i)
        # Y = diag(letter, 1) at (i, n-1-i) and its adjoint at the mirror spot
        _add_letter(coeffs, dim, word[i], r, c, 1.0)
        const[r + 1, c + 1] += 1.0
        const[c + 1, r + 1] += 1.0
    centre = pos(k - 1)
    _add_letter(coeffs, dim, word[k - 1], centre, centre + 1, coeff)
    for i in range(1, n):
        r, c = pos(i), pos(n - i)
        const[r, c] -= 1.0
        const[r + 1, c + 1] -= 1.0


def linearize_monomial(coeff, word):
    """Pencil of size ``4k - 2`` for the hermitized monomial ``coeff * word``."""
    word = _word(word)
    k = len(word)
    if k == 0:
        raise EmptyWord("constants have no monomial pencil")
    dim = 2 if k == 1 else 4 * k - 2
    const = np.zeros((dim, dim), dtype=complex)
    coeffs = {}
    if k == 1:
        _add_letter(coeffs, dim, word[0], 0, 1, complex(coeff))
    else:
        _monomial_blocks(complex(coeff), word, dim, 2, const, coeffs)
    poly = NCPolynomial(((coeff, word),))
    return Linearization(dim, const, coeffs, (0, 1), poly)


def linearize_polynomial(p):
    """
    Stack the monomial pencils of ``p`` around a common 2x2 corner.

    Degree-1 terms and the constant term act directly on the corner, so a
    polynomial of degree at most one yields a 2x2 pencil.
    """
    if not p.terms:
        raise ValueError("cannot linearize the zero polynomial")
    p.check_indices()
    high = [(c, w) for c, w in p.terms if len(w) >= 2]
    dim = 2 + sum(4 * len(w) - 4 for _, w in high)
    const = np.zeros((dim, dim), dtype=complex)
    coeffs = {j: np.zeros((dim, dim), dtype=complex) for j in p.variables}
    for c, w in p.terms:
        if not w:
            const[0, 1] += c
            const[1, 0] += np.conj(c)
        elif len(w) == 1:
            _add_letter(coeffs, dim, w[0], 0, 1, c)
    offset = 2
    for c, w in high:
        _monomial_blocks(c, w, dim, offset, const, coeffs)
        offset += 4 * len(w) - 4
    return Linearization(dim, const, coeffs, (0, 1), p)


def split_by_variable(lin, models=None):
    """
    One :class:`Summand` per variable; the first carries the constant matrix.

    ``models`` maps variable index to a variable model and may be omitted
    when only the algebraic split is needed.
    """
    out = []
    zero = np.zeros_like(lin.constant)
    for n, j in enumerate(lin.variables):
        model = None if models is None else models[j]
        out.append(Summand(lin.constant if n == 0 else zero, lin.var_coeffs[j], model, j))
    if not out:
        out.append(Summand(lin.constant, np.zeros_like(lin.constant), None, 0))
    return out
