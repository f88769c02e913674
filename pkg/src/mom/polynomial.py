"""Dense multivariate polynomials with complex coefficients.

A polynomial is a map from exponent tuples to coefficients. Every system
handled here has at most a handful of variables and total degree <= 4, so
the fully expanded representation is cheap and makes degrees, derivatives
and batched evaluation straightforward.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ParameterError

Exponent = tuple[int, ...]


class MultiPoly:
    """Immutable polynomial in ``nvars`` variables.

    Terms with an exactly-zero coefficient are never stored.
    """

    __slots__ = ("nvars", "_terms")

    def __init__(self, nvars: int, terms: Mapping[Exponent, complex] | None = None):
        if nvars < 0:
            raise ParameterError(f"nvars must be nonnegative, got {nvars}")
        clean: dict[Exponent, complex] = {}
        for exp, coeff in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars:
                raise ParameterError(f"exponent {exp} does not have length {nvars}")
            if any(e < 0 for e in exp):
                raise ParameterError(f"negative exponent in {exp}")
            c = complex(coeff)
            if c != 0:
                clean[exp] = clean.get(exp, 0j) + c
                if clean[exp] == 0:
                    del clean[exp]
        self.nvars = nvars
        self._terms = clean

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> MultiPoly:
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, value: complex) -> MultiPoly:
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, index: int) -> MultiPoly:
        if not 0 <= index < nvars:
            raise ParameterError(f"variable index {index} out of range for {nvars} variables")
        exp = [0] * nvars
        exp[index] = 1
        return cls(nvars, {tuple(exp): 1.0})

    @classmethod
    def variables(cls, nvars: int) -> list[MultiPoly]:
        return [cls.variable(nvars, k) for k in range(nvars)]

    # -- inspection ---------------------------------------------------------

    @property
    def terms(self) -> dict[Exponent, complex]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def pruned(self, rel_tol: float = 1e-14) -> MultiPoly:
        """Drop terms with ``|c| < rel_tol * max|c|``."""
        cutoff = rel_tol * self.max_abs_coeff()
        return MultiPoly(self.nvars, {e: c for e, c in self._terms.items() if abs(c) >= cutoff})

    def scaled(self, factor: complex) -> MultiPoly:
        return MultiPoly(self.nvars, {e: c * factor for e, c in self._terms.items()})

    def real_part(self) -> MultiPoly:
        return MultiPoly(self.nvars, {e: c.real for e, c in self._terms.items()})

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> MultiPoly:
        if isinstance(other, MultiPoly):
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return MultiPoly.constant(self.nvars, complex(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(self, other)

    __radd__ = __add__

    def __neg__(self) -> MultiPoly:
        return self.scaled(-1)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(self, -other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(other, -self)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scaled(complex(other))
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> MultiPoly:
        if k < 0:
            raise ParameterError("negative powers are not polynomials")
        result = MultiPoly.constant(self.nvars, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.nvars, frozenset(self._terms.items())))

    def __call__(self, *point) -> complex:
        if len(point) == 1 and np.ndim(point[0]) == 1:
            point = point[0]
        return evaluate(self, point)

    def __repr__(self) -> str:
        return f"MultiPoly({self.nvars}, {to_string(self)!r})"


def _check_same_nvars(p: MultiPoly, q: MultiPoly) -> None:
    if p.nvars != q.nvars:
        raise ParameterError(f"nvars mismatch: {p.nvars} vs {q.nvars}")


def add(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    _check_same_nvars(p, q)
    terms = dict(p._terms)
    for e, c in q._terms.items():
        terms[e] = terms.get(e, 0j) + c
    return MultiPoly(p.nvars, terms)


def mul(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    _check_same_nvars(p, q)
    terms: dict[Exponent, complex] = {}
    for e1, c1 in p._terms.items():
        for e2, c2 in q._terms.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            terms[e] = terms.get(e, 0j) + c1 * c2
    return MultiPoly(p.nvars, terms)


def differentiate(p: MultiPoly, var: int) -> MultiPoly:
    if not 0 <= var < p.nvars:
        raise ParameterError(f"variable index {var} out of range for {p.nvars} variables")
    terms = {}
    for e, c in p._terms.items():
        if e[var] == 0:
            continue
        d = list(e)
        d[var] -= 1
        terms[tuple(d)] = c * e[var]
    return MultiPoly(p.nvars, terms)


def evaluate(p: MultiPoly, point: Sequence[complex]) -> complex:
    point = np.asarray(point, dtype=complex)
    if point.shape != (p.nvars,):
        raise ParameterError(f"point has shape {point.shape}, expected ({p.nvars},)")
    total = 0j
    for e, c in p._terms.items():
        term = c
        for x, k in zip(point, e):
            if k:
                term *= x**k
        total += term
    return complex(total)


def compose(p: MultiPoly, subs: Sequence[MultiPoly]) -> MultiPoly:
    """Substitute ``subs[k]`` for variable ``k`` of ``p``."""
    if len(subs) != p.nvars:
        raise ParameterError(f"need {p.nvars} substitutions, got {len(subs)}")
    if not subs:
        return MultiPoly(0, p._terms)
    nv = subs[0].nvars
    if any(s.nvars != nv for s in subs):
        raise ParameterError("substitutions must share one variable count")
    # cache powers of each substitution, they repeat across terms
    powers: list[dict[int, MultiPoly]] = [{0: MultiPoly.constant(nv, 1.0), 1: s} for s in subs]

    def power(k: int, e: int) -> MultiPoly:
        cache = powers[k]
        if e not in cache:
            cache[e] = power(k, e - 1) * subs[k]
        return cache[e]

    result = MultiPoly.zero(nv)
    for e, c in p._terms.items():
        term = MultiPoly.constant(nv, c)
        for k, ek in enumerate(e):
            if ek:
                term = term * power(k, ek)
        result = result + term
    return result


def homogenize(p: MultiPoly, degree: int | None = None) -> MultiPoly:
    """Homogenize with a new last variable ``x0``: ``x0^d p(x / x0)``."""
    d = p.degree() if degree is None else degree
    if d < p.degree():
        raise ParameterError(f"degree {d} is below the polynomial degree {p.degree()}")
    return MultiPoly(p.nvars + 1, {(*e, d - sum(e)): c for e, c in p._terms.items()})


@dataclass(frozen=True)
class PolySystem:
    """A list of polynomials sharing one variable count."""

    nvars: int
    polys: tuple[MultiPoly, ...]

    def __init__(self, polys: Iterable[MultiPoly], nvars: int | None = None):
        polys = tuple(polys)
        if nvars is None:
            if not polys:
                raise ParameterError("cannot infer nvars of an empty system")
            nvars = polys[0].nvars
        if any(p.nvars != nvars for p in polys):
            raise ParameterError("all polynomials in a system must share nvars")
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "polys", polys)

    def __len__(self) -> int:
        return len(self.polys)

    def __iter__(self):
        return iter(self.polys)

    def __getitem__(self, k: int) -> MultiPoly:
        return self.polys[k]

    def is_square(self) -> bool:
        return len(self.polys) == self.nvars

    def degrees(self) -> list[int]:
        return [p.degree() for p in self.polys]

    def evaluate(self, point: Sequence[complex]) -> np.ndarray:
        return np.array([evaluate(p, point) for p in self.polys])


def jacobian(system: PolySystem) -> list[list[MultiPoly]]:
    """Entry ``[k][v]`` is the derivative of polynomial ``k`` in variable ``v``."""
    return [[differentiate(p, v) for v in range(system.nvars)] for p in system.polys]


# -- debug serialization ------------------------------------------------------


def grlex_key(exp: Exponent) -> tuple:
    """Sort key placing higher total degree first, ties broken lexicographically."""
    return (-sum(exp), tuple(-e for e in exp))


def _format_coeff(c: complex) -> str:
    if c.imag == 0:
        return repr(c.real)
    return f"({c.real!r}{c.imag:+}j)"


def to_string(p: MultiPoly, names: Sequence[str] | None = None) -> str:
    """Human-readable form with terms in graded lexicographic order."""
    if p.is_zero():
        return "0"
    if names is None:
        names = [f"x{k + 1}" for k in range(p.nvars)]
    parts = []
    for e in sorted(p._terms, key=grlex_key):
        factors = [_format_coeff(p._terms[e])]
        for name, k in zip(names, e):
            if k == 1:
                factors.append(name)
            elif k > 1:
                factors.append(f"{name}^{k}")
        parts.append("*".join(factors))
    return " + ".join(parts)


def system_to_string(system: PolySystem, names: Sequence[str] | None = None) -> str:
    return "\n".join(to_string(p, names) for p in system.polys)


# -- batched numeric evaluation -----------------------------------------------


class CompiledSystem:
    """Vectorized evaluator for a system and its Jacobian at many points.

    Values and Jacobians are obtained as matrix products of a monomial table
    with fixed coefficient matrices, so a whole batch of homotopy paths can be
    evaluated at once.
    """

    def __init__(self, system: PolySystem):
        self.nvars = system.nvars
        self.neqs = len(system)
        jac = jacobian(system)
        monos: set[Exponent] = set()
        for p in system.polys:
            monos.update(p._terms)
        for row in jac:
            for d in row:
                monos.update(d._terms)
        if not monos:
            monos.add((0,) * self.nvars)
        order = sorted(monos, key=grlex_key)
        index = {e: k for k, e in enumerate(order)}
        self.exponents = np.array(order, dtype=np.intp).reshape(len(order), self.nvars)
        self.max_degree = int(self.exponents.max(initial=0))
        self.value_coeffs = np.zeros((len(order), self.neqs), dtype=complex)
        self.jac_coeffs = np.zeros((len(order), self.neqs * self.nvars), dtype=complex)
        for k, p in enumerate(system.polys):
            for e, c in p._terms.items():
                self.value_coeffs[index[e], k] = c
            for v, d in enumerate(jac[k]):
                for e, c in d._terms.items():
                    self.jac_coeffs[index[e], k * self.nvars + v] = c

    def _monomials(self, x: np.ndarray) -> np.ndarray:
        # powers[p, v, e] = x[p, v] ** e
        powers = np.ones(x.shape + (self.max_degree + 1,), dtype=np.result_type(x, complex))
        for e in range(1, self.max_degree + 1):
            powers[..., e] = powers[..., e - 1] * x
        var_idx = np.arange(self.nvars)
        return powers[:, var_idx[None, :], self.exponents].prod(axis=2)

    def values(self, x: np.ndarray, extended: bool = False) -> np.ndarray:
        """``x`` has shape (P, nvars); returns (P, neqs).

        With ``extended`` the sum is carried out in long double, which keeps
        the residual meaningful at roots of large magnitude where the
        monomials cancel heavily.
        """
        x = np.atleast_2d(x)
        if extended:
            mono = self._monomials(x.astype(np.clongdouble))
            return mono @ self.value_coeffs.astype(np.clongdouble)
        return self._monomials(x) @ self.value_coeffs

    def values_and_jacobians(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        mono = self._monomials(np.atleast_2d(x))
        vals = mono @ self.value_coeffs
        jac = (mono @ self.jac_coeffs).reshape(-1, self.neqs, self.nvars)
        return vals, jac
