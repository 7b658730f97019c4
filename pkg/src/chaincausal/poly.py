"""Sparse multivariate polynomials with exact rational coefficients.

Indeterminates are hashable keys.  Trek polynomials use ``("w", t)`` for
the error variance at ``t`` and ``("l", u, v)`` for the coefficient of
``u -> v``; anything else is printed with ``str``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

Monomial = tuple  # sorted tuple of (variable, exponent) pairs


def _natural(label: str):
    return tuple((0, int(t), "") if t.isdigit() else (1, 0, t) for t in re.findall(r"\d+|\D+", str(label)))


def var_key(var):
    if isinstance(var, tuple) and var and var[0] == "w":
        return (0, tuple(_natural(x) for x in var[1:]))
    if isinstance(var, tuple) and var and var[0] == "l":
        return (1, tuple(_natural(x) for x in var[1:]))
    return (2, ((_natural(str(var)),),))


def var_name(var) -> str:
    if isinstance(var, tuple) and var and var[0] in ("w", "l"):
        labels = [var[1], var[1]] if var[0] == "w" else list(var[1:])
        if all(len(x) == 1 for x in labels):
            return var[0] + "".join(labels)
        return var[0] + "_" + "_".join(labels)
    return str(var)


def omega_var(t: str):
    return ("w", t)


def lambda_var(u: str, v: str):
    return ("l", u, v)


def _mono(pairs: Iterable) -> Monomial:
    acc: dict = {}
    for var, e in pairs:
        if e:
            acc[var] = acc.get(var, 0) + e
    return tuple(sorted(((v, e) for v, e in acc.items() if e), key=lambda ve: var_key(ve[0])))


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return _mono(list(a) + list(b))


class SparsePoly:
    """Immutable sparse polynomial; zero coefficients are never stored."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping | None = None):
        clean = {}
        for mono, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                m = _mono(mono)
                clean[m] = clean.get(m, Fraction(0)) + c
                if not clean[m]:
                    del clean[m]
        self._terms = clean

    @classmethod
    def _raw(cls, terms: dict) -> "SparsePoly":
        p = cls.__new__(cls)
        p._terms = terms
        return p

    @classmethod
    def constant(cls, c) -> "SparsePoly":
        return cls({(): c})

    @classmethod
    def variable(cls, var) -> "SparsePoly":
        return cls._raw({((var, 1),): Fraction(1)})

    @classmethod
    def monomial(cls, pairs: Iterable, coef=1) -> "SparsePoly":
        return cls({_mono(pairs): coef})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    def variables(self) -> set:
        return {v for m in self._terms for v, _ in m}

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self._terms), default=0)

    # arithmetic ----------------------------------------------------------

    def _coerce(self, other) -> "SparsePoly":
        if isinstance(other, SparsePoly):
            return other
        if isinstance(other, (int, Fraction)):
            return SparsePoly.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return SparsePoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return SparsePoly._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return SparsePoly._raw(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = SparsePoly.constant(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    # evaluation ----------------------------------------------------------

    def evaluate(self, values: Mapping):
        """Evaluate with floats or equally-shaped numpy arrays per variable."""
        if not self._terms:
            return 0.0
        total = 0.0
        for m, c in self._terms.items():
            term = float(c)
            for var, e in m:
                term = term * values[var] ** e
            total = total + term
        return total

    def compile(self, variables: list):
        """Return ``(coefs, exponents)`` for vectorised evaluation.

        ``exponents`` has one row per term and one column per entry of
        ``variables``.
        """
        pos = {v: i for i, v in enumerate(variables)}
        coefs = np.array([float(c) for c in self._terms.values()])
        exps = np.zeros((len(self._terms), len(variables)), dtype=np.int64)
        for row, m in enumerate(self._terms):
            for var, e in m:
                exps[row, pos[var]] = e
        return coefs, exps

    # printing ------------------------------------------------------------

    def _term_str(self, m: Monomial) -> str:
        factors = []
        for var, e in m:
            name = var_name(var)
            factors.append(name if e == 1 else f"{name}^{e}")
        return "*".join(factors)

    def __str__(self):
        if not self._terms:
            return "0"
        items = sorted(self._terms.items(), key=lambda mc: self._term_str(mc[0]))
        parts = []
        for m, c in items:
            body = self._term_str(m)
            mag = abs(c)
            if not body:
                txt = str(mag)
            elif mag == 1:
                txt = body
            else:
                txt = f"{mag}*{body}"
            parts.append(("-" if c < 0 else "+", txt))
        out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, txt in parts[1:]:
            out += f" {sign} {txt}"
        return out

    def __repr__(self):
        return f"SparsePoly({self})"


def evaluate_compiled(coefs: np.ndarray, exps: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Evaluate compiled terms at many points; ``values`` is (points, variables)."""
    if coefs.size == 0:
        return np.zeros(values.shape[0])
    powered = np.prod(values[:, None, :] ** exps[None, :, :], axis=2)
    return powered @ coefs
