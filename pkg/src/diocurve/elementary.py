"""Closed-form elementary functions with derivatives of every order.

A function is a finite sum of terms ``coef * x**p``, ``coef * sin(w*x + phase)``
or ``coef * exp(w*x)``.  The same term table is evaluated by numpy on the
Python side and by the compiled kernels in :mod:`diocurve.kernels`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

POW, SIN, EXP = 0, 1, 2
_KIND_NAMES = {POW: "pow", SIN: "sin", EXP: "exp"}


@dataclass(frozen=True)
class Term:
    kind: int
    coef: float
    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self):
        if self.kind not in _KIND_NAMES:
            raise ValueError(f"unknown term kind {self.kind}")
        if self.kind == POW and (self.p1 < 0 or self.p1 != int(self.p1)):
            raise ValueError("power terms need a non-negative integer exponent")

    def derivative(self, x, order: int = 0):
        x = np.asarray(x, dtype=float)
        if self.kind == POW:
            p = int(self.p1)
            if order > p:
                return np.zeros_like(x)
            c = self.coef * math.perm(p, order)
            return c * x ** (p - order)
        if self.kind == SIN:
            w, ph = self.p1, self.p2
            arg = w * x + ph
            r = order % 4
            base = (np.sin, np.cos, lambda a: -np.sin(a), lambda a: -np.cos(a))[r](arg)
            return self.coef * w**order * base
        return self.coef * self.p1**order * np.exp(self.p1 * x)

    def describe(self) -> str:
        if self.kind == POW:
            return f"{self.coef:g}*x^{int(self.p1)}"
        if self.kind == SIN:
            return f"{self.coef:g}*sin({self.p1:g}x+{self.p2:g})"
        return f"{self.coef:g}*exp({self.p1:g}x)"


@dataclass(frozen=True)
class Elementary:
    """A finite sum of elementary terms; callable as ``f(x, order)``."""

    terms: tuple = ()
    name: str = field(default="", compare=False)

    def __call__(self, x, order: int = 0):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for t in self.terms:
            out = out + t.derivative(x, order)
        return out if out.ndim else float(out)

    def __add__(self, other: "Elementary") -> "Elementary":
        return Elementary(self.terms + other.terms, f"{self.name}+{other.name}")

    def scaled(self, c: float) -> "Elementary":
        return Elementary(tuple(Term(t.kind, t.coef * c, t.p1, t.p2) for t in self.terms),
                          f"{c:g}*({self.name})")

    @property
    def is_zero(self) -> bool:
        return all(t.coef == 0 for t in self.terms)

    def describe(self) -> str:
        return " + ".join(t.describe() for t in self.terms) or "0"

    def substitute_affine(self, scale: float, shift: float) -> "Elementary":
        """Return g(u) = self((u - shift) / scale), staying elementary."""
        terms = []
        for t in self.terms:
            if t.kind == POW:
                p = int(t.p1)
                # ((u - shift)/scale)^p expanded binomially
                for j in range(p + 1):
                    c = t.coef * math.comb(p, j) * (-shift) ** (p - j) / scale**p
                    if c != 0:
                        terms.append(Term(POW, c, j))
            elif t.kind == SIN:
                w = t.p1 / scale
                terms.append(Term(SIN, t.coef, w, t.p2 - w * shift))
            else:
                w = t.p1 / scale
                terms.append(Term(EXP, t.coef * math.exp(-w * shift), w))
        return Elementary(tuple(terms), self.name)


def power(p: int, coef: float = 1.0) -> Elementary:
    return Elementary((Term(POW, float(coef), float(p)),), f"x^{p}" if coef == 1 else f"{coef:g}x^{p}")


def constant(c: float) -> Elementary:
    return Elementary((Term(POW, float(c), 0.0),), f"{c:g}")


def zero() -> Elementary:
    return Elementary((), "0")


def sine(w: float = 1.0, phase: float = 0.0, coef: float = 1.0) -> Elementary:
    return Elementary((Term(SIN, float(coef), float(w), float(phase)),), "sin")


def cosine(w: float = 1.0, coef: float = 1.0) -> Elementary:
    return Elementary((Term(SIN, float(coef), float(w), math.pi / 2),), "cos")


def exponential(w: float = 1.0, coef: float = 1.0) -> Elementary:
    return Elementary((Term(EXP, float(coef), float(w)),), "exp")


def term_table(funcs: list, lam: "Elementary | None"):
    """Pack components (ids 0..n-1) and the shift (id n) for the compiled kernels.

    Power terms go into a dense matrix ``poly[k, i]`` (coefficient of x^k in
    function i); sin/exp terms stay as a flat table.
    """
    n = len(funcs)
    entries = list(enumerate(funcs))
    if lam is not None:
        entries.append((n, lam))
    deg = 0
    for _, f in entries:
        if not isinstance(f, Elementary):
            raise TypeError("batch kernels need elementary (term-based) functions")
        for t in f.terms:
            if t.kind == POW:
                deg = max(deg, int(t.p1))
    poly = np.zeros((deg + 1, n + 1))
    kinds, coefs, p1s, p2s, fids = [], [], [], [], []
    for fid, f in entries:
        for t in f.terms:
            if t.kind == POW:
                poly[int(t.p1), fid] += t.coef
            else:
                kinds.append(t.kind)
                coefs.append(t.coef)
                p1s.append(t.p1)
                p2s.append(t.p2)
                fids.append(fid)
    return (poly, np.array(kinds, dtype=np.int64), np.array(coefs, dtype=float),
            np.array(p1s, dtype=float), np.array(p2s, dtype=float), np.array(fids, dtype=np.int64))
