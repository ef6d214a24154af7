"""Dense factors over named discrete variables.

A factor is an ordered variable scope plus a numpy table whose k-th axis
ranges over the states of scope[k]. State label ordering is owned by the
enclosing network; factors only know axis sizes, which keeps the algebra
free of bookkeeping and lets multiplication ride on numpy broadcasting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Factor:
    scope: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != len(self.scope):
            raise ValueError(
                f"table has {arr.ndim} axes for scope of size {len(self.scope)}"
            )
        if len(set(self.scope)) != len(self.scope):
            raise ValueError(f"duplicate variable in scope {self.scope}")
        if np.any(arr < 0):
            raise ValueError("factor entries must be nonnegative")
        object.__setattr__(self, "scope", tuple(self.scope))
        object.__setattr__(self, "values", arr)

    @staticmethod
    def unit() -> "Factor":
        return Factor((), np.asarray(1.0))

    def card(self, var: str) -> int:
        return self.values.shape[self.scope.index(var)]

    def aligned(self, scope: tuple[str, ...]) -> np.ndarray:
        """Return values reshaped/transposed to broadcast over `scope`.

        Every variable of self.scope must appear in `scope`; missing
        variables show up as broadcast axes of size one.
        """
        present = [v for v in scope if v in self.scope]
        if len(present) != len(self.scope):
            missing = set(self.scope) - set(scope)
            raise ValueError(f"target scope lacks {sorted(missing)}")
        perm = [self.scope.index(v) for v in present]
        arr = np.transpose(self.values, perm)
        shape = []
        k = 0
        for v in scope:
            if v in self.scope:
                shape.append(arr.shape[k])
                k += 1
            else:
                shape.append(1)
        return arr.reshape(shape)

    def total(self) -> float:
        return float(self.values.sum())

    def normalized(self) -> "Factor":
        z = self.values.sum()
        if z <= 0:
            raise ValueError("cannot normalize a zero factor")
        return Factor(self.scope, self.values / z)

    def marginalize(self, drop) -> "Factor":
        """Sum out the given variables."""
        drop = set(drop)
        keep = tuple(v for v in self.scope if v not in drop)
        axes = tuple(i for i, v in enumerate(self.scope) if v in drop)
        return Factor(keep, self.values.sum(axis=axes)) if axes else self

    def project(self, scope: tuple[str, ...]) -> "Factor":
        """Marginalize onto `scope` and reorder axes to match it."""
        out = self.marginalize(set(self.scope) - set(scope))
        perm = [out.scope.index(v) for v in scope]
        return Factor(tuple(scope), np.transpose(out.values, perm))


def multiply(a: Factor, b: Factor) -> Factor:
    """Pointwise product over the union scope (a's variables first)."""
    scope = a.scope + tuple(v for v in b.scope if v not in a.scope)
    return Factor(scope, a.aligned(scope) * b.aligned(scope))


def marginalize(f: Factor, drop) -> Factor:
    return f.marginalize(drop)


def product(factors) -> Factor:
    out = Factor.unit()
    for f in factors:
        out = multiply(out, f)
    return out


def divide(num: Factor, den: Factor) -> Factor:
    """Quotient with the 0/0 -> 0 convention.

    A positive numerator over a zero denominator indicates a bug in the
    caller (our denominators are always marginals of the numerator), so
    that case raises instead of silently producing inf.
    """
    scope = num.scope + tuple(v for v in den.scope if v not in num.scope)
    shape = np.broadcast_shapes(num.aligned(scope).shape, den.aligned(scope).shape)
    n = np.broadcast_to(num.aligned(scope), shape)
    d = np.broadcast_to(den.aligned(scope), shape)
    if np.any((d == 0) & (n > 0)):
        raise ValueError("positive mass over a zero denominator")
    return Factor(scope, np.where(d > 0, n / np.where(d > 0, d, 1.0), 0.0))
