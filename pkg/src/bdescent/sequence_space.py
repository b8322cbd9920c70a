"""Finite truncations of l^p sequence spaces.

A vector is a dense coefficient array tagged with the exponent p > 1 of
the norm it is measured in, ||v|| = (sum_j |v_j|^p)^(1/p).  The
normalized duality mapping

    J(y) = ||y||^(2-p) * (|y_1|^(p-1) sign(y_1), |y_2|^(p-1) sign(y_2), ...)

sends a vector measured in l^p to the conjugate space l^q, q = p/(p-1),
and satisfies <y, J(y)> = ||y||_p^2 and ||J(y)||_q = ||y||_p.  In the
Hilbert case p = 2 it is the identity.

Truncation dimension is a per-experiment choice, not a type parameter:
every identity implemented here holds uniformly in the dimension.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = [
    "Vec",
    "conjugate_exponent",
    "norm",
    "pairing",
    "duality_map",
    "axpy",
]


def _check_exponent(p: float) -> None:
    if not (math.isfinite(p) and p > 1.0):
        raise ValueError(f"norm exponent must be a finite real > 1, got {p!r}")


def conjugate_exponent(p: float) -> float:
    """Holder conjugate q = p/(p-1), so that 1/p + 1/q = 1."""
    _check_exponent(p)
    return p / (p - 1.0)


def _same_exponent(p: float, q: float) -> bool:
    # Conjugation round-trips through floating point with ~1 ulp drift,
    # so exponent tags are compared to a tight relative tolerance.
    return math.isclose(p, q, rel_tol=1e-12, abs_tol=0.0)


class Vec:
    """An immutable coefficient vector plus the exponent of its ambient norm."""

    __slots__ = ("coeffs", "p")

    def __init__(self, coeffs, p: float = 2.0):
        arr = np.array(coeffs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("coefficients must form a non-empty 1-d array")
        if not np.isfinite(arr).all():
            raise ValueError("coefficients must all be finite")
        p = float(p)
        _check_exponent(p)
        arr.setflags(write=False)
        self.coeffs = arr
        self.p = p

    @classmethod
    def _wrap(cls, arr: np.ndarray, p: float) -> "Vec":
        """Trusted constructor for freshly computed arrays; skips validation."""
        v = cls.__new__(cls)
        arr.setflags(write=False)
        v.coeffs = arr
        v.p = p
        return v

    @property
    def dim(self) -> int:
        return self.coeffs.size

    def __repr__(self) -> str:
        return f"Vec(dim={self.dim}, p={self.p}, coeffs={self.coeffs!r})"


def norm(v: Vec) -> float:
    """The l^p norm of v in its own exponent, (sum |v_j|^p)^(1/p).

    For p != 2 the largest coefficient magnitude is factored out before
    powering, so extreme exponents neither overflow nor underflow at any
    scale the experiments reach.  p = 2 delegates to the BLAS nrm2, which
    is scaled internally.
    """
    if v.p == 2.0:
        return float(np.linalg.norm(v.coeffs))
    m = float(np.max(np.abs(v.coeffs)))
    if m == 0.0:
        return 0.0
    scaled = np.abs(v.coeffs) / m
    return m * float(np.sum(scaled**v.p) ** (1.0 / v.p))


def pairing(y: Vec, x: Vec) -> float:
    """Dual pairing <y, x> = sum_j y_j x_j.

    y is understood as a dual-side vector, so the exponents of the two
    arguments may legitimately differ; only the dimensions must match.
    """
    if y.dim != x.dim:
        raise ValueError(f"dimension mismatch in pairing: {y.dim} vs {x.dim}")
    return float(np.dot(y.coeffs, x.coeffs))


def duality_map(y: Vec) -> Vec:
    """Normalized duality mapping from l^p into the conjugate space l^q.

    Satisfies pairing(y, J(y)) = norm(y)^2 and norm(J(y)) = norm(y).
    J(0) := 0 by continuity (the componentwise formula is 0/0 there, and
    norm preservation forces the value).  For p = 2 the input is returned
    unchanged, bit for bit.
    """
    q = conjugate_exponent(y.p)
    if y.p == 2.0:
        return y
    m = float(np.max(np.abs(y.coeffs)))
    if m == 0.0:
        return Vec._wrap(np.zeros(y.dim), q)
    # J is positively 1-homogeneous, so rescale by the max magnitude:
    # all intermediate powers then live near [0, 1].
    u = y.coeffs / m
    au = np.abs(u)
    s = float(np.sum(au**y.p) ** (1.0 / y.p))  # norm of u, in [1, dim^(1/p)]
    out = (m / s ** (y.p - 2.0)) * np.sign(u) * au ** (y.p - 1.0)
    return Vec._wrap(out, q)


def axpy(a: float, x: Vec, y: Vec) -> Vec:
    """a*x + y, elementwise.  Both vectors must share dimension and exponent."""
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch in axpy: {x.dim} vs {y.dim}")
    if not _same_exponent(x.p, y.p):
        raise ValueError(f"exponent mismatch in axpy: {x.p} vs {y.p}")
    return Vec._wrap(a * x.coeffs + y.coeffs, y.p)
