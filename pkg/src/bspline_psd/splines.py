"""B-spline bases, their analytic integrals and B-spline densities on [0, 1].

Indexing follows the usual 1-based convention for basis functions: for a
knot sequence ``xi_0 <= ... <= xi_{k+r}`` the ``j``-th spline of degree
``r`` (``j = 1..k``) is supported on ``[xi_{j-1}, xi_{j+r}]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

DEGENERATE_TOL = _kernels.DEGENERATE_TOL


@dataclass(frozen=True)
class KnotSequence:
    """Clamped, nondecreasing knots on [0, 1] for a degree-``degree`` basis."""

    degree: int
    knots: np.ndarray = field(repr=False)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", knots)
        r = self.degree
        if r < 0:
            raise ValueError("degree must be nonnegative")
        if knots.ndim != 1 or knots.size < 2 * r + 2:
            raise ValueError(f"need at least {2 * r + 2} knots for degree {r}")
        if np.any(np.diff(knots) < 0):
            raise ValueError("knots must be nondecreasing")
        k = self.basis_size
        if np.any(knots[: r + 1] != 0.0) or np.any(knots[k:] != 1.0):
            raise ValueError("knot sequence must be clamped to [0, 1]")

    @property
    def basis_size(self) -> int:
        return self.knots.size - self.degree - 1

    @property
    def internal_knots(self) -> np.ndarray:
        return self.knots[self.degree + 1 : self.basis_size]

    @classmethod
    def equidistant(cls, degree: int, basis_size: int) -> "KnotSequence":
        n_int = basis_size - degree
        if n_int < 1:
            raise ValueError("basis_size must be at least degree + 1")
        return build_knots(np.full(n_int, 1.0 / n_int), degree)


@dataclass(frozen=True)
class BsplineDensityBasis:
    knot_sequence: KnotSequence
    normalizers: np.ndarray = field(repr=False)

    @classmethod
    def from_knots(cls, ks: KnotSequence) -> "BsplineDensityBasis":
        norms = np.array([bspline_integral(j, ks) for j in range(1, ks.basis_size + 1)])
        return cls(ks, norms)

    @property
    def degenerate(self) -> np.ndarray:
        return self.normalizers <= DEGENERATE_TOL


def _check_index(j, ks):
    if not 1 <= j <= ks.basis_size:
        raise IndexError(f"basis index {j} outside 1..{ks.basis_size}")


def _check_omega(omega):
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"omega={omega} outside [0, 1]")


def _cox_de_boor(omega, j, r, xi):
    if r == 0:
        lo, hi = xi[j - 1], xi[j]
        if lo <= omega < hi:
            return 1.0
        # close the last nonempty interval at the right boundary
        return 1.0 if omega == hi == xi[-1] and lo < hi else 0.0
    # a term whose lower-order spline vanishes is skipped, so a tiny knot gap
    # cannot turn 0 * inf into nan
    total = 0.0
    left = _cox_de_boor(omega, j, r - 1, xi)
    den = xi[j + r - 1] - xi[j - 1]
    if left != 0.0 and den != 0.0:
        total += (omega - xi[j - 1]) / den * left
    right = _cox_de_boor(omega, j + 1, r - 1, xi)
    den1 = xi[j + r] - xi[j]
    if right != 0.0:
        total += (1.0 - (omega - xi[j]) / den1 if den1 != 0.0 else 1.0) * right
    return total


def eval_bspline(omega: float, j: int, ks: KnotSequence) -> float:
    """Value of the ``j``-th B-spline at ``omega`` by the Cox-de Boor recursion.

    Uses the convention that a weight with a zero denominator is zero. The
    degree-0 splines are indicators of half-open intervals, except that the
    last nonempty interval is closed at 1 so the basis covers [0, 1].

    >>> ks = build_knots([0.5, 0.5], 1)
    >>> eval_bspline(0.5, 2, ks)
    1.0
    """
    _check_index(j, ks)
    _check_omega(omega)
    return float(_cox_de_boor(float(omega), j, ks.degree, ks.knots))


def basis_matrix(omegas, ks: KnotSequence) -> np.ndarray:
    """All ``k`` basis functions on a grid, shape ``(len(omegas), k)``.

    Compiled de Boor evaluation; agrees with :func:`eval_bspline`.
    """
    om = np.atleast_1d(np.asarray(omegas, dtype=float))
    if np.any((om < 0) | (om > 1)):
        raise ValueError("omegas must lie in [0, 1]")
    return _kernels.basis_matrix(ks.knots, ks.degree, om)


def bspline_integral(j: int, ks: KnotSequence) -> float:
    """Closed-form integral of the ``j``-th spline: support width over ``r + 1``."""
    _check_index(j, ks)
    r = ks.degree
    return float((ks.knots[j + r] - ks.knots[j - 1]) / (r + 1))


def eval_density(omega, j: int, basis: BsplineDensityBasis):
    """Normalized B-spline density; zero for degenerate splines."""
    ks = basis.knot_sequence
    _check_index(j, ks)
    norm = basis.normalizers[j - 1]
    scalar = np.ndim(omega) == 0
    if norm <= DEGENERATE_TOL:
        out = np.zeros(np.shape(omega))
    else:
        out = basis_matrix(omega, ks)[:, j - 1] / norm
    return float(np.ravel(out)[0]) if scalar else out


def effective_weights(weights, basis: BsplineDensityBasis) -> np.ndarray:
    """Weights after moving the mass of degenerate splines onto the others.

    Mass on degenerate components is spread over the non-degenerate ones in
    proportion to their own weights (evenly if they carry none), so the total
    is preserved.
    """
    w = np.asarray(weights, dtype=float)
    ks = basis.knot_sequence
    if w.shape != (ks.basis_size,):
        raise ValueError(f"expected {ks.basis_size} weights, got shape {w.shape}")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    out = np.empty_like(w)
    _kernels.effective_weights(w, basis.normalizers, w.size, out)
    return out


def eval_mixture(omega, weights, basis: BsplineDensityBasis):
    """Weighted sum of B-spline densities, ``sum_j w_j b_j(omega)``."""
    weff = effective_weights(weights, basis)
    scalar = np.ndim(omega) == 0
    good = ~basis.degenerate
    coef = np.zeros_like(weff)
    coef[good] = weff[good] / basis.normalizers[good]
    out = basis_matrix(omega, basis.knot_sequence) @ coef
    return float(np.ravel(out)[0]) if scalar else out


def build_knots(deltas, r: int) -> KnotSequence:
    """Clamped knot sequence from internal interval widths.

    The widths are renormalized to sum to one so the last internal boundary
    lands on 1 exactly; zero widths give coincident knots.
    """
    d = np.asarray(deltas, dtype=float)
    if d.ndim != 1 or d.size < 1:
        raise ValueError("need at least one knot difference")
    if np.any(d < 0):
        raise ValueError("knot differences must be nonnegative")
    if not d.sum() > 0:
        raise ValueError("knot differences must have positive sum")
    out = np.empty(d.size + 2 * r + 1)
    _kernels.knots_from_diffs(d, d.size, r, out)
    return KnotSequence(r, out)
