"""Convex sets represented by intersections of quadratic constraints.

A quadratic constraint (QC) is ``sigma(z) = [z;1]^T S [z;1] >= 0`` for a
symmetric matrix ``S``; the equality variant (QCE) requires ``sigma(z) = 0``.
A set is described by a list of QC inequalities and QC equalities whose
intersection contains (or equals) the set.  Ellipsoids, halfspaces, boxes,
hyperplanes, points and zonotopes with square invertible generators all fit
this encoding exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolationError, UnsupportedShapeError

SYMMETRY_TOL = 1e-12
DEFAULT_MEMBERSHIP_TOL = 1e-9
MAX_GENERATOR_COND = 1e8


def _frozen_array(a, shape=None) -> np.ndarray:
    out = np.array(a, dtype=float, order="C")
    if shape is not None and out.shape != shape:
        raise ContractViolationError(f"expected shape {shape}, got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ContractViolationError("non-finite entries")
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class QuadraticForm:
    """Symmetric ``(dim+1) x (dim+1)`` matrix defining a quadratic function.

    ``sigma(z) = [z;1]^T matrix [z;1]`` for ``z`` of length ``dim``.
    """

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise ContractViolationError(f"dim must be a positive integer, got {self.dim}")
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.dim + 1, self.dim + 1):
            raise ContractViolationError(
                f"matrix must be {(self.dim + 1, self.dim + 1)}, got {m.shape}"
            )
        if not np.all(np.abs(m - m.T) <= SYMMETRY_TOL):
            raise ContractViolationError("matrix is not symmetric to 1e-12")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "matrix", _frozen_array(m))


@dataclass(frozen=True)
class SetDescription:
    """A set described by QC inequalities (``qcs``) and equalities (``qces``)."""

    dim: int
    qcs: tuple[QuadraticForm, ...] = ()
    qces: tuple[QuadraticForm, ...] = ()

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise ContractViolationError(f"dim must be a positive integer, got {self.dim}")
        qcs = tuple(self.qcs)
        qces = tuple(self.qces)
        if not qcs and not qces:
            raise ContractViolationError("a set description needs at least one constraint")
        for f in qcs + qces:
            if f.dim != self.dim:
                raise ContractViolationError(
                    f"member form has dim {f.dim}, set has dim {self.dim}"
                )
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "qcs", qcs)
        object.__setattr__(self, "qces", qces)

    @property
    def n_constraints(self) -> int:
        return len(self.qcs) + len(self.qces)


def eval_sigma(form: QuadraticForm, z: Sequence[float]) -> float:
    """Evaluate ``[z;1]^T S [z;1]``."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != form.dim:
        raise ContractViolationError(f"point has length {z.shape[0]}, form has dim {form.dim}")
    v = np.concatenate([z, [1.0]])
    return float(v @ form.matrix @ v)


def ellipsoid(Q, s, r: float) -> QuadraticForm:
    """QC ``z^T Q z + 2 s^T z + r >= 0`` as the block matrix ``[[Q, s], [s^T, r]]``.

    ``Q < 0`` gives an ellipsoid, ``Q <= 0`` a degenerate one, ``Q = 0`` a
    halfspace; no definiteness check is enforced.
    """
    Q = np.asarray(Q, dtype=float)
    s = np.asarray(s, dtype=float).reshape(-1)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ContractViolationError(f"Q must be square, got {Q.shape}")
    if Q.shape[0] != s.shape[0]:
        raise ContractViolationError(f"s has length {s.shape[0]}, Q is {Q.shape[0]}x{Q.shape[0]}")
    if not np.all(np.abs(Q - Q.T) <= SYMMETRY_TOL):
        raise ContractViolationError("Q is not symmetric to 1e-12")
    d = s.shape[0]
    m = np.zeros((d + 1, d + 1))
    m[:d, :d] = 0.5 * (Q + Q.T)
    m[:d, d] = s
    m[d, :d] = s
    m[d, d] = float(r)
    return QuadraticForm(d, m)


def halfspace(normal, offset: float) -> QuadraticForm:
    """QC encoding the halfspace ``normal . z <= offset``.

    The stored matrix is ``[[0, -normal], [-normal^T, 2*offset]]`` so that
    ``sigma(z) = 2*(offset - normal.z)`` is nonnegative exactly on the
    halfspace.
    """
    h = np.asarray(normal, dtype=float).reshape(-1)
    if not np.any(h != 0.0):
        raise ContractViolationError("halfspace normal must be non-zero")
    d = h.shape[0]
    m = np.zeros((d + 1, d + 1))
    m[:d, d] = -h
    m[d, :d] = -h
    m[d, d] = 2.0 * float(offset)
    return QuadraticForm(d, m)


def hyperplane(a, b: float) -> QuadraticForm:
    """QCE encoding ``a . z = b``; ``sigma(z) = 2*(a.z - b)`` vanishes on it."""
    a = np.asarray(a, dtype=float).reshape(-1)
    if not np.any(a != 0.0):
        raise ContractViolationError("hyperplane normal must be non-zero")
    d = a.shape[0]
    m = np.zeros((d + 1, d + 1))
    m[:d, d] = a
    m[d, :d] = a
    m[d, d] = -2.0 * float(b)
    return QuadraticForm(d, m)


def box(lower, upper) -> SetDescription:
    """Axis-aligned box ``lower <= z <= upper`` as ``2*dim`` halfspace QCs."""
    lo = np.asarray(lower, dtype=float).reshape(-1)
    hi = np.asarray(upper, dtype=float).reshape(-1)
    if lo.shape != hi.shape:
        raise ContractViolationError("lower and upper must have equal length")
    if np.any(lo > hi):
        raise ContractViolationError("lower bound exceeds upper bound")
    d = lo.shape[0]
    qcs = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        qcs.append(halfspace(e, hi[i]))
        qcs.append(halfspace(-e, -lo[i]))
    return SetDescription(d, tuple(qcs), ())


def singleton(c) -> SetDescription:
    """The point ``{c}`` as ``dim`` coordinate hyperplane QCEs."""
    c = np.asarray(c, dtype=float).reshape(-1)
    d = c.shape[0]
    qces = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        qces.append(hyperplane(e, c[i]))
    return SetDescription(d, (), tuple(qces))


def zonotope_square(c, G) -> SetDescription:
    """Zonotope ``{c + G*lam : lam in [-1,1]^d}`` with square invertible ``G``.

    Substituting ``lam = G^{-1} (z - c)`` turns each ``|lam_i| <= 1`` into the
    degenerate-ellipsoid QC ``1 - (G^{-1}(z-c))_i^2 >= 0`` directly in ``z``.
    General (non-square) generators need auxiliary lifted variables and are
    rejected.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    G = np.asarray(G, dtype=float)
    d = c.shape[0]
    if G.shape != (d, d):
        raise UnsupportedShapeError(
            f"generator must be square {d}x{d} (got {G.shape}); general "
            "zonotopes require lifted variables"
        )
    if np.linalg.cond(G) >= MAX_GENERATOR_COND:
        raise UnsupportedShapeError("generator matrix is ill-conditioned")
    Ginv = np.linalg.inv(G)
    qcs = []
    for i in range(d):
        g = Ginv[i, :]
        gc = float(g @ c)
        qcs.append(ellipsoid(-np.outer(g, g), gc * g, 1.0 - gc * gc))
    return SetDescription(d, tuple(qcs), ())


def contains(desc: SetDescription, z, tol: float = DEFAULT_MEMBERSHIP_TOL) -> bool:
    """Membership test: every QC ``>= -tol`` and every QCE within ``tol`` of 0."""
    if tol < 0:
        raise ContractViolationError("tol must be nonnegative")
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != desc.dim:
        raise ContractViolationError(f"point has length {z.shape[0]}, set has dim {desc.dim}")
    for f in desc.qcs:
        if eval_sigma(f, z) < -tol:
            return False
    for f in desc.qces:
        if abs(eval_sigma(f, z)) > tol:
            return False
    return True


def axis_box_bounds(desc: SetDescription) -> tuple[np.ndarray, np.ndarray] | None:
    """Recover ``(lower, upper)`` if the QCs contain axis-aligned bounds for
    every coordinate (as produced by :func:`box`); ``None`` otherwise.

    Extra non-halfspace QCs are ignored, so for a mixed description this is
    the bounding box of its halfspace part.
    """
    d = desc.dim
    lo = np.full(d, -np.inf)
    hi = np.full(d, np.inf)
    for f in desc.qcs:
        m = f.matrix
        if np.any(m[:d, :d] != 0.0):
            continue
        normal = -m[:d, d]
        offset = 0.5 * m[d, d]
        nz = np.nonzero(normal)[0]
        if nz.shape[0] != 1:
            continue
        i = nz[0]
        if normal[i] > 0:
            hi[i] = min(hi[i], offset / normal[i])
        else:
            lo[i] = max(lo[i], offset / normal[i])
    if np.any(np.isinf(lo)) or np.any(np.isinf(hi)):
        return None
    return lo, hi


def box_vertices(lower, upper) -> np.ndarray:
    """All corner points of a box, shape ``(2**d, d)``."""
    lo = np.asarray(lower, dtype=float).reshape(-1)
    hi = np.asarray(upper, dtype=float).reshape(-1)
    d = lo.shape[0]
    out = np.empty((2**d, d))
    for j, bits in enumerate(np.ndindex(*([2] * d))):
        out[j] = np.where(np.asarray(bits, dtype=bool), hi, lo)
    return out


def sample_points(desc: SetDescription, n: int, rng: np.random.Generator,
                  max_tries: int = 10000) -> np.ndarray:
    """Draw ``n`` points from a set description.

    Singleton-style descriptions (coordinate QCEs only) are returned exactly;
    any other description must have a finite bounding box in its halfspace
    QCs, from which points are rejection-sampled against the remaining QCs.
    """
    if desc.qces:
        target = np.zeros(desc.dim)
        for f in desc.qces:
            m = f.matrix
            a = m[:desc.dim, desc.dim]
            nz = np.nonzero(a)[0]
            if np.any(m[:desc.dim, :desc.dim] != 0.0) or nz.shape[0] != 1:
                raise UnsupportedShapeError("can only sample QCE sets that pin coordinates")
            i = nz[0]
            target[i] = -0.5 * m[desc.dim, desc.dim] / a[i]
        if desc.qcs and not contains(desc, target, 1e-9):
            raise UnsupportedShapeError("pinned point violates the QC part of the set")
        return np.tile(target, (n, 1))
    bounds = axis_box_bounds(desc)
    if bounds is None:
        raise UnsupportedShapeError("sampling needs axis-aligned bounds in the QCs")
    lo, hi = bounds
    out = np.empty((n, desc.dim))
    got = 0
    for _ in range(max_tries):
        batch = rng.uniform(lo, hi, size=(max(64, n), desc.dim))
        for z in batch:
            if contains(desc, z, 0.0):
                out[got] = z
                got += 1
                if got == n:
                    return out
    raise RuntimeError(f"rejection sampling produced {got}/{n} points; set may be too thin")
