"""Interconnection of a discrete-time plant, an output-feedback controller
and an input-anomaly channel into one closed-loop model.

The plant is ``x+ = A x + B u_a + W w``, ``y = C x + V v``; the controller is
``xi+ = A_K xi + B_K y``, ``u = C_K xi + D_K y``; the applied input is
``u_a = Gamma_u u + Gamma_a a`` for an anomaly signal ``a`` confined to a set.
The combined state is ``[x; xi]`` and the combined uncertainty ``[w; v]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ContractViolationError
from .qcsets import SetDescription, _frozen_array


class Dims(NamedTuple):
    n: int      # plant states
    l: int      # controller states
    m: int      # inputs
    m_a: int    # anomaly signals
    n_w: int    # state disturbances
    n_v: int    # measurement noises


@dataclass(frozen=True)
class PlantModel:
    """Discrete-time plant matrices (one sample per step)."""

    A: np.ndarray   # n x n
    B: np.ndarray   # n x m
    W: np.ndarray   # n x n_w
    C: np.ndarray   # p x n
    V: np.ndarray   # p x n_v

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ContractViolationError("plant A must be square")
        B = np.asarray(self.B, dtype=float).reshape(n, -1)
        W = np.asarray(self.W, dtype=float).reshape(n, -1)
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        if C.shape[1] != n:
            raise ContractViolationError(f"plant C must have {n} columns")
        V = np.asarray(self.V, dtype=float).reshape(C.shape[0], -1)
        for name, mat in (("A", A), ("B", B), ("W", W), ("C", C), ("V", V)):
            object.__setattr__(self, name, _frozen_array(mat))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def n_w(self) -> int:
        return self.W.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def n_v(self) -> int:
        return self.V.shape[1]


@dataclass(frozen=True)
class ControllerModel:
    """Discrete-time output-feedback controller matrices."""

    A: np.ndarray   # l x l
    B: np.ndarray   # l x p
    C: np.ndarray   # m x l
    D: np.ndarray   # m x p

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        l = A.shape[0]
        if A.shape != (l, l):
            raise ContractViolationError("controller A must be square")
        B = np.asarray(self.B, dtype=float).reshape(l, -1)
        C = np.asarray(self.C, dtype=float).reshape(-1, l)
        D = np.asarray(self.D, dtype=float).reshape(C.shape[0], B.shape[1])
        for name, mat in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, _frozen_array(mat))

    @property
    def l(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @property
    def m(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class AnomalyModel:
    """Anomaly channel: applied input is ``Gamma_u u + Gamma_a a, a in set``."""

    gamma_u: np.ndarray        # m x m
    gamma_a: np.ndarray        # m x m_a
    anomaly_set: SetDescription

    def __post_init__(self):
        gu = np.atleast_2d(np.asarray(self.gamma_u, dtype=float))
        m = gu.shape[0]
        if gu.shape != (m, m):
            raise ContractViolationError("gamma_u must be square")
        ga = np.asarray(self.gamma_a, dtype=float).reshape(m, -1)
        if ga.shape[1] != self.anomaly_set.dim:
            raise ContractViolationError(
                f"gamma_a has {ga.shape[1]} columns but the anomaly set has dim "
                f"{self.anomaly_set.dim}"
            )
        object.__setattr__(self, "gamma_u", _frozen_array(gu))
        object.__setattr__(self, "gamma_a", _frozen_array(ga))

    @property
    def m(self) -> int:
        return self.gamma_u.shape[0]

    @property
    def m_a(self) -> int:
        return self.gamma_a.shape[1]


@dataclass(frozen=True)
class ClosedLoopModel:
    """Combined dynamics ``xbar+ = A xbar + W wbar + B_a a`` with applied
    input ``u_a = C_u xbar + V_u wbar + Gamma_a a``."""

    A: np.ndarray        # (n+l) x (n+l)
    W: np.ndarray        # (n+l) x (n_w+n_v)
    B_a: np.ndarray      # (n+l) x m_a
    C_u: np.ndarray      # m x (n+l)
    V_u: np.ndarray      # m x (n_w+n_v)
    gamma_a: np.ndarray  # m x m_a
    dims: Dims

    def __post_init__(self):
        d = self.dims
        shapes = {
            "A": (d.n + d.l, d.n + d.l),
            "W": (d.n + d.l, d.n_w + d.n_v),
            "B_a": (d.n + d.l, d.m_a),
            "C_u": (d.m, d.n + d.l),
            "V_u": (d.m, d.n_w + d.n_v),
            "gamma_a": (d.m, d.m_a),
        }
        for name, shape in shapes.items():
            mat = np.asarray(getattr(self, name), dtype=float).reshape(shape)
            object.__setattr__(self, name, _frozen_array(mat))

    @property
    def state_dim(self) -> int:
        return self.dims.n + self.dims.l

    def step(self, xbar: np.ndarray, wbar: np.ndarray, a: np.ndarray) -> np.ndarray:
        return self.A @ xbar + self.W @ wbar + self.B_a @ a

    def applied_input(self, xbar: np.ndarray, wbar: np.ndarray, a: np.ndarray) -> np.ndarray:
        return self.C_u @ xbar + self.V_u @ wbar + self.gamma_a @ a


def assemble(plant: PlantModel, controller: ControllerModel,
             anomaly: AnomalyModel) -> ClosedLoopModel:
    """Build the closed-loop block matrices from the three subsystems."""
    if controller.p != plant.p:
        raise ContractViolationError(
            f"controller expects {controller.p} measurements, plant provides {plant.p}"
        )
    if controller.m != plant.m:
        raise ContractViolationError(
            f"controller produces {controller.m} inputs, plant accepts {plant.m}"
        )
    if anomaly.m != plant.m:
        raise ContractViolationError(
            f"anomaly channel sized for {anomaly.m} inputs, plant has {plant.m}"
        )
    n, l, m = plant.n, controller.l, plant.m
    n_w, n_v, m_a = plant.n_w, plant.n_v, anomaly.m_a
    gu, ga = anomaly.gamma_u, anomaly.gamma_a

    A = np.block([
        [plant.A + plant.B @ gu @ controller.D @ plant.C, plant.B @ gu @ controller.C],
        [controller.B @ plant.C, controller.A],
    ])
    W = np.block([
        [plant.W, plant.B @ gu @ controller.D @ plant.V],
        [np.zeros((l, n_w)), controller.B @ plant.V],
    ])
    B_a = np.vstack([plant.B @ ga, np.zeros((l, m_a))])
    C_u = gu @ np.hstack([controller.D @ plant.C, controller.C])
    V_u = gu @ np.hstack([np.zeros((m, n_w)), controller.D @ plant.V])
    return ClosedLoopModel(A, W, B_a, C_u, V_u, ga,
                           Dims(n, l, m, m_a, n_w, n_v))


def worst_case_anomaly(m: int, input_set: SetDescription) -> AnomalyModel:
    """Anomaly that may replace the whole input vector by any value of the set."""
    if input_set.dim != m:
        raise ContractViolationError(
            f"input set has dim {input_set.dim}, expected {m}"
        )
    return AnomalyModel(np.zeros((m, m)), np.eye(m), input_set)


def channel_anomaly(m: int, channel: int, channel_set: SetDescription) -> AnomalyModel:
    """Anomaly hijacking input channel ``channel`` (1-based); the remaining
    channels keep their controller-computed values."""
    if not 1 <= channel <= m:
        raise ContractViolationError(f"channel must be in 1..{m}, got {channel}")
    if channel_set.dim != 1:
        raise ContractViolationError("a single hijacked channel needs a 1-dimensional set")
    gu = np.eye(m)
    gu[channel - 1, channel - 1] = 0.0
    ga = np.zeros((m, 1))
    ga[channel - 1, 0] = 1.0
    return AnomalyModel(gu, ga, channel_set)
