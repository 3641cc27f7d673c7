"""Trajectory lifting and assembly of the horizon-safety feasibility LMI.

Over a horizon ``k_f`` the stacked vector
``z = [xbar_0; wbar_0..wbar_{k_f-1}; a_0..a_{k_f-1}; 1]`` determines every
trajectory quantity linearly: ``M_k z = [xbar_k; 1]``, ``E_k z = [wbar_k; 1]``,
``F_k z = [a_k; 1]`` and ``N_k z = [u_a_k; 1]``.  Pulling the constraint sets
back through these maps turns "the state satisfies safety QC ``s`` at step
``k_f`` for all admissible initial states, uncertainties and anomalies" into
a single linear matrix inequality in nonnegative (QC) and free (QCE)
multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, TYPE_CHECKING

import numpy as np

from .closedloop import ClosedLoopModel
from .errors import ContractViolationError
from .qcsets import QuadraticForm, SetDescription, _frozen_array

if TYPE_CHECKING:  # pragma: no cover
    from .algo import ScenarioSpec

BLOCK_SYMMETRY_TOL = 1e-12


class MultiplierLabel(NamedTuple):
    """Provenance of one multiplier: source set family, time index (None for
    the initial set), constraint index within the family, and constraint kind."""

    family: str          # "initial" | "input" | "deviation" | "anomaly" | "constraint"
    time_index: int | None
    index: int
    kind: str            # "qc" | "qce"


@dataclass(frozen=True)
class LiftingContext:
    """Cached powers and convolution blocks of a model for one horizon."""

    model: ClosedLoopModel
    horizon: int

    def __post_init__(self):
        if self.horizon < 1:
            raise ContractViolationError("horizon must be >= 1")
        A = self.model.A
        powers = [np.eye(A.shape[0])]
        for _ in range(self.horizon):
            powers.append(A @ powers[-1])
        # A^i W and A^i B_a for i = 0..horizon-1, used by the P/Q blocks
        w_blocks = [self.model.W]
        a_blocks = [self.model.B_a]
        for i in range(1, self.horizon):
            w_blocks.append(A @ w_blocks[-1])
            a_blocks.append(A @ a_blocks[-1])
        object.__setattr__(self, "_powers", tuple(_frozen_array(p) for p in powers))
        object.__setattr__(self, "_w_blocks", tuple(_frozen_array(b) for b in w_blocks))
        object.__setattr__(self, "_a_blocks", tuple(_frozen_array(b) for b in a_blocks))

    @property
    def z_dim(self) -> int:
        d = self.model.dims
        return (d.n + d.l) + self.horizon * (d.n_w + d.n_v) + self.horizon * d.m_a + 1

    def a_power(self, k: int) -> np.ndarray:
        return self._powers[k]

    def _offsets(self) -> tuple[int, int, int]:
        d = self.model.dims
        w0 = d.n + d.l
        a0 = w0 + self.horizon * (d.n_w + d.n_v)
        const = a0 + self.horizon * d.m_a
        return w0, a0, const


def lift_state(ctx: LiftingContext, k: int) -> np.ndarray:
    """Matrix mapping ``z`` to ``[xbar_k; 1]``, shape ``(n+l+1, z_dim)``."""
    if not 0 <= k <= ctx.horizon:
        raise ContractViolationError(f"k must be in 0..{ctx.horizon}, got {k}")
    d = ctx.model.dims
    nl = d.n + d.l
    nw = d.n_w + d.n_v
    w0, a0, const = ctx._offsets()
    out = np.zeros((nl + 1, ctx.z_dim))
    out[:nl, :nl] = ctx.a_power(k)
    # contribution of wbar_j / a_j for j < k is A^(k-1-j) W / A^(k-1-j) B_a
    for j in range(k):
        out[:nl, w0 + j * nw:w0 + (j + 1) * nw] = ctx._w_blocks[k - 1 - j]
        out[:nl, a0 + j * d.m_a:a0 + (j + 1) * d.m_a] = ctx._a_blocks[k - 1 - j]
    out[nl, const] = 1.0
    return out


def selector_disturbance(ctx: LiftingContext, k: int) -> np.ndarray:
    """Selection matrix mapping ``z`` to ``[wbar_k; 1]``."""
    if not 0 <= k <= ctx.horizon - 1:
        raise ContractViolationError(f"k must be in 0..{ctx.horizon - 1}, got {k}")
    d = ctx.model.dims
    nw = d.n_w + d.n_v
    w0, _, const = ctx._offsets()
    out = np.zeros((nw + 1, ctx.z_dim))
    for i in range(nw):
        out[i, w0 + k * nw + i] = 1.0
    out[nw, const] = 1.0
    return out


def selector_anomaly(ctx: LiftingContext, k: int) -> np.ndarray:
    """Selection matrix mapping ``z`` to ``[a_k; 1]``."""
    if not 0 <= k <= ctx.horizon - 1:
        raise ContractViolationError(f"k must be in 0..{ctx.horizon - 1}, got {k}")
    d = ctx.model.dims
    _, a0, const = ctx._offsets()
    out = np.zeros((d.m_a + 1, ctx.z_dim))
    for i in range(d.m_a):
        out[i, a0 + k * d.m_a + i] = 1.0
    out[d.m_a, const] = 1.0
    return out


def lift_input(ctx: LiftingContext, k: int) -> np.ndarray:
    """Matrix mapping ``z`` to ``[u_a_k; 1]``.

    Combines the state, disturbance and anomaly liftings through the applied
    input equation; the constant rows of the three liftings are collapsed so
    the result carries a single constant row.
    """
    if not 0 <= k <= ctx.horizon - 1:
        raise ContractViolationError(f"k must be in 0..{ctx.horizon - 1}, got {k}")
    m = ctx.model.dims.m
    M = lift_state(ctx, k)
    E = selector_disturbance(ctx, k)
    F = selector_anomaly(ctx, k)
    top = (ctx.model.C_u @ M[:-1] + ctx.model.V_u @ E[:-1]
           + ctx.model.gamma_a @ F[:-1])
    out = np.zeros((m + 1, ctx.z_dim))
    out[:m] = top
    out[m] = M[-1]
    return out


@dataclass(frozen=True)
class FeasibilityProblem:
    """Affine PSD feasibility problem ``G_0 + sum_j theta_j G_j >= 0`` with
    per-multiplier sign restrictions (``True`` = nonnegative, QC-derived;
    ``False`` = free, QCE-derived)."""

    psd_blocks: tuple[np.ndarray, ...]
    sign_mask: tuple[bool, ...]
    labels: tuple[MultiplierLabel, ...]

    def __post_init__(self):
        blocks = tuple(np.asarray(b, dtype=float) for b in self.psd_blocks)
        if not blocks:
            raise ContractViolationError("at least the constant block is required")
        dim = blocks[0].shape[0]
        for b in blocks:
            if b.shape != (dim, dim):
                raise ContractViolationError("all blocks must share one square size")
            if not np.all(np.abs(b - b.T) <= BLOCK_SYMMETRY_TOL):
                raise ContractViolationError("blocks must be symmetric to 1e-12")
        if len(self.sign_mask) != len(blocks) - 1:
            raise ContractViolationError("one sign flag per multiplier is required")
        if len(self.labels) != len(blocks) - 1:
            raise ContractViolationError("one label per multiplier is required")
        object.__setattr__(self, "psd_blocks", tuple(_frozen_array(b) for b in blocks))
        object.__setattr__(self, "sign_mask", tuple(bool(s) for s in self.sign_mask))
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dim(self) -> int:
        return self.psd_blocks[0].shape[0]

    @property
    def n_multipliers(self) -> int:
        return len(self.psd_blocks) - 1

    def lhs(self, theta: Sequence[float]) -> np.ndarray:
        """Evaluate ``G_0 + sum_j theta_j G_j``."""
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.shape[0] != self.n_multipliers:
            raise ContractViolationError(
                f"expected {self.n_multipliers} multipliers, got {theta.shape[0]}"
            )
        out = self.psd_blocks[0].copy()
        for t, g in zip(theta, self.psd_blocks[1:]):
            out += t * g
        return out


def s_procedure(target: QuadraticForm,
                inequality_forms: Sequence[QuadraticForm],
                equality_forms: Sequence[QuadraticForm] = ()) -> FeasibilityProblem:
    """Sufficient condition for ``sigma_target >= 0`` on the intersection of
    the given QCs and QCEs: ``target - sum tau_p P_p - sum mu_q Q_q >= 0``
    with ``tau_p >= 0`` and ``mu_q`` free."""
    dims = {target.dim} | {f.dim for f in inequality_forms} | {f.dim for f in equality_forms}
    if len(dims) != 1:
        raise ContractViolationError(f"forms live in different dimensions: {sorted(dims)}")
    blocks = [target.matrix]
    mask: list[bool] = []
    labels: list[MultiplierLabel] = []
    for i, f in enumerate(inequality_forms):
        blocks.append(-f.matrix)
        mask.append(True)
        labels.append(MultiplierLabel("constraint", None, i, "qc"))
    for i, f in enumerate(equality_forms):
        blocks.append(-f.matrix)
        mask.append(False)
        labels.append(MultiplierLabel("constraint", None, i, "qce"))
    return FeasibilityProblem(tuple(blocks), tuple(mask), tuple(labels))


def _pullback(lifting: np.ndarray, form: QuadraticForm) -> np.ndarray:
    return lifting.T @ form.matrix @ lifting


def _append_set(blocks: list, mask: list, labels: list, lifting: np.ndarray,
                desc: SetDescription, family: str, k: int | None) -> None:
    for i, f in enumerate(desc.qcs):
        blocks.append(-_pullback(lifting, f))
        mask.append(True)
        labels.append(MultiplierLabel(family, k, i, "qc"))
    for i, f in enumerate(desc.qces):
        blocks.append(-_pullback(lifting, f))
        mask.append(False)
        labels.append(MultiplierLabel(family, k, i, "qce"))


def theorem1_problem(ctx: LiftingContext, scenario: "ScenarioSpec",
                     s: int) -> FeasibilityProblem:
    """Feasibility LMI certifying safety QC ``s`` (1-based) at step
    ``ctx.horizon`` over all admissible initial states, inputs, uncertainties
    and anomalies of the scenario."""
    n_s = len(scenario.safety.qcs)
    if not 1 <= s <= n_s:
        raise ContractViolationError(f"safety index must be in 1..{n_s}, got {s}")
    d = ctx.model.dims
    checks = (
        (scenario.safety.dim, d.n + d.l, "safety"),
        (scenario.initial.dim, d.n + d.l, "initial"),
        (scenario.input_limits.dim, d.m, "input-limitation"),
        (scenario.deviation.dim, d.n_w + d.n_v, "deviation"),
        (scenario.anomaly.anomaly_set.dim, d.m_a, "anomaly"),
    )
    for got, want, name in checks:
        if got != want:
            raise ContractViolationError(f"{name} set has dim {got}, model needs {want}")

    M_kf = lift_state(ctx, ctx.horizon)
    M_0 = lift_state(ctx, 0)
    blocks = [_pullback(M_kf, scenario.safety.qcs[s - 1])]
    mask: list[bool] = []
    labels: list[MultiplierLabel] = []
    _append_set(blocks, mask, labels, M_0, scenario.initial, "initial", None)
    for k in range(ctx.horizon):
        N_k = lift_input(ctx, k)
        E_k = selector_disturbance(ctx, k)
        F_k = selector_anomaly(ctx, k)
        _append_set(blocks, mask, labels, N_k, scenario.input_limits, "input", k)
        _append_set(blocks, mask, labels, E_k, scenario.deviation, "deviation", k)
        _append_set(blocks, mask, labels, F_k, scenario.anomaly.anomaly_set, "anomaly", k)
    # enforce exact symmetry against accumulated round-off in the pullbacks
    blocks = [0.5 * (b + b.T) for b in blocks]
    return FeasibilityProblem(tuple(blocks), tuple(mask), tuple(labels))
