"""Bloch-space commutators of two-qubit states and commuting-pair witnesses.

For ``xi_k = {r^k, s^k, T^k}`` the commutator ``[xi_1, xi_2]`` has the Pauli
expansion ``(i/8)[alpha.sigma (x) I + I (x) beta.sigma + sum Gamma_ij
sigma_i (x) sigma_j]`` with

    alpha = r1 x r2 + sum_j T1[:, j] x T2[:, j]
    beta  = s1 x s2 + sum_i T1[i, :] x T2[i, :]
    Gamma_ij = (r1 x T2[:, j] - r2 x T1[:, j])_i + (s1 x T2[i, :] - s2 x T1[i, :])_j

The overall factor is ``i/8``: every Pauli commutator contributes ``2i`` and the
two Bloch forms carry ``1/4`` each.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channels import KrausChannel, apply_kraus, local_kraus, transfer_coefficients
from .linalg import (
    I2,
    PAULIS,
    DimensionError,
    commutator,
    frobenius_norm,
    partial_trace,
    pauli_string,
    random_unitary,
)
from .states import (
    DensityMatrix,
    InvalidStateError,
    TwoQubitBloch,
    psi_family,
    to_two_qubit_bloch,
)

BLOCH_COMMUTATOR_PREFACTOR = 1j / 8
ZERO_TOL = 1e-10
NONZERO_TOL = 1e-8

DEFAULT_CASE1 = {"r": 0.5, "n": 0.3, "t": 0.25}
DEFAULT_CASE2 = {"r": 0.4, "t": 0.3}


@dataclass(frozen=True, eq=False)
class BlochCommutator:
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def operator(self) -> np.ndarray:
        m = np.zeros((4, 4), dtype=complex)
        for i in range(3):
            m += self.alpha[i] * np.kron(PAULIS[i + 1], I2)
            m += self.beta[i] * np.kron(I2, PAULIS[i + 1])
            for j in range(3):
                m += self.gamma[i, j] * np.kron(PAULIS[i + 1], PAULIS[j + 1])
        return BLOCH_COMMUTATOR_PREFACTOR * m

    def max_abs(self) -> float:
        return float(max(np.abs(self.alpha).max(), np.abs(self.beta).max(), np.abs(self.gamma).max()))

    def norm(self) -> float:
        """Frobenius norm of the commutator, from the coefficients alone."""
        total = np.sum(self.alpha**2) + np.sum(self.beta**2) + np.sum(self.gamma**2)
        return float(abs(BLOCH_COMMUTATOR_PREFACTOR) * 2 * np.sqrt(total))


def _bloch(x) -> TwoQubitBloch:
    return x if isinstance(x, TwoQubitBloch) else to_two_qubit_bloch(x)


def bloch_commutator(x1, x2) -> BlochCommutator:
    b1, b2 = _bloch(x1), _bloch(x2)
    r1, r2, s1, s2, t1, t2 = b1.r, b2.r, b1.s, b2.s, b1.T, b2.T
    # columns T[:, j] pair with r, rows T[i, :] pair with s
    alpha = np.cross(r1, r2) + np.cross(t1.T, t2.T).sum(axis=0)
    beta = np.cross(s1, s2) + np.cross(t1, t2).sum(axis=0)
    col_part = np.cross(r1, t2.T) - np.cross(r2, t1.T)  # [j, i]
    row_part = np.cross(s1, t2) - np.cross(s2, t1)  # [i, j]
    gamma = col_part.T + row_part
    return BlochCommutator(alpha, beta, gamma)


def commuting_constraint_check(x1, x2, tol: float = ZERO_TOL) -> bool:
    """Joint commutation plus commuting marginals, in Bloch form."""
    b1, b2 = _bloch(x1), _bloch(x2)
    c = bloch_commutator(b1, b2)
    return (
        c.max_abs() <= tol
        and np.abs(np.cross(b1.r, b2.r)).max() <= tol
        and np.abs(np.cross(b1.s, b2.s)).max() <= tol
    )


def local_transfer(b: TwoQubitBloch, a: Sequence[float], c: Sequence[float]) -> TwoQubitBloch:
    """Bloch form after diagonal Pauli channels ``a`` (first qubit) and ``c`` (second)."""
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    return TwoQubitBloch(a * b.r, c * b.s, np.outer(a, c) * b.T)


# --- witnesses --------------------------------------------------------------------


def _checked(b: TwoQubitBloch, what: str) -> DensityMatrix:
    try:
        return DensityMatrix(b.operator(), (2, 2))
    except InvalidStateError as exc:
        raise InvalidStateError(f"{what}: parameters give a non-positive matrix ({exc})") from exc


def bell_witness_bloch() -> tuple[TwoQubitBloch, TwoQubitBloch]:
    x1 = TwoQubitBloch(np.zeros(3), np.zeros(3), np.diag([1.0, -1.0, 1.0]))
    t2 = np.zeros((3, 3))
    t2[0, 2] = t2[1, 1] = t2[2, 0] = 1.0
    return x1, TwoQubitBloch(np.zeros(3), np.zeros(3), t2)


def case1_bloch(r: float, n: float, t: float) -> tuple[TwoQubitBloch, TwoQubitBloch]:
    z = np.array([0.0, 0.0, 1.0])
    tt = t * np.eye(3)
    return TwoQubitBloch(r * z, r * z, tt), TwoQubitBloch(n * r * z, n * r * z, tt)


def case2_bloch(r: float, t: float) -> tuple[TwoQubitBloch, TwoQubitBloch]:
    v = np.array([0.0, r, r])
    t1 = np.zeros((3, 3))
    t1[1, 0] = t
    t1[2, 0] = -t
    return TwoQubitBloch(np.zeros(3), v, t1), TwoQubitBloch(v, np.zeros(3), t1.T)


def theorem2_witness(case: str = "bell", **params) -> tuple[DensityMatrix, DensityMatrix]:
    """Commuting two-qubit pair used to expose super-activation.

    ``case`` is ``bell`` (maximally entangled pair ``psi_00, psi_11``), ``case1``
    (``r, n, t``), ``case2`` or ``case3`` (``r, t``; case3 reuses the case2 states).
    Positivity of the result is always checked.
    """
    if case == "bell":
        return psi_family(0, 0), psi_family(1, 1)
    if case == "case1":
        p = {**DEFAULT_CASE1, **params}
        b1, b2 = case1_bloch(p["r"], p["n"], p["t"])
    elif case in ("case2", "case3"):
        p = {**DEFAULT_CASE2, **params}
        b1, b2 = case2_bloch(p["r"], p["t"])
    else:
        raise ValueError(f"unknown witness case {case!r}")
    return _checked(b1, case), _checked(b2, case)


def output_commutator(c1: KrausChannel, c2: KrausChannel, x1, x2) -> np.ndarray:
    """``[(c1 (x) c2)(x1), (c1 (x) c2)(x2)]`` as a dense matrix."""
    ops = local_kraus(c1, c2)
    m1 = x1.mat if isinstance(x1, DensityMatrix) else np.asarray(x1)
    m2 = x2.mat if isinstance(x2, DensityMatrix) else np.asarray(x2)
    return commutator(apply_kraus(ops, m1), apply_kraus(ops, m2))


def isotropic_invariance_check(a: float, x1, x2, b: float | None = None) -> bool:
    """Does the pair still commute after depolarizing ``a`` (x) ``b`` (default ``b = a``)?"""
    b1, b2 = _bloch(x1), _bloch(x2)
    if not commuting_constraint_check(b1, b2):
        raise ValueError("pair does not satisfy the commuting-marginals constraint")
    b = a if b is None else b
    y1 = local_transfer(b1, [a] * 3, [b] * 3)
    y2 = local_transfer(b2, [a] * 3, [b] * 3)
    return bloch_commutator(y1, y2).max_abs() <= ZERO_TOL


# --- qudit pairs ----------------------------------------------------------------------


def _mat_and_dims(x, dims):
    if isinstance(x, DensityMatrix):
        return x.mat, list(x.dims)
    m = np.asarray(x, dtype=complex)
    if dims is None:
        d = round(np.sqrt(m.shape[0]))
        dims = [d, d]
    return m, list(dims)


def commut1_residual(x1, x2, dims: Sequence[int] | None = None, tol: float = ZERO_TOL) -> np.ndarray:
    """``[x1, m2] - [x2, m1]`` with ``m = x^A (x) I/d + I/d (x) x^A'``.

    Zero exactly when identical isotropic channels on both halves keep the
    commuting pair commuting.
    """
    m1, dims = _mat_and_dims(x1, dims)
    m2, _ = _mat_and_dims(x2, dims)
    if len(dims) != 2:
        raise DimensionError("commut1_residual expects a bipartite pair")
    da, db = dims
    a1, a2 = partial_trace(m1, dims, [0]), partial_trace(m2, dims, [0])
    p1, p2 = partial_trace(m1, dims, [1]), partial_trace(m2, dims, [1])
    if frobenius_norm(commutator(m1, m2)) > tol:
        raise ValueError("states do not commute")
    if frobenius_norm(commutator(a1, a2)) > tol or frobenius_norm(commutator(p1, p2)) > tol:
        raise ValueError("marginals do not commute")
    emb1 = np.kron(a1, np.eye(db) / db) + np.kron(np.eye(da) / da, p1)
    emb2 = np.kron(a2, np.eye(db) / db) + np.kron(np.eye(da) / da, p2)
    return commutator(m1, emb2) - commutator(m2, emb1)


def d4_counterexample(t1: float = 0.1, t2: float = 0.1) -> tuple[DensityMatrix, DensityMatrix]:
    """Commuting ququart pair (each ququart a qubit pair) violating the qubit identity.

    ``xi_1 = [I + t1 (s1 s2)(s3 s1) + t2 (s3 s1)(s3 s2)] / 16`` and
    ``xi_2 = [I + t1 (s0 s0)(s1 s2) + t2 (s2 s3)(s1 s1)] / 16``.
    """
    eye = np.eye(16, dtype=complex)
    x1 = (eye + t1 * pauli_string([1, 2, 3, 1]) + t2 * pauli_string([3, 1, 3, 2])) / 16
    x2 = (eye + t1 * pauli_string([0, 0, 1, 2]) + t2 * pauli_string([2, 3, 1, 1])) / 16
    return DensityMatrix(x1, (4, 4)), DensityMatrix(x2, (4, 4))


D4_RESIDUAL_SUPPORT = (3, 1, 2, 0)


# --- sampler -----------------------------------------------------------------------------


class ConstrainedPair(NamedTuple):
    x1: DensityMatrix
    x2: DensityMatrix
    family: str


_BELL_BASIS = np.column_stack(
    [np.linalg.eigh(psi_family(*ij).mat)[1][:, -1] for ij in [(0, 0), (0, 1), (1, 0), (1, 1)]]
)
_PERMS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]


def _rotate(b: TwoQubitBloch, u: np.ndarray) -> DensityMatrix:
    return DensityMatrix(u @ b.operator() @ u.conj().T, (2, 2))


def _codiagonal(basis: np.ndarray, rng) -> tuple[DensityMatrix, DensityMatrix]:
    p1, p2 = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
    return (
        DensityMatrix((basis * p1) @ basis.conj().T, (2, 2)),
        DensityMatrix((basis * p2) @ basis.conj().T, (2, 2)),
    )


def _witness_shaped(rng) -> tuple[DensityMatrix, DensityMatrix]:
    while True:
        if rng.random() < 0.5:
            b1, b2 = case1_bloch(rng.uniform(0.0, 0.6), rng.uniform(-1.0, 1.0), rng.uniform(-0.3, 0.3))
        else:
            b1, b2 = case2_bloch(rng.uniform(0.0, 0.45), rng.uniform(-0.3, 0.3))
        perm = _PERMS[rng.integers(len(_PERMS))]
        b1, b2 = b1.permuted(perm), b2.permuted(perm)
        if rng.random() < 0.5:
            b1, b2 = b1.swapped(), b2.swapped()
        u = np.kron(random_unitary(2, rng), random_unitary(2, rng))
        try:
            return _rotate(b1, u), _rotate(b2, u)
        except InvalidStateError:
            continue


def constrained_pair_sampler(seed: int, count: int) -> Iterator[ConstrainedPair]:
    """Seeded stream of commuting two-qubit pairs with commuting marginals.

    Families rotate evenly: ``classical`` (diagonal in the product basis),
    ``witness`` (perturbed case1/case2 shapes, random axis relabelling, random
    common local rotation) and ``rotated`` (co-diagonal in a locally rotated
    product or maximally entangled basis). Not exhaustive.
    """
    rng = np.random.default_rng(seed)
    emitted = 0
    k = 0
    while emitted < count:
        kind = k % 3
        k += 1
        if kind == 0:
            x1, x2 = _codiagonal(np.eye(4, dtype=complex), rng)
            family = "classical"
        elif kind == 1:
            x1, x2 = _witness_shaped(rng)
            family = "witness"
        else:
            u = np.kron(random_unitary(2, rng), random_unitary(2, rng))
            base = np.eye(4, dtype=complex) if rng.random() < 0.5 else _BELL_BASIS
            x1, x2 = _codiagonal(u @ base, rng)
            family = "rotated"
        if commuting_constraint_check(x1, x2):
            emitted += 1
            yield ConstrainedPair(x1, x2, family)


def transfer_pair(c1: KrausChannel, c2: KrausChannel):
    """Diagonal Pauli actions of two qubit channels, or ``None`` if either is not Pauli-diagonal."""
    try:
        return transfer_coefficients(c1).a, transfer_coefficients(c2).a
    except (ValueError, DimensionError):
        return None
