"""Density matrices, Bloch forms and classical-quantum ensembles."""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import (
    HADAMARD,
    I2,
    PAULIS,
    DimensionError,
    as_matrix,
    eigvalsh,
    is_hermitian,
    kron,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
)

TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-9
BLOCH_TOL = 1e-12


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated quantum state on ``prod(dims)`` dimensions."""

    mat: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        m = as_matrix(self.mat)
        dims = tuple(int(d) for d in self.dims)
        if m.shape[0] != m.shape[1] or int(np.prod(dims)) != m.shape[0]:
            raise DimensionError(f"dims {dims} do not match matrix shape {m.shape}")
        if not is_hermitian(m):
            raise InvalidStateError("density matrix is not Hermitian within 1e-10")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace is {tr.real:.12g}, expected 1")
        lo = eigvalsh(0.5 * (m + m.conj().T))[0]
        if lo < -POSITIVITY_TOL:
            raise InvalidStateError(f"minimum eigenvalue {lo:.3e} is negative")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def marginal(self, keep: Sequence[int]) -> DensityMatrix:
        keep = sorted(keep)
        return DensityMatrix(partial_trace(self.mat, self.dims, keep), tuple(self.dims[k] for k in keep))

    def eigenvalues(self) -> np.ndarray:
        return eigvalsh(self.mat)

    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))

    def __matmul__(self, other: DensityMatrix) -> DensityMatrix:
        # tensor product, keeps subsystem bookkeeping
        return DensityMatrix(np.kron(self.mat, other.mat), self.dims + other.dims)


def density(m, dims: Sequence[int] | None = None) -> DensityMatrix:
    m = as_matrix(m)
    return DensityMatrix(m, tuple(dims) if dims is not None else (m.shape[0],))


def pure(ket, dims: Sequence[int] | None = None) -> DensityMatrix:
    v = np.asarray(ket, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return density(np.outer(v, v.conj()), dims)


def maximally_mixed(dims: Sequence[int]) -> DensityMatrix:
    d = int(np.prod(dims))
    return DensityMatrix(np.eye(d, dtype=complex) / d, tuple(dims))


def basis_ket(i: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


KET0 = basis_ket(0, 2)
KET1 = basis_ket(1, 2)
KET_PLUS = (KET0 + KET1) / np.sqrt(2)
KET_MINUS = (KET0 - KET1) / np.sqrt(2)
QUBIT_LABELS = {
    "0": KET0,
    "1": KET1,
    "+": KET_PLUS,
    "-": KET_MINUS,
    "r": (KET0 + 1j * KET1) / np.sqrt(2),
    "l": (KET0 - 1j * KET1) / np.sqrt(2),
}


def ket_from_label(label: str) -> np.ndarray:
    """Ket for a basis label.

    A label is either a string of single-qubit symbols (``0 1 + - r l``), read
    as a tensor product, or ``"d<dim>:<index>"`` for a computational qudit ket.
    """
    if label.startswith("d") and ":" in label:
        dim, idx = label[1:].split(":", 1)
        d, i = int(dim), int(idx)
        if not 0 <= i < d:
            raise ValueError(f"basis label {label!r}: index out of range")
        return basis_ket(i, d)
    if not label or any(ch not in QUBIT_LABELS for ch in label):
        raise ValueError(f"unrecognised basis label {label!r}")
    return kron(*(QUBIT_LABELS[ch].reshape(-1, 1) for ch in label)).ravel()


# --- Bloch forms -------------------------------------------------------------


def from_bloch1(r: Sequence[float]) -> DensityMatrix:
    """Qubit state ``(I + r.sigma) / 2``."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise DimensionError("Bloch vector must have three components")
    if np.linalg.norm(r) > 1.0 + BLOCH_TOL:
        raise InvalidStateError(f"Bloch vector of length {np.linalg.norm(r):.6g} lies outside the ball")
    m = I2 + sum(r[i] * PAULIS[i + 1] for i in range(3))
    return DensityMatrix(m / 2, (2,))


def to_bloch1(rho) -> np.ndarray:
    m = rho.mat if isinstance(rho, DensityMatrix) else as_matrix(rho)
    return np.array([np.real(np.trace(m @ PAULIS[i])) for i in (1, 2, 3)])


@dataclass(frozen=True, eq=False)
class TwoQubitBloch:
    """``(r, s, T)`` coefficients of a two-qubit operator in the Pauli basis.

    ``rho = [I(x)I + sum r_i s_i(x)I + sum s_j I(x)s_j + sum T_ij s_i(x)s_j] / 4``.
    """

    r: np.ndarray
    s: np.ndarray
    T: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float).reshape(3)
        s = np.asarray(self.s, dtype=float).reshape(3)
        t = np.asarray(self.T, dtype=float).reshape(3, 3)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "T", t)

    def operator(self) -> np.ndarray:
        """The (unvalidated) 4x4 operator these coefficients describe."""
        m = np.eye(4, dtype=complex)
        for i in range(3):
            m = m + self.r[i] * np.kron(PAULIS[i + 1], I2)
            m = m + self.s[i] * np.kron(I2, PAULIS[i + 1])
            for j in range(3):
                m = m + self.T[i, j] * np.kron(PAULIS[i + 1], PAULIS[j + 1])
        return m / 4

    def swapped(self) -> TwoQubitBloch:
        """Coefficients with the two qubits exchanged."""
        return TwoQubitBloch(self.s, self.r, self.T.T)

    def permuted(self, perm: Sequence[int]) -> TwoQubitBloch:
        """Relabel Pauli axes: new axis ``k`` takes old axis ``perm[k]``."""
        p = list(perm)
        return TwoQubitBloch(self.r[p], self.s[p], self.T[np.ix_(p, p)])

    def allclose(self, other: TwoQubitBloch, atol: float = BLOCH_TOL) -> bool:
        return (
            np.allclose(self.r, other.r, atol=atol)
            and np.allclose(self.s, other.s, atol=atol)
            and np.allclose(self.T, other.T, atol=atol)
        )


def two_qubit_from_bloch(b: TwoQubitBloch) -> DensityMatrix:
    return DensityMatrix(b.operator(), (2, 2))


# _PAULI_PAIRS[i, j] = sigma_i (x) sigma_j
_PAULI_PAIRS = np.array([[np.kron(a, b) for b in PAULIS] for a in PAULIS])


def to_two_qubit_bloch(rho) -> TwoQubitBloch:
    m = rho.mat if isinstance(rho, DensityMatrix) else as_matrix(rho)
    if m.shape != (4, 4):
        raise DimensionError("two-qubit Bloch form needs a 4x4 matrix")
    # Tr(m P) for every Pauli pair P at once
    c = np.real(np.einsum("ijab,ba->ij", _PAULI_PAIRS, m))
    return TwoQubitBloch(c[1:, 0], c[0, 1:], c[1:, 1:])


# --- named states --------------------------------------------------------------

_PSI_KETS = {
    (0, 0): (np.kron(KET0, KET0) + np.kron(KET1, KET1)) / np.sqrt(2),
    (1, 1): (np.kron(KET0, KET_PLUS) + np.kron(KET1, KET_MINUS)) / np.sqrt(2),
    (0, 1): (np.kron(KET0, KET1) - np.kron(KET1, KET0)) / np.sqrt(2),
    (1, 0): (np.kron(KET0, KET_MINUS) - np.kron(KET1, KET_PLUS)) / np.sqrt(2),
}


def psi_family(i: int, j: int) -> DensityMatrix:
    """The four maximally entangled two-qubit states ``psi_ij``.

    ``psi_00`` is Phi+, ``psi_01`` the singlet, ``psi_11 = (I(x)H) Phi+ (I(x)H)``
    and ``psi_10`` its singlet counterpart.
    """
    if (i, j) not in _PSI_KETS:
        raise ValueError(f"psi_family indices must be bits, got {(i, j)}")
    return pure(_PSI_KETS[(i, j)], (2, 2))


def bell_phi_plus() -> DensityMatrix:
    return psi_family(0, 0)


def phi_family(k: int) -> DensityMatrix:
    """Four orthogonal two-qubit states used by the dephasing/depolarizing demo.

    ``Phi_0`` is the singlet, ``Phi_1 = psi_00``, ``Phi_2 = psi_11`` and
    ``Phi_3 = (|-0> - |+1>)/sqrt 2``.
    """
    if k == 0:
        return psi_family(0, 1)
    if k == 1:
        return psi_family(0, 0)
    if k == 2:
        return psi_family(1, 1)
    if k == 3:
        return pure((np.kron(KET_MINUS, KET0) - np.kron(KET_PLUS, KET1)) / np.sqrt(2), (2, 2))
    raise ValueError(f"phi_family index must be 0..3, got {k}")


def flagged_mixture(states: Sequence[DensityMatrix], weights: Sequence[float] | None = None) -> DensityMatrix:
    """``sum_k w_k states[k] (x) |k><k|`` with a fresh flag register."""
    n = len(states)
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    m = sum(w[k] * np.kron(states[k].mat, np.outer(basis_ket(k, n), basis_ket(k, n))) for k in range(n))
    return DensityMatrix(m, states[0].dims + (n,))


def psi_flag_state() -> DensityMatrix:
    """``1/4 sum_ij psi_ij (x) |ij><ij|`` with dims ``[2, 2, 2, 2]`` (A, A', B, B')."""
    order = [(0, 0), (0, 1), (1, 0), (1, 1)]
    rho = flagged_mixture([psi_family(*ij) for ij in order])
    return DensityMatrix(rho.mat, (2, 2, 2, 2))


# --- classical-quantum ensembles ------------------------------------------------


@dataclass(frozen=True, eq=False)
class CQState:
    """Ensemble ``{q_i, |a_i><a_i|, rho_i^B}`` with orthonormal ``|a_i>`` on A.

    ``basis`` holds the kets ``|a_i>`` as columns. The set need not be complete.
    """

    weights: np.ndarray
    basis: np.ndarray
    conditionals: tuple[DensityMatrix, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim == 1:
            b = b.reshape(-1, 1)
        conds = tuple(self.conditionals)
        if not (len(w) == b.shape[1] == len(conds)):
            raise DimensionError("weights, basis columns and conditionals must have equal length")
        if np.any(w < -TRACE_TOL) or abs(w.sum() - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"weights must be a probability vector, got {w}")
        gram = b.conj().T @ b
        if np.max(np.abs(gram - np.eye(len(w)))) > TRACE_TOL:
            raise InvalidStateError("basis kets are not orthonormal")
        d_b = {c.dim for c in conds}
        if len(d_b) != 1:
            raise DimensionError("conditionals must share one dimension")
        object.__setattr__(self, "weights", np.clip(w, 0.0, None))
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "conditionals", conds)

    @property
    def d_a(self) -> int:
        return self.basis.shape[0]

    @property
    def d_b(self) -> int:
        return self.conditionals[0].dim

    def projectors(self) -> list[np.ndarray]:
        return [np.outer(self.basis[:, i], self.basis[:, i].conj()) for i in range(len(self.weights))]


def cq_build(c: CQState, dims_a: Sequence[int] | None = None) -> DensityMatrix:
    """``sum_i q_i Pi_i (x) rho_i^B`` with dims ``[d_A, d_B]``.

    ``dims_a`` optionally splits the A side into factors (e.g. ``[2, 2]``).
    """
    m = sum(q * np.kron(p, rho.mat) for q, p, rho in zip(c.weights, c.projectors(), c.conditionals))
    a_dims = tuple(dims_a) if dims_a is not None else (c.d_a,)
    if int(np.prod(a_dims)) != c.d_a:
        raise DimensionError(f"dims_a {a_dims} do not multiply to {c.d_a}")
    return DensityMatrix(m, a_dims + tuple(c.conditionals[0].dims))


def flagged_cq(weights: Sequence[float], basis) -> CQState:
    """CQ ensemble with orthogonal computational flags ``|i>`` on B."""
    w = np.asarray(weights, dtype=float)
    n = len(w)
    flags = tuple(DensityMatrix(np.outer(basis_ket(i, n), basis_ket(i, n)), (n,)) for i in range(n))
    return CQState(w, basis, flags)


def optimal_mp_input(p: Sequence[float]) -> DensityMatrix:
    """``sum_i p_i |i><i| (x) |i><i|``, the classical input that saturates an MP channel."""
    d = len(p)
    return cq_build(flagged_cq(p, np.eye(d, dtype=complex)))


# --- files ---------------------------------------------------------------------


def state_to_json(rho: DensityMatrix) -> dict:
    return {"dims": list(rho.dims), "matrix": matrix_to_json(rho.mat)}


def state_from_json(obj: dict) -> DensityMatrix:
    try:
        dims = obj["dims"]
        mat = matrix_from_json(obj["matrix"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed state object: {exc}") from exc
    return DensityMatrix(mat, tuple(dims))


def load_state(path) -> DensityMatrix:
    return state_from_json(json.loads(Path(path).read_text()))


def save_state(rho: DensityMatrix, path) -> None:
    Path(path).write_text(json.dumps(state_to_json(rho), indent=2))


def cq_to_json(c: CQState, labels: Sequence[str]) -> dict:
    return {
        "weights": [float(w) for w in c.weights],
        "basis_labels": list(labels),
        "conditionals": [matrix_to_json(r.mat) for r in c.conditionals],
    }


def cq_from_json(obj: dict) -> CQState:
    try:
        labels = obj["basis_labels"]
        kets = np.column_stack([ket_from_label(lab) for lab in labels])
        conds = tuple(density(matrix_from_json(m)) for m in obj["conditionals"])
        return CQState(obj["weights"], kets, conds)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed CQ object: {exc}") from exc


def load_cq(path) -> CQState:
    return cq_from_json(json.loads(Path(path).read_text()))


def apply_local_unitary(rho: DensityMatrix, unitaries: Sequence[np.ndarray]) -> DensityMatrix:
    u = kron(*unitaries)
    return DensityMatrix(u @ rho.mat @ u.conj().T, rho.dims)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None, dims=None) -> DensityMatrix:
    """Random mixed state from a Ginibre matrix (``rank`` columns)."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m), tuple(dims) if dims is not None else (d,))


def hadamard_conjugated(rho: DensityMatrix, which: int) -> DensityMatrix:
    us = [I2, I2]
    us[which] = HADAMARD
    return apply_local_unitary(rho, us)
