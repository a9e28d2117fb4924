"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The helpers here
cover the handful of operations the rest of the code relies on: Kronecker
products, partial traces over arbitrary subsystem sets, Hermitian
eigendecomposition, commutators and norms, plus the JSON matrix schema.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from functools import reduce

import numpy as np

HERMITIAN_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


class DimensionError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d array, got shape {a.shape}")
    return a


def kron(*mats) -> np.ndarray:
    """Kronecker product of one or more matrices (left to right)."""
    if not mats:
        raise ValueError("kron needs at least one matrix")
    return reduce(np.kron, (as_matrix(m) for m in mats))


def pauli_string(indices: Sequence[int]) -> np.ndarray:
    """``sigma_{i1} (x) sigma_{i2} (x) ...`` for Pauli indices in 0..3."""
    return kron(*(PAULIS[i] for i in indices))


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Kept subsystems stay in their original order.
    """
    m = as_matrix(m)
    dims = [int(d) for d in dims]
    keep = sorted({int(k) for k in keep})
    n = len(dims)
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise DimensionError(f"matrix shape {m.shape} does not match dims {dims}")
    if not keep:
        raise DimensionError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionError(f"keep {keep} out of range for {n} subsystems")

    t = m.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # contract paired indices from the highest down so axis numbers stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        cur = n - count
        t = np.trace(t, axis1=i, axis2=i + cur)
    d_keep = int(np.prod([dims[k] for k in keep]))
    return t.reshape(d_keep, d_keep)


def permute_subsystems(m, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: new factor ``k`` is old factor ``order[k]``."""
    m = as_matrix(m)
    dims = list(dims)
    n = len(dims)
    if sorted(order) != list(range(n)):
        raise DimensionError(f"order {order} is not a permutation of {n} subsystems")
    t = m.reshape(dims + dims)
    t = t.transpose(list(order) + [n + k for k in order])
    d = int(np.prod(dims))
    return t.reshape(d, d)


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    m = as_matrix(m)
    return m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T), initial=0.0) <= tol


def _jacobi_eigh(h: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100):
    """Cyclic Jacobi for complex Hermitian matrices.

    Each (p, q) step strips the phase of ``h[p, q]`` with a diagonal unitary,
    then applies the real 2x2 rotation that annihilates the element.
    """
    a = h.copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1.0)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = abs(a[p, q])
                if g <= 1e-300:
                    continue
                phase = a[p, q] / g
                app, aqq = a[p, p].real, a[q, q].real
                theta = 0.5 * np.arctan2(2.0 * g, app - aqq)
                c, s = np.cos(theta), np.sin(theta)
                # columns p, q of G = D R with D = diag(.., 1, conj(phase), ..)
                gp = np.array([c, s * np.conj(phase)])
                gq = np.array([-s, c * np.conj(phase)])
                cols = a[:, [p, q]]
                a[:, p] = cols @ gp
                a[:, q] = cols @ gq
                rows = a[[p, q], :]
                a[p, :] = gp.conj() @ rows
                a[q, :] = gq.conj() @ rows
                a[p, q] = a[q, p] = 0.0
                vc = v[:, [p, q]]
                v[:, p] = vc @ gp
                v[:, q] = vc @ gq
    else:
        raise RuntimeError("Jacobi eigensolver did not converge")
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def hermitian_eig(m, method: str = "jacobi"):
    """Eigenvalues (ascending) and orthonormal eigenvector columns.

    ``method="jacobi"`` runs the in-house cyclic Jacobi solver; ``"lapack"``
    defers to ``numpy.linalg.eigh``. The input is checked for Hermiticity and
    symmetrized before solving.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix must be square, got {m.shape}")
    if not is_hermitian(m):
        raise NotHermitianError("matrix is not Hermitian within 1e-10")
    h = 0.5 * (m + m.conj().T)
    if method == "jacobi":
        return _jacobi_eigh(h)
    if method == "lapack":
        w, v = np.linalg.eigh(h)
        return w, v
    raise ValueError(f"unknown eigensolver {method!r}")


def eigvalsh(m) -> np.ndarray:
    """Fast eigenvalues of (a stack of) Hermitian matrices, no checks."""
    return np.linalg.eigvalsh(m)


def commutator(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise DimensionError(f"commutator needs equal square shapes, got {a.shape} and {b.shape}")
    return a @ b - b @ a


def frobenius_norm(m) -> float:
    return float(np.linalg.norm(np.asarray(m), "fro"))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def matrix_to_json(m) -> dict:
    m = as_matrix(m)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "re": [float(x) for x in m.real.ravel()],
        "im": [float(x) for x in m.imag.ravel()],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", [0.0] * (rows * cols)), dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix object: {exc}") from exc
    if re.size != rows * cols or im.size != rows * cols:
        raise DimensionError(f"matrix entries do not match {rows}x{cols}")
    return (re + 1j * im).reshape(rows, cols)
