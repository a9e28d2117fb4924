"""Quantum channels in Kraus form.

Covers the channel families used by the QCP machinery (Pauli, phase damping,
isotropic, completely decohering, measure-and-prepare, ...), composition and
tensoring, Pauli transfer coefficients, structural predicates, and the textual
channel-spec grammar shared by the CLI and config files.
"""

from __future__ import annotations

import json
import re
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import (
    HADAMARD,
    PAULIS,
    DimensionError,
    as_matrix,
    commutator,
    frobenius_norm,
    kron,
    matrix_from_json,
    random_unitary,
)
from .states import KET_PLUS, DensityMatrix

CPTP_TOL = 1e-10
NONZERO_TOL = 1e-8


class ChannelError(ValueError):
    pass


class ChannelSpecError(ValueError):
    """Malformed channel spec; ``position`` is the 0-based offending column."""

    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        super().__init__(f"{message} at position {position}: {text!r}")


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    deviation: float

    def __bool__(self):
        return self.ok


def validate(kraus_ops, tol: float = CPTP_TOL) -> ValidationReport:
    """Check ``sum_k E_k^dag E_k = I`` and report the Frobenius deviation."""
    ops = kraus_ops.kraus_ops if isinstance(kraus_ops, KrausChannel) else [as_matrix(k) for k in kraus_ops]
    d_in = ops[0].shape[1]
    s = sum(k.conj().T @ k for k in ops)
    dev = frobenius_norm(s - np.eye(d_in))
    return ValidationReport(dev <= tol, dev)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    kraus_ops: tuple
    d_in: int
    d_out: int
    label: str = ""

    def __post_init__(self):
        ops = tuple(as_matrix(k) for k in self.kraus_ops)
        if not ops:
            raise ChannelError("a channel needs at least one Kraus operator")
        for k in ops:
            if k.shape != (self.d_out, self.d_in):
                raise DimensionError(f"Kraus operator shape {k.shape} != ({self.d_out}, {self.d_in})")
        object.__setattr__(self, "kraus_ops", ops)
        rep = validate(ops)
        if not rep.ok:
            raise ChannelError(f"Kraus operators are not trace preserving (deviation {rep.deviation:.3e})")

    def __call__(self, rho):
        return apply(self, rho)

    def __repr__(self):
        return f"KrausChannel({self.label or '?'}, d_in={self.d_in}, d_out={self.d_out}, n_kraus={len(self.kraus_ops)})"


def channel(kraus_ops, label: str = "") -> KrausChannel:
    ops = [as_matrix(k) for k in kraus_ops]
    # drop numerically empty operators (zero-weight Pauli terms etc.)
    kept = [k for k in ops if np.max(np.abs(k)) > 1e-15] or ops[:1]
    d_out, d_in = kept[0].shape
    return KrausChannel(tuple(kept), d_in, d_out, label)


# --- application ---------------------------------------------------------------


def apply_kraus(kraus_ops, m: np.ndarray, dims: Sequence[int] | None = None, subsystem: int = 0) -> np.ndarray:
    """Apply Kraus operators to factor ``subsystem`` of a raw matrix."""
    if dims is None or len(dims) == 1:
        return sum(k @ m @ k.conj().T for k in kraus_ops)
    dims = list(dims)
    n = len(dims)
    t = m.reshape(dims + dims)
    out = 0
    for k in kraus_ops:
        x = np.tensordot(k, t, axes=([1], [subsystem]))
        x = np.moveaxis(x, 0, subsystem)
        x = np.tensordot(x, k.conj(), axes=([n + subsystem], [1]))
        x = np.moveaxis(x, -1, n + subsystem)
        out = out + x
    d_out = kraus_ops[0].shape[0]
    new = dims.copy()
    new[subsystem] = d_out
    d = int(np.prod(new))
    return out.reshape(d, d)


def apply(c: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    if rho.dim != c.d_in:
        raise DimensionError(f"channel expects dimension {c.d_in}, state has {rho.dim}")
    return DensityMatrix(apply_kraus(c.kraus_ops, rho.mat), (c.d_out,))


def apply_on(c: KrausChannel, rho: DensityMatrix, subsystem: int) -> DensityMatrix:
    """``(I (x) .. (x) c (x) .. I)(rho)`` acting on factor ``subsystem``."""
    if not 0 <= subsystem < len(rho.dims):
        raise DimensionError(f"subsystem {subsystem} out of range for dims {rho.dims}")
    if rho.dims[subsystem] != c.d_in:
        raise DimensionError(f"channel expects dimension {c.d_in}, subsystem has {rho.dims[subsystem]}")
    m = apply_kraus(c.kraus_ops, rho.mat, rho.dims, subsystem)
    dims = list(rho.dims)
    dims[subsystem] = c.d_out
    return DensityMatrix(m, tuple(dims))


def apply_local(channels: Sequence[KrausChannel | None], rho: DensityMatrix) -> DensityMatrix:
    """Apply one channel per leading subsystem; ``None`` leaves a factor alone."""
    out = rho
    for k, c in enumerate(channels):
        if c is not None:
            out = apply_on(c, out, k)
    return out


def tensor(c1: KrausChannel, c2: KrausChannel) -> KrausChannel:
    ops = tuple(np.kron(e, f) for e in c1.kraus_ops for f in c2.kraus_ops)
    return KrausChannel(ops, c1.d_in * c2.d_in, c1.d_out * c2.d_out, f"{c1.label}(x){c2.label}")


def compose(outer: KrausChannel, inner: KrausChannel) -> KrausChannel:
    """``outer o inner``."""
    if outer.d_in != inner.d_out:
        raise DimensionError("cannot compose channels with mismatched dimensions")
    ops = tuple(e @ f for e in outer.kraus_ops for f in inner.kraus_ops)
    return channel(ops, f"{outer.label}o{inner.label}")


def choi(c: KrausChannel) -> np.ndarray:
    """Choi matrix ``sum_ij |i><j| (x) c(|i><j|)``."""
    d = c.d_in
    j = np.zeros((d * c.d_out, d * c.d_out), dtype=complex)
    for i in range(d):
        for k in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, k] = 1.0
            j += np.kron(e, apply_kraus(c.kraus_ops, e))
    return j


def kraus_from_choi(j: np.ndarray, d_in: int, d_out: int, label: str = "") -> KrausChannel:
    w, v = np.linalg.eigh(0.5 * (j + j.conj().T))
    if w[0] < -1e-9:
        raise ChannelError(f"map is not completely positive (Choi eigenvalue {w[0]:.3e})")
    ops = []
    for lam, vec in zip(w, v.T):
        if lam > 1e-14:
            # vec[i*d_out + o] is the (o, i) Kraus entry
            ops.append(np.sqrt(lam) * vec.reshape(d_in, d_out).T)
    return channel(ops, label)


def equal(c1: KrausChannel, c2: KrausChannel, tol: float = 1e-10) -> bool:
    """Extensional equality via Choi matrices."""
    if (c1.d_in, c1.d_out) != (c2.d_in, c2.d_out):
        return False
    return frobenius_norm(choi(c1) - choi(c2)) <= tol


# --- families ------------------------------------------------------------------


@dataclass(frozen=True)
class PauliParams:
    """Pauli-channel weights ``lambda_0..lambda_3`` in normal form (``lambda_0`` largest)."""

    lambdas: tuple

    def __post_init__(self):
        lam = tuple(float(x) for x in self.lambdas)
        if len(lam) != 4:
            raise ChannelError("Pauli channel needs four weights")
        if min(lam) < -CPTP_TOL or abs(sum(lam) - 1.0) > CPTP_TOL:
            raise ChannelError(f"Pauli weights must form a probability vector, got {lam}")
        if any(lam[0] < x - CPTP_TOL for x in lam[1:]):
            raise ChannelError(f"Pauli weights must satisfy lambda_0 >= lambda_1,2,3, got {lam}")
        object.__setattr__(self, "lambdas", lam)

    def transfer(self) -> np.ndarray:
        lam = self.lambdas
        return np.array([2 * (lam[0] + lam[i]) - 1 for i in (1, 2, 3)])


@dataclass(frozen=True)
class TransferCoeffs:
    """Diagonal Pauli action ``c(sigma_i) = a_i sigma_i``."""

    a: tuple

    def __post_init__(self):
        a = tuple(float(x) for x in self.a)
        if len(a) != 3 or any(abs(x) > 1 + 1e-10 for x in a):
            raise ChannelError(f"transfer coefficients must be three numbers in [-1, 1], got {a}")
        object.__setattr__(self, "a", a)

    def __iter__(self):
        return iter(self.a)


def _pauli_kraus(lam: Sequence[float], label: str) -> KrausChannel:
    lam = [max(float(x), 0.0) for x in lam]
    return channel([np.sqrt(l) * PAULIS[i] for i, l in enumerate(lam)], label)


def pauli(params, label: str | None = None) -> KrausChannel:
    p = params if isinstance(params, PauliParams) else PauliParams(tuple(params))
    lam = p.lambdas
    return _pauli_kraus(lam, label or "pauli:" + ",".join(f"{x:g}" for x in lam))


def pauli_from_transfer(a: Sequence[float], label: str = "") -> KrausChannel:
    """Qubit Pauli channel with diagonal action ``sigma_i -> a_i sigma_i``."""
    a1, a2, a3 = (float(x) for x in a)
    lam = np.array(
        [
            1 + a1 + a2 + a3,
            1 + a1 - a2 - a3,
            1 - a1 + a2 - a3,
            1 - a1 - a2 + a3,
        ]
    ) / 4
    if lam.min() < -CPTP_TOL:
        raise ChannelError(f"transfer coefficients {(a1, a2, a3)} do not define a completely positive map")
    return _pauli_kraus(lam, label or f"transfer:{a1:g},{a2:g},{a3:g}")


def identity(d: int = 2) -> KrausChannel:
    return channel([np.eye(d, dtype=complex)], f"id:{d}")


def unitary(u, label: str = "unitary") -> KrausChannel:
    u = as_matrix(u)
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > CPTP_TOL:
        raise ChannelError("matrix is not unitary")
    return channel([u], label)


def phase_damping(p: float) -> KrausChannel:
    """Qubit dephasing whose coherences shrink by ``sqrt(1 - p)``."""
    if not 0.0 <= p <= 1.0:
        raise ChannelError(f"phase damping parameter must lie in [0, 1], got {p}")
    c = np.sqrt(1.0 - p)
    q = (1.0 - c) / 2
    return channel([np.sqrt(1 - q) * PAULIS[0], np.sqrt(q) * PAULIS[3]], f"pd:{p:g}")


def isotropic(a: float, d: int = 2) -> KrausChannel:
    """``rho -> a rho + (1 - a) I/d`` for ``a`` in ``[-1/(d^2-1), 1]``."""
    if d < 2:
        raise ChannelError("isotropic channel needs d >= 2")
    lo = -1.0 / (d * d - 1)
    if not lo - 1e-12 <= a <= 1.0 + 1e-12:
        raise ChannelError(f"isotropic parameter must lie in [{lo:.6g}, 1] for d={d}, got {a}")
    if d == 2:
        return pauli_from_transfer((a, a, a), f"iso:{a:g},2")
    # Choi of a*id + (1-a)*trace-and-replace
    phi = np.eye(d, dtype=complex).reshape(-1)
    j = a * np.outer(phi, phi) + (1 - a) * np.eye(d * d) / d
    return kraus_from_choi(j, d, d, f"iso:{a:g},{d}")


def depolarizing(a: float) -> KrausChannel:
    out = isotropic(a, 2)
    return KrausChannel(out.kraus_ops, 2, 2, f"dep:{a:g}")


def completely_depolarizing(d: int = 2) -> KrausChannel:
    ops = []
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1 / np.sqrt(d)
            ops.append(e)
    return channel(ops, f"cdp:{d}")


def completely_decohering(basis=None, d: int = 2) -> KrausChannel:
    """``rho -> sum_i <b_i|rho|b_i> |b_i><b_i|``; ``basis`` columns are the ``|b_i>``."""
    b = np.eye(d, dtype=complex) if basis is None else as_matrix(basis)
    if np.max(np.abs(b.conj().T @ b - np.eye(b.shape[1]))) > CPTP_TOL or b.shape[0] != b.shape[1]:
        raise ChannelError("decohering basis must be a complete orthonormal set")
    return channel([np.outer(b[:, i], b[:, i].conj()) for i in range(b.shape[1])], f"cd:{b.shape[0]}")


def completely_dephasing() -> KrausChannel:
    return pauli((0.5, 0.0, 0.0, 0.5), "dephase")


def projecting_depolarizing(a: float) -> KrausChannel:
    """Kills the sigma_1 Bloch component and shrinks the others by ``a``.

    Complete positivity restricts ``a`` to ``[0, 1/2]``.
    """
    if not 0.0 <= a <= 0.5 + 1e-12:
        raise ChannelError(f"projdep parameter must lie in [0, 0.5] to be completely positive, got {a}")
    return pauli_from_transfer((0.0, a, a), f"projdep:{a:g}")


def dephase_then_depolarize(b: float) -> KrausChannel:
    """Transfer ``(b, 0, 0)``: full sigma_1-basis dephasing followed by depolarizing."""
    if not -1.0 <= b <= 1.0:
        raise ChannelError(f"dpd parameter must lie in [-1, 1], got {b}")
    return pauli_from_transfer((b, 0.0, 0.0), f"dpd:{b:g}")


def mp_channel(etas: Sequence, basis=None, label: str = "mp") -> KrausChannel:
    """Measure in ``basis`` and prepare ``etas[i]`` on outcome ``i``.

    Kraus operators are ``sqrt(mu) |v><b_i|`` over the spectral decomposition
    ``eta_i = sum mu |v><v|``.
    """
    etas = [e.mat if isinstance(e, DensityMatrix) else as_matrix(e) for e in etas]
    d_in = len(etas)
    b = np.eye(d_in, dtype=complex) if basis is None else as_matrix(basis)
    if b.shape != (d_in, d_in) or np.max(np.abs(b.conj().T @ b - np.eye(d_in))) > CPTP_TOL:
        raise ChannelError("MP basis must be orthonormal with one column per prepared state")
    ops = []
    for i, eta in enumerate(etas):
        DensityMatrix(eta, (eta.shape[0],))
        w, v = np.linalg.eigh(0.5 * (eta + eta.conj().T))
        for mu, vec in zip(w, v.T):
            if mu > 1e-14:
                ops.append(np.sqrt(mu) * np.outer(vec, b[:, i].conj()))
    return channel(ops, label)


def mp_std2() -> KrausChannel:
    """Kraus ``{|0><0|, |+><1|}``, the qubit MP channel with maximal QCP."""
    e0 = np.array([[1, 0], [0, 0]], dtype=complex)
    e1 = np.outer(KET_PLUS, np.array([0, 1], dtype=complex))
    return channel([e0, e1], "mp:std2")


# --- transfer coefficients & predicates ------------------------------------------


def transfer_matrix(c: KrausChannel) -> np.ndarray:
    """Qubit Pauli transfer matrix ``R_ij = tr(sigma_i c(sigma_j)) / 2``."""
    if c.d_in != 2 or c.d_out != 2:
        raise DimensionError("transfer matrix is defined for qubit channels")
    r = np.zeros((4, 4))
    for j in range(4):
        out = apply_kraus(c.kraus_ops, PAULIS[j])
        for i in range(4):
            r[i, j] = np.real(np.trace(PAULIS[i] @ out)) / 2
    return r


def transfer_coefficients(c: KrausChannel, tol: float = 1e-10) -> TransferCoeffs:
    r = transfer_matrix(c)
    off = r - np.diag(np.diag(r))
    if np.max(np.abs(off)) > tol:
        raise ChannelError("channel is not diagonal in the Pauli basis")
    return TransferCoeffs(tuple(r[i, i] for i in (1, 2, 3)))


def is_unital(c: KrausChannel, tol: float = 1e-10) -> bool:
    if c.d_in != c.d_out:
        return False
    out = apply_kraus(c.kraus_ops, np.eye(c.d_in, dtype=complex))
    return frobenius_norm(out - np.eye(c.d_in)) <= tol


def is_unitary_channel(c: KrausChannel, tol: float = 1e-10) -> bool:
    """True when the channel is a single unitary conjugation (Choi rank one)."""
    if c.d_in != c.d_out:
        return False
    w = np.linalg.eigvalsh(choi(c))
    return bool(np.sum(w > tol) == 1)


def is_completely_decohering(c: KrausChannel, tol: float = 1e-9, seed: int = 0) -> bool:
    """True when ``c`` kills all coherences in some orthonormal basis.

    The candidate basis is the eigenbasis of ``c`` applied to a generic
    full-rank state; equality is then checked on Choi matrices.
    """
    if c.d_in != c.d_out:
        return False
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((c.d_in, c.d_in)) + 1j * rng.standard_normal((c.d_in, c.d_in))
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    out = apply_kraus(c.kraus_ops, rho)
    w, v = np.linalg.eigh(0.5 * (out + out.conj().T))
    if np.min(np.diff(w)) < 1e-6:
        return False
    return frobenius_norm(choi(c) - choi(completely_decohering(v))) <= tol


def random_commuting_pair(d: int, rng: np.random.Generator, pure_states: bool = False):
    """Two states diagonal in one Haar-random eigenbasis."""
    v = random_unitary(d, rng)
    if pure_states:
        p1 = np.eye(d)[0]
        p2 = np.eye(d)[1]
    else:
        p1 = rng.dirichlet(np.ones(d))
        p2 = rng.dirichlet(np.ones(d))
    x1 = (v * p1) @ v.conj().T
    x2 = (v * p2) @ v.conj().T
    return x1, x2


def is_commutativity_preserving(c: KrausChannel, trials: int = 200, seed: int = 0):
    """Monte-Carlo test of ``[c(x1), c(x2)] = 0`` for commuting ``x1, x2``.

    Returns ``(True, None)`` when no sampled pair violates the property (evidence,
    not proof) or ``(False, (x1, x2))`` for the first violating pair found.
    Even trials use orthogonal pure states, odd trials random common spectra.
    """
    rng = np.random.default_rng(seed)
    for t in range(trials):
        x1, x2 = random_commuting_pair(c.d_in, rng, pure_states=(t % 2 == 0))
        y1 = apply_kraus(c.kraus_ops, x1)
        y2 = apply_kraus(c.kraus_ops, x2)
        if frobenius_norm(commutator(y1, y2)) > NONZERO_TOL:
            return False, (x1, x2)
    return True, None


# --- channel-spec grammar --------------------------------------------------------

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_NAMED_UNITARIES = {
    "I": PAULIS[0],
    "X": PAULIS[1],
    "Y": PAULIS[2],
    "Z": PAULIS[3],
    "H": HADAMARD,
    "S": np.diag([1, 1j]).astype(complex),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]).astype(complex),
}


def _numbers(text: str, start: int, count: int | None, spec: str) -> list[float]:
    body = text[start:]
    if body == "":
        raise ChannelSpecError("missing parameter", spec, start)
    out = []
    pos = start
    for part in body.split(","):
        if not re.fullmatch(_NUMBER, part):
            raise ChannelSpecError(f"malformed number {part!r}", spec, pos)
        out.append(float(part))
        pos += len(part) + 1
    if count is not None and len(out) != count:
        raise ChannelSpecError(f"expected {count} parameter(s), got {len(out)}", spec, start)
    return out


def _int(text: str, start: int, spec: str) -> int:
    body = text[start:]
    if not re.fullmatch(r"\d+", body):
        raise ChannelSpecError(f"expected an integer dimension, got {body!r}", spec, start)
    return int(body)


def load_mp_file(path) -> KrausChannel:
    """MP channel from JSON ``{"etas": [matrix, ...], "basis": matrix?}``."""
    obj = json.loads(Path(path).read_text())
    etas = [matrix_from_json(m) for m in obj["etas"]]
    basis = matrix_from_json(obj["basis"]) if "basis" in obj else None
    return mp_channel(etas, basis, label=f"mp:{Path(path).name}")


def parse_channel_spec(text: str) -> KrausChannel:
    """Build a channel from its textual spec, e.g. ``pd:0.5`` or ``pauli:0.4,0.3,0.2,0.1``.

    Grammar: ``id[:d]``, ``unitary:<name|matrix-file>``, ``pauli:l0,l1,l2,l3``,
    ``pd:p``, ``dep:a``, ``iso:a,d``, ``cd[:d]``, ``cdp:d``, ``projdep:a``,
    ``dpd:b``, ``mp:std2`` and ``mp:<json-file>``. No whitespace.
    """
    spec = text
    if not spec:
        raise ChannelSpecError("empty channel spec", spec, 0)
    ws = re.search(r"\s", spec)
    if ws:
        raise ChannelSpecError("whitespace is not allowed", spec, ws.start())
    name, sep, _ = spec.partition(":")
    arg = len(name) + 1
    try:
        if name == "id":
            return identity(_int(spec, arg, spec) if sep else 2)
        if name == "cd":
            return completely_decohering(d=_int(spec, arg, spec) if sep else 2)
        if not sep:
            raise ChannelSpecError(f"channel {name!r} needs parameters", spec, len(name))
        if name == "pauli":
            return pauli(_numbers(spec, arg, 4, spec))
        if name == "pd":
            return phase_damping(*_numbers(spec, arg, 1, spec))
        if name == "dep":
            return depolarizing(*_numbers(spec, arg, 1, spec))
        if name == "iso":
            body = spec[arg:]
            a_txt, comma, _ = body.partition(",")
            if not comma:
                raise ChannelSpecError("iso needs 'a,d'", spec, arg + len(a_txt))
            a = _numbers(spec[: arg + len(a_txt)], arg, 1, spec)[0]
            return isotropic(a, _int(spec, arg + len(a_txt) + 1, spec))
        if name == "cdp":
            return completely_depolarizing(_int(spec, arg, spec))
        if name == "projdep":
            return projecting_depolarizing(*_numbers(spec, arg, 1, spec))
        if name == "dpd":
            return dephase_then_depolarize(*_numbers(spec, arg, 1, spec))
        if name == "mp":
            body = spec[arg:]
            if body == "std2":
                return mp_std2()
            if not body:
                raise ChannelSpecError("mp needs 'std2' or a JSON file", spec, arg)
            return load_mp_file(body)
        if name == "unitary":
            body = spec[arg:]
            if body in _NAMED_UNITARIES:
                return unitary(_NAMED_UNITARIES[body], f"unitary:{body}")
            if not body:
                raise ChannelSpecError("unitary needs a gate name or matrix file", spec, arg)
            m = matrix_from_json(json.loads(Path(body).read_text()))
            return unitary(m, f"unitary:{Path(body).name}")
    except FileNotFoundError as exc:
        raise ChannelSpecError(f"cannot read file ({exc.strerror})", spec, arg) from exc
    raise ChannelSpecError(f"unknown channel {name!r}", spec, 0)


def qubit_unitary_from_spec(name: str) -> np.ndarray:
    return _NAMED_UNITARIES[name]


def local_kraus(*channels: KrausChannel) -> tuple:
    """Kraus set of the tensor product without building a KrausChannel."""
    ops = [np.eye(1, dtype=complex)]
    for c in channels:
        ops = [kron(a, b) for a in ops for b in c.kraus_ops]
    return tuple(ops)
