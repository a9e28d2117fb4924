"""Quantum-correlating power and the super-activation / additivity checks.

``qcp_estimate`` maximises output discord over classical-quantum inputs
``sum_i q_i |u_i><u_i| (x) |f_i><f_i|``. Flags ``|f_i>`` on B are orthogonal
computational states by default: any other pure flags are the image of these
under a channel on B, which cannot increase discord measured on A.

During the outer search the inner discord is approximate (a zoomed angle grid
on qubit sides, a warm-started short simplex otherwise); every reported value
is re-evaluated with the full :func:`discord` optimizer. Reported values are
lower estimates of the true QCP on the input side and upper estimates on the
measurement side (rank-1 projective measurements, finite restarts).
"""

from __future__ import annotations

import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import channels as ch
from .channels import KrausChannel, apply_kraus, local_kraus, tensor
from .commutators import (
    _PERMS,
    DEFAULT_CASE1,
    DEFAULT_CASE2,
    NONZERO_TOL,
    case1_bloch,
    case2_bloch,
    constrained_pair_sampler,
    output_commutator,
)
from .discord import (
    DiscordConfig,
    DiscordResult,
    _measured_entropy_batch,
    bloch_basis,
    discord,
    givens_unitary,
)
from .linalg import (
    PAULIS,
    SY,
    DimensionError,
    commutator,
    frobenius_norm,
    partial_trace,
    random_unitary,
)
from .states import (
    KET0,
    KET1,
    KET_MINUS,
    KET_PLUS,
    CQState,
    DensityMatrix,
    InvalidStateError,
    basis_ket,
    cq_build,
    flagged_cq,
    flagged_mixture,
    phi_family,
    psi_family,
    psi_flag_state,
    pure,
    to_two_qubit_bloch,
)

CAVEATS = (
    "input side: finite restarts, so the value is a lower estimate of the maximum over CQ inputs",
    "measurement side: rank-1 projective measurements only, so each discord is an upper estimate",
)
MAX_TOTAL_DIM = 16
THEOREM3_TOL = 1e-3
THEOREM4_TOL = 2e-2
BLOCK_TOL = 1e-4


# --- reports ---------------------------------------------------------------------------


def _clean(x):
    """JSON-ready copy with plain floats/ints/lists."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


@dataclass
class TheoremReport:
    """Outcome of one verification job.

    ``runtime_s`` is kept on the object but left out of :meth:`to_dict` unless
    asked for, so serialized reports stay reproducible from their inputs.
    """

    theorem: str
    inputs: dict
    quantities: dict
    passed: bool
    tolerance: float
    runtime_s: float = 0.0
    notes: list = field(default_factory=list)

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "theorem": self.theorem,
            "inputs": _clean(self.inputs),
            "quantities": _clean(self.quantities),
            "passed": bool(self.passed),
            "tolerance": float(self.tolerance),
            "notes": list(self.notes),
        }
        if timing:
            out["runtime_s"] = float(self.runtime_s)
        return out


@dataclass
class QcpConfig:
    """Search budget for :func:`qcp_estimate`.

    ``n_terms`` and ``d_b`` default to the input dimension of the channel.
    ``outer_evals=None`` picks ``60 * (n_params + 1)`` objective evaluations
    per restart. ``flags`` is ``"orthogonal"`` or ``"pure"`` (free pure flags).
    """

    n_terms: int | None = None
    d_b: int | None = None
    restarts: int = 3
    seed: int = 0
    outer_evals: int | None = None
    flags: str = "orthogonal"
    inner_evals: int = 400
    discord_restarts: int = 4
    xatol: float = 1e-7

    def discord_config(self) -> DiscordConfig:
        return DiscordConfig(restarts=self.discord_restarts, seed=self.seed, xatol=self.xatol)


@dataclass(frozen=True, eq=False)
class QcpEstimate:
    value: float
    optimal_input: CQState
    restarts_used: int
    converged: bool
    evaluations: int
    output_discord: DiscordResult = field(repr=False, default=None)
    start_values: tuple = ()
    caveats: tuple = CAVEATS

    def to_dict(self) -> dict:
        inp = self.optimal_input
        return {
            "value": float(self.value),
            "weights": [float(w) for w in inp.weights],
            "basis": {"re": np.real(inp.basis).tolist(), "im": np.imag(inp.basis).tolist()},
            "restarts_used": int(self.restarts_used),
            "converged": bool(self.converged),
            "evaluations": int(self.evaluations),
            "caveats": list(self.caveats),
        }


# --- CQ parametrisation ---------------------------------------------------------------------


def _kraus_stack(c: KrausChannel) -> np.ndarray:
    return np.stack(c.kraus_ops)


def _images(ks: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``c(|u_i><u_i|)`` for each column ``u_i``; shape (n, d_out, d_out)."""
    ku = np.einsum("kop,pi->iko", ks, u)
    return np.einsum("iko,ikq->ioq", ku, ku.conj())


def _output_tensor(imgs: np.ndarray, q: np.ndarray, flags: np.ndarray | None) -> np.ndarray:
    """``sum_i q_i imgs_i (x) |f_i><f_i|`` as a (dA, dB, dA, dB) tensor."""
    n, da, _ = imgs.shape
    if flags is None:
        t = np.zeros((da, n, da, n), dtype=complex)
        for i in range(n):
            t[:, i, :, i] = q[i] * imgs[i]
        return t
    fo = np.einsum("bi,ci->ibc", flags, flags.conj())
    return np.einsum("i,iac,ibd->abcd", q, imgs, fo)


def _cond_entropy_t(t: np.ndarray) -> float:
    da, db = t.shape[0], t.shape[1]
    w = np.linalg.eigvalsh(t.reshape(da * db, da * db))
    wa = np.linalg.eigvalsh(np.einsum("abcb->ac", t))
    return float(_h(w) - _h(wa))


def _h(w):
    w = w[w > 1e-15]
    return -float(np.sum(w * np.log2(w)))


def _qubit_zoom_min(t: np.ndarray, grid=(12, 24), rounds: int = 6, k: int = 5, shrink: float = 3.0):
    """Approximate minimum over qubit measurement bases by successive zoomed grids."""
    th = np.linspace(0.0, np.pi, grid[0])
    ph = np.linspace(0.0, 2 * np.pi, grid[1], endpoint=False)
    tt, pp = np.meshgrid(th, ph, indexing="ij")
    tt, pp = tt.ravel(), pp.ravel()
    vals = _measured_entropy_batch(t, bloch_basis(tt, pp))
    i = int(np.argmin(vals))
    best, bt, bp = float(vals[i]), tt[i], pp[i]
    dt, dp = th[1] - th[0], ph[1] - ph[0]
    offs = np.linspace(-1.0, 1.0, k)
    for _ in range(rounds):
        gt, gp = np.meshgrid(bt + dt * offs, bp + dp * offs, indexing="ij")
        gt, gp = gt.ravel(), gp.ravel()
        vals = _measured_entropy_batch(t, bloch_basis(gt, gp))
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, bt, bp = float(vals[i]), gt[i], gp[i]
        dt /= shrink
        dp /= shrink
    return best, bloch_basis(bt, bp)


def _warm_min(t: np.ndarray, base: np.ndarray, evals: int, step: float = 0.1):
    d = base.shape[0]
    n = d * (d - 1)

    def f(x):
        return float(_measured_entropy_batch(t, (base @ givens_unitary(x, d))[None])[0])

    x0 = np.zeros(n)
    pts = np.tile(x0, (n + 1, 1))
    pts[1:] += step * np.eye(n)
    res = minimize(f, x0, method="Nelder-Mead", options={"maxfev": evals, "initial_simplex": pts, "xatol": 1e-6, "fatol": 1e-10})
    return float(res.fun), base @ givens_unitary(res.x, d)


class _Problem:
    """Maps a real parameter vector to a CQ input and its channel output."""

    def __init__(self, c: KrausChannel, n: int, d_b: int, flags: str):
        self.c = c
        self.ks = _kraus_stack(c)
        self.d = c.d_in
        self.n = n
        self.d_b = d_b
        self.pure_flags = flags == "pure"
        self.n_w = n - 1
        self.n_u = self.d * (self.d - 1)
        self.n_f = 2 * d_b * n if self.pure_flags else 0
        self.size = self.n_w + self.n_u + self.n_f

    def decode(self, x: np.ndarray, u0: np.ndarray):
        logits = np.concatenate([[0.0], x[: self.n_w]])
        q = np.exp(logits - logits.max())
        q /= q.sum()
        u = (u0 @ givens_unitary(x[self.n_w : self.n_w + self.n_u], self.d))[:, : self.n]
        flags = None
        if self.pure_flags:
            f = x[self.n_w + self.n_u :].reshape(2, self.d_b, self.n)
            flags = f[0] + 1j * f[1]
            flags = flags / np.linalg.norm(flags, axis=0)
        return q, u, flags

    def tensor(self, x, u0):
        q, u, flags = self.decode(x, u0)
        return _output_tensor(_images(self.ks, u), q, flags)

    def cq_state(self, x, u0) -> CQState:
        q, u, flags = self.decode(x, u0)
        if flags is None:
            if self.n == self.d_b:
                return flagged_cq(q, u)
            flags = np.eye(self.d_b, self.n, dtype=complex)
        conds = tuple(pure(flags[:, i], (self.d_b,)) for i in range(self.n))
        return CQState(q, u, conds)

    def encode(self, cq: CQState):
        """Chart centre ``u0`` and parameters reproducing ``cq`` (orthogonal flags assumed)."""
        q = np.clip(np.asarray(cq.weights, dtype=float), 1e-9, None)
        x = self.origin()
        x[: self.n_w] = np.log(q[1:] / q[0])
        return x, _complete_basis(cq.basis)

    def origin(self) -> np.ndarray:
        """Equal weights, chart centre, and orthogonal flags when flags are free."""
        x = np.zeros(self.size)
        if self.pure_flags:
            f = np.eye(self.d_b, self.n)
            x[self.n_w + self.n_u :] = np.concatenate([f.ravel(), np.zeros(f.size)])
        return x

    def output_state(self, x, u0) -> DensityMatrix:
        t = self.tensor(x, u0)
        da, db = t.shape[0], t.shape[1]
        return DensityMatrix(t.reshape(da * db, da * db), (da, db))


def _complete_basis(b: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a unitary (Gram-Schmidt against the standard basis)."""
    b = np.asarray(b, dtype=complex)
    d = b.shape[0]
    cols = [b[:, i] for i in range(b.shape[1])]
    for e in np.eye(d, dtype=complex):
        if len(cols) == d:
            break
        v = e - sum(np.vdot(c, e) * c for c in cols)
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            cols.append(v / nv)
    return np.column_stack(cols)


def qcp_estimate(c: KrausChannel, cfg: QcpConfig | None = None, starts: Sequence[CQState] = ()) -> QcpEstimate:
    """Estimate ``max_{rho in C0} discord((c (x) I)(rho))`` measured on the channel side.

    ``starts`` are extra CQ inputs searched first (e.g. a known good product
    input for a composite channel). Deterministic for a fixed configuration.
    """
    cfg = cfg or QcpConfig()
    d = c.d_in
    n = cfg.n_terms or d
    if n > d:
        raise ValueError(f"n_terms ({n}) cannot exceed the input dimension ({d})")
    d_b = cfg.d_b or d
    if cfg.flags not in ("orthogonal", "pure"):
        raise ValueError(f"unknown flag mode {cfg.flags!r}")
    if cfg.flags == "orthogonal" and d_b < n:
        raise ValueError("orthogonal flags need d_b >= n_terms")
    if c.d_out * d_b > MAX_TOTAL_DIM:
        raise DimensionError(f"output dimension {c.d_out * d_b} exceeds the supported {MAX_TOTAL_DIM}")
    prob = _Problem(c, n, d_b, cfg.flags)
    if cfg.flags == "orthogonal" and d_b > n:
        prob.d_b = n
    rng = np.random.default_rng(cfg.seed)
    dcfg = cfg.discord_config()
    qubit = c.d_out == 2
    max_evals = cfg.outer_evals or 60 * (prob.size + 1)

    launch = [prob.encode(s) for s in starts]
    launch.append((prob.origin(), np.eye(d, dtype=complex)))
    while len(launch) < len(starts) + cfg.restarts:
        x = np.zeros(prob.size)
        x[: prob.n_w] = rng.normal(0.0, 1.0, prob.n_w)
        if prob.pure_flags:
            x[prob.n_w + prob.n_u :] = rng.normal(0.0, 1.0, prob.n_f)
        launch.append((x, random_unitary(d, rng)))

    evals = 0
    start_values = []
    best = None  # (value, x, u0, DiscordResult)
    converged = True
    for x0, u0 in launch:
        state0 = prob.output_state(x0, u0)
        full0 = discord(state0, measured=0, config=dcfg)
        evals += full0.evaluations
        start_values.append(full0.value)
        warm = {"u": full0.basis}
        cands = [(full0.value, x0, full0)]

        def objective(x, u0=u0, warm=warm):
            t = prob.tensor(x, u0)
            if qubit:
                m, _ = _qubit_zoom_min(t)
            else:
                m, warm["u"] = _warm_min(t, warm["u"], cfg.inner_evals)
            return -(m - _cond_entropy_t(t))

        if prob.size:
            pts = np.tile(x0, (prob.size + 1, 1))
            pts[1:] += 0.3 * np.eye(prob.size)
            res = minimize(
                objective,
                x0,
                method="Nelder-Mead",
                options={"maxfev": max_evals, "initial_simplex": pts, "xatol": 1e-4, "fatol": 1e-7},
            )
            evals += int(res.nfev)
            converged = converged and bool(res.success)
            state1 = prob.output_state(res.x, u0)
            full1 = discord(state1, measured=0, config=dcfg, starts=[warm["u"]])
            evals += full1.evaluations
            cands.append((full1.value, res.x, full1))
        for val, x, res_d in cands:
            if best is None or val > best[0] + 1e-12:
                best = (val, x, u0, res_d)

    val, x, u0, res_d = best
    return QcpEstimate(
        value=float(val),
        optimal_input=prob.cq_state(x, u0),
        restarts_used=len(launch),
        converged=converged and res_d.converged,
        evaluations=evals,
        output_discord=res_d,
        start_values=tuple(start_values),
    )


def output_state(c: KrausChannel, cq: CQState, dims_a: Sequence[int] | None = None) -> DensityMatrix:
    """``(c (x) I)(cq_build(cq))``; ``dims_a`` splits the channel side into factors."""
    rho = cq_build(cq)
    out = ch.apply_on(c, rho, 0)
    if dims_a is None:
        return out
    return DensityMatrix(out.mat, tuple(dims_a) + out.dims[1:])


def product_input(cq1: CQState, cq2: CQState) -> CQState:
    """Tensor product of two flagged CQ inputs with the flag registers merged."""
    q = np.kron(cq1.weights, cq2.weights)
    u = np.column_stack([np.kron(cq1.basis[:, i], cq2.basis[:, j]) for i in range(cq1.basis.shape[1]) for j in range(cq2.basis.shape[1])])
    conds = tuple(
        DensityMatrix(np.kron(a.mat, b.mat), (a.dim * b.dim,)) for a in cq1.conditionals for b in cq2.conditionals
    )
    return CQState(q, u, conds)


# --- witnesses -----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Witness:
    """Commuting input pair whose local-channel outputs do not commute."""

    x1: DensityMatrix
    x2: DensityMatrix
    commutator_norm: float
    family: str
    constrained: bool
    output_discord: float | None = None

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "commutator_norm": float(self.commutator_norm),
            "constrained": bool(self.constrained),
            "output_discord": None if self.output_discord is None else float(self.output_discord),
        }


def _template_pairs():
    """The shipped two-qubit witness menu with axis relabellings and side swaps."""
    bases = [
        ("bell", to_two_qubit_bloch(psi_family(0, 0)), to_two_qubit_bloch(psi_family(1, 1))),
        ("case1", *case1_bloch(DEFAULT_CASE1["r"], DEFAULT_CASE1["n"], DEFAULT_CASE1["t"])),
        ("case2", *case2_bloch(DEFAULT_CASE2["r"], DEFAULT_CASE2["t"])),
    ]
    for name, b1, b2 in bases:
        for perm in _PERMS:
            for swap in (False, True):
                y1, y2 = b1.permuted(perm), b2.permuted(perm)
                if swap:
                    y1, y2 = y1.swapped(), y2.swapped()
                try:
                    x1 = DensityMatrix(y1.operator(), (2, 2))
                    x2 = DensityMatrix(y2.operator(), (2, 2))
                except InvalidStateError:
                    continue
                label = f"{name}:perm={''.join(str(p + 1) for p in perm)}{':swap' if swap else ''}"
                yield label, x1, x2


def _menu_kets(d: int) -> list[np.ndarray]:
    """Pure states used by the product construction: axis states of the first two levels plus tilted ones."""
    kets = []
    for c in (KET0, KET1, KET_PLUS, KET_MINUS, (KET0 + 1j * KET1) / np.sqrt(2), (KET0 - 1j * KET1) / np.sqrt(2)):
        v = np.zeros(d, dtype=complex)
        v[:2] = c
        kets.append(v)
    for th in (np.pi / 8, 3 * np.pi / 8):
        v = np.zeros(d, dtype=complex)
        v[0], v[1] = np.cos(th / 2), np.sin(th / 2) * np.exp(0.3j)
        kets.append(v)
    for i in range(2, d):
        kets.append(basis_ket(i, d))
    return kets


def _perp(v: np.ndarray) -> list[np.ndarray]:
    """Menu states orthogonal to ``v`` within its two-level block, or other levels."""
    d = v.size
    if abs(v[0]) + abs(v[1]) > 1e-12 and np.all(np.abs(v[2:]) < 1e-12):
        w = np.zeros(d, dtype=complex)
        w[0], w[1] = -np.conj(v[1]), np.conj(v[0])
        return [w] + [basis_ket(i, d) for i in range(2, d)]
    return [basis_ket(0, d)]


def _product_pairs(d1: int, d2: int):
    """``xi_1 = |a1><a1| (x) |b1><b1|``, ``xi_2 = |a2><a2| (x) |b2><b2|`` with ``a1 _|_ a2`` or ``b1 _|_ b2``."""
    k1, k2 = _menu_kets(d1), _menu_kets(d2)
    for a1 in k1:
        for a2 in _perp(a1):
            for b1 in k2:
                for b2 in k2:
                    yield "product:A", np.kron(a1, b1), np.kron(a2, b2)
    for b1 in k2:
        for b2 in _perp(b1):
            for a1 in k1:
                for a2 in k1:
                    yield "product:B", np.kron(a1, b1), np.kron(a2, b2)


def _witness_discord(c1, c2, x1: DensityMatrix, x2: DensityMatrix, seed: int) -> float | None:
    d12 = x1.dim
    if d12 > 4:
        return None
    rho = DensityMatrix(0.5 * (np.kron(x1.mat, np.diag([1, 0])) + np.kron(x2.mat, np.diag([0, 1]))), x1.dims + (2,))
    out = DensityMatrix(apply_kraus(local_kraus(c1, c2), rho.mat, (d12, 2), 0), rho.dims)
    return discord(out, measured=(0, 1), config=DiscordConfig(restarts=4, seed=seed)).value


def _search(c1, c2, pairs, constrained: bool, threshold: float):
    ops = local_kraus(c1, c2)
    best = None
    for label, x1, x2 in pairs:
        m1 = x1.mat if isinstance(x1, DensityMatrix) else np.outer(x1, x1.conj())
        m2 = x2.mat if isinstance(x2, DensityMatrix) else np.outer(x2, x2.conj())
        nrm = frobenius_norm(commutator(apply_kraus(ops, m1), apply_kraus(ops, m2)))
        if nrm > threshold and (best is None or nrm > best[0] + 1e-14):
            best = (nrm, label, m1, m2)
    if best is None:
        return None
    nrm, label, m1, m2 = best
    dims = (c1.d_in, c2.d_in)
    return Witness(DensityMatrix(m1, dims), DensityMatrix(m2, dims), nrm, label, constrained)


STRATEGIES = ("auto", "constrained", "templates", "sampler", "product")


def superactivation_witness(
    c1: KrausChannel,
    c2: KrausChannel,
    strategy: str = "auto",
    trials: int = 1000,
    seed: int = 0,
    with_discord: bool = True,
    check_zero_qcp: bool = True,
    threshold: float = NONZERO_TOL,
) -> Witness | None:
    """Search for a commuting pair whose outputs under ``c1 (x) c2`` fail to commute.

    Strategies: ``templates`` (Bell/case1/case2 pairs with axis relabellings),
    ``sampler`` (``trials`` constrained random pairs), ``product`` (product
    pairs, which may carry pairwise correlations), ``constrained`` (templates
    then sampler) and ``auto`` (constrained then product). ``None`` means the
    menu was exhausted: inconclusive, not a proof of additivity.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    if check_zero_qcp:
        for k, c in enumerate((c1, c2), start=1):
            ok, _ = ch.is_commutativity_preserving(c, seed=seed)
            if not ok:
                raise ValueError(f"channel {k} ({c.label}) is not commutativity preserving, so it already has positive QCP")
    qubits = c1.d_in == 2 and c2.d_in == 2
    plan = {
        "templates": ["templates"],
        "sampler": ["sampler"],
        "product": ["product"],
        "constrained": ["templates", "sampler"],
        "auto": ["templates", "sampler", "product"],
    }[strategy]
    found = None
    for step in plan:
        if step in ("templates", "sampler") and not qubits:
            continue
        if step == "templates":
            found = _search(c1, c2, _template_pairs(), True, threshold)
        elif step == "sampler":
            pairs = ((f"sampler:{p.family}:{i}", p.x1, p.x2) for i, p in enumerate(constrained_pair_sampler(seed, trials)))
            found = _search(c1, c2, pairs, True, threshold)
        else:
            found = _search(c1, c2, _product_pairs(c1.d_in, c2.d_in), False, threshold)
        if found is not None:
            break
    if found is None or not with_discord:
        return found
    dq = _witness_discord(c1, c2, found.x1, found.x2, seed)
    return Witness(found.x1, found.x2, found.commutator_norm, found.family, found.constrained, dq)


def max_constrained_commutator(c1: KrausChannel, c2: KrausChannel, trials: int = 1000, seed: int = 0) -> float:
    """Largest output commutator norm over the templates and ``trials`` sampler pairs."""
    ops = local_kraus(c1, c2)
    worst = 0.0
    pairs = list(_template_pairs()) + [("s", p.x1, p.x2) for p in constrained_pair_sampler(seed, trials)]
    for _, x1, x2 in pairs:
        worst = max(worst, frobenius_norm(commutator(apply_kraus(ops, x1.mat), apply_kraus(ops, x2.mat))))
    return worst


# --- theorem checks ------------------------------------------------------------------------


def _classify(c: KrausChannel, seed: int) -> dict:
    cp, _ = ch.is_commutativity_preserving(c, seed=seed)
    return {
        "label": c.label,
        "commutativity_preserving": bool(cp),
        "completely_decohering": bool(ch.is_completely_decohering(c)),
        "unitary": bool(ch.is_unitary_channel(c)),
        "unital": bool(ch.is_unital(c)),
    }


def verify_theorem1(
    c1: KrausChannel, c2: KrausChannel, trials: int = 1000, seed: int = 0, threshold: float = NONZERO_TOL
) -> TheoremReport:
    """Zero-QCP pair: a witness exists unless both are completely decohering or both unitary."""
    t0 = time.perf_counter()
    k1, k2 = _classify(c1, seed), _classify(c2, seed)
    notes = []
    if not (k1["commutativity_preserving"] and k2["commutativity_preserving"]):
        notes.append("precondition failed: both channels must have zero QCP")
        return TheoremReport("1", {"channel1": c1.label, "channel2": c2.label, "seed": seed, "trials": trials},
                             {"channel1": k1, "channel2": k2}, False, threshold, time.perf_counter() - t0, notes)
    excluded = (k1["completely_decohering"] and k2["completely_decohering"]) or (k1["unitary"] and k2["unitary"])
    w = superactivation_witness(c1, c2, "auto", trials=trials, seed=seed, check_zero_qcp=False, threshold=threshold)
    found = w is not None
    quantities = {
        "channel1": k1,
        "channel2": k2,
        "superactivation_predicted": not excluded,
        "witness_found": found,
        "witness": None if w is None else w.to_dict(),
    }
    if not found:
        notes.append("witness menu exhausted (inconclusive by itself)")
    return TheoremReport("1", {"channel1": c1.label, "channel2": c2.label, "seed": seed, "trials": trials},
                         quantities, found == (not excluded), threshold, time.perf_counter() - t0, notes)


def theorem2_exclusion(a: Sequence[float], b: Sequence[float], tol: float = 1e-10) -> str | None:
    """Reason why a Pauli-diagonal pair cannot be super-activated without pairwise correlation, else None.

    Excluded: one channel completely depolarizing, or both equal to one
    isotropic channel up to Pauli conjugations (equal ``|a_i|`` everywhere and
    equal sign parity).
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if np.all(np.abs(a) <= tol) or np.all(np.abs(b) <= tol):
        return "completely depolarizing"
    mags = np.concatenate([np.abs(a), np.abs(b)])
    if np.ptp(mags) <= tol and np.prod(np.sign(a)) == np.prod(np.sign(b)):
        return "identical isotropic up to Pauli frames"
    return None


def verify_theorem2(
    c1: KrausChannel, c2: KrausChannel, trials: int = 1000, seed: int = 0, threshold: float = NONZERO_TOL
) -> TheoremReport:
    """Unital qubit pair: constrained witnesses exist exactly outside the excluded cases."""
    t0 = time.perf_counter()
    inputs = {"channel1": c1.label, "channel2": c2.label, "seed": seed, "trials": trials}
    try:
        a = ch.transfer_coefficients(c1).a
        b = ch.transfer_coefficients(c2).a
    except (ValueError, DimensionError) as exc:
        return TheoremReport("2", inputs, {}, False, threshold, time.perf_counter() - t0,
                             [f"precondition failed: Pauli-diagonal qubit channels required ({exc})"])
    reason = theorem2_exclusion(a, b)
    w = superactivation_witness(c1, c2, "constrained", trials=trials, seed=seed, check_zero_qcp=False, threshold=threshold)
    quantities = {
        "transfer1": list(a),
        "transfer2": list(b),
        "excluded": reason,
        "superactivation_predicted": reason is None,
        "witness_found": w is not None,
        "witness": None if w is None else w.to_dict(),
    }
    if reason is not None:
        quantities["max_constrained_commutator"] = max_constrained_commutator(c1, c2, trials, seed)
    return TheoremReport("2", inputs, quantities, (w is not None) == (reason is None), threshold,
                         time.perf_counter() - t0, [])


@dataclass
class TheoremConfig:
    """Budgets for the theorem 3/4 checks."""

    seed: int = 0
    qcp: QcpConfig = field(default_factory=QcpConfig)
    composite_search: bool = True
    composite_restarts: int = 1
    composite_evals: int = 60
    composite_inner_evals: int = 200
    tolerance: float | None = None


def _composite_cfg(cfg: TheoremConfig, d: int) -> QcpConfig:
    return QcpConfig(
        n_terms=d,
        d_b=d,
        restarts=cfg.composite_restarts,
        seed=cfg.seed,
        outer_evals=cfg.composite_evals,
        inner_evals=cfg.composite_inner_evals,
        discord_restarts=cfg.qcp.discord_restarts,
        xatol=cfg.qcp.xatol,
    )


def _qcp(c, cfg: TheoremConfig) -> QcpEstimate:
    return qcp_estimate(c, replace(cfg.qcp, seed=cfg.seed))


def verify_theorem3(c1: KrausChannel, c2: KrausChannel, cfg: TheoremConfig | None = None) -> TheoremReport:
    """Super-additivity: ``Q(c1 (x) c2) >= Q(c1) + Q(c2)`` up to tolerance."""
    cfg = cfg or TheoremConfig()
    tol = THEOREM3_TOL if cfg.tolerance is None else cfg.tolerance
    t0 = time.perf_counter()
    e1, e2 = _qcp(c1, cfg), _qcp(c2, cfg)
    prod = product_input(e1.optimal_input, e2.optimal_input)
    c12 = tensor(c1, c2)
    d12 = c12.d_out * prod.d_b
    notes = []
    q_prod = q_comp = None
    if d12 > MAX_TOTAL_DIM:
        notes.append(f"product output dimension {d12} exceeds {MAX_TOTAL_DIM}; lower bound is q1 + q2 by additivity")
    elif cfg.composite_search and c12.d_in == prod.d_b:
        # the first accurate evaluation of the search is the product input itself
        est = qcp_estimate(c12, _composite_cfg(cfg, c12.d_in), starts=[prod])
        q_prod, q_comp = est.start_values[0], est.value
    else:
        out = output_state(c12, prod, (c1.d_out, c2.d_out))
        q_prod = discord(out, measured=(0, 1), config=cfg.qcp.discord_config()).value
    known = [v for v in (q_prod, q_comp) if v is not None]
    q12 = max(known) if known else e1.value + e2.value
    quantities = {
        "q1": e1.value,
        "q2": e2.value,
        "q12_product_input": q_prod,
        "q12_composite_search": q_comp,
        "q12": q12,
        "additivity_gap": None if q_prod is None else q_prod - e1.value - e2.value,
        "margin": q12 - e1.value - e2.value,
    }
    inputs = {"channel1": c1.label, "channel2": c2.label, "seed": cfg.seed}
    return TheoremReport("3", inputs, quantities, q12 >= e1.value + e2.value - tol, tol, time.perf_counter() - t0, notes)


def is_measure_prepare(c: KrausChannel, basis=None, tol: float = 1e-10) -> bool:
    """True when ``c`` only reads the diagonal of its input in ``basis`` (default computational)."""
    if c.d_in != c.d_out:
        return False
    cd = ch.completely_decohering(basis, c.d_in)
    return ch.equal(c, ch.compose(c, cd), tol)


def block_decomposition(out: DensityMatrix, slot: int = 1, basis=None):
    """Split ``out`` (dims ``[dA, dA', dB]``) along the decohered factor ``slot``.

    Returns ``(r_k, rho_k)`` with ``rho_k`` on ``[dA, dB]`` and the norm of the
    off-diagonal remainder, which vanishes for completely decohered ``A'``.
    """
    dims = out.dims
    if len(dims) != 3 or slot != 1:
        raise DimensionError("expects dims [dA, dA', dB] with the decohered factor in slot 1")
    da, dk, db = dims
    t = out.mat.reshape(da, dk, db, da, dk, db)
    b = np.eye(dk, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    t = np.einsum("akbcld,km,ln->ambcnd", t, b.conj(), b)
    rs, blocks = [], []
    rebuilt = np.zeros_like(t)
    for k in range(dk):
        blk = t[:, k, :, :, k, :].reshape(da * db, da * db)
        r = float(np.real(np.trace(blk)))
        rs.append(r)
        blocks.append(DensityMatrix(blk / r, (da, db)) if r > 1e-12 else None)
        rebuilt[:, k, :, :, k, :] = t[:, k, :, :, k, :]
    return rs, blocks, frobenius_norm((t - rebuilt).reshape(out.dim, out.dim))


def verify_theorem4(mp: KrausChannel, cd: KrausChannel, cfg: TheoremConfig | None = None) -> TheoremReport:
    """``Q(mp (x) cd) = Q(mp)`` within tolerance, plus the block inequality on the best composite input."""
    cfg = cfg or TheoremConfig()
    tol = THEOREM4_TOL if cfg.tolerance is None else cfg.tolerance
    t0 = time.perf_counter()
    inputs = {"channel1": mp.label, "channel2": cd.label, "seed": cfg.seed}
    notes = []
    if not is_measure_prepare(mp):
        notes.append("precondition failed: channel1 is not measure-and-prepare in the computational basis")
    if not ch.is_completely_decohering(cd):
        notes.append("precondition failed: channel2 is not completely decohering")
    if notes:
        return TheoremReport("4", inputs, {}, False, tol, time.perf_counter() - t0, notes)
    # decohering basis of cd, recovered as in the channels predicate
    rng = np.random.default_rng(0)
    g = rng.standard_normal((cd.d_in, cd.d_in)) + 1j * rng.standard_normal((cd.d_in, cd.d_in))
    probe = apply_kraus(cd.kraus_ops, g @ g.conj().T)
    cd_basis = np.linalg.eigh(0.5 * (probe + probe.conj().T))[1]

    e_mp = _qcp(mp, cfg)
    c12 = tensor(mp, cd)
    d12 = c12.d_in
    seed_in = product_input(e_mp.optimal_input, flagged_cq(np.ones(cd.d_in) / cd.d_in, cd_basis))
    qcfg = _composite_cfg(cfg, d12)
    qcfg.restarts = max(cfg.composite_restarts, 1)
    e12 = qcp_estimate(c12, qcfg, starts=[seed_in])

    out = output_state(c12, e12.optimal_input, (mp.d_out, cd.d_out))
    rs, blocks, offdiag = block_decomposition(out, 1, cd_basis)
    dcfg = cfg.qcp.discord_config()
    lhs = discord(out, measured=(0, 1), config=dcfg).value
    block_vals = [0.0 if b is None else discord(b, measured=0, config=dcfg).value for b in blocks]
    rhs = float(sum(r * v for r, v in zip(rs, block_vals)))
    diff = e12.value - e_mp.value
    quantities = {
        "q_mp": e_mp.value,
        "q_composite": e12.value,
        "difference": diff,
        "block_weights": rs,
        "block_discords": block_vals,
        "block_offdiagonal_norm": offdiag,
        "lhs_discord": lhs,
        "rhs_weighted_blocks": rhs,
        "block_inequality_holds": lhs <= rhs + BLOCK_TOL,
    }
    passed = abs(diff) <= tol and lhs <= rhs + BLOCK_TOL and offdiag <= 1e-10
    return TheoremReport("4", inputs, quantities, passed, tol, time.perf_counter() - t0, notes)


# --- worked examples ------------------------------------------------------------------------

PD_NORM_CONSTANT = 1.0 / (2.0 * math.sqrt(2.0))
GENUINE_NORM_CONSTANT = 0.25


def phase_damping_demo(p: float, with_discord: bool = True, seed: int = 0) -> TheoremReport:
    """Commutator of the phase-damped ``psi_00``, ``psi_11`` pair and the output discord of the 4-flag state."""
    t0 = time.perf_counter()
    pd = ch.phase_damping(p)
    comm = output_commutator(pd, pd, psi_family(0, 0), psi_family(1, 1))
    nrm = frobenius_norm(comm)
    expected = PD_NORM_CONSTANT * p * math.sqrt(max(1.0 - p, 0.0))
    quantities = {
        "commutator_norm": nrm,
        "expected_norm": expected,
        "sigma2_coefficients": [float(np.imag(np.trace(np.kron(SY, PAULIS[0]) @ comm)) / 4),
                                float(np.imag(np.trace(np.kron(PAULIS[0], SY) @ comm)) / 4)],
    }
    if with_discord:
        rho = psi_flag_state()
        out = ch.apply_local([pd, pd], rho)
        out = DensityMatrix(out.mat, (4, 4))
        quantities["output_discord"] = discord(out, measured=0, config=DiscordConfig(restarts=4, seed=seed)).value
    ok = abs(nrm - expected) <= 1e-8 * max(1.0, expected)
    return TheoremReport("pd-demo", {"p": p, "seed": seed}, quantities, ok, 1e-8, time.perf_counter() - t0, [])


def genuine_correlation_demo(a: float, seed: int = 0, with_discord: bool = True) -> TheoremReport:
    """Depolarizing ``a`` on A and complete dephasing on A' acting on ``1/4 sum Phi_i (x) |i><i|``.

    Checks that the flag-1/flag-2 output commutator is ``c a^2 (sigma_2 (x) I)``
    and that no two-party marginal of the input carries discord.
    """
    t0 = time.perf_counter()
    dep = ch.depolarizing(a)
    deph = ch.completely_dephasing()
    comm = output_commutator(dep, deph, phi_family(1), phi_family(2))
    y0 = np.kron(SY, PAULIS[0])
    coeff = np.trace(y0 @ comm) / 4
    residual = frobenius_norm(comm - coeff * y0)
    nrm = frobenius_norm(comm)
    expected = GENUINE_NORM_CONSTANT * a * a
    quantities = {
        "commutator_norm": nrm,
        "expected_norm": expected,
        "sigma2_sigma0_coefficient": {"re": float(np.real(coeff)), "im": float(np.imag(coeff))},
        "residual_outside_sigma2_sigma0": residual,
    }
    ok = abs(nrm - expected) <= 1e-8 * max(expected, 1e-300) + 1e-15 and residual <= 1e-12
    notes = []
    if with_discord:
        marg = _pairwise_input_discords(seed)
        quantities["input_pairwise_discords"] = marg
        worst = max(marg.values())
        quantities["max_input_pairwise_discord"] = worst
        ok = ok and worst <= 1e-6
    return TheoremReport("genuine-demo", {"a": a, "seed": seed}, quantities, bool(ok), 1e-8, time.perf_counter() - t0, notes)


_PAIRWISE_CACHE: dict = {}


def genuine_input_state() -> DensityMatrix:
    """``1/4 sum_i Phi_i (x) |i><i|`` with dims ``[2, 2, 4]`` (A, A', B)."""
    return flagged_mixture([phi_family(k) for k in range(4)])


def _pairwise_input_discords(seed: int) -> dict:
    if seed in _PAIRWISE_CACHE:
        return dict(_PAIRWISE_CACHE[seed])
    rho = genuine_input_state()
    names = ("A", "A'", "B")
    cfg = DiscordConfig(restarts=4, seed=seed)
    out = {}
    for i, j in ((0, 1), (0, 2), (1, 2)):
        dims = (rho.dims[i], rho.dims[j])
        m = DensityMatrix(partial_trace(rho.mat, rho.dims, [i, j]), dims)
        out[f"{names[j]}|{names[i]}"] = discord(m, measured=0, config=cfg).value
        out[f"{names[i]}|{names[j]}"] = discord(m, measured=1, config=cfg).value
    _PAIRWISE_CACHE[seed] = out
    return dict(out)
