"""Quantum discord with rank-1 projective measurements.

``discord(rho, measured)`` minimises the post-measurement conditional entropy
of the unmeasured side over orthonormal measurement bases on the measured side
and subtracts ``S(rho) - S(rho_A)``. Entropies are in bits.

Qubit measured sides are scanned on a (theta, phi) grid first; every side is
then refined with a Nelder-Mead simplex in a local unitary chart
``U = U0 . prod_{p<q} G_pq`` where each complex Givens factor ``G_pq`` is
parametrised by the Cartesian pair ``(theta cos phi, theta sin phi)``. Larger
sides use seeded Haar-random base unitaries ``U0`` as restarts.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .linalg import DimensionError, permute_subsystems, random_unitary
from .states import DensityMatrix

GRID_THETA = 24
GRID_PHI = 48
SIMPLEX_STEP = 0.25
PROB_FLOOR = 1e-12
EIG_CLIP = 1e-9


def _entropy_from_eigs(w: np.ndarray, axis=None) -> np.ndarray:
    w = np.where(w > 0.0, w, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w > 0.0, -w * np.log2(np.where(w > 0.0, w, 1.0)), 0.0)
    return terms.sum(axis=axis)


def von_neumann_entropy(rho) -> float:
    """``-tr rho log2 rho`` with ``0 log 0 = 0``; eigenvalues in ``[-1e-9, 0)`` count as zero."""
    m = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return float(_entropy_from_eigs(w))


@dataclass(frozen=True, eq=False)
class Measurement:
    """POVM elements on the measured side."""

    elements: tuple

    def __post_init__(self):
        els = tuple(np.asarray(e, dtype=complex) for e in self.elements)
        d = els[0].shape[0]
        if np.max(np.abs(sum(els) - np.eye(d))) > 1e-10:
            raise ValueError("measurement elements do not sum to the identity")
        for e in els:
            if np.linalg.eigvalsh(0.5 * (e + e.conj().T))[0] < -1e-9:
                raise ValueError("measurement element is not positive")
        object.__setattr__(self, "elements", els)

    @classmethod
    def from_basis(cls, u: np.ndarray) -> Measurement:
        u = np.asarray(u, dtype=complex)
        return cls(tuple(np.outer(u[:, i], u[:, i].conj()) for i in range(u.shape[1])))

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]


@dataclass(frozen=True, eq=False)
class DiscordResult:
    """Projective-measurement discord (an upper bound on POVM discord)."""

    value: float
    optimal_measurement: Measurement
    restarts_used: int
    converged: bool
    measured_entropy: float = 0.0
    conditional_entropy: float = 0.0
    evaluations: int = 0
    basis: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "value": float(self.value),
            "measured_entropy": float(self.measured_entropy),
            "conditional_entropy": float(self.conditional_entropy),
            "restarts_used": int(self.restarts_used),
            "converged": bool(self.converged),
            "evaluations": int(self.evaluations),
            "measurement_family": "rank-1 projective",
        }


# --- state preparation ------------------------------------------------------------


def _split(rho: DensityMatrix, measured) -> tuple[np.ndarray, int, int]:
    """Move measured factors to the front; return the (dA, dB, dA, dB) tensor."""
    measured = [measured] if isinstance(measured, (int, np.integer)) else sorted(int(m) for m in measured)
    n = len(rho.dims)
    if not measured or measured[0] < 0 or measured[-1] >= n or len(measured) == n:
        raise DimensionError(f"measured side {measured} invalid for dims {rho.dims}")
    rest = [k for k in range(n) if k not in measured]
    m = rho.mat
    if measured + rest != list(range(n)):
        m = permute_subsystems(m, rho.dims, measured + rest)
    da = int(np.prod([rho.dims[k] for k in measured]))
    db = int(np.prod([rho.dims[k] for k in rest]))
    return m.reshape(da, db, da, db), da, db


def conditional_entropy(rho: DensityMatrix, measured=0) -> float:
    """``S(rho) - S(rho_A)`` with ``A`` the measured side."""
    t, da, db = _split(rho, measured)
    rho_a = np.einsum("abcb->ac", t)
    return von_neumann_entropy(t.reshape(da * db, da * db)) - von_neumann_entropy(rho_a)


def _measured_entropy_batch(t: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Average conditional entropy of B for a stack of bases ``u`` (g, dA, dA)."""
    da, db = t.shape[0], t.shape[1]
    # rows (a, c) of t against weights conj(u[a, i]) u[c, i]
    t2 = t.transpose(0, 2, 1, 3).reshape(da * da, db * db)
    uc = np.swapaxes(u, -1, -2)
    w8 = (uc.conj()[..., :, None] * uc[..., None, :]).reshape(u.shape[0], da, da * da)
    blocks = (w8 @ t2).reshape(u.shape[0], da, db, db)
    w = np.linalg.eigvalsh(blocks)  # (g, dA, dB)
    w = np.where(w > EIG_CLIP, w, 0.0)
    p = w.sum(axis=-1)
    h_joint = _entropy_from_eigs(w, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        h_p = np.where(p > PROB_FLOOR, p * np.log2(np.where(p > PROB_FLOOR, p, 1.0)), 0.0)
    # sum_i p_i S(M_i / p_i) = sum_i [S(M_i) + p_i log p_i], skipping p_i ~ 0
    h_joint = np.where(p > PROB_FLOOR, h_joint, 0.0)
    return (h_joint + h_p).sum(axis=-1)


def measured_conditional_entropy(rho: DensityMatrix, m: Measurement, measured=0) -> float:
    """``sum_i p_i S(rho_B|i)`` for POVM ``m`` on the measured side."""
    t, da, _ = _split(rho, measured)
    if m.dim != da:
        raise DimensionError(f"measurement acts on dimension {m.dim}, measured side has {da}")
    total = 0.0
    for f in m.elements:
        block = np.einsum("ca,abcd->bd", f, t)
        p = float(np.real(np.trace(block)))
        if p <= PROB_FLOOR:
            continue
        total += p * von_neumann_entropy(block / p)
    return total


# --- parametrisation -----------------------------------------------------------------


def bloch_basis(theta, phi) -> np.ndarray:
    """Qubit bases ``{|n>, |-n>}`` for arrays of Bloch angles, shape (..., 2, 2)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    e = np.exp(1j * phi)
    u = np.empty(theta.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = c
    u[..., 1, 0] = e * s
    u[..., 0, 1] = -np.conj(e) * s
    u[..., 1, 1] = c
    return u


def givens_unitary(x: np.ndarray, d: int) -> np.ndarray:
    """Product of complex Givens rotations, one per pair ``p < q``.

    ``x`` holds ``d(d-1)`` reals: for each pair the Cartesian coordinates
    ``(theta cos phi, theta sin phi)`` of the rotation angle and phase.
    """
    # plain-Python rows: far cheaper than numpy slicing at d <= 4
    rows = [[1.0 + 0j if i == j else 0j for j in range(d)] for i in range(d)]
    k = 0
    for p in range(d - 1):
        for q in range(p + 1, d):
            a, b = float(x[k]), float(x[k + 1])
            k += 2
            theta = math.hypot(a, b)
            if theta == 0.0:
                continue
            ph = complex(a, b) / theta
            c, s = math.cos(theta), math.sin(theta)
            cp, sq = -ph.conjugate() * s, ph * s
            for row in rows:
                up, uq = row[p], row[q]
                row[p] = c * up + cp * uq
                row[q] = sq * up + c * uq
    return np.array(rows, dtype=complex)


def _simplex(x0: np.ndarray, step: float) -> np.ndarray:
    n = x0.size
    pts = np.tile(x0, (n + 1, 1))
    pts[1:] += step * np.eye(n)
    return pts


@dataclass
class DiscordConfig:
    """Optimizer budget.

    ``refine_iters=None`` picks ``max(200, 100 * n_params)`` simplex iterations,
    i.e. 200 for a qubit side and 1200 for a ququart side. ``restarts`` applies
    to sides larger than a qubit; qubit sides refine the best
    ``qubit_refinements`` grid points instead. ``polish`` restarts the simplex
    once from the winner with a smaller step.
    """

    restarts: int = 8
    seed: int = 0
    refine_iters: int | None = None
    xatol: float = 1e-7
    grid: tuple = (GRID_THETA, GRID_PHI)
    qubit_refinements: int = 3
    polish: bool = True

    def iterations(self, d: int) -> int:
        if self.refine_iters is not None:
            return int(self.refine_iters)
        return max(200, 100 * d * (d - 1))


def _refine(t, base: np.ndarray, iters: int, xatol: float, step: float = SIMPLEX_STEP):
    d = base.shape[0]
    n = d * (d - 1)

    def f(x):
        u = base @ givens_unitary(x, d)
        return float(_measured_entropy_batch(t, u[None])[0])

    x0 = np.zeros(n)
    res = minimize(
        f,
        x0,
        method="Nelder-Mead",
        options={
            "maxiter": iters,
            "maxfev": iters * (n + 2),
            "xatol": xatol,
            "fatol": 1e-13,
            "initial_simplex": _simplex(x0, step),
        },
    )
    u = base @ givens_unitary(res.x, d)
    return float(res.fun), u, bool(res.success), int(res.nfev)


def discord(
    rho: DensityMatrix,
    measured=0,
    restarts: int | None = None,
    seed: int = 0,
    refine_iters: int | None = None,
    starts: Sequence[np.ndarray] = (),
    config: DiscordConfig | None = None,
) -> DiscordResult:
    """Projective discord ``delta_{B|A}`` with ``A`` = subsystem(s) ``measured``.

    Deterministic for a fixed configuration. Extra ``starts`` are base unitaries
    (columns = measurement kets) refined ahead of the grid/random starts; ties
    go to the earliest start. ``converged`` is False when the winning
    refinement stopped on its iteration limit rather than on ``xatol``.
    """
    if config is None:
        config = DiscordConfig(seed=seed, refine_iters=refine_iters)
        if restarts is not None:
            config.restarts = restarts
    cfg = config
    t, da, _ = _split(rho, measured)
    s_cond = conditional_entropy(rho, measured)
    iters = cfg.iterations(da)

    bases: list[np.ndarray] = [np.asarray(s, dtype=complex) for s in starts]
    evals = 0
    if da == 2:
        nt, nphi = cfg.grid
        th = np.linspace(0.0, np.pi, nt)
        ph = np.linspace(0.0, 2 * np.pi, nphi, endpoint=False)
        tt, pp = np.meshgrid(th, ph, indexing="ij")
        grid_u = bloch_basis(tt.ravel(), pp.ravel())
        vals = _measured_entropy_batch(t, grid_u)
        evals += vals.size
        order = np.argsort(vals, kind="stable")[: cfg.qubit_refinements]
        bases += [grid_u[i] for i in order]
    else:
        rng = np.random.default_rng(cfg.seed)
        bases.append(np.eye(da, dtype=complex))
        bases += [random_unitary(da, rng) for _ in range(max(cfg.restarts - 1, 0))]

    best = None
    for base in bases:
        val, u, ok, nfev = _refine(t, base, iters, cfg.xatol)
        evals += nfev
        if best is None or val < best[0]:
            best = (val, u, ok)
    val, u, ok = best
    if cfg.polish:
        val2, u2, ok2, nfev = _refine(t, u, iters, cfg.xatol, step=SIMPLEX_STEP / 5)
        evals += nfev
        if val2 <= val:
            val, u, ok = val2, u2, ok2 or ok
    return DiscordResult(
        value=val - s_cond,
        optimal_measurement=Measurement.from_basis(u),
        restarts_used=len(bases),
        converged=ok,
        measured_entropy=val,
        conditional_entropy=s_cond,
        evaluations=evals,
        basis=u,
    )


def discord_at(rho: DensityMatrix, basis: np.ndarray, measured=0) -> float:
    """Discord-type quantity for one fixed measurement basis (an upper bound)."""
    t, _, _ = _split(rho, measured)
    return float(_measured_entropy_batch(t, np.asarray(basis)[None])[0]) - conditional_entropy(rho, measured)
