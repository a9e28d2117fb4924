import numpy as np
import oracles as o
import pytest

from qcpower.discord import (
    DiscordConfig,
    Measurement,
    conditional_entropy,
    discord,
    discord_at,
    givens_unitary,
    measured_conditional_entropy,
    von_neumann_entropy,
)
from qcpower.linalg import random_unitary
from qcpower.states import (
    DensityMatrix,
    apply_local_unitary,
    maximally_mixed,
    psi_family,
    random_density,
)


def test_entropy_examples():
    assert von_neumann_entropy(maximally_mixed((4,))) == pytest.approx(2.0, abs=1e-12)
    assert von_neumann_entropy(psi_family(0, 0)) == pytest.approx(0.0, abs=1e-12)
    rho = random_density(6, np.random.default_rng(0))
    assert von_neumann_entropy(rho) == pytest.approx(o.entropy(rho.mat), abs=1e-12)


def test_bell_discord_is_one():
    res = discord(psi_family(0, 0))
    assert res.value == pytest.approx(1.0, abs=1e-8)
    assert res.conditional_entropy == pytest.approx(-1.0, abs=1e-12)


def test_classical_quantum_state_has_no_discord():
    rng = np.random.default_rng(1)
    b0, b1 = random_density(2, rng), random_density(2, rng)
    m = np.kron(np.diag([0.3, 0]), b0.mat) + np.kron(np.diag([0, 0.7]), b1.mat)
    assert abs(discord(DensityMatrix(m, (2, 2))).value) <= 1e-6


def test_measured_entropy_matches_discord_at():
    rho = random_density(4, np.random.default_rng(2), dims=(2, 2))
    u = random_unitary(2, np.random.default_rng(3))
    h = measured_conditional_entropy(rho, Measurement.from_basis(u))
    assert discord_at(rho, u) == pytest.approx(h - conditional_entropy(rho), abs=1e-12)


def test_discord_at_is_upper_bound():
    rho = random_density(4, np.random.default_rng(4), dims=(2, 2))
    best = discord(rho).value
    for k in range(10):
        u = random_unitary(2, np.random.default_rng(100 + k))
        assert discord_at(rho, u) >= best - 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_matches_grid_oracle(seed):
    rho = random_density(4, np.random.default_rng(seed), dims=(2, 2))
    assert discord(rho).value == pytest.approx(o.grid_discord_qubit(rho.mat, 2), abs=1e-4)


def test_qubit_qutrit_matches_grid_oracle():
    rho = random_density(6, np.random.default_rng(11), dims=(2, 3))
    assert discord(rho).value == pytest.approx(o.grid_discord_qubit(rho.mat, 3), abs=1e-4)


def test_local_unitary_invariance():
    rng = np.random.default_rng(5)
    rho = random_density(4, rng, dims=(2, 2))
    rotated = apply_local_unitary(rho, [random_unitary(2, rng), random_unitary(2, rng)])
    assert discord(rotated).value == pytest.approx(discord(rho).value, abs=2e-4)


def test_measuring_the_other_side():
    rho = random_density(4, np.random.default_rng(6), dims=(2, 2))
    swap = np.eye(4)[[0, 2, 1, 3]]
    flipped = DensityMatrix(swap @ rho.mat @ swap, (2, 2))
    assert discord(rho, measured=1).value == pytest.approx(discord(flipped).value, abs=1e-9)


def test_product_state_additivity_ququart_side():
    rng = np.random.default_rng(7)
    r1 = random_density(4, rng, dims=(2, 2))
    r2 = random_density(4, rng, dims=(2, 2))
    joint = r1 @ r2
    d = discord(joint, measured=(0, 2)).value
    assert d == pytest.approx(discord(r1).value + discord(r2).value, abs=1e-3)


def test_deterministic():
    rho = random_density(9, np.random.default_rng(8), dims=(3, 3))
    a = discord(rho, config=DiscordConfig(restarts=2, seed=4))
    b = discord(rho, config=DiscordConfig(restarts=2, seed=4))
    assert a.value == b.value and np.array_equal(a.basis, b.basis)


def test_givens_chart_is_unitary():
    x = np.random.default_rng(9).normal(size=12)
    u = givens_unitary(x, 4)
    assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
    assert np.allclose(givens_unitary(np.zeros(12), 4), np.eye(4))


def test_measurement_validation():
    with pytest.raises(ValueError):
        Measurement((np.diag([1.0, 0.0]),))
    m = Measurement.from_basis(np.eye(3))
    assert m.dim == 3 and len(m.elements) == 3


def test_result_dict():
    d = discord(psi_family(0, 0)).to_dict()
    assert d["measurement_family"] == "rank-1 projective"
    assert set(d) >= {"value", "converged", "restarts_used"}
