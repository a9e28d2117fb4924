import numpy as np
import oracles as o
import pytest

from qcpower import channels as ch
from qcpower import qcp as q
from qcpower.states import (
    CQState,
    DensityMatrix,
    cq_build,
    flagged_cq,
    maximally_mixed,
    optimal_mp_input,
)

# frozen from oracles.mp_qcp_grid(); the optimum sits at equal weights
Q_MP_STD2 = 0.2017520734


def test_output_state_matches_dense():
    cq = flagged_cq([0.3, 0.7], np.column_stack([[1, 1], [1, -1]]) / np.sqrt(2))
    c = ch.mp_std2()
    dense = o.dense_channel(c.kraus_ops, cq_build(cq).mat, 1, 2)
    assert np.allclose(q.output_state(c, cq).mat, dense, atol=1e-14)
    assert q.output_state(ch.tensor(c, c), q.product_input(cq, cq), dims_a=(2, 2)).dims == (2, 2, 4)


def test_product_input_is_tensor_of_inputs():
    a = flagged_cq([0.25, 0.75], np.eye(2))
    b = flagged_cq([0.6, 0.4], np.column_stack([[1, 1j], [1, -1j]]) / np.sqrt(2))
    joint = cq_build(q.product_input(a, b)).mat.reshape(2, 2, 2, 2, 2, 2, 2, 2)
    ref = np.kron(cq_build(a).mat, cq_build(b).mat).reshape(2, 2, 2, 2, 2, 2, 2, 2)
    # reorder (A B A' B') -> (A A' B B')
    assert np.allclose(joint, ref.transpose(0, 2, 1, 3, 4, 6, 5, 7), atol=1e-14)


def test_mp_std2_qcp_frozen_value():
    est = q.qcp_estimate(ch.mp_std2())
    assert est.value == pytest.approx(Q_MP_STD2, abs=1e-8)
    assert np.allclose(sorted(est.optimal_input.weights), [0.5, 0.5], atol=1e-3)


def test_mp_std2_qcp_grid_oracle_at_optimum():
    rho = optimal_mp_input([0.5, 0.5]).mat
    out = o.dense_channel(o.mp_std2_kraus(), rho, 1, 2)
    assert o.grid_discord_qubit(out, 2) == pytest.approx(Q_MP_STD2, abs=2e-3)


@pytest.mark.parametrize("spec", ["cd", "unitary:H", "pd:0.5", "dep:0.5"])
def test_commutativity_preserving_channels_have_no_power(spec):
    assert abs(q.qcp_estimate(ch.parse_channel_spec(spec)).value) <= 1e-6


def test_qcp_deterministic():
    cfg = q.QcpConfig(restarts=1, seed=3)
    a = q.qcp_estimate(ch.mp_std2(), cfg)
    b = q.qcp_estimate(ch.mp_std2(), cfg)
    assert a.value == b.value and a.to_dict() == b.to_dict()


def test_qcp_pure_flags_mode():
    cfg = q.QcpConfig(restarts=1, flags="pure")
    assert q.qcp_estimate(ch.mp_std2(), cfg).value == pytest.approx(Q_MP_STD2, abs=2e-3)


def test_qcp_size_guard():
    with pytest.raises(ValueError):
        q.qcp_estimate(ch.identity(4), q.QcpConfig(d_b=8))


def test_estimate_dict_has_caveats():
    d = q.qcp_estimate(ch.completely_decohering(), q.QcpConfig(restarts=1)).to_dict()
    assert d["caveats"] and "value" in d


def test_no_witness_for_decohering_or_unitary_pairs():
    cd, h, s = ch.completely_decohering(), ch.parse_channel_spec("unitary:H"), ch.parse_channel_spec("unitary:S")
    assert q.superactivation_witness(cd, cd) is None
    assert q.superactivation_witness(h, s) is None


def test_product_witness_for_decohering_and_phase_damping():
    w = q.superactivation_witness(ch.completely_decohering(), ch.phase_damping(0.5), strategy="product")
    assert w is not None and w.commutator_norm > 1e-8
    assert np.allclose(w.x1.mat @ w.x2.mat, w.x2.mat @ w.x1.mat, atol=1e-12)


def test_template_witness_norm_for_phase_damping_pair():
    pd = ch.phase_damping(0.5)
    w = q.superactivation_witness(pd, pd, strategy="templates")
    assert w is not None and w.constrained
    assert w.commutator_norm == pytest.approx(q.PD_NORM_CONSTANT * 0.5 * np.sqrt(0.5), rel=1e-8)


def test_witness_requires_commutativity_preserving_channels():
    with pytest.raises(ValueError):
        q.superactivation_witness(ch.mp_std2(), ch.identity(2))
    with pytest.raises(ValueError):
        q.superactivation_witness(ch.identity(2), ch.identity(2), strategy="nope")


@pytest.mark.parametrize(
    "a,b,reason",
    [
        ((0, 0, 0), (0.5, 0.2, 0.1), "completely depolarizing"),
        ((0.5, 0.5, 0.5), (0.5, 0.5, 0.5), "identical isotropic up to Pauli frames"),
        ((0.5, -0.5, -0.5), (0.5, 0.5, 0.5), "identical isotropic up to Pauli frames"),
        ((0.5, 0.5, 0.5), (0.4, 0.4, 0.4), None),
        ((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5), None),
        ((0.6, 0.6, 1.0), (0.6, 0.6, 1.0), None),
    ],
)
def test_theorem2_exclusion(a, b, reason):
    assert q.theorem2_exclusion(a, b) == reason


@pytest.mark.parametrize(
    "s1,s2",
    [("dep:0.5", "dep:0.5"), ("dep:0.5", "dep:0.3"), ("pd:0.5", "pd:0.5"), ("dep:0", "pd:0.3"), ("pauli:0.4,0.3,0.2,0.1", "dep:0.4")],
)
def test_theorem2_prediction_matches_search(s1, s2):
    rep = q.verify_theorem2(ch.parse_channel_spec(s1), ch.parse_channel_spec(s2), trials=200)
    assert rep.passed


def test_theorem1_report():
    rep = q.verify_theorem1(ch.completely_decohering(), ch.phase_damping(0.5), trials=100)
    assert rep.passed and rep.quantities["superactivation_predicted"] and rep.quantities["witness_found"]


def test_measure_prepare_detection():
    assert q.is_measure_prepare(ch.mp_std2())
    assert q.is_measure_prepare(ch.completely_decohering())
    assert not q.is_measure_prepare(ch.phase_damping(0.5))


def test_block_decomposition_of_decohered_output():
    rng = np.random.default_rng(0)
    g = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho = DensityMatrix(g @ g.conj().T / np.trace(g @ g.conj().T), (2, 2, 2))
    out = ch.apply_on(ch.completely_decohering(), rho, 1)
    rs, blocks, off = q.block_decomposition(out)
    assert off <= 1e-14 and sum(rs) == pytest.approx(1.0)
    rebuilt = sum(r * np.kron(b.mat, np.diag(np.eye(2)[k])).reshape(2, 2, 2, 2, 2, 2).transpose(0, 2, 1, 3, 5, 4).reshape(8, 8)
                  for k, (r, b) in enumerate(zip(rs, blocks)))
    assert np.allclose(rebuilt, out.mat, atol=1e-12)


def test_phase_damping_demo_values():
    for p in (0.0, 0.1, 0.5, 0.9, 1.0):
        rep = q.phase_damping_demo(p, with_discord=False)
        assert rep.passed
        c1, c2 = rep.quantities["sigma2_coefficients"]
        assert c1 == pytest.approx(p * np.sqrt(1 - p) / 8, abs=1e-12)
        assert c2 == pytest.approx(p * np.sqrt(1 - p) / 8, abs=1e-12)


def test_genuine_demo_without_discord():
    rep = q.genuine_correlation_demo(0.5, with_discord=False)
    assert rep.passed
    assert rep.quantities["sigma2_sigma0_coefficient"]["im"] == pytest.approx(0.25 / 8, abs=1e-14)


def test_report_omits_runtime_by_default():
    rep = q.phase_damping_demo(0.3, with_discord=False)
    assert "runtime_s" not in rep.to_dict()
    assert "runtime_s" in rep.to_dict(timing=True)


def test_cq_state_accepts_mixed_conditionals():
    cq = CQState([1.0], np.array([[1.0], [0.0]]), (maximally_mixed((2,)),))
    assert abs(q.qcp_estimate(ch.mp_std2(), q.QcpConfig(restarts=1), starts=[]).value - Q_MP_STD2) < 1e-6
    assert q.output_state(ch.mp_std2(), cq).dims == (2, 2)
