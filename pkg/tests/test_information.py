"""Information measures: closed-form oracles, dual-route agreement, and
the data-processing bound on exactly constructed relays."""

import numpy as np
import pytest

from causaltensors import (AveragedTensor, CausalTensor, Pmf, cascade, dagger,
                           dpi_check, expected_indirect_te,
                           mutual_information, transfer_entropy,
                           transfer_entropy_plugin)
from causaltensors.capacity import blahut_arimoto
from causaltensors.errors import InvalidInput
from conftest import ExactChain, h2, random_stochastic, random_tensor_entries


def bsc(p: float) -> np.ndarray:
    return np.array([[1 - p, p], [p, 1 - p]])


class TestMutualInformation:
    def test_uniform_identity_is_one_bit(self):
        assert mutual_information([0.5, 0.5], np.eye(2)) == pytest.approx(1.0)

    def test_identity_with_skewed_input_vanishes(self):
        values = [mutual_information([1 - e, e], np.eye(2))
                  for e in (0.1, 0.01, 1e-4, 1e-8)]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert values[-1] < 1e-6

    def test_bsc_uniform_input_closed_form(self):
        for p in (0.05, 0.1, 0.25):
            expected = 1 - h2(p)
            got = mutual_information([0.5, 0.5], bsc(p))
            assert got == pytest.approx(expected, abs=1e-12)

    def test_nonnegative_on_random_inputs(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n, m = rng.integers(2, 5, 2)
            w = random_stochastic(rng, n, m)
            p = rng.dirichlet(np.ones(n))
            assert mutual_information(p, w) >= 0.0

    def test_symmetric_under_bayes_reversal(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(2, 5))
            t = CausalTensor(random_tensor_entries(rng, 1, n, n))
            p = rng.dirichlet(np.ones(n))
            inv = dagger(t, p)
            p_out = p @ t.matrix
            forward = mutual_information(p, t)
            backward = mutual_information(p_out, inv)
            assert forward == pytest.approx(backward, abs=1e-12)


class TestTransferEntropy:
    def test_copy_channel_is_one_bit(self):
        # x iid uniform bits, y_t = x_{t-1}: exact joint enumerable by hand
        joint = np.zeros((2, 2, 2))
        for g in range(2):
            for i in range(2):
                joint[g, i, i] = 0.25
        tensor = np.zeros((2, 2, 2))
        tensor[:, 0, 0] = 1.0
        tensor[:, 1, 1] = 1.0
        res = transfer_entropy(joint, CausalTensor(tensor, delay=1))
        assert res.value_bits == pytest.approx(1.0, abs=1e-12)
        assert res.delay == 1

    def test_independent_streams_zero(self):
        rng = np.random.default_rng(2)
        p_g = rng.dirichlet(np.ones(2))
        p_i = rng.dirichlet(np.ones(3))
        p_j = rng.dirichlet(np.ones(2))
        joint = np.einsum("g,i,j->gij", p_g, p_i, p_j)
        tensor = CausalTensor(np.broadcast_to(p_j, (2, 3, 2)).copy())
        res = transfer_entropy(joint, tensor)
        assert res.value_bits == pytest.approx(0.0, abs=1e-12)

    def test_perfect_noisy_tensor_zero(self):
        rng = np.random.default_rng(3)
        joint = rng.dirichlet(np.ones(8)).reshape(2, 2, 2)
        # a perfectly noisy relation also has uniform outputs per context
        joint = joint.sum(axis=2, keepdims=True) * np.full((1, 1, 2), 0.5)
        noisy = CausalTensor(np.full((2, 2, 2), 0.5))
        assert transfer_entropy(joint, noisy).value_bits == pytest.approx(0.0)

    def test_tensor_route_equals_plugin_route(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            g, i, j = (int(v) for v in rng.integers(2, 4, 3))
            joint = rng.dirichlet(np.ones(g * i * j)).reshape(g, i, j)
            cond = joint / joint.sum(axis=2, keepdims=True)
            res = transfer_entropy(joint, CausalTensor(cond))
            plug = transfer_entropy_plugin(joint)
            assert res.value_bits == pytest.approx(plug, abs=1e-12)

    def test_decomposition_resums_to_value(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            joint = rng.dirichlet(np.ones(12)).reshape(3, 2, 2)
            cond = joint / joint.sum(axis=2, keepdims=True)
            res = transfer_entropy(joint, CausalTensor(cond))
            resum = sum(w * mi for w, mi in res.per_subchannel)
            assert res.value_bits == pytest.approx(resum, abs=1e-12)
            assert all(w >= 0 and mi >= -1e-15 for w, mi in res.per_subchannel)

    def test_reversed_relation_carries_equal_information(self):
        # the reconstructed relation, fed the reversed joint, must yield
        # the same transfer entropy as the original
        rng = np.random.default_rng(6)
        for _ in range(50):
            g, i, j = 2, 3, 3
            weights = rng.dirichlet(np.ones(g))
            ctx = rng.dirichlet(np.ones(i), size=g)
            entries = random_tensor_entries(rng, g, i, j)
            tensor = CausalTensor(entries, delay=3, subchannel_weights=weights,
                                  context_input=ctx)
            joint = weights[:, None, None] * ctx[:, :, None] * entries
            inv = dagger(tensor, fallback="uniform")
            joint_rev = np.transpose(joint, (0, 2, 1))
            fwd = transfer_entropy(joint, tensor)
            bwd = transfer_entropy(joint_rev, inv)
            assert fwd.value_bits == pytest.approx(bwd.value_bits, abs=1e-12)
            assert bwd.delay == -3


class TestExpectedIndirectTe:
    def test_worked_example_relay_matches_direct(self, example_matrices):
        m = example_matrices
        px = m["px"]
        joint_xz = (px[:, None] * m["c"])[None, :, :]   # single context
        a_bar = AveragedTensor(m["a"][None, :, :])
        b = CausalTensor.from_matrix(m["b"])
        relay = expected_indirect_te(a_bar, b, joint_xz)
        direct = transfer_entropy(joint_xz, CausalTensor.from_matrix(m["c"]))
        assert relay == pytest.approx(direct.value_bits, abs=1e-12)

    def test_equals_te_of_cascaded_tensor(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            h, i, j, k = 2, 2, 3, 2
            a_bar = AveragedTensor(random_tensor_entries(rng, h, i, j))
            b = CausalTensor(random_tensor_entries(rng, h, j, k))
            p_hi = rng.dirichlet(np.ones(h * i)).reshape(h, i)
            mix = cascade(b, a_bar)
            joint = p_hi[:, :, None] * mix.entries
            assert expected_indirect_te(a_bar, b, joint) == pytest.approx(
                transfer_entropy(joint, mix).value_bits, abs=1e-12)

    def test_identity_upstream_reduces_to_direct_te(self):
        rng = np.random.default_rng(8)
        b = CausalTensor(random_tensor_entries(rng, 2, 2, 2))
        ident = AveragedTensor(np.broadcast_to(np.eye(2), (2, 2, 2)).copy())
        p_hi = rng.dirichlet(np.ones(4)).reshape(2, 2)
        joint = p_hi[:, :, None] * b.entries
        assert expected_indirect_te(ident, b, joint) == pytest.approx(
            transfer_entropy(joint, b).value_bits, abs=1e-12)

    def test_perfect_noisy_downstream_zero(self):
        rng = np.random.default_rng(9)
        a_bar = AveragedTensor(random_tensor_entries(rng, 2, 2, 2))
        noisy = CausalTensor(np.full((2, 2, 2), 0.5))
        p_hi = rng.dirichlet(np.ones(4)).reshape(2, 2)
        joint = p_hi[:, :, None] * cascade(noisy, a_bar).entries
        assert expected_indirect_te(a_bar, noisy, joint) == pytest.approx(0.0)


class TestDpi:
    def test_trivial_cases(self):
        assert dpi_check(1.0, 0.5, 0.4).satisfied
        verdict = dpi_check(1.0, 0.5, 0.7, slack=0.0)
        assert not verdict.satisfied
        assert verdict.margin == pytest.approx(0.2)

    def test_negative_inputs_rejected(self):
        with pytest.raises(InvalidInput):
            dpi_check(-0.1, 0.5, 0.2)

    def test_holds_on_exact_memoryless_relays(self):
        rng = np.random.default_rng(10)
        for _ in range(1000):
            n = int(rng.integers(2, 4))
            m = int(rng.integers(2, 4))
            k = int(rng.integers(2, 4))
            a = random_stochastic(rng, n, m)
            b = random_stochastic(rng, m, k)
            p = rng.dirichlet(np.ones(n))
            te_xy = mutual_information(p, a)
            te_yz = mutual_information(p @ a, b)
            te_xz = mutual_information(p, a @ b)
            assert dpi_check(te_xy, te_yz, te_xz, slack=1e-9).satisfied

    def test_holds_on_exact_common_source_structures(self):
        # y and z both driven by x: the induced y -> z relation obeys the
        # same bound with the reconstructed first leg
        rng = np.random.default_rng(11)
        for _ in range(500):
            n = int(rng.integers(2, 4))
            f = random_stochastic(rng, n, int(rng.integers(2, 4)))
            g = random_stochastic(rng, n, int(rng.integers(2, 4)))
            px = rng.dirichlet(np.ones(n))
            py = px @ f
            # p(z | y) through the common source
            joint_xy = px[:, None] * f
            with np.errstate(divide="ignore", invalid="ignore"):
                p_x_given_y = np.where(py[None, :] > 0,
                                       joint_xy / py[None, :], 0.0).T
            b = p_x_given_y @ g
            te_yx = mutual_information(py, p_x_given_y)
            te_xz = mutual_information(px, g)
            te_yz = mutual_information(py, b)
            assert dpi_check(te_yx, te_xz, te_yz, slack=1e-9).satisfied

    def test_holds_on_exact_conditioned_chain(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            chain = ExactChain(
                qx=random_stochastic(rng, 2, 2),
                a0=random_tensor_entries(rng, 2, 2, 2),
                b0=random_tensor_entries(rng, 2, 2, 2),
            )
            te_xy = transfer_entropy_plugin(
                chain.marginal(["y1", "x1", "y2"]).transpose(0, 1, 2))
            te_yz = transfer_entropy_plugin(chain.marginal(["z1", "y1", "z2"]))
            te_xz = transfer_entropy_plugin(chain.marginal(["z1", "x0", "z2"]))
            assert dpi_check(te_xy, te_yz, te_xz, slack=1e-9).satisfied
