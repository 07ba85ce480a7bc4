"""Stochastic-tensor algebra: worked-example values, Bayes inversion,
composition, contraction, degeneracy and serialization."""

import numpy as np
import pytest

from causaltensors import (AveragedTensor, CausalTensor, Degeneracy,
                           InteractionTensor, Pmf, apply, average_tensor,
                           cascade, classify_degeneracy, contract_interaction,
                           dagger, tensor_from_json, tensor_to_json)
from causaltensors.errors import InvalidInput, ShapeError, SingularChannel
from conftest import ExactChain, random_stochastic, random_tensor_entries


@pytest.fixture
def example(example_matrices):
    m = example_matrices
    a = CausalTensor.from_matrix(m["a"], delay=1, input_pmf=m["px"])
    b = CausalTensor.from_matrix(m["b"], delay=1)
    return m, a, b


class TestApply:
    def test_worked_example_output_pmf(self, example):
        m, a, _ = example
        out = apply(a, Pmf(m["px"]))
        assert np.allclose(out, [0.8, 0.2], atol=1e-12)

    def test_identity_channel_preserves_pmf(self):
        ident = CausalTensor.from_matrix(np.eye(3))
        p = np.array([0.2, 0.5, 0.3])
        assert np.allclose(apply(ident, p), p, atol=0)

    def test_perfect_noisy_maps_anything_to_uniform(self):
        noisy = CausalTensor.from_matrix(np.full((3, 3), 1 / 3))
        rng = np.random.default_rng(0)
        for _ in range(5):
            p = rng.dirichlet(np.ones(3))
            assert np.allclose(apply(noisy, p), 1 / 3, atol=1e-12)

    def test_linear_in_the_input(self):
        rng = np.random.default_rng(1)
        t = CausalTensor(random_tensor_entries(rng, 2, 3, 4))
        p, q = rng.dirichlet(np.ones(3), 2)
        lam = 0.3
        mix = lam * p + (1 - lam) * q
        lhs = apply(t, np.array([mix, mix]))
        rhs = (lam * apply(t, np.array([p, p]))
               + (1 - lam) * apply(t, np.array([q, q])))
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_shape_mismatch(self):
        t = CausalTensor.from_matrix(np.eye(2))
        with pytest.raises(ShapeError):
            apply(t, np.array([0.2, 0.3, 0.5]))


class TestAverageTensor:
    def test_single_channel_broadcasts(self):
        rng = np.random.default_rng(2)
        a = CausalTensor(random_tensor_entries(rng, 1, 3, 2))
        ctx = np.ones((4, 3, 1))
        avg = average_tensor(a, ctx)
        for h in range(4):
            assert np.allclose(avg.entries[h], a.entries[0], atol=0)
        assert np.allclose(average_tensor(a).entries[0], a.entries[0])

    def test_point_mass_context_selects_slice(self):
        rng = np.random.default_rng(3)
        a = CausalTensor(random_tensor_entries(rng, 3, 2, 2))
        ctx = np.zeros((1, 2, 3))
        ctx[:, :, 1] = 1.0
        avg = average_tensor(a, ctx)
        assert np.allclose(avg.entries[0], a.entries[1], atol=0)

    def test_exact_chain_average_equals_conditional(self):
        # brute-force oracle: averaging the one-step tensor with the exact
        # context weights must reproduce p(y1 | x0, z1) from the joint
        rng = np.random.default_rng(4)
        chain = ExactChain(
            qx=random_stochastic(rng, 2, 2),
            a0=random_tensor_entries(rng, 2, 2, 2),
            b0=random_tensor_entries(rng, 2, 2, 2),
        )
        # tensor p(y1 | y0, x0) with axes [g=y0, i=x0, j=y1]
        a_entries = np.transpose(chain.a0, (1, 0, 2))
        a = CausalTensor(a_entries)
        # context p(y0 | z1, x0) with axes [h=z1, i=x0, g=y0]
        ctx = chain.conditional(["y0"], ["z1", "x0"])
        avg = average_tensor(a, ctx)
        expected = chain.conditional(["y1"], ["z1", "x0"])
        assert np.abs(avg.entries - expected).max() < 1e-12

    def test_rows_stochastic_on_random_inputs(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            g, i, j, h = rng.integers(1, 5, 4)
            a = CausalTensor(random_tensor_entries(rng, g, i, j))
            ctx = rng.dirichlet(np.ones(g), size=(h, i))
            avg = average_tensor(a, ctx)
            assert np.allclose(avg.entries.sum(-1), 1.0, atol=1e-12)


class TestDagger:
    def test_worked_example_inverse(self, example):
        m, a, _ = example
        inv = dagger(a)
        assert np.allclose(inv.matrix, [[0.25, 0.75], [1.0, 0.0]], atol=1e-12)
        assert inv.delay == -1
        # reconstruction: p(x) = p(y) applied through the inverse
        assert np.allclose(apply(inv, Pmf(m["py"])), m["px"], atol=1e-12)

    def test_identity_with_uniform_input(self):
        ident = CausalTensor.from_matrix(np.eye(3), delay=4,
                                         input_pmf=np.full(3, 1 / 3))
        inv = dagger(ident)
        assert np.allclose(inv.matrix, np.eye(3), atol=0)
        assert inv.delay == -4

    def test_double_inversion_returns_original(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            a = CausalTensor(random_tensor_entries(rng, 2, 3, 3), delay=2)
            inp = rng.dirichlet(np.ones(3), size=2)
            inv = dagger(a, inp)
            back = dagger(inv)          # uses the stored output pmfs
            assert np.abs(back.entries - a.entries).max() < 1e-12
            assert back.delay == a.delay

    def test_dead_output_cell_raises_with_location(self):
        a = CausalTensor.from_matrix([[1.0, 0.0], [1.0, 0.0]])
        with pytest.raises(SingularChannel) as err:
            dagger(a, np.array([[0.5, 0.5]]))
        assert err.value.zero_cells == [(0, 1)]

    def test_uniform_fallback_fills_dead_rows(self):
        a = CausalTensor.from_matrix([[1.0, 0.0], [1.0, 0.0]])
        inv = dagger(a, np.array([[0.5, 0.5]]), fallback="uniform")
        assert np.allclose(inv.matrix[1], [0.5, 0.5])
        assert np.allclose(inv.matrix[0], [0.5, 0.5])

    def test_requires_input_when_no_context(self):
        a = CausalTensor.from_matrix(np.eye(2))
        with pytest.raises(InvalidInput):
            dagger(a)


class TestCascade:
    def test_worked_example_composition(self, example):
        m, a, b = example
        c = cascade(b, a)
        assert np.allclose(c.matrix, m["c"], atol=1e-12)
        assert c.delay == 2

    def test_identity_upstream_is_neutral_and_delays_add(self):
        rng = np.random.default_rng(7)
        b = CausalTensor(random_tensor_entries(rng, 1, 3, 2), delay=5)
        ident = CausalTensor.from_matrix(np.eye(3), delay=-2)
        c = cascade(b, ident)
        assert np.allclose(c.matrix, b.matrix, atol=0)
        assert c.delay == 3

    def test_reconstruction_product_differs_from_direct(self, example):
        m, a, b = example
        a_dag = CausalTensor.from_matrix(m["a_dag"], delay=-1)
        c = CausalTensor.from_matrix(m["c"], delay=2)
        recon = cascade(c, a_dag)
        assert np.allclose(recon.matrix, [[7 / 24, 17 / 24], [1 / 6, 5 / 6]],
                           atol=1e-12)
        assert np.abs(recon.matrix - m["b"]).max() > 0.1
        assert recon.delay == 1

    def test_tensors_do_not_commute(self, example):
        m, _, _ = example
        a = CausalTensor.from_matrix(m["a"])
        a_dag = CausalTensor.from_matrix(m["a_dag"])
        left = cascade(a, a_dag)
        right = cascade(a_dag, a)
        assert np.abs(left.matrix - right.matrix).max() > 1e-3

    def test_delay_addition_is_associative(self):
        rng = np.random.default_rng(8)
        a = CausalTensor(random_tensor_entries(rng, 1, 2, 2), delay=1)
        b = CausalTensor(random_tensor_entries(rng, 1, 2, 2), delay=3)
        c = CausalTensor(random_tensor_entries(rng, 1, 2, 2), delay=-2)
        left = cascade(c, cascade(b, a))
        right = cascade(cascade(c, b), a)
        assert left.delay == right.delay == 2
        assert np.allclose(left.matrix, right.matrix, atol=1e-12)

    def test_multichannel_cascade_rows_stochastic(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            h, i, j, k = rng.integers(1, 5, 4)
            avg = AveragedTensor(random_tensor_entries(rng, h, i, j))
            b = CausalTensor(random_tensor_entries(rng, h, j, k))
            out = cascade(b, avg)
            assert np.allclose(out.entries.sum(-1), 1.0, atol=1e-12)


class TestContractInteraction:
    def test_parent_independent_interaction_recovers_direct_tensor(self):
        rng = np.random.default_rng(10)
        b = random_tensor_entries(rng, 2, 3, 2)          # [h, j, k]
        d = np.broadcast_to(b[:, None, :, :], (2, 4, 3, 2)).copy()
        inter = InteractionTensor(d, delay_a=2, delay_b=1)
        weights = AveragedTensor(rng.dirichlet(np.ones(4), size=(2, 3)))
        out = contract_interaction(inter, weights, eliminate="a")
        assert np.abs(out.entries - b).max() < 1e-12
        assert out.delay == 1

    def test_xor_collider_pairwise_channel_is_uninformative(self):
        # enumerate the eight (h, i, j) outcomes of z = x xor y
        d = np.zeros((2, 2, 2, 2))
        for i in range(2):
            for j in range(2):
                d[:, i, j, i ^ j] = 1.0
        inter = InteractionTensor(d)
        # reconstruction weights p(i | h, j) = 1/2 under iid uniform bits
        w = AveragedTensor(np.full((2, 2, 2), 0.5))
        b = contract_interaction(inter, w, eliminate="a")
        assert np.allclose(b.entries, 0.5, atol=1e-12)

    def test_exact_triangle_contraction_matches_joint(self):
        rng = np.random.default_rng(11)
        h_n, i_n, j_n, k_n = 2, 3, 2, 2
        p_hi = rng.dirichlet(np.ones(h_n * i_n)).reshape(h_n, i_n)
        a_bar = rng.dirichlet(np.ones(j_n), size=(h_n, i_n))
        d = rng.dirichlet(np.ones(k_n), size=(h_n, i_n, j_n))
        joint = (p_hi[:, :, None, None] * a_bar[:, :, :, None] * d)
        # direct conditional p(k | h, i) from the enumerated joint
        c_direct = joint.sum(axis=2)
        c_direct /= c_direct.sum(axis=-1, keepdims=True)
        c_contract = contract_interaction(InteractionTensor(d),
                                          AveragedTensor(a_bar),
                                          eliminate="b")
        assert np.abs(c_contract.entries - c_direct).max() < 1e-12

    def test_contraction_rows_stochastic_random(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            h, i, j, k = rng.integers(1, 4, 4)
            d = InteractionTensor(rng.dirichlet(np.ones(k), size=(h, i, j)))
            w_a = AveragedTensor(rng.dirichlet(np.ones(i), size=(h, j)))
            w_b = AveragedTensor(rng.dirichlet(np.ones(j), size=(h, i)))
            out_a = contract_interaction(d, w_a, eliminate="a")
            out_b = contract_interaction(d, w_b, eliminate="b")
            assert np.allclose(out_a.entries.sum(-1), 1.0, atol=1e-12)
            assert np.allclose(out_b.entries.sum(-1), 1.0, atol=1e-12)


class TestClassifyDegeneracy:
    def test_kronecker_delta_is_noiseless(self):
        assert classify_degeneracy(np.eye(4)[None], 1e-9) is Degeneracy.NOISELESS

    def test_uniform_is_perfect_noisy(self):
        t = np.full((2, 3, 3), 1 / 3)
        assert classify_degeneracy(t, 1e-9) is Degeneracy.PERFECT_NOISY

    def test_worked_example_is_general(self, example):
        m, _, _ = example
        assert classify_degeneracy(m["a"], 1e-9) is Degeneracy.GENERAL

    def test_permutation_subchannels_are_noiseless(self):
        rng = np.random.default_rng(13)
        perms = np.stack([np.eye(4)[rng.permutation(4)] for _ in range(3)])
        assert classify_degeneracy(perms, 1e-12) is Degeneracy.NOISELESS

    def test_noiseless_requires_square(self):
        # rows 0/1 but non-square: column sums cannot all be one
        t = np.zeros((1, 3, 2))
        t[0, :, 0] = [1, 1, 0]
        t[0, :, 1] = [0, 0, 1]
        assert classify_degeneracy(t, 1e-9) is Degeneracy.GENERAL

    def test_random_noiseless_always_square(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            g = int(rng.integers(1, 4))
            n = int(rng.integers(2, 5))
            perms = np.stack([np.eye(n)[rng.permutation(n)] for _ in range(g)])
            t = CausalTensor(perms)
            assert classify_degeneracy(t, 1e-12) is Degeneracy.NOISELESS
            assert t.n_inputs == t.n_outputs


class TestValidationAndSerialization:
    def test_rows_must_be_stochastic(self):
        with pytest.raises(InvalidInput):
            CausalTensor(np.array([[[0.5, 0.4]]]))
        with pytest.raises(InvalidInput):
            CausalTensor(np.array([[[1.2, -0.2]]]))

    def test_pmf_validation(self):
        with pytest.raises(InvalidInput):
            Pmf(np.array([0.5, 0.4]))
        assert Pmf.uniform(4).cardinality == 4
        assert Pmf.point_mass(1, 3).probs.tolist() == [0.0, 1.0, 0.0]

    def test_entries_frozen(self):
        t = CausalTensor.from_matrix(np.eye(2))
        with pytest.raises(ValueError):
            t.entries[0, 0, 0] = 0.5

    def test_json_round_trip_bit_exact(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            g, i, j = rng.integers(1, 5, 3)
            t = CausalTensor(random_tensor_entries(rng, g, i, j),
                             delay=int(rng.integers(-9, 9)),
                             subchannel_weights=rng.dirichlet(np.ones(g)),
                             context_input=rng.dirichlet(np.ones(i), size=g))
            back = tensor_from_json(tensor_to_json(t))
            assert np.array_equal(back.entries, t.entries)
            assert np.array_equal(back.subchannel_weights, t.subchannel_weights)
            assert np.array_equal(back.context_input, t.context_input)
            assert back.delay == t.delay

    def test_json_has_required_keys(self):
        import json
        t = CausalTensor.from_matrix(np.eye(2), delay=3)
        obj = json.loads(tensor_to_json(t))
        assert set(obj) >= {"dims", "delay", "subchannel_weights", "entries"}
        assert obj["dims"] == [1, 2, 2]

    def test_stochastic_closure_across_operations(self):
        rng = np.random.default_rng(16)
        for _ in range(1000):
            g = int(rng.integers(1, 4))
            i = int(rng.integers(2, 4))
            j = int(rng.integers(2, 4))
            t = CausalTensor(random_tensor_entries(rng, g, i, j),
                             context_input=rng.dirichlet(np.ones(i), size=g))
            out = apply(t, t.context_input)
            assert np.allclose(out.sum(-1), 1.0, atol=1e-12)
            inv = dagger(t, fallback="uniform")
            assert np.allclose(inv.entries.sum(-1), 1.0, atol=1e-12)
