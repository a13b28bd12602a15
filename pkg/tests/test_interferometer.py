import json
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csmkit.interferometer import (
    BATCH_SHOTS,
    BeamSplitter,
    ExperimentConfig,
    Network,
    PhaseShifter,
    PureState,
    empirical_transition,
    make_rng,
    measure_destructive,
    measure_nondestructive,
    network_transition,
    network_unitary,
    outcome_probabilities,
    permutation_network,
    reck_decompose,
    run_experiment,
    shot_streams,
)
from csmkit.linalg import ValidationError, computational_frame, frame_from_unitary, haar_unitary, is_unitary
from csmkit.stochastic import unistochastic_from_unitary


class TestElements:
    def test_block_formula(self):
        t, phi = 0.3, 1.1
        B = BeamSplitter(0, 1, t, phi).block()
        expected = np.array([[np.cos(t), -np.exp(-1j * phi) * np.sin(t)],
                             [np.exp(1j * phi) * np.sin(t), np.cos(t)]])
        np.testing.assert_allclose(B, expected, atol=1e-15)
        assert is_unitary(B)

    def test_balanced_splitter(self):
        U = network_unitary(Network(2, (BeamSplitter(0, 1, np.pi / 4),)))
        np.testing.assert_allclose(np.abs(U) ** 2, np.full((2, 2), 0.5), atol=1e-15)

    @pytest.mark.parametrize("theta, phi", [(0.3, 0.0), (1.2, -2.0), (np.pi / 2, np.pi)])
    def test_inverse(self, theta, phi):
        bs = BeamSplitter(1, 3, theta, phi)
        np.testing.assert_allclose(bs.inverse().matrix(4) @ bs.matrix(4), np.eye(4), atol=1e-14)
        # equivalently a phase shift of pi on phi
        np.testing.assert_allclose(BeamSplitter(1, 3, theta, phi + np.pi).matrix(4),
                                   bs.inverse().matrix(4), atol=1e-14)

    def test_phase_shifter(self):
        ps = PhaseShifter(1, 0.7)
        np.testing.assert_allclose(ps.matrix(3), np.diag([1, np.exp(0.7j), 1]))
        np.testing.assert_allclose(ps.inverse().matrix(3) @ ps.matrix(3), np.eye(3), atol=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            BeamSplitter(1, 1, 0.1)
        with pytest.raises(ValueError):
            Network(2, (BeamSplitter(0, 2, 0.1),))

    def test_order_first_element_first(self):
        a, b = PhaseShifter(0, 0.4), BeamSplitter(0, 1, 0.3)
        U = network_unitary(Network(2, (a, b)))
        np.testing.assert_allclose(U, b.matrix(2) @ a.matrix(2))

    def test_list_round_trip(self):
        net = Network(3, (BeamSplitter(0, 1, 0.2, 0.5), PhaseShifter(2, 1.0)))
        assert Network.from_list(3, net.to_list()) == net

    def test_bad_element(self):
        with pytest.raises(ValidationError):
            Network.from_list(2, [{"mirror": 0}])


class TestPermutationNetwork:
    @pytest.mark.parametrize("perm", list(permutations(range(4))))
    def test_all_4_perms(self, perm):
        net = permutation_network(perm)
        P = np.abs(network_unitary(net)) ** 2
        expected = np.zeros((4, 4))
        expected[list(perm), range(4)] = 1.0
        np.testing.assert_allclose(P, expected, atol=1e-15)
        assert net.n_beam_splitters <= 6

    def test_bad(self):
        with pytest.raises(ValueError):
            permutation_network([0, 0, 1])

    def test_single_bin(self):
        res = run_experiment(ExperimentConfig(3, permutation_network([2, 0, 1]), 0, 1000, seed=4))
        assert res.counts.tolist() == [0, 0, 1000]


class TestReck:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 6, 9])
    def test_round_trip(self, n, rng):
        for _ in range(5):
            U = haar_unitary(n, rng)
            net = reck_decompose(U)
            assert net.n_beam_splitters <= n * (n - 1) // 2
            assert net.n_phase_shifters <= n
            assert np.linalg.norm(network_unitary(net) - U) <= 1e-9

    def test_identity_is_empty(self):
        assert reck_decompose(np.eye(5)).elements == ()

    def test_diagonal_needs_no_splitters(self):
        net = reck_decompose(np.diag(np.exp(1j * np.array([0.1, 0.0, -2.0]))))
        assert net.n_beam_splitters == 0 and net.n_phase_shifters == 2

    def test_permutation_matrix(self):
        P = np.eye(4)[[1, 3, 0, 2]]
        assert np.linalg.norm(network_unitary(reck_decompose(P)) - P) <= 1e-12

    def test_rejects_non_unitary(self):
        with pytest.raises(ValidationError):
            reck_decompose(np.ones((2, 2)))

    def test_transition(self, rng):
        U = haar_unitary(4, rng)
        np.testing.assert_allclose(np.asarray(network_transition(reck_decompose(U))),
                                   np.asarray(unistochastic_from_unitary(U)), atol=1e-12)


class TestStates:
    def test_norm_checked(self):
        with pytest.raises(ValidationError):
            PureState([1.0, 1.0])
        assert PureState.normalized([1.0, 1.0]).dim == 2

    def test_nondestructive_certain_outcome(self):
        rng = make_rng(0)
        psi = PureState.basis(4, 2)
        for _ in range(20):
            j, after = measure_nondestructive(psi, computational_frame(4), rng)
            assert j == 2
            np.testing.assert_array_equal(after.amplitudes, psi.amplitudes)

    def test_repeat_is_sticky(self, rng):
        F = frame_from_unitary(haar_unitary(5, rng))
        gen = make_rng(1)
        psi = PureState.normalized(rng.standard_normal(5) + 1j * rng.standard_normal(5))
        for _ in range(200):
            j, after = measure_nondestructive(psi, F, gen)
            assert measure_nondestructive(after, F, gen)[0] == j
            assert abs(outcome_probabilities(after, F)[j] - 1.0) < 1e-12

    def test_destructive(self):
        assert measure_destructive(PureState.basis(3, 1), computational_frame(3), make_rng(0)) == 1


class TestRNG:
    def test_streams_cover_shots(self):
        spans = [(a, k) for a, k, _ in shot_streams(0, 2 * BATCH_SHOTS + 5)]
        assert spans == [(0, BATCH_SHOTS), (BATCH_SHOTS, BATCH_SHOTS), (2 * BATCH_SHOTS, 5)]
        assert list(shot_streams(0, 0)) == []

    def test_philox(self):
        assert isinstance(make_rng(3).bit_generator, np.random.Philox)

    def test_prefix_stable(self):
        # batches are independent streams, so more shots extend rather than reshuffle
        net = Network(3, (BeamSplitter(0, 1, 0.5), BeamSplitter(1, 2, 0.9)))
        short = run_experiment(ExperimentConfig(3, net, 0, BATCH_SHOTS, seed=9)).outcomes
        long = run_experiment(ExperimentConfig(3, net, 0, 3 * BATCH_SHOTS, seed=9)).outcomes
        np.testing.assert_array_equal(long[:BATCH_SHOTS], short)


class TestExperiment:
    def test_balanced_5_sigma(self):
        net = Network(2, (BeamSplitter(0, 1, np.pi / 4),))
        res = run_experiment(ExperimentConfig(2, net, 0, 100_000, seed=0))
        np.testing.assert_allclose(res.born, [0.5, 0.5], atol=1e-15)
        assert np.all(np.abs(res.zscores) <= 5)

    def test_deterministic_csv(self):
        net = Network(3, (BeamSplitter(0, 2, 0.7, 0.2),))
        cfg = ExperimentConfig(3, net, 2, 5000, seed=11)
        assert run_experiment(cfg).to_csv() == run_experiment(cfg).to_csv()
        assert run_experiment(cfg).to_csv() != run_experiment(ExperimentConfig(3, net, 2, 5000, seed=12)).to_csv()

    def test_csv_header(self):
        cfg = ExperimentConfig(2, Network(2), 0, 10)
        lines = run_experiment(cfg).to_csv().splitlines()
        assert lines[0] == "outcome,count,frequency,born,zscore"
        assert lines[1].startswith("0,10,1.0,1.0,")

    def test_records(self):
        res = run_experiment(ExperimentConfig(2, Network(2), 1, 3, seed=0))
        assert [(r.outcome, r.shot) for r in res.records()] == [(1, 0), (1, 1), (1, 2)]

    def test_zero_shots(self):
        res = run_experiment(ExperimentConfig(2, Network(2), 0, 0))
        assert res.shots == 0 and res.summary()["counts"] == [0, 0]

    def test_config_round_trip(self):
        cfg = ExperimentConfig(3, Network(3, (BeamSplitter(0, 1, 0.2),)), 1, 50, seed=4)
        back = ExperimentConfig.from_json(json.dumps(cfg.to_dict()))
        assert back.to_dict() == cfg.to_dict()

    @pytest.mark.parametrize("d", [
        {"n": 2, "prepare": {"outcome": 5}},
        {"n": 2, "network": [{"bs": [0, 3]}]},
        {"n": 2, "shots": -1},
        {"prepare": {"outcome": 0}},
        {"n": 1},
    ])
    def test_config_errors(self, d):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict(d)

    def test_empirical_transition_within_5_sigma(self, rng):
        net = reck_decompose(haar_unitary(4, rng))
        freq, sigma = empirical_transition(net, 20_000, seed=3)
        p = np.asarray(network_transition(net))
        zero = sigma == 0
        np.testing.assert_array_equal(freq[zero], p[zero])
        assert np.all(np.abs(freq - p)[~zero] <= 5 * sigma[~zero])


def test_continuity_of_family():
    # p_00(theta) = cos^2 theta has |dp/dtheta| = |sin 2 theta| <= 1, so C = 1
    thetas = np.linspace(0.0, np.pi, 401)
    delta = 1e-6
    for t in thetas:
        p0 = np.abs(network_unitary(Network(2, (BeamSplitter(0, 1, t),))))[0, 0] ** 2
        p1 = np.abs(network_unitary(Network(2, (BeamSplitter(0, 1, t + delta),))))[0, 0] ** 2
        assert abs(p1 - p0) <= 1.0 * delta + 1e-15


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_reck_property(n, seed):
    U = haar_unitary(n, seed)
    net = reck_decompose(U)
    assert np.linalg.norm(network_unitary(net) - U) <= 1e-9
    assert net.n_beam_splitters <= n * (n - 1) // 2
