"""Planted-topic stream generation."""

import numpy as np
import pytest

from rost import nmi
from rost.grid import CellKey
from rost.synth import generate, make_separable


class TestMakeSeparable:
    def test_block_diagonal_rows(self):
        model = make_separable(2, 4, extent=2, t_total=3, seed=0)
        assert np.allclose(model.phi_true[0], [0.5, 0.5, 0, 0])
        assert np.allclose(model.phi_true[1], [0, 0, 0.5, 0.5])

    def test_rows_are_distributions(self):
        model = make_separable(8, 100, extent=4, t_total=5, seed=1)
        assert np.allclose(model.phi_true.sum(axis=1), 1.0, atol=1e-9)
        thetas = np.stack(list(model.theta_field.values()))
        assert np.allclose(thetas.sum(axis=1), 1.0, atol=1e-9)

    def test_zero_smoothness_shares_one_theta(self):
        model = make_separable(4, 8, extent=3, t_total=4, smoothness=0.0, seed=2)
        thetas = np.stack(list(model.theta_field.values()))
        assert np.allclose(thetas, thetas[0], atol=1e-12)

    def test_field_covers_the_box(self):
        model = make_separable(3, 9, extent=2, t_total=5, seed=3)
        assert set(model.theta_field) == {
            CellKey(i, j, t) for i in range(2) for j in range(2) for t in range(5)
        }

    def test_deterministic(self):
        a = make_separable(8, 100, extent=4, t_total=10, seed=7)
        b = make_separable(8, 100, extent=4, t_total=10, seed=7)
        assert np.array_equal(a.phi_true, b.phi_true)
        for key in a.theta_field:
            assert np.array_equal(a.theta_field[key], b.theta_field[key])

    def test_vocab_smaller_than_topics_rejected(self):
        with pytest.raises(ValueError):
            make_separable(4, 3, extent=2, t_total=2, seed=0)


class TestGenerate:
    def test_zero_words_per_step(self):
        model = make_separable(2, 4, extent=2, t_total=4, seed=0, words_per_step=0)
        stream, labels = generate(model)
        assert stream.n_steps == 4
        assert all(len(s) == 0 for s in stream.steps)
        assert all(len(z) == 0 for z in labels)

    def test_single_topic(self):
        model = make_separable(1, 6, extent=2, t_total=3, seed=1, words_per_step=30)
        stream, labels = generate(model)
        assert all((z == 0).all() for z in labels)
        words = np.concatenate([s[:, 2] for s in stream.steps])
        assert words.min() >= 0 and words.max() < 6

    def test_reproducible_bits(self):
        model = make_separable(4, 16, extent=2, t_total=5, seed=9, words_per_step=25)
        s1, l1 = generate(model)
        s2, l2 = generate(model)
        for a, b in zip(s1.steps, s2.steps):
            assert np.array_equal(a, b)
        for a, b in zip(l1, l2):
            assert np.array_equal(a, b)

    def test_words_stay_in_their_topic_slice(self):
        model = make_separable(5, 50, extent=3, t_total=10, seed=3, words_per_step=40)
        stream, labels = generate(model)
        words = np.concatenate([s[:, 2] for s in stream.steps])
        truth = np.concatenate(labels)
        assert np.array_equal(words // 10, truth)
        assert nmi(words // 10, truth) == 1.0

    def test_positions_inside_extent(self):
        model = make_separable(2, 4, extent=3, t_total=4, seed=5, words_per_step=50)
        stream, _ = generate(model)
        for rows in stream.steps:
            assert rows[:, 0].min() >= 0 and rows[:, 0].max() < 3 * 64
            assert rows[:, 1].min() >= 0 and rows[:, 1].max() < 3 * 64

    def test_word_marginal_matches_planted_mixture(self):
        model = make_separable(4, 20, extent=2, t_total=50, seed=11, words_per_step=2000)
        stream, _ = generate(model)
        words = np.concatenate([s[:, 2] for s in stream.steps])
        empirical = np.bincount(words, minlength=20) / words.size
        theta_bar = np.stack(list(model.theta_field.values())).mean(axis=0)
        planted = theta_bar @ model.phi_true
        tv = 0.5 * np.abs(empirical - planted).sum()
        assert tv <= 0.02
