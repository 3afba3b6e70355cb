"""Variational relational graph encoder: forward, gradients, training."""

import math

import numpy as np
import pytest

from bridgeroles import encoder as enc
from bridgeroles import graphbuild as gb
from bridgeroles.geo import GeoPoint

from fixtures import two_clique_graph


def small_config(**overrides):
    defaults = dict(layer_dims=(6, 10, 10, 4), max_epochs=5, seed=0)
    defaults.update(overrides)
    return enc.EncoderConfig(**defaults)


class TestConfig:
    def test_defaults_match_published_architecture(self):
        cfg = enc.EncoderConfig()
        assert cfg.layer_dims == (21, 128, 128, 32)
        assert cfg.num_bases == 2
        assert len(cfg.relations) == 2
        assert cfg.learning_rate == pytest.approx(1e-3)
        assert cfg.beta_start == 0.01 and cfg.beta_end == 1.0 and cfg.beta_epochs == 50
        assert cfg.neg_ratio == 1.0 and cfg.patience == 10

    def test_validation(self):
        with pytest.raises(enc.EncoderError):
            enc.EncoderConfig(layer_dims=(21, 128, 32))
        with pytest.raises(enc.EncoderError):
            enc.EncoderConfig(learning_rate=0.0)
        with pytest.raises(enc.EncoderError):
            enc.EncoderConfig(holdout_fraction=1.0)
        with pytest.raises(enc.EncoderError):
            enc.EncoderConfig(relations=())


class TestRelGraph:
    def test_adjacency_rows_normalised(self):
        g = enc.RelGraph(4, {"a": [(0, 1), (0, 2), (2, 3)]})
        (A,) = g.adjacency(["a"])
        sums = np.asarray(A.sum(axis=1)).ravel()
        assert sums[0] == pytest.approx(1.0)
        assert sums[3] == pytest.approx(1.0)

    def test_zero_degree_rows_stay_zero(self):
        g = enc.RelGraph(3, {"a": [(0, 1)]})
        (A,) = g.adjacency(["a"])
        assert np.asarray(A.sum(axis=1)).ravel()[2] == 0.0

    def test_positive_edges_deduplicated_and_sorted(self):
        g = enc.RelGraph(4, {"a": [(1, 0), (0, 1), (2, 3)], "b": [(0, 1), (1, 2)]})
        edges = g.positive_edges(["a", "b"])
        assert edges.tolist() == [[0, 1], [1, 2], [2, 3]]

    def test_from_hetgraph_excludes_buildings(self):
        g = gb.HetGraph()
        s0 = g.add_node(gb.NodeKind.STREET, GeoPoint(36.0, 139.83))
        s1 = g.add_node(gb.NodeKind.STREET, GeoPoint(36.001, 139.83))
        b = g.add_node(gb.NodeKind.BRIDGE, GeoPoint(36.0005, 139.83), name="B")
        g.add_node(gb.NodeKind.BUILDING, GeoPoint(36.0, 139.831), category=gb.BuildingCategory.SHOP)
        g.add_street_edge(s0.id, s1.id)
        g.edges[gb.RelationKind.STREET_TO_BRIDGE].append((s0.id, b.id))
        g.edges[gb.RelationKind.TO_SHOP].append((b.id, 3))
        rg = enc.RelGraph.from_hetgraph(g)
        assert rg.n == 3
        assert rg.node_ids == [0, 1, 2]
        assert rg.rel_edges["street_to_street"].tolist() == [[0, 1]]
        assert rg.rel_edges["street_to_bridge"].tolist() == [[0, 2]]

    def test_out_of_range_edge_rejected(self):
        with pytest.raises(enc.EncoderError):
            enc.RelGraph(2, {"a": [(0, 5)]})


class TestForward:
    def test_output_shapes(self):
        graph, X = two_clique_graph()
        cfg = enc.EncoderConfig(relations=("street_to_street",))
        weights = enc.init_weights(cfg, np.random.default_rng(0))
        cache = enc.rgcn_forward(X, graph.adjacency(cfg.relations), weights, cfg.logvar_clip)
        assert cache.mu.shape == (100, 32)
        assert cache.logvar.shape == (100, 32)

    def test_identity_self_loop_passes_nonnegative_input_through(self):
        # One isolated node, no edges: the first layer reduces to
        # relu(self_loop @ x), so an identity self-loop keeps x unchanged.
        cfg = small_config(layer_dims=(4, 4, 4, 4), relations=("a",))
        g = enc.RelGraph(1, {"a": []})
        weights = enc.init_weights(cfg, np.random.default_rng(0))
        weights.hidden[0].basis[:] = 0.0
        weights.hidden[0].self_loop[:] = np.eye(4)
        x = np.array([[0.5, 0.0, 2.0, 1.5]])
        cache = enc.rgcn_forward(x, g.adjacency(cfg.relations), weights, cfg.logvar_clip)
        assert np.allclose(cache.inputs[1], x)

    def test_logvar_clamped(self):
        cfg = small_config(layer_dims=(4, 4, 4, 4), relations=("a",))
        g = enc.RelGraph(1, {"a": []})
        weights = enc.init_weights(cfg, np.random.default_rng(0))
        weights.logvar.basis[:] = 0.0
        weights.logvar.self_loop[:] = np.eye(4) * 1000.0
        x = np.array([[5.0, 5.0, 5.0, 5.0]])
        cache = enc.rgcn_forward(x, g.adjacency(cfg.relations), weights, cfg.logvar_clip)
        assert cache.logvar.max() <= 20.0
        assert cache.logvar_raw.max() > 20.0

    def test_relation_matrices_are_basis_combinations(self):
        cfg = small_config()
        weights = enc.init_weights(cfg, np.random.default_rng(3))
        lw = weights.hidden[0]
        rel = lw.relation_matrices()
        for r in range(rel.shape[0]):
            manual = sum(lw.coef[r, b] * lw.basis[b] for b in range(lw.basis.shape[0]))
            assert np.allclose(rel[r], manual)


class TestLatentSpace:
    def test_zero_eps_returns_mu(self):
        mu = np.arange(6.0).reshape(2, 3)
        logvar = np.zeros((2, 3))
        z = enc.reparameterize(mu, logvar, np.zeros((2, 3)))
        assert np.array_equal(z, mu)

    def test_reparameterize_scales_by_std(self):
        mu = np.zeros((1, 2))
        logvar = np.full((1, 2), math.log(4.0))
        z = enc.reparameterize(mu, logvar, np.ones((1, 2)))
        assert np.allclose(z, 2.0)

    def test_decode_edge_probability(self):
        assert enc.decode_edge(np.zeros(4), np.ones(4)) == pytest.approx(0.5)
        strong = enc.decode_edge(np.full(4, 2.0), np.full(4, 2.0))
        assert strong > 0.99
        z_i, z_j = np.array([1.0, -1.0]), np.array([1.0, 1.0])
        assert enc.decode_edge(z_i, z_j) == enc.decode_edge(z_j, z_i)


class TestLoss:
    def test_beta_schedule_endpoints(self):
        cfg = enc.EncoderConfig()
        assert enc.beta_schedule(0, cfg) == pytest.approx(0.01)
        assert enc.beta_schedule(25, cfg) == pytest.approx(0.505)
        assert enc.beta_schedule(50, cfg) == pytest.approx(1.0)
        assert enc.beta_schedule(120, cfg) == pytest.approx(1.0)

    def test_kl_zero_at_prior(self):
        z = np.zeros((3, 4))
        pos = np.array([[0, 1]])
        _, _, kl = enc.elbo_terms(z, np.zeros((3, 4)), np.zeros((3, 4)), pos, np.empty((0, 2), dtype=int), 1.0)
        assert kl == 0.0

    def test_kl_hand_value(self):
        # One node, one dim, mu=1, logvar=0: 0.5 * (1 + 1 - 1 - 0) = 0.5.
        mu = np.array([[1.0]])
        lv = np.array([[0.0]])
        _, _, kl = enc.elbo_terms(mu, mu, lv, np.array([[0, 0]]), np.empty((0, 2), dtype=int), 1.0)
        assert kl == pytest.approx(0.5)

    def test_recon_softplus_values(self):
        # Frozen by hand: softplus(-1) = 0.31326, softplus(1) = 1.31326.
        z = np.array([[1.0], [1.0], [-1.0]])
        pos = np.array([[0, 1]])  # logit +1, target 1
        neg = np.array([[0, 2]])  # logit -1, target 0
        total, recon, kl = enc.elbo_terms(z, np.zeros_like(z), np.zeros_like(z), pos, neg, 1.0)
        assert recon == pytest.approx((0.3132617 + 0.3132617) / 2.0, abs=1e-6)
        pos_only, _, _ = enc.elbo_terms(z, np.zeros_like(z), np.zeros_like(z), np.array([[0, 2]]), np.empty((0, 2), dtype=int), 0.0)
        assert pos_only == pytest.approx(1.3132617, abs=1e-6)

    def test_empty_positive_edges_rejected(self):
        z = np.zeros((2, 2))
        with pytest.raises(enc.EmptyEdgeSet):
            enc.elbo_terms(z, z, z, np.empty((0, 2), dtype=int), np.empty((0, 2), dtype=int), 1.0)


class TestParameterSharing:
    def test_basis_param_count_formula(self):
        assert enc.basis_param_count(2, 2, 128, 21) == 2 * 128 * 21 + 4
        assert enc.basis_param_count(5, 2, 16, 16) == 2 * 16 * 16 + 10

    def test_fewer_params_than_unshared_when_bases_below_relations(self):
        # Sharing wins whenever num_bases < num_relations (for realistic dims).
        for r, b, do, di in [(5, 2, 16, 16), (3, 1, 128, 128), (4, 2, 64, 32)]:
            assert enc.basis_param_count(r, b, do, di) < r * do * di

    def test_equal_relations_and_bases_adds_coefficients(self):
        # With as many bases as relations the factorisation spends an extra
        # |R| x B coefficient table; there is no saving in that regime.
        assert enc.basis_param_count(2, 2, 128, 128) == 2 * 128 * 128 + 4

    def test_weight_total_param_count(self):
        cfg = enc.EncoderConfig()
        weights = enc.init_weights(cfg, np.random.default_rng(0))
        expected = 0
        for d_in, d_out in [(21, 128), (128, 128), (128, 32), (128, 32)]:
            expected += enc.basis_param_count(2, 2, d_out, d_in) + d_out * d_in
        assert weights.param_count() == expected


class TestGradients:
    def test_analytic_matches_finite_difference(self):
        err = enc.grad_check(seed=0, n_checks=30)
        assert err < 1e-6

    def test_corrupted_gradients_detected(self):
        err = enc.grad_check(seed=0, n_checks=30, corrupt=True)
        assert err > 1e-2

    def test_check_covers_every_tensor_kind(self):
        # A larger sample touches basis, coefficient, and self-loop tensors.
        err = enc.grad_check(seed=2, n_checks=60)
        assert err < 1e-6


class TestNegativeSampling:
    def test_avoids_forbidden_and_self_pairs(self):
        rng = np.random.default_rng(0)
        forbidden = {(0, 1), (2, 3)}
        neg = enc.sample_negatives(rng, 6, forbidden, 40)
        assert len(neg) == 40
        for a, b in neg:
            assert a < b
            assert (a, b) not in forbidden

    def test_deterministic_for_seed(self):
        out1 = enc.sample_negatives(np.random.default_rng(5), 10, {(0, 1)}, 20)
        out2 = enc.sample_negatives(np.random.default_rng(5), 10, {(0, 1)}, 20)
        assert np.array_equal(out1, out2)

    def test_saturated_graph_rejected(self):
        forbidden = {(0, 1), (0, 2), (1, 2)}
        with pytest.raises(enc.EncoderError):
            enc.sample_negatives(np.random.default_rng(0), 3, forbidden, 5)


class TestTraining:
    def test_two_clique_learns_structure(self):
        graph, X = two_clique_graph()
        cfg = enc.EncoderConfig(
            relations=("street_to_street",), max_epochs=200, holdout_fraction=0.1, seed=0
        )
        _, embedding, report = enc.train(graph, X, cfg)
        assert report.epochs[-1].total < report.epochs[0].total
        assert report.auc is not None and report.auc >= 0.85
        assert embedding.mu.shape == (100, 32)

    def test_early_stopping_fires(self):
        graph, X = two_clique_graph()
        cfg = enc.EncoderConfig(
            relations=("street_to_street",), max_epochs=200, seed=0
        )
        _, _, report = enc.train(graph, X, cfg)
        assert report.stop_reason == "early_stopping"
        assert len(report.epochs) < cfg.max_epochs
        assert report.best_epoch <= report.epochs[-1].epoch

    def test_deterministic_runs_identical(self):
        graph, X = two_clique_graph()
        cfg = enc.EncoderConfig(
            relations=("street_to_street",), max_epochs=30, seed=11
        )
        _, emb1, rep1 = enc.train(graph, X, cfg)
        _, emb2, rep2 = enc.train(graph, X, cfg)
        assert np.array_equal(rep1.totals(), rep2.totals())
        assert rep1.best_epoch == rep2.best_epoch
        assert rep1.stop_reason == rep2.stop_reason
        assert np.array_equal(emb1.mu, emb2.mu)
        assert np.array_equal(emb1.logvar, emb2.logvar)

    def test_different_seed_changes_run(self):
        graph, X = two_clique_graph()
        cfg1 = enc.EncoderConfig(relations=("street_to_street",), max_epochs=10, seed=0)
        cfg2 = enc.EncoderConfig(relations=("street_to_street",), max_epochs=10, seed=1)
        _, _, rep1 = enc.train(graph, X, cfg1)
        _, _, rep2 = enc.train(graph, X, cfg2)
        assert not np.array_equal(rep1.totals(), rep2.totals())

    def test_feature_width_mismatch_rejected(self):
        graph, X = two_clique_graph()
        cfg = enc.EncoderConfig(relations=("street_to_street",))
        with pytest.raises(enc.EncoderError):
            enc.train(graph, X[:, :5], cfg)

    def test_no_positive_edges_rejected(self):
        g = enc.RelGraph(4, {"street_to_street": []})
        X = np.zeros((4, 21))
        with pytest.raises(enc.EmptyEdgeSet):
            enc.train(g, X, enc.EncoderConfig())

    def test_overflowing_inputs_raise_nonfinite(self):
        graph, X = two_clique_graph()
        cfg = enc.EncoderConfig(relations=("street_to_street",), max_epochs=5, seed=0)
        with pytest.raises(enc.NonFiniteLoss):
            with np.errstate(all="ignore"):
                enc.train(graph, np.full_like(X, 1e200), cfg)

    def test_auc_absent_without_holdout(self):
        graph, X = two_clique_graph()
        cfg = enc.EncoderConfig(relations=("street_to_street",), max_epochs=5, seed=0)
        _, _, report = enc.train(graph, X, cfg)
        assert report.auc is None

    def test_embedding_row_lookup(self):
        emb = enc.LatentEmbedding(node_ids=[4, 9, 2], mu=np.arange(9.0).reshape(3, 3), logvar=np.zeros((3, 3)))
        rows = emb.rows_for([2, 4])
        assert np.array_equal(rows, np.array([[6.0, 7.0, 8.0], [0.0, 1.0, 2.0]]))
