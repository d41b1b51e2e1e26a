import math

import numpy as np
import pytest

from _instances import random_models, random_ssl_instance
from coxcut import (
    ClassModel,
    Dataset,
    EnergyGraph,
    Kernel,
    brute_force_log_partition,
    brute_force_map,
    build_energy,
    check_pairwise_representable,
    energy_of,
    joint_unnormalized_log_prob,
    log_product_density,
    predict_label,
    predict_proba,
    shared_models,
)
from coxcut.mrf import _scan_logz_loop, _scan_logz_numpy, _scan_min_loop, _scan_min_numpy


def _hand_energy(unary, pairs=None, constant=0.0):
    unary = np.asarray(unary, dtype=float)
    q = unary.shape[1]
    if pairs:
        pi = np.array([p[0] for p in pairs])
        pj = np.array([p[1] for p in pairs])
        tables = np.array([p[2] for p in pairs], dtype=float)
    else:
        pi = pj = np.empty(0, dtype=np.int64)
        tables = np.empty((0, q, q))
    return EnergyGraph(unary, pi, pj, tables, constant)


class TestBuildEnergy:
    def test_vanishing_kernel_gives_flat_energies(self):
        models = shared_models(2, Kernel("se", 1e-300, 1.0))
        labeled = Dataset(np.array([[0.0], [1.0]]), np.array([1, 2]), 2)
        energy = build_energy(models, labeled, np.array([[0.5], [2.0]]), cutoff=None)
        values = [energy_of(energy, [a, b]) for a in (1, 2) for b in (1, 2)]
        assert np.allclose(values, values[0], atol=1e-12)

    def test_single_site_map_equals_supervised_prediction(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            q = int(rng.integers(2, 5))
            models = random_models(rng, q, shared_kernel=True, zero_means=True)
            n = int(rng.integers(1, 8))
            labeled = Dataset(rng.normal(0, 1, (n, 2)), rng.integers(1, q + 1, n), q)
            x = rng.normal(0, 1, (1, 2))
            energy = build_energy(models, labeled, x)
            lab, _ = brute_force_map(energy)
            sup = predict_label(predict_proba(models, labeled, x[0]))
            assert lab[0] == sup

    def test_coincident_sites_pairwise_delta_structure(self):
        models = shared_models(2, Kernel("se", 1.0, 1.0))
        labeled = Dataset(np.array([[9.0, 9.0]]), np.array([1]), 2)
        energy = build_energy(models, labeled, np.array([[0.0, 0.0], [0.0, 0.0]]))
        assert energy.num_pairs == 1
        table = energy.tables[0]
        assert table[0, 0] == -1.0 and table[1, 1] == -1.0
        assert table[0, 1] == 0.0 and table[1, 0] == 0.0

    def test_pairwise_sign_structure_randomized(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            *_, energy = random_ssl_instance(rng, q=int(rng.integers(2, 4)))
            diag = np.diagonal(energy.tables, axis1=1, axis2=2)
            assert np.all(diag <= 0)
            off = energy.tables.copy()
            for a in range(energy.num_labels):
                off[:, a, a] = 0.0
            assert np.all(off == 0.0)

    def test_dimension_mismatch(self):
        models = shared_models(2, Kernel("se"))
        labeled = Dataset(np.zeros((1, 2)), np.array([1]), 2)
        with pytest.raises(ValueError, match="dimension"):
            build_energy(models, labeled, np.zeros((2, 3)))


class TestJoint:
    def test_single_point(self):
        models = [ClassModel(0.4, Kernel("se", 2.0, 1.0)), ClassModel(0.0, Kernel("se"))]
        ds = Dataset(np.array([[0.0, 0.0]]), np.array([1]), 2)
        assert joint_unnormalized_log_prob(models, ds) == pytest.approx(0.4 + 1.0, abs=1e-14)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(2)
        models = random_models(rng, 3)
        x = rng.normal(0, 1, (7, 2))
        y = rng.integers(1, 4, 7)
        v = joint_unnormalized_log_prob(models, Dataset(x, y, 3))
        for _ in range(5):
            perm = rng.permutation(7)
            assert joint_unnormalized_log_prob(
                models, Dataset(x[perm], y[perm], 3)
            ) == pytest.approx(v, rel=1e-12)

    def test_equals_sum_of_product_densities(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            q = int(rng.integers(2, 4))
            models = random_models(rng, q)
            n = int(rng.integers(1, 9))
            x = rng.normal(0, 1, (n, 2))
            y = rng.integers(1, q + 1, n)
            total = sum(
                log_product_density(models[a], x[y == a + 1])
                for a in range(q)
                if np.any(y == a + 1)
            )
            got = joint_unnormalized_log_prob(models, Dataset(x, y, q))
            assert got == pytest.approx(total, rel=1e-10)

    def test_unlabeled_point_rejected(self):
        models = shared_models(2, Kernel("se"))
        ds = Dataset(np.zeros((2, 1)), np.array([1, 0]), 2)
        with pytest.raises(ValueError, match="labeled"):
            joint_unnormalized_log_prob(models, ds)

    def test_energy_duality_on_random_instances(self):
        # joint(y1) - joint(y2) == E(y2) - E(y1) for the built energy
        rng = np.random.default_rng(4)
        for _ in range(25):
            q = int(rng.integers(2, 4))
            models, labeled, unlabeled, energy = random_ssl_instance(
                rng, q=q, max_labeled=4, max_unlabeled=5
            )
            energy = build_energy(models, labeled, unlabeled, cutoff=None)
            xl, yl = labeled.labeled()
            u = len(unlabeled)
            for _ in range(4):
                y1 = rng.integers(1, q + 1, u)
                y2 = rng.integers(1, q + 1, u)
                j1 = joint_unnormalized_log_prob(
                    models, Dataset(np.vstack([xl, unlabeled]), np.r_[yl, y1], q)
                )
                j2 = joint_unnormalized_log_prob(
                    models, Dataset(np.vstack([xl, unlabeled]), np.r_[yl, y2], q)
                )
                lhs = j1 - j2
                rhs = energy_of(energy, y2) - energy_of(energy, y1)
                assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)
                assert j1 == pytest.approx(-energy_of(energy, y1), rel=1e-9, abs=1e-9)


class TestEnergyOf:
    def test_all_zero_tables_returns_constant(self):
        energy = _hand_energy(np.zeros((3, 2)), constant=1.25)
        assert energy_of(energy, [1, 2, 1]) == 1.25

    def test_hand_summed_value(self):
        table = np.array([[-1.0, 0.5], [0.25, -2.0]])
        energy = _hand_energy(
            [[0.1, 0.2], [0.3, 0.4]], pairs=[(0, 1, table)], constant=0.05
        )
        # labeling (1, 2): 0.1 + 0.4 + table[0, 1] + 0.05
        assert energy_of(energy, [1, 2]) == pytest.approx(0.1 + 0.4 + 0.5 + 0.05, abs=1e-15)

    def test_constant_shift(self):
        rng = np.random.default_rng(5)
        *_, energy = random_ssl_instance(rng, q=2, max_unlabeled=5)
        shifted = EnergyGraph(
            energy.unary, energy.pair_i, energy.pair_j, energy.tables, energy.constant + 2.5
        )
        y = rng.integers(1, 3, energy.num_sites)
        assert energy_of(shifted, y) == pytest.approx(energy_of(energy, y) + 2.5, rel=1e-14)

    def test_bad_labelings_rejected(self):
        energy = _hand_energy(np.zeros((2, 2)))
        with pytest.raises(ValueError, match="shape"):
            energy_of(energy, [1])
        with pytest.raises(ValueError, match="labels"):
            energy_of(energy, [1, 3])


class TestRepresentability:
    def test_built_energies_always_pass(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            q = int(rng.integers(2, 5))
            *_, energy = random_ssl_instance(rng, q=q, max_unlabeled=8)
            ok, witness = check_pairwise_representable(energy)
            assert ok and witness is None

    def test_hand_violating_table_detected_with_witness(self):
        table = np.array([[-1.0, -3.0], [-3.0, -1.0]])
        energy = _hand_energy(np.zeros((2, 2)), pairs=[(0, 1, table)])
        ok, witness = check_pairwise_representable(energy)
        assert not ok
        j, k, a, b, c = witness
        assert (j, k) == (0, 1)
        # the witness triple really violates the inequality
        t = energy.tables[0]
        assert t[a - 1, a - 1] + t[b - 1, c - 1] > t[a - 1, c - 1] + t[b - 1, a - 1] + 1e-9

    def test_all_zero_tables_pass(self):
        energy = _hand_energy(np.zeros((3, 2)), pairs=[(0, 1, np.zeros((2, 2)))])
        ok, _ = check_pairwise_representable(energy)
        assert ok


class TestBruteForce:
    def test_single_site_argmin(self):
        energy = _hand_energy([[0.3, -0.2, 0.1]])
        lab, e = brute_force_map(energy)
        assert lab.tolist() == [2] and e == pytest.approx(-0.2)

    def test_zero_energy_lexicographic_tie_break(self):
        energy = _hand_energy(np.zeros((4, 3)))
        lab, e = brute_force_map(energy)
        assert lab.tolist() == [1, 1, 1, 1] and e == 0.0

    def test_guard_rejects_large_instances(self):
        energy = _hand_energy(np.zeros((21, 2)))
        with pytest.raises(ValueError, match="guard"):
            brute_force_map(energy)
        with pytest.raises(ValueError, match="guard"):
            brute_force_log_partition(energy)

    def test_log_partition_uniform(self):
        energy = _hand_energy(np.zeros((5, 3)))
        assert brute_force_log_partition(energy) == pytest.approx(5 * math.log(3), rel=1e-12)

    def test_log_partition_single_site(self):
        col = np.array([[0.4, -1.0, 2.0]])
        energy = _hand_energy(col)
        expect = np.logaddexp.reduce(-col[0])
        assert brute_force_log_partition(energy) == pytest.approx(expect, rel=1e-12)

    def test_scan_implementations_bit_identical(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            q = int(rng.integers(2, 4))
            *_, energy = random_ssl_instance(rng, q=q, max_unlabeled=7)
            total = q**energy.num_sites
            dn, en = _scan_min_numpy(energy, total)
            dl, el = _scan_min_loop(energy.unary, energy.pair_i, energy.pair_j, energy.tables)
            assert np.array_equal(dn, dl) and en == el
            zn = _scan_logz_numpy(energy, total)
            zl = _scan_logz_loop(energy.unary, energy.pair_i, energy.pair_j, energy.tables)
            assert zn == pytest.approx(zl, rel=1e-12)

    def test_map_beats_random_labelings(self):
        rng = np.random.default_rng(8)
        *_, energy = random_ssl_instance(rng, q=3, max_unlabeled=8)
        _, best = brute_force_map(energy)
        for _ in range(200):
            y = rng.integers(1, 4, energy.num_sites)
            assert best <= energy_of(energy, y) + 1e-12


class TestNoInterference:
    def test_marginalizing_an_extra_point_changes_the_distribution(self):
        # 3-point exhibit: the label distribution of two points shifts once a
        # third unlabeled point is marginalized in
        models = shared_models(2, Kernel("se", 1.0, 1.0))
        pair = np.array([[0.0], [2.0]])
        triple = np.array([[0.0], [2.0], [0.3]])
        e2 = build_energy(models, None, pair, cutoff=None)
        e3 = build_energy(models, None, triple, cutoff=None)
        z2 = brute_force_log_partition(e2)
        z3 = brute_force_log_partition(e3)
        p2 = np.array(
            [math.exp(-energy_of(e2, [a, b]) - z2) for a in (1, 2) for b in (1, 2)]
        )
        p3 = np.array(
            [
                sum(math.exp(-energy_of(e3, [a, b, c]) - z3) for c in (1, 2))
                for a in (1, 2)
                for b in (1, 2)
            ]
        )
        assert p2.sum() == pytest.approx(1.0, abs=1e-12)
        assert p3.sum() == pytest.approx(1.0, abs=1e-12)
        tv = 0.5 * np.abs(p2 - p3).sum()
        assert tv > 1e-6
