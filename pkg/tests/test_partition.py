"""Domain partitioning: code pass-through and k-means."""

import itertools

import numpy as np
import pytest

from helpers import make_set
from mdadapt.errors import ConfigError, DataError
from mdadapt.partition import kmeans, lloyd, partition_by_code, single_partition


def blob_data(seed=0, n=30, centers=((-10.0, 0.0), (10.0, 0.0))):
    rng = np.random.default_rng(seed)
    points, labels = [], []
    for idx, center in enumerate(centers):
        points.append(rng.standard_normal((n, len(center))) + np.array(center))
        labels += [idx] * n
    return np.vstack(points), np.array(labels)


class TestPartitionByCode:
    def test_two_codes(self):
        data = make_set(np.zeros((3, 2)), codes=["A", "A", "B"])
        part = partition_by_code(data)
        assert part.k == 2
        assert [part.assignments[i] for i in data.ids] == [0, 0, 1]

    def test_single_code_degenerate(self):
        data = make_set(np.zeros((4, 2)), codes=["Z"] * 4)
        assert partition_by_code(data).k == 1

    def test_six_codes(self):
        codes = ["C1", "C2", "C3", "C4", "C5", "C6"] * 2
        part = partition_by_code(make_set(np.zeros((12, 2)), codes=codes))
        assert part.k == 6
        assert sorted(set(part.assignments.values())) == list(range(6))

    def test_missing_code_names_the_record(self):
        data = make_set(np.zeros((2, 2)), codes=["A", "A"])
        data.records[1].code = None
        with pytest.raises(DataError, match="r1"):
            partition_by_code(data)

    def test_pure_function_of_code_multiset(self):
        data1 = make_set(np.zeros((3, 2)), codes=["B", "A", "B"])
        data2 = make_set(np.ones((3, 2)), codes=["B", "A", "B"])
        p1, p2 = partition_by_code(data1), partition_by_code(data2)
        assert p1.assignments == p2.assignments

    def test_indices_follow_sorted_code_order(self):
        data = make_set(np.zeros((2, 2)), codes=["ZZ", "AA"])
        part = partition_by_code(data)
        assert part.assignments["r0"] == 1
        assert part.assignments["r1"] == 0


class TestSinglePartition:
    def test_everything_in_domain_zero(self):
        data = make_set(np.zeros((5, 2)))
        part = single_partition(data)
        assert part.k == 1
        assert set(part.assignments.values()) == {0}

    def test_offset_shifts_indices(self):
        part = single_partition(make_set(np.zeros((3, 2)))).offset(4)
        assert set(part.assignments.values()) == {4}
        assert part.k == 1


class TestKmeans:
    def test_k1_closed_form(self):
        x = np.random.default_rng(0).standard_normal((20, 3))
        labels, centroids, trace = lloyd(x, 1, seed=0)
        assert np.allclose(centroids[0], x.mean(axis=0), atol=1e-12)
        assert abs(trace[-1] - ((x - x.mean(axis=0)) ** 2).sum()) < 1e-9
        assert not labels.any()

    def test_separated_blobs_pure_assignment(self):
        for seed in range(5):
            x, truth = blob_data(seed=seed)
            labels, _, _ = lloyd(x, 2, seed=seed)
            # clusters may be numbered either way round
            agreement = max(
                (labels == truth).mean(), (labels == 1 - truth).mean()
            )
            assert agreement == 1.0

    def test_eight_point_global_optimum(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((8, 2))

        def partition_inertia(mask):
            total = 0.0
            for side in (x[mask], x[~mask]):
                total += ((side - side.mean(axis=0)) ** 2).sum()
            return total

        best = min(
            partition_inertia(np.array(bits, dtype=bool))
            for bits in itertools.product([False, True], repeat=8)
            if 0 < sum(bits) < 8
        )
        hits = sum(
            1 for seed in range(5)
            if abs(lloyd(x, 2, seed=seed)[2][-1] - best) < 1e-9
        )
        assert hits >= 4

    def test_inertia_trace_non_increasing(self):
        rng = np.random.default_rng(3)
        for seed in range(5):
            x = rng.standard_normal((60, 4))
            _, _, trace = lloyd(x, 4, seed=seed)
            diffs = np.diff(trace)
            assert (diffs <= 1e-9).all()

    def test_fixed_seed_determinism(self):
        x = np.random.default_rng(1).standard_normal((40, 3))
        a = lloyd(x, 3, seed=7)
        b = lloyd(x, 3, seed=7)
        assert np.array_equal(a[0], b[0])
        assert np.array_equal(a[1], b[1])

    def test_permutation_changes_only_labeling_on_blobs(self):
        x, _ = blob_data(seed=2)
        perm = np.random.default_rng(0).permutation(len(x))
        labels_a, _, _ = lloyd(x, 2, seed=0)
        labels_b, _, _ = lloyd(x[perm], 2, seed=0)
        groups_a = {frozenset(np.flatnonzero(labels_a == j)) for j in range(2)}
        groups_b = {
            frozenset(perm[np.flatnonzero(labels_b == j)]) for j in range(2)
        }
        assert groups_a == groups_b

    def test_k_exceeding_points_rejected(self):
        with pytest.raises(ConfigError):
            lloyd(np.zeros((3, 2)), 4)

    def test_duplicate_points_stay_defined(self):
        # all points identical: one centroid takes everything, empty
        # clusters are re-seeded without error
        x = np.ones((6, 2))
        labels, centroids, trace = lloyd(x, 2, seed=0)
        assert trace[-1] <= trace[0]
        assert np.isfinite(centroids).all()

    def test_vecset_interface_records_metadata(self):
        x, truth = blob_data(seed=4, n=10)
        data = make_set(x)
        part = kmeans(data, 2, seed=0)
        assert part.k == 2
        assert part.centroids is not None
        assert part.inertia == part.inertia_trace[-1]
        assert set(part.assignments) == set(data.ids)

    def test_labels_for_matches_assignments(self):
        data = make_set(np.random.default_rng(5).standard_normal((10, 2)))
        part = kmeans(data, 2, seed=1)
        labels = part.labels_for(data.ids)
        assert [part.assignments[i] for i in data.ids] == labels.tolist()
