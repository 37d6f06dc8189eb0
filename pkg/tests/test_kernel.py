import numpy as np
import pytest

from markovec.errors import (
    BlockOverflow,
    DomainError,
    EigenvalueOutOfRange,
    NegativeEntry,
    NoConvergence,
    NotIrreducible,
    NotSymmetric,
    RowsNotEqual,
    RowSumViolation,
)
from markovec.harness import random_symmetric_kernel
from markovec.kernel import (
    BlockSpec,
    ReferenceModel,
    block_kernel,
    compress_duplicates,
    geometric_sum_map,
    invert_geometric_sum,
    kernel_from_reference,
    load_matrix,
    random_kernel,
    reference_from_kernel,
    save_matrix,
    stationary,
    validate_stochastic,
)


class TestValidateStochastic:
    def test_identity_accepted(self):
        matrix = validate_stochastic([[1.0, 0.0], [0.0, 1.0]])
        assert matrix.dim == 2

    def test_row_sum_violation(self):
        with pytest.raises(RowSumViolation) as err:
            validate_stochastic([[0.5, 0.5], [0.3, 0.6]])
        assert err.value.row == 1
        assert err.value.row_sum == pytest.approx(0.9)

    def test_negative_entry(self):
        with pytest.raises(NegativeEntry) as err:
            validate_stochastic([[1.2, -0.2], [0.0, 1.0]])
        assert (err.value.row, err.value.col) == (0, 1)

    def test_result_is_read_only(self):
        matrix = validate_stochastic(np.eye(3))
        with pytest.raises(ValueError):
            matrix.probs[0, 0] = 0.5


class TestRandomKernel:
    def test_deterministic_given_seed(self):
        a = random_kernel(2, seed=123)
        b = random_kernel(2, seed=123)
        assert np.array_equal(a.probs, b.probs)

    def test_rows_sum_to_one(self):
        kernel = random_kernel(50, seed=9)
        assert np.abs(kernel.probs.sum(axis=1) - 1.0).max() <= 1e-12

    def test_simplex_uniform_mean(self):
        # Dirichlet(1) entries have mean 1/V; Monte Carlo over 10^4 seeds.
        total = np.zeros((3, 3))
        for seed in range(10_000):
            total += random_kernel(3, seed).probs
        assert np.abs(total / 10_000 - 1.0 / 3.0).max() < 0.01

    def test_rejects_dim_below_two(self):
        with pytest.raises(ValueError):
            random_kernel(1, seed=0)


class TestBlockKernel:
    def test_block_rows_identical_free_rows_distinct(self):
        kernel = block_kernel(10, BlockSpec(2, 3), seed=5)
        probs = kernel.probs
        for block in (probs[0:3], probs[3:6]):
            assert np.array_equal(block[0], block[1])
            assert np.array_equal(block[0], block[2])
        assert not np.array_equal(probs[0], probs[3])
        for i in range(6, 10):
            for j in range(i + 1, 10):
                assert not np.array_equal(probs[i], probs[j])

    def test_eight_blocks_of_five(self):
        kernel = block_kernel(50, BlockSpec(8, 5), seed=1)
        for b in range(8):
            rows = kernel.probs[5 * b : 5 * (b + 1)]
            assert (rows == rows[0]).all()

    def test_160_blocks_cover_800_rows(self):
        spec = BlockSpec(160, 5)
        assert spec.structured_rows == 800
        kernel = block_kernel(1000, spec, seed=2)
        for b in (0, 73, 159):
            rows = kernel.probs[5 * b : 5 * (b + 1)]
            assert (rows == rows[0]).all()
        tail = kernel.probs[800:]
        assert not np.array_equal(tail[0], tail[1])

    def test_between_block_distance_positive(self):
        for seed in range(5):
            kernel = block_kernel(20, BlockSpec(3, 4), seed=seed)
            for a in range(3):
                for b in range(a + 1, 3):
                    gap = np.abs(kernel.probs[4 * a] - kernel.probs[4 * b]).sum()
                    assert gap > 0

    def test_overflow(self):
        with pytest.raises(BlockOverflow):
            block_kernel(10, BlockSpec(4, 3), seed=0)


class TestStationary:
    def test_doubly_stochastic_gives_uniform(self):
        mu = stationary(validate_stochastic([[0.6, 0.4], [0.4, 0.6]]))
        assert mu == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_two_state_hand_solution(self):
        # mu = mu K with K = [[.5,.5],[1,0]] solves to (2/3, 1/3)
        mu = stationary(validate_stochastic([[0.5, 0.5], [1.0, 0.0]]))
        assert mu == pytest.approx([2.0 / 3.0, 1.0 / 3.0], abs=1e-11)

    def test_disconnected_support_rejected(self):
        with pytest.raises(NotIrreducible):
            stationary(validate_stochastic(np.eye(2)))

    def test_fixed_point_residual(self):
        for seed in range(5):
            kernel = random_kernel(30, seed=seed)
            mu = stationary(kernel)
            assert np.abs(mu @ kernel.probs - mu).sum() < 1e-10

    def test_periodic_chain_hits_cap_with_usable_average(self):
        # bipartite chain: oscillates, but the Cesaro average converges
        kernel = validate_stochastic([[0, 0, 1], [0, 0, 1], [0.3, 0.7, 0]])
        with pytest.raises(NoConvergence) as err:
            stationary(kernel, max_iterations=5000)
        assert err.value.average == pytest.approx([0.15, 0.35, 0.5], abs=1e-3)


class TestReferenceFromKernel:
    def test_width_one_is_kernel(self):
        kernel = random_kernel(6, seed=11)
        rm = reference_from_kernel(kernel, 1)
        assert np.allclose(rm.context_probs.probs, kernel.probs, atol=1e-15)

    def test_swap_kernel_width_two(self):
        kernel = validate_stochastic([[0.0, 1.0], [1.0, 0.0]])
        rm = reference_from_kernel(kernel, 2)
        assert np.allclose(rm.context_probs.probs, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)

    def test_hand_computed_width_two(self):
        # K^2 = [[.52,.48],[.48,.52]]; (K + K^2)/2 = [[.56,.44],[.44,.56]]
        kernel = validate_stochastic([[0.6, 0.4], [0.4, 0.6]])
        rm = reference_from_kernel(kernel, 2)
        assert np.allclose(rm.context_probs.probs, [[0.56, 0.44], [0.44, 0.56]], atol=1e-12)

    def test_output_always_stochastic(self):
        for seed in range(5):
            kernel = random_kernel(40, seed=seed)
            for width in (1, 2, 5):
                rm = reference_from_kernel(kernel, width)
                validate_stochastic(rm.context_probs.probs)


class TestGeometricSumMap:
    @pytest.mark.parametrize("width", [1, 2, 5, 7])
    def test_fixed_points(self, width):
        assert geometric_sum_map(1.0, width) == pytest.approx(1.0, abs=1e-15)
        assert geometric_sum_map(0.0, width) == 0.0

    def test_half_width_two(self):
        assert geometric_sum_map(0.5, 2) == pytest.approx(0.375, abs=1e-15)

    @pytest.mark.parametrize("width", [1, 2, 5])
    def test_strictly_increasing(self, width):
        grid = np.linspace(0.0, 1.0, 101)
        values = [geometric_sum_map(x, width) for x in grid]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_domain_error(self):
        with pytest.raises(DomainError):
            geometric_sum_map(1.5, 2)
        with pytest.raises(DomainError):
            invert_geometric_sum(-0.1, 2)


class TestInvertGeometricSum:
    def test_quadratic_case(self):
        # x + x^2 = 0.75 has root 0.5
        assert invert_geometric_sum(0.375, 2) == pytest.approx(0.5, abs=1e-10)

    def test_endpoints(self):
        assert invert_geometric_sum(1.0, 7) == 1.0
        assert invert_geometric_sum(0.0, 3) == 0.0

    @pytest.mark.parametrize("width", [1, 2, 5])
    def test_left_inverse(self, width):
        for x in np.linspace(0.0, 1.0, 23):
            y = geometric_sum_map(x, width)
            assert invert_geometric_sum(y, width) == pytest.approx(x, abs=1e-10)

    @pytest.mark.parametrize("width", [2, 5])
    def test_image_matches_target(self, width):
        for y in np.linspace(0.0, 1.0, 23):
            x = invert_geometric_sum(y, width)
            assert abs(geometric_sum_map(x, width) - y) < 1e-12


class TestKernelFromReference:
    def test_idempotent_case(self):
        rm = ReferenceModel(validate_stochastic([[0.5, 0.5], [0.5, 0.5]]), 2)
        recovered = kernel_from_reference(rm)
        assert np.allclose(recovered.probs, [[0.5, 0.5], [0.5, 0.5]], atol=1e-12)

    def test_hand_inverted_eigenvalue(self):
        # eigenvalue 0.12 of the width-2 matrix inverts to 0.2
        rm = ReferenceModel(validate_stochastic([[0.56, 0.44], [0.44, 0.56]]), 2)
        recovered = kernel_from_reference(rm)
        assert np.allclose(recovered.probs, [[0.6, 0.4], [0.4, 0.6]], atol=1e-10)

    def test_negative_eigenvalue_rejected(self):
        # [[0.35, 0.65], [0.65, 0.35]] has eigenvalues {1, -0.3}
        rm = ReferenceModel(validate_stochastic([[0.35, 0.65], [0.65, 0.35]]), 2)
        with pytest.raises(EigenvalueOutOfRange):
            kernel_from_reference(rm)

    def test_asymmetric_rejected(self):
        rm = ReferenceModel(validate_stochastic([[0.5, 0.5], [0.3, 0.7]]), 1)
        with pytest.raises(NotSymmetric):
            kernel_from_reference(rm)

    @pytest.mark.parametrize("width", [1, 2, 5])
    def test_round_trip(self, width):
        for seed in range(4):
            kernel = random_symmetric_kernel(12, seed=seed)
            rm = reference_from_kernel(kernel, width)
            recovered = kernel_from_reference(rm)
            assert np.abs(recovered.probs - kernel.probs).max() < 1e-8


class TestCompressDuplicates:
    def _rm_with_duplicate(self):
        rows = np.array([
            [0.2, 0.3, 0.5],
            [0.2, 0.3, 0.5],
            [0.1, 0.1, 0.8],
        ])
        return ReferenceModel(validate_stochastic(rows), 1)

    def test_exact_reconstruction(self):
        rm = self._rm_with_duplicate()
        merge_map, reduced = compress_duplicates(rm, 0, 1)
        assert merge_map.shape == (3, 2)
        assert reduced.shape == (2, 3)
        assert np.array_equal(merge_map @ reduced, rm.context_probs.probs)

    def test_merge_higher_into_lower_index(self):
        rm = self._rm_with_duplicate()
        merge_map, reduced = compress_duplicates(rm, 1, 0)
        assert np.array_equal(merge_map @ reduced, rm.context_probs.probs)

    def test_distinct_rows_rejected(self):
        rm = ReferenceModel(validate_stochastic(random_kernel(4, seed=3).probs), 1)
        with pytest.raises(RowsNotEqual) as err:
            compress_duplicates(rm, 0, 1)
        assert err.value.max_abs_diff > 0

    def test_block_kernel_rows_merge_exactly(self):
        kernel = block_kernel(10, BlockSpec(2, 3), seed=8)
        rm = reference_from_kernel(kernel, 1)
        for keep, drop in [(0, 1), (0, 2), (1, 2)]:
            merge_map, reduced = compress_duplicates(rm, keep, drop)
            assert np.array_equal(merge_map @ reduced, rm.context_probs.probs)


def test_matrix_io_round_trip(tmp_path):
    kernel = random_kernel(7, seed=42)
    path = tmp_path / "kernel.txt"
    save_matrix(kernel, path)
    loaded = load_matrix(path)
    assert np.array_equal(loaded.probs, kernel.probs)
    header = path.read_text().splitlines()[0]
    assert header == "V=7"
