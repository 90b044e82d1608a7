import numpy as np
import pytest

from cimtile.arrays import (
    BusContentionError,
    OverlappingAssignmentError,
    RetentionError,
    ScheduleError,
    SwapDirection,
    TEdramArray,
    TSramArray,
    Via3dMap,
    inter_layer_transfer,
    refresh,
)
from cimtile.core import MatrixTile


def _tile(rows):
    return MatrixTile(np.array(rows, dtype=np.uint8))


def _fig_style_4x4():
    # lower column 0 holds 5 and 3; row 0 holds 8 and 12 before the swap
    arr = np.zeros((4, 4), dtype=np.uint8)
    arr[1, 0], arr[3, 0] = 5, 3
    arr[0, 1], arr[0, 3] = 8, 12
    arr[2, 0] = 9
    return MatrixTile(arr)


def test_parallel_read_upper_diagonal():
    tile = _tile([[1, 2, 3], [0, 1, 4], [0, 0, 1]])
    arr = TSramArray(tile)
    got = arr.parallel_read([(0, 1), (0, 2), (1, 2)])
    assert got == {(0, 1): 2, (0, 2): 3, (1, 2): 4}
    assert np.array_equal(arr.grid, tile.elems)


def test_parallel_read_is_idempotent():
    arr = TSramArray(_fig_style_4x4())
    cells = [(1, 0), (3, 0), (0, 1)]
    assert arr.parallel_read(cells) == arr.parallel_read(cells)


def test_parallel_read_worked_column():
    arr = TSramArray(_fig_style_4x4())
    got = arr.parallel_read([(1, 0), (3, 0)])
    assert got == {(1, 0): 5, (3, 0): 3}


def test_read_contention_with_blockers_on():
    arr = TSramArray(_tile([[1, 2], [3, 4]]))
    arr.set_blockers(blocker1=True, blocker2=True)
    with pytest.raises(BusContentionError):
        arr.parallel_read([(0, 0), (0, 1)])


def test_read_out_of_range():
    arr = TSramArray(_tile([[1, 2], [3, 4]]))
    with pytest.raises(ScheduleError):
        arr.parallel_read([(0, 5)])


def test_parallel_write_worked_example():
    arr = TSramArray(_fig_style_4x4())
    before = arr.grid.copy()
    arr.parallel_write({(0, 1): 5, (0, 3): 3})
    assert arr.grid[0, 1] == 5
    assert arr.grid[0, 3] == 3
    mask = np.ones((4, 4), dtype=bool)
    mask[0, 1] = mask[0, 3] = False
    assert np.array_equal(arr.grid[mask], before[mask])


def test_parallel_write_empty_is_noop():
    arr = TSramArray(_fig_style_4x4())
    before = arr.grid.copy()
    arr.parallel_write({})
    assert np.array_equal(arr.grid, before)
    assert arr.write_counts.sum() == 0


def test_fabric_write_behind_off_blocker_unreachable():
    from cimtile.arrays import UnreachableTargetError
    arr = TSramArray(_fig_style_4x4())
    arr.set_blockers(blocker1=False, blocker2=False)
    with pytest.raises(UnreachableTargetError):
        arr.parallel_write({(0, 1): 5}, through_fabric=True)


def test_overlapping_assignment_same_segment():
    arr = TSramArray(_fig_style_4x4())
    arr.set_blockers(blocker1=True, blocker2=False)
    with pytest.raises(OverlappingAssignmentError):
        arr.parallel_write({(0, 1): 5, (0, 3): 3})


def test_write_disturbing_enabled_cell_rejected():
    # one target in a write-enabled row whose segment spans the row
    arr = TSramArray(_fig_style_4x4())
    arr.set_blockers(blocker1=True, blocker2=False)
    with pytest.raises(OverlappingAssignmentError):
        arr.parallel_write({(0, 1): 5})


def test_non_disturb_exhaustive_small():
    rng = np.random.default_rng(5)
    for n in range(2, 9):
        base = rng.integers(0, 16, size=(n, n), dtype=np.uint8)
        for r in range(n):
            for c in range(n):
                arr = TSramArray(MatrixTile(base))
                arr.parallel_write({(r, c): 7})
                expect = base.copy()
                expect[r, c] = 7
                assert np.array_equal(arr.grid, expect)


def test_non_disturb_random_multiwrite():
    rng = np.random.default_rng(6)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        base = rng.integers(0, 16, size=(n, n), dtype=np.uint8)
        arr = TSramArray(MatrixTile(base))
        k = int(rng.integers(1, n * n + 1))
        flat = rng.choice(n * n, size=k, replace=False)
        targets = {(int(i // n), int(i % n)): int(rng.integers(0, 16))
                   for i in flat}
        arr.parallel_write(targets)
        expect = base.copy()
        for (r, c), v in targets.items():
            expect[r, c] = v
        assert np.array_equal(arr.grid, expect)


def test_swap_step_layer_a_worked():
    arr = TSramArray(_fig_style_4x4())
    moved = arr.intra_column_swap_step(1, SwapDirection.LOWER_TO_UPPER)
    assert moved == 3
    assert arr.grid[0, 1] == 5   # was 8
    assert arr.grid[0, 3] == 3   # was 12
    assert arr.grid[0, 2] == 9
    # sources unchanged
    assert arr.grid[1, 0] == 5 and arr.grid[3, 0] == 3


def test_swap_step_layer_b_worked():
    arr = np.zeros((4, 4), dtype=np.uint8)
    arr[0, 1], arr[0, 3] = 6, 12   # b12=0110, b14=1100
    arr[1, 0], arr[3, 0] = 11, 3   # b21=1011, b41=0011
    b = TEdramArray(MatrixTile(arr, layer=TEdramArray.layer))
    moved = b.intra_column_swap_step(1, SwapDirection.UPPER_TO_LOWER)
    assert moved == 3
    assert b.grid[1, 0] == 6    # b21: 1011 -> 0110
    assert b.grid[3, 0] == 12   # b41: 0011 -> 1100
    assert b.grid[0, 1] == 6 and b.grid[0, 3] == 12  # sources kept


def test_swap_step_last_column_single_copy():
    tile = _tile([[0, 0, 0], [0, 0, 0], [0, 9, 0]])
    arr = TSramArray(tile)
    moved = arr.intra_column_swap_step(2, SwapDirection.LOWER_TO_UPPER)
    assert moved == 1
    assert arr.grid[1, 2] == 9


def test_swap_step_touches_exactly_n_minus_k_cells():
    rng = np.random.default_rng(7)
    for n in (2, 4, 7):
        for k in range(1, n):
            base = rng.integers(0, 16, size=(n, n), dtype=np.uint8)
            arr = TSramArray(MatrixTile(base))
            arr.intra_column_swap_step(k, SwapDirection.LOWER_TO_UPPER)
            assert int((arr.grid != base).sum()) <= n - k
            assert int(arr.write_counts.sum()) == n - k


def test_swap_step_bad_k_and_direction():
    arr = TSramArray(_fig_style_4x4())
    with pytest.raises(ScheduleError):
        arr.intra_column_swap_step(0, SwapDirection.LOWER_TO_UPPER)
    with pytest.raises(ScheduleError):
        arr.intra_column_swap_step(4, SwapDirection.LOWER_TO_UPPER)
    with pytest.raises(ScheduleError):
        arr.intra_column_swap_step(1, SwapDirection.UPPER_TO_LOWER)
    b = TEdramArray(n=4)
    with pytest.raises(ScheduleError):
        b.intra_column_swap_step(1, SwapDirection.LOWER_TO_UPPER)


def test_via_map_counts_by_enumeration():
    # independent oracle: count strictly-lower cells one by one
    n = 32
    expected = sum(1 for i in range(n) for j in range(n) if i > j)
    assert expected == 496
    assert len(Via3dMap.lower_diagonal(n)) == expected
    assert len(Via3dMap.upper_diagonal(n)) == expected


def test_via_map_injectivity():
    with pytest.raises(ScheduleError):
        Via3dMap([((0, 1), (0, 1)), ((0, 1), (0, 2))])
    with pytest.raises(ScheduleError):
        Via3dMap([((0, 1), (0, 2)), ((0, 2), (0, 2))])


def test_transfer_upper_diagonal():
    tile = _tile([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    a = TSramArray(tile)
    b = TEdramArray(n=3)
    moved = inter_layer_transfer(a, b, Via3dMap.upper_diagonal(3))
    assert moved == 3
    assert b.grid[0, 1] == 2 and b.grid[0, 2] == 3 and b.grid[1, 2] == 6
    assert np.array_equal(a.grid, tile.elems)  # source unchanged
    assert b.grid[1, 0] == 0  # untouched cells stay empty


def test_transfer_empty_is_noop():
    a = TSramArray(_tile([[1, 2], [3, 4]]))
    b = TEdramArray(n=2)
    assert inter_layer_transfer(a, b, Via3dMap([])) == 0
    assert b.write_counts.sum() == 0


def test_transfer_bounds_and_layers():
    a = TSramArray(_tile([[1, 2], [3, 4]]))
    b = TEdramArray(n=2)
    with pytest.raises(ScheduleError):
        inter_layer_transfer(a, b, Via3dMap([((0, 5), (0, 1))]))
    a2 = TSramArray(_tile([[1, 2], [3, 4]]))
    with pytest.raises(ScheduleError):
        inter_layer_transfer(a, a2, Via3dMap.upper_diagonal(2))


def test_transfer_roundtrip_restores_cells():
    rng = np.random.default_rng(8)
    tile = MatrixTile(rng.integers(0, 16, size=(6, 6), dtype=np.uint8))
    a = TSramArray(tile)
    b = TEdramArray(n=6)
    via = Via3dMap.upper_diagonal(6)
    inter_layer_transfer(a, b, via)
    inter_layer_transfer(b, a, via)
    assert np.array_equal(a.grid, tile.elems)


def test_retention_counters():
    b = TEdramArray(n=3, retention_limit=10)
    b.parallel_write({(0, 0): 5})
    b.advance_cycles(4)
    assert b.retention_counter[0, 0] == 4
    refresh(b)
    assert b.retention_counter[0, 0] == 0
    assert b.grid[0, 0] == 5  # refresh keeps data
    b.advance_cycles(10)
    with pytest.raises(RetentionError):
        b.advance_cycles(1)


def test_retention_write_resets_counter():
    b = TEdramArray(n=2, retention_limit=100)
    b.parallel_write({(0, 0): 5})
    b.advance_cycles(50)
    b.parallel_write({(0, 0): 6})
    assert b.retention_counter[0, 0] == 0


def test_transpose_cycle_budget_fits_default_retention():
    b = TEdramArray(n=32)
    b.parallel_write({(0, 0): 5})
    b.advance_cycles(33)  # full transpose worth of cycles
    assert b.retention_counter[0, 0] == 33
