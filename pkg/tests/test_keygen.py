import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ipg_aka.cgrid import generate_grid
from ipg_aka.errors import (
    GridTooSmall,
    InsufficientSample,
    SequenceGridMismatch,
)
from ipg_aka.keygen import (
    FeederState,
    LteKey,
    derive_lte_key,
    derive_lte_key_traced,
    deserialize_key_sequence,
    feeder_step,
    form_key_sequence,
    key_refresh_due,
    randomness_suite,
    serialize_key_sequence,
)


def _composition(ks):
    counts = {}
    for col in ks.entries:
        counts[col] = counts.get(col, 0) + 1
    return counts


def test_canonical_5x5_composition(grid5, kseq5):
    counts = _composition(kseq5)
    widths = {c: grid5.column_width(c) for c in counts}
    total = sum(widths[c] * k for c, k in counts.items())
    assert total == 256
    # four 24-bit, four + four 16-bit, four 8-bit picks
    assert counts[3] == 4 and widths[3] == 24
    assert counts[2] == 4 and widths[2] == 16
    assert counts[4] == 4 and widths[4] == 16
    assert counts[1] == 4 and widths[1] == 8


def test_7x7_composition_sums_and_caps(grid7, kseq7):
    counts = _composition(kseq7)
    total = sum(grid7.column_width(c) * k for c, k in counts.items())
    assert total == 256
    assert all(k <= grid7.n - 1 for k in counts.values())


def test_grid_too_small():
    tiny = generate_grid(5, widths=(8, 8, 8, 8, 8), seed=1)
    assert tiny.capacity_bits() == 200
    with pytest.raises(GridTooSmall):
        form_key_sequence(tiny, 0)


def test_sequence_deterministic(grid5):
    assert form_key_sequence(grid5, 7) == form_key_sequence(grid5, 7)
    assert form_key_sequence(grid5, 7) != form_key_sequence(grid5, 8)


def test_feeder_hand_oracle():
    state = FeederState(x=1, y=1, i=1, j=1)
    new, selector = feeder_step(state)
    # y' = 1*1 + 1 + 1 = 3; x_raw = (1*3 + 1) * (1024 + 1) * (1*1) = 4100
    assert new.y == 3
    assert new.x == 4100
    assert selector == 0


def test_feeder_selector_range_and_purity():
    state = FeederState(x=123456789, y=987654321, i=2, j=5)
    out1 = feeder_step(state)
    out2 = feeder_step(state)
    assert out1 == out2
    s = state
    for _ in range(500):
        s, sel = feeder_step(s)
        assert 0 <= sel <= 3
        assert 0 <= s.x < 2**64 and 0 <= s.y < 2**64


def test_feeder_counter_advance():
    s = FeederState(x=3, y=5, i=1, j=63)
    s2, _ = feeder_step(s)
    assert s2.j == 64
    s3, _ = feeder_step(s2)
    assert s3.j == 1 and s3.i == 2


def test_derive_deterministic(grid5, kseq5):
    a = derive_lte_key(grid5, kseq5, feeder_seed=42, epoch=0)
    b = derive_lte_key(grid5, kseq5, feeder_seed=42, epoch=0)
    assert a.bits == b.bits
    assert len(a.bits) == 32


def test_derive_across_grid_reconstruction(grid5, kseq5):
    from ipg_aka.cgrid import deserialize_grid, serialize_grid

    grid_again = deserialize_grid(serialize_grid(grid5))
    ks_again = deserialize_key_sequence(serialize_key_sequence(kseq5))
    a = derive_lte_key(grid5, kseq5, feeder_seed=9, epoch=3)
    b = derive_lte_key(grid_again, ks_again, feeder_seed=9, epoch=3)
    assert a.bits == b.bits


def test_epoch_changes_key(grid5, kseq5):
    e0 = derive_lte_key(grid5, kseq5, feeder_seed=1, epoch=0)
    e1 = derive_lte_key(grid5, kseq5, feeder_seed=1, epoch=1)
    assert e0.bits != e1.bits


def test_epoch_inequality_many_grids():
    for i in range(300):
        grid = generate_grid(5, seed=i)
        ks = form_key_sequence(grid, i)
        a = derive_lte_key(grid, ks, feeder_seed=i, epoch=0)
        b = derive_lte_key(grid, ks, feeder_seed=i, epoch=1)
        assert a.bits != b.bits


def test_derived_from_metadata(grid5, kseq5):
    key = derive_lte_key(grid5, kseq5, feeder_seed=4, epoch=7)
    assert key.derived_from == (grid5.grid_id, kseq5.sequence_id, 7)


def test_trace_consumes_all_24bit_cells(grid5, kseq5):
    _, positions = derive_lte_key_traced(grid5, kseq5, feeder_seed=2, epoch=0)
    col3 = [pos for pos in positions if pos[1] == 3]
    assert len(col3) == 4  # every usable wide-column cell is consumed


def test_trace_no_cell_reused(grid5, kseq5, grid7, kseq7):
    for grid, ks in ((grid5, kseq5), (grid7, kseq7)):
        for epoch in range(20):
            _, positions = derive_lte_key_traced(grid, ks, feeder_seed=5, epoch=epoch)
            assert len(positions) == len(set(positions))
            for row, col in positions:
                assert not grid.cell(row, col).is_null


def test_sequence_grid_mismatch(grid5, grid7, kseq5):
    with pytest.raises(SequenceGridMismatch):
        derive_lte_key(grid7, kseq5, feeder_seed=0, epoch=0)


def test_key_refresh_due_boundaries():
    assert key_refresh_due(0, 100, 99) is False
    assert key_refresh_due(0, 100, 100) is True
    assert key_refresh_due(0, 100, 101) is True


def test_key_refresh_consistent_with_lifetime_formula(grid5):
    from ipg_aka.analysis import GridComplexityParams, breach_time, key_lifetime

    params = GridComplexityParams.from_grid(grid5)
    ttl = key_lifetime(breach_time(params), 16, 1)
    assert key_refresh_due(0, ttl, ttl - 1) is False
    assert key_refresh_due(0, ttl, ttl) is True


def test_randomness_insufficient_sample(grid5, kseq5):
    keys = [derive_lte_key(grid5, kseq5, 1, e) for e in range(50)]
    with pytest.raises(InsufficientSample):
        randomness_suite(keys)


def test_randomness_all_zero_fails_monobit():
    keys = [LteKey(bits=b"\x00" * 32, derived_from=("g", "s", e)) for e in range(200)]
    report = randomness_suite(keys)
    monobit = next(t for t in report.tests if t.name == "monobit")
    assert not monobit.passed
    assert "monobit" in report.failed_names()


def test_randomness_passes_on_real_keys(grid5, kseq5):
    keys = [derive_lte_key(grid5, kseq5, 3, e) for e in range(500)]
    report = randomness_suite(keys)
    assert report.all_passed, report.failed_names()
    assert report.collisions == 0
    assert 118 <= report.hamming_mean <= 138


def test_serialize_key_sequence_round_trip(kseq5, kseq7):
    for ks in (kseq5, kseq7):
        assert deserialize_key_sequence(serialize_key_sequence(ks)) == ks


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**64 - 1),
    epoch=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_property_length_and_agreement(grid7, kseq7, seed, epoch):
    a = derive_lte_key(grid7, kseq7, seed, epoch)
    b = derive_lte_key(grid7, kseq7, seed, epoch)
    assert a.bits == b.bits
    assert len(a.bits) * 8 == 256


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_property_sequence_respects_caps(seed):
    grid = generate_grid(7, seed=seed)
    ks = form_key_sequence(grid, seed)
    counts = {}
    for col in ks.entries:
        counts[col] = counts.get(col, 0) + 1
    assert all(k <= grid.n - 1 for k in counts.values())
    assert sum(grid.column_width(c) * k for c, k in counts.items()) == 256
