from fractions import Fraction

import pytest

from ipg_aka.analysis import (
    ALPHABET_SIZE,
    BenchConfig,
    BenchRow,
    CSV_HEADER,
    GridComplexityParams,
    breach_time,
    key_lifetime,
    keyspace_complexity,
    read_csv,
    run_benchmarks,
    single_position_cost,
    throughput,
    total_compromise_time,
    unique_key_count,
    write_csv,
)
from ipg_aka.errors import ConfigInvalid, EmptyInput, ZeroLifetime

DEFAULT_5 = GridComplexityParams(mu_b=(8, 16, 24, 16, 8), e_c=5, e_r=5, n_v=5, n=5)


def test_breach_time_default_grid():
    # per-column guessing cost summed over the five columns
    base = 5 * 5 * 26 * 5
    expected = (2**8 + 2**16 + 2**24 + 2**16 + 2**8) * base
    assert breach_time(DEFAULT_5) == expected == 54953600000


def test_breach_time_no_nulls_degenerate():
    p = GridComplexityParams(mu_b=(8,), e_c=5, e_r=5, n_v=0, n=5)
    assert breach_time(p) == 0


def test_breach_time_doubles_per_extra_bit():
    narrow = GridComplexityParams(mu_b=(8,), e_c=5, e_r=5, n_v=5, n=5)
    wide = GridComplexityParams(mu_b=(9,), e_c=5, e_r=5, n_v=5, n=5)
    assert breach_time(wide) == 2 * breach_time(narrow)


def test_from_grid_mirrors_shape(grid5):
    p = GridComplexityParams.from_grid(grid5)
    assert p.mu_b == grid5.widths
    assert p.e_c == p.e_r == p.n_v == p.n == 5
    assert p.e == ALPHABET_SIZE


def test_params_validation():
    with pytest.raises(ConfigInvalid):
        GridComplexityParams(mu_b=(), e_c=5, e_r=5, n_v=5, n=5)
    with pytest.raises(ConfigInvalid):
        GridComplexityParams(mu_b=(0,), e_c=5, e_r=5, n_v=5, n=5)
    with pytest.raises(ConfigInvalid):
        GridComplexityParams(mu_b=(8,), e_c=0, e_r=5, n_v=5, n=5)
    with pytest.raises(ConfigInvalid):
        GridComplexityParams(mu_b=(8,), e_c=5, e_r=5, n_v=-1, n=5)


def test_single_position_cost_value():
    assert single_position_cost(32, 5) == 2**32 * 5 * 5 * 26 * 5
    assert single_position_cost(8, 7) == 2**8 * 7 * 7 * 26 * 7


def test_total_compromise_time():
    assert total_compromise_time([1, 2, 3]) == 6
    costs = [single_position_cost(8, 5)] * 20
    assert total_compromise_time(costs) == 20 * single_position_cost(8, 5)
    with pytest.raises(EmptyInput):
        total_compromise_time([])


def test_per_position_sum_matches_closed_form(grid5):
    costs = []
    for col in range(1, 6):
        width = grid5.widths[col - 1]
        for row in range(1, 6):
            if not grid5.cell(row, col).is_null:
                costs.append(single_position_cost(width, 5))
    # one null per column leaves four occupied cells in each
    closed = sum(4 * (1 << w) * 5 * 5 * 26 * 5 for w in grid5.widths)
    assert total_compromise_time(costs) == closed


def test_keyspace_ordering(grid5, grid7):
    assert keyspace_complexity(grid5) == 1 << 360
    assert keyspace_complexity(grid7) == 1 << 896
    assert keyspace_complexity(grid7) > keyspace_complexity(grid5) > 1 << 256


def test_key_lifetime():
    assert key_lifetime(1 << 256, 1, 1) == 1 << 256
    assert key_lifetime(3, 4, 5) == 60
    assert key_lifetime(3, 8, 5) == 2 * key_lifetime(3, 4, 5)
    with pytest.raises(ConfigInvalid):
        key_lifetime(0, 1, 1)
    with pytest.raises(ConfigInvalid):
        key_lifetime(1, 1, -2)


def test_default_lifetime_exceeds_security_level(grid5):
    lifetime = key_lifetime(breach_time(DEFAULT_5), 16, keyspace_complexity(grid5))
    assert lifetime > 1 << 256


def test_throughput_exact_fraction():
    assert throughput(7, 100, 50) == Fraction(14)
    assert throughput(7, 100, 200) == Fraction(7, 2)
    assert throughput(0, 100, 50) == 0
    assert throughput(7, 100, 25) == 2 * throughput(7, 100, 50)
    with pytest.raises(ZeroLifetime):
        throughput(7, 100, 0)


def test_unique_key_count():
    assert unique_key_count(5, 5, 2) == 1040
    assert unique_key_count(1, 5, 2) == 0
    assert unique_key_count(5, 5, 4) == 2 * unique_key_count(5, 5, 2)
    with pytest.raises(ConfigInvalid):
        unique_key_count(0, 5, 2)


def test_bench_config_parse():
    cfg = BenchConfig.parse(
        "# bench\nprotocols = ipg:eps\nsubscribers = 10:100\n"
        "grid_sizes = 5:7\niterations = 3\nseed = 0x5\nelgamal_bits = 768\n"
    )
    assert cfg.protocols == ("ipg", "eps")
    assert cfg.subscribers == (10, 100)
    assert cfg.grid_sizes == (5, 7)
    assert cfg.iterations == 3
    assert cfg.seed == 5
    assert cfg.elgamal_bits == 768


def test_bench_config_errors():
    with pytest.raises(ConfigInvalid):
        BenchConfig.parse("color = red\n")
    with pytest.raises(ConfigInvalid):
        BenchConfig.parse("iterations = soon\n")
    with pytest.raises(ConfigInvalid):
        BenchConfig(protocols=("umts",))
    with pytest.raises(ConfigInvalid):
        BenchConfig(grid_sizes=(4,))
    with pytest.raises(ConfigInvalid):
        BenchConfig(iterations=0)
    with pytest.raises(ConfigInvalid):
        BenchConfig(subscribers=())


def _tiny_cfg(seed=0):
    return BenchConfig(
        protocols=("ipg", "eps"),
        subscribers=(3,),
        grid_sizes=(5,),
        iterations=2,
        seed=seed,
        elgamal_bits=768,
    )


def test_run_benchmarks_shape():
    rows = run_benchmarks(_tiny_cfg())
    by_key = {(r.protocol, r.metric): r for r in rows}
    assert by_key[("ipg", "messages_per_session")].value == 7
    assert by_key[("eps", "messages_per_session")].value == 5
    assert by_key[("ipg", "bytes_per_session")].value > by_key[("eps", "bytes_per_session")].value
    assert by_key[("eps", "messages_per_session")].grid_n == 0
    assert by_key[("ipg", "messages_per_session")].grid_n == 5
    assert ("ipg", "keygen_wall") in by_key
    assert ("eps", "keygen_wall") not in by_key
    assert by_key[("ipg", "keygen_wall")].value > 0
    load = by_key[("ipg", "ops_ue_load")]
    per = by_key[("ipg", "ops_ue_per_session")]
    assert load.value == per.value * 3


def test_benchmark_deterministic_columns_repeat():
    a = {(r.protocol, r.metric): r.value for r in run_benchmarks(_tiny_cfg()) if r.deterministic}
    b = {(r.protocol, r.metric): r.value for r in run_benchmarks(_tiny_cfg()) if r.deterministic}
    assert a == b
    c = {(r.protocol, r.metric): r.value for r in run_benchmarks(_tiny_cfg(seed=9)) if r.deterministic}
    assert set(a) == set(c)  # same schema even under another seed


def test_csv_round_trip():
    rows = run_benchmarks(_tiny_cfg())
    text = write_csv(rows)
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    again = read_csv(text)
    assert again == rows


def test_csv_value_formats():
    rows = [
        BenchRow("ipg", 1, 5, "m", "count", Fraction(7, 2), True),
        BenchRow("ipg", 1, 5, "m2", "count", Fraction(4, 2), True),
        BenchRow("ipg", 1, 5, "m3", "ms", 0.1 + 0.2, False),
        BenchRow("ipg", 1, 5, "m4", "count", 42, True),
    ]
    again = read_csv(write_csv(rows))
    assert again[0].value == Fraction(7, 2)
    assert again[1].value == 2 and isinstance(again[1].value, int)
    assert again[2].value == 0.1 + 0.2  # repr round-trips floats exactly
    assert again[3].value == 42


def test_csv_header_rejected():
    with pytest.raises(ConfigInvalid):
        read_csv("a,b,c\n1,2,3\n")
    with pytest.raises(ConfigInvalid):
        read_csv(",".join(CSV_HEADER) + "\nipg,1,5,m,count\n")
