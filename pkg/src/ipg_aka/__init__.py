"""Grid-backed dynamic-key authentication for LTE/SAE, with a classic
static-key baseline, a simulated-network attack harness, and an analysis
toolkit."""

from .cgrid import (
    CGrid,
    Cell,
    ValidationReport,
    default_widths,
    deserialize_grid,
    generate_grid,
    lookup,
    serialize_grid,
    validate_grid,
)
from .errors import IpgAkaError
from .imsi_crypto import (
    ElGamalParams,
    Imsi,
    ImsiCiphertext,
    SecretKey,
    decrypt_imsi,
    encrypt_imsi,
    gen_params,
    join_blocks,
    split_blocks,
)
from .key_hierarchy import (
    AuthVector,
    KeyTree,
    SqnState,
    VerifyStatus,
    build_auth_vector,
    derive_key_tree,
    kasme,
    nh_advance,
    verify_autn,
)
from .keygen import (
    KeySequence,
    LteKey,
    derive_lte_key,
    derive_lte_key_traced,
    feeder_step,
    form_key_sequence,
    key_refresh_due,
    randomness_suite,
)
from .protocol import (
    MsgType,
    Protocol,
    Provisioning,
    RejectReason,
    SessionResult,
    deserialize_message,
    provision,
    run_eps_aka,
    run_ipg_aka,
    run_session,
    serialize_message,
)
from .simnet import (
    SCENARIOS,
    AttackReport,
    EavesdropTap,
    LinkConfig,
    RewriteTap,
    SimNet,
    attack_matrix,
    collect_metrics,
    run_attack_scenario,
)
from .analysis import (
    BenchConfig,
    BenchRow,
    GridComplexityParams,
    breach_time,
    key_lifetime,
    keyspace_complexity,
    run_benchmarks,
    throughput,
    total_compromise_time,
    unique_key_count,
    write_csv,
)

__version__ = "0.1.0"
