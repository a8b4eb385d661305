"""Command-line front end.

Every subcommand is deterministic given its flags: randomness only ever
enters through an explicit hex seed.  Data goes to stdout, diagnostics to
stderr as a single ``ErrorName: detail`` line, exit codes 0/1/2 for
success, domain error, and usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis, imsi_crypto, simnet
from .cgrid import default_widths, deserialize_grid, generate_grid, serialize_grid
from .errors import IpgAkaError
from .imsi_crypto import Imsi
from .keygen import (
    derive_lte_key,
    deserialize_key_sequence,
    form_key_sequence,
    serialize_key_sequence,
)
from .protocol import Protocol, provision, run_session


def _seed(text: str) -> int:
    value = text.strip().lower()
    if value.startswith("0x"):
        value = value[2:]
    try:
        return int(value, 16)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a hex seed") from None


def _widths(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(":") if part)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a colon-separated int list") from None


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="ipg-aka")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-grid", help="generate a lookup grid file")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--widths", type=_widths, default=None)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("gen-kseq", help="derive a key sequence for a grid")
    p.add_argument("--grid", type=Path, required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("derive-key", help="print the 256-bit session root key")
    p.add_argument("--grid", type=Path, required=True)
    p.add_argument("--kseq", type=Path, required=True)
    p.add_argument("--feeder-seed", type=_seed, default=0)
    p.add_argument("--epoch", type=int, default=0)

    p = sub.add_parser("imsi", help="identity concealment operations")
    imsi_sub = p.add_subparsers(dest="imsi_command", required=True)

    q = imsi_sub.add_parser("gen-params", help="generate encryption parameters")
    q.add_argument("--bits", type=int, default=imsi_crypto.DEFAULT_BIT_LENGTH)
    q.add_argument("--seed", type=_seed, default=0)
    q.add_argument("--out", type=Path, required=True)
    q.add_argument("--secret-out", type=Path, required=True)

    q = imsi_sub.add_parser("encrypt", help="conceal an identity")
    q.add_argument("--params", type=Path, required=True)
    q.add_argument("--imsi", required=True)
    q.add_argument("--seed", type=_seed, default=0)

    q = imsi_sub.add_parser("decrypt", help="recover an identity")
    q.add_argument("--params", type=Path, required=True)
    q.add_argument("--secret", type=Path, required=True)
    q.add_argument("--in", dest="infile", type=Path, default=None)

    p = sub.add_parser("provision", help="emit matched subscriber/network state files")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--imsi", default="001010123456789")
    p.add_argument("--epoch", type=int, default=0)
    p.add_argument("--out-dir", type=Path, required=True)

    p = sub.add_parser("run-session", help="drive one authentication session")
    p.add_argument("--protocol", choices=["ipg", "eps"], default="ipg")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--grid-n", type=int, default=5)
    p.add_argument("--elgamal-bits", type=int, default=1024)
    p.add_argument("--ue-grid-seed", type=_seed, default=None)
    p.add_argument("--hss-grid-seed", type=_seed, default=None)
    p.add_argument("--trace", action="store_true", help="print the wire trace")

    p = sub.add_parser("attack", help="run one attack scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--protocol", choices=["ipg", "eps"], default="ipg")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--elgamal-bits", type=int, default=1024)

    p = sub.add_parser("bench", help="run the benchmark suite")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("analyze", help="evaluate a security formula")
    p.add_argument("formula", choices=["breach", "lifetime", "throughput", "keys"])
    p.add_argument("--params", default="", help="comma-separated k=v overrides")

    return top


def _cmd_gen_grid(args) -> int:
    grid = generate_grid(args.n, widths=args.widths, seed=args.seed)
    args.out.write_bytes(serialize_grid(grid))
    print(f"grid_id={grid.grid_id}")
    return 0


def _cmd_gen_kseq(args) -> int:
    grid = deserialize_grid(args.grid.read_bytes())
    ks = form_key_sequence(grid, args.seed)
    args.out.write_bytes(serialize_key_sequence(ks))
    print(f"sequence_id={ks.sequence_id}")
    return 0


def _cmd_derive_key(args) -> int:
    grid = deserialize_grid(args.grid.read_bytes())
    ks = deserialize_key_sequence(args.kseq.read_bytes())
    key = derive_lte_key(grid, ks, args.feeder_seed, args.epoch)
    print(key.bits.hex())
    return 0


def _cmd_imsi(args) -> int:
    if args.imsi_command == "gen-params":
        params, secret = imsi_crypto.gen_params(args.bits, args.seed)
        args.out.write_bytes(imsi_crypto.save_params(params))
        args.secret_out.write_bytes(imsi_crypto.save_secret(secret))
        print(f"modulus_bits={params.p.bit_length()}")
        return 0

    params = imsi_crypto.load_params(args.params.read_bytes())
    if args.imsi_command == "encrypt":
        imsi = Imsi.parse(args.imsi)
        blocks = imsi_crypto.split_blocks(imsi, params)
        stream_seed = args.seed
        from .prf import ByteStream

        stream = ByteStream(stream_seed, b"cli-encrypt")
        for idx, block in enumerate(blocks):
            k = stream.randint(1, params.n - 1)
            ct = imsi_crypto.encrypt_imsi(params, block, k, block_index=idx)
            print(f"{ct.block_index} {ct.r:x} {ct.t:x}")
        return 0

    # decrypt
    secret = imsi_crypto.load_secret(args.secret.read_bytes())
    text = args.infile.read_text() if args.infile else sys.stdin.read()
    cts = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        idx_s, r_s, t_s = line.split()
        cts.append(
            imsi_crypto.ImsiCiphertext(
                r=int(r_s, 16), t=int(t_s, 16), block_index=int(idx_s)
            )
        )
    blocks = [
        imsi_crypto.decrypt_imsi(params, secret, ct)
        for ct in sorted(cts, key=lambda c: c.block_index)
    ]
    print(imsi_crypto.join_blocks(blocks, params).digits)
    return 0


def _cmd_provision(args) -> int:
    out: Path = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    grid = generate_grid(args.n, seed=args.seed)
    ks = form_key_sequence(grid, args.seed ^ 0x6B73)
    (out / "grid.grid").write_bytes(serialize_grid(grid))
    (out / "kseq.kseq").write_bytes(serialize_key_sequence(ks))
    state = (
        f"imsi={args.imsi}\n"
        f"feeder_seed={args.seed ^ 0xFEED:x}\n"
        f"epoch={args.epoch}\n"
        f"grid=grid.grid\n"
        f"kseq=kseq.kseq\n"
    )
    (out / "ue.state").write_text(state)
    (out / "hss.state").write_text(state)
    print(f"grid_id={grid.grid_id} sequence_id={ks.sequence_id}")
    return 0


def _cmd_run_session(args) -> int:
    prov = provision(
        seed=args.seed,
        protocol=Protocol(args.protocol),
        grid_n=args.grid_n,
        elgamal_bits=args.elgamal_bits,
        ue_grid_seed=args.ue_grid_seed,
        hss_grid_seed=args.hss_grid_seed,
    )
    net = simnet.SimNet(seed=args.seed)
    result = run_session(prov, net)
    if args.trace:
        print(simnet.format_trace(result.trace))
    if result.authenticated:
        print(
            f"outcome=authenticated messages={result.message_count} "
            f"k_asme={result.k_asme.hex()}"
        )
        return 0
    label = result.reason.label if result.reason else "Unknown"
    print(f"{label}: session rejected", file=sys.stderr)
    return 1


def _cmd_attack(args) -> int:
    report = simnet.run_attack_scenario(
        args.scenario, args.protocol, seed=args.seed, elgamal_bits=args.elgamal_bits
    )
    flag = "true" if report.succeeded else "false"
    print(
        f"scenario={report.scenario} protocol={report.protocol.value} "
        f"succeeded={flag}"
    )
    print(f"evidence: {report.evidence}")
    return 0


def _cmd_bench(args) -> int:
    cfg = analysis.BenchConfig.parse(args.config.read_text())
    rows = analysis.run_benchmarks(cfg)
    args.out.write_text(analysis.write_csv(rows))
    print(f"rows={len(rows)} out={args.out}")
    return 0


def _parse_kv(text: str) -> dict[str, str]:
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"expected k=v, got {part!r}")
        key, _, value = part.partition("=")
        out[key.strip()] = value.strip()
    return out


def _cmd_analyze(args) -> int:
    kv = _parse_kv(args.params)

    def geti(key: str, default: int) -> int:
        return int(kv[key], 0) if key in kv else default

    if args.formula == "breach":
        mu_b = (
            tuple(int(x) for x in kv["mu_b"].split(":"))
            if "mu_b" in kv
            else default_widths(5)
        )
        params = analysis.GridComplexityParams(
            mu_b=mu_b,
            e_c=geti("e_c", 5),
            e_r=geti("e_r", 5),
            n_v=geti("n_v", 5),
            n=geti("n", 5),
            e=geti("e", analysis.ALPHABET_SIZE),
        )
        print(analysis.breach_time(params))
    elif args.formula == "lifetime":
        default_breach = analysis.breach_time(
            analysis.GridComplexityParams(
                mu_b=default_widths(5), e_c=5, e_r=5, n_v=5, n=5
            )
        )
        value = analysis.key_lifetime(
            geti("breach_iterations", default_breach),
            geti("ks_iterations", 16),
            geti("grid_complexity", 1 << 360),
        )
        print(value)
    elif args.formula == "throughput":
        value = analysis.throughput(
            geti("messages", 7),
            geti("security_level", analysis.DEFAULT_SECURITY_LEVEL),
            geti("lifetime", 1),
        )
        if value.denominator == 1:
            print(value.numerator)
        else:
            print(f"{value.numerator}/{value.denominator}")
    else:
        print(
            analysis.unique_key_count(
                geti("e_c", 5), geti("n_c", 5), geti("n_mc", 2), geti("e", 26)
            )
        )
    return 0


_HANDLERS = {
    "gen-grid": _cmd_gen_grid,
    "gen-kseq": _cmd_gen_kseq,
    "derive-key": _cmd_derive_key,
    "imsi": _cmd_imsi,
    "provision": _cmd_provision,
    "run-session": _cmd_run_session,
    "attack": _cmd_attack,
    "bench": _cmd_bench,
    "analyze": _cmd_analyze,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except IpgAkaError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
