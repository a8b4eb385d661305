"""Simulated packet network and attack harness.

Frames travel between named endpoints through links with configurable
latency, jitter, and loss.  Taps sit on the wire and may copy, rewrite, or
suppress frames in flight, which is enough to express passive capture,
replay, and man-in-the-middle interference without touching the actors.
Time is an integer logical clock in milliseconds.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace

from . import protocol as proto
from .errors import MalformedMessage, UnknownEndpoint, UnknownScenario
from .key_hierarchy import build_auth_vector, compute_res
from .keygen import derive_lte_key
from .prf import ByteStream
from .protocol import (
    HSS,
    MME,
    UE,
    MsgType,
    Protocol,
    ProtocolMessage,
    Provisioning,
    RejectReason,
    SessionResult,
    UserAuthRequest,
    UserAuthResponse,
    provision,
    run_session,
)


@dataclass(frozen=True)
class LinkConfig:
    latency_ms: int = 1
    jitter_ms: int = 0
    drop_pct: int = 0


@dataclass(frozen=True)
class TraceRecord:
    time: int
    src: str
    dst: str
    tag: str
    nbytes: int
    frame: bytes
    dropped: bool = False

    @property
    def hex(self) -> str:
        return self.frame.hex()

    def line(self) -> str:
        status = " DROPPED" if self.dropped else ""
        return (
            f"{self.time:>8} | {self.src}→{self.dst} | {self.tag}"
            f"{status} | {self.nbytes} | {self.hex}"
        )


def _frame_tag(frame: bytes) -> str:
    if len(frame) >= 5:
        try:
            return MsgType(frame[4]).name
        except ValueError:
            pass
    return "UNKNOWN"


class EavesdropTap:
    """Passive capture: copies every frame, alters nothing."""

    def __init__(self):
        self.captured: list[tuple[int, str, str, bytes]] = []

    def on_frame(self, frame: bytes, src: str, dst: str, now: int) -> bytes | None:
        self.captured.append((now, src, dst, frame))
        return frame

    def frames_with_tag(self, tag: MsgType) -> list[bytes]:
        return [f for (_, _, _, f) in self.captured if len(f) > 4 and f[4] == tag]


class RewriteTap:
    """Active interference: fn returns a replacement frame or None to drop."""

    def __init__(self, fn):
        self.fn = fn
        self.hits = 0

    def on_frame(self, frame: bytes, src: str, dst: str, now: int) -> bytes | None:
        out = self.fn(frame, src, dst, now)
        if out is not frame:
            self.hits += 1
        return out


class SimNet:
    def __init__(
        self,
        seed: int = 0,
        default_link: LinkConfig = LinkConfig(),
        endpoints: tuple[str, ...] = (UE, MME, HSS),
    ):
        self.endpoints = set(endpoints)
        self.default_link = default_link
        self.links: dict[tuple[str, str], LinkConfig] = {}
        self.taps: list = []
        self.stream = ByteStream(seed, b"simnet")
        self.queue: list[tuple[int, int, str, str, bytes]] = []
        self.trace: list[TraceRecord] = []
        self.now = 0
        self._seq = 0

    def add_link(self, src: str, dst: str, cfg: LinkConfig):
        self._check_endpoint(src)
        self._check_endpoint(dst)
        self.links[(src, dst)] = cfg

    def add_tap(self, tap):
        self.taps.append(tap)

    def _check_endpoint(self, name: str):
        if name not in self.endpoints:
            raise UnknownEndpoint(f"no endpoint named {name!r}")

    def _link(self, src: str, dst: str) -> LinkConfig:
        return self.links.get((src, dst), self.default_link)

    def send(self, msg: ProtocolMessage, now: int):
        frame = proto.serialize_message(msg)
        self.inject_frame(frame, msg.src, msg.dst, now)

    def inject_frame(self, frame: bytes, src: str, dst: str, now: int):
        """Queue raw bytes for delivery; taps and link effects still apply."""
        self._check_endpoint(src)
        self._check_endpoint(dst)
        for tap in self.taps:
            frame = tap.on_frame(frame, src, dst, now)
            if frame is None:
                self.trace.append(
                    TraceRecord(now, src, dst, "SUPPRESSED", 0, b"", dropped=True)
                )
                return

        cfg = self._link(src, dst)
        if cfg.drop_pct > 0 and self.stream.randbelow(100) < cfg.drop_pct:
            self.trace.append(
                TraceRecord(
                    now, src, dst, _frame_tag(frame), len(frame), frame, dropped=True
                )
            )
            return

        delay = cfg.latency_ms
        if cfg.jitter_ms > 0:
            delay += self.stream.randbelow(cfg.jitter_ms + 1)
        self._seq += 1
        heapq.heappush(self.queue, (now + delay, self._seq, src, dst, frame))

    def tick(self) -> tuple[int, bytes, ProtocolMessage | None] | None:
        """Deliver the next queued frame, or None when the wire is idle."""
        if not self.queue:
            return None
        when, _seq, src, dst, frame = heapq.heappop(self.queue)
        self.now = when
        try:
            msg = proto.deserialize_message(frame)
        except MalformedMessage:
            msg = None
        tag = msg.tag.name if msg is not None else "UNKNOWN"
        self.trace.append(TraceRecord(when, src, dst, tag, len(frame), frame))
        return when, frame, msg


def format_trace(trace) -> str:
    return "\n".join(rec.line() for rec in trace)


@dataclass(frozen=True)
class Metrics:
    sent: dict[str, int]
    received: dict[str, int]
    bytes_total: int
    dropped: int


def collect_metrics(trace) -> Metrics:
    sent: dict[str, int] = {}
    received: dict[str, int] = {}
    total = 0
    dropped = 0
    for rec in trace:
        if rec.dropped:
            dropped += 1
            continue
        sent[rec.src] = sent.get(rec.src, 0) + 1
        received[rec.dst] = received.get(rec.dst, 0) + 1
        total += rec.nbytes
    return Metrics(sent=sent, received=received, bytes_total=total, dropped=dropped)


### attack scenarios

SCENARIOS = (
    "EavesdropImsi",
    "ReplayIdentityRequest",
    "ReplayAuthRequest",
    "MitmRewriteAv",
    "ImpersonateWithStaleKey",
)

_SCENARIO_ALIASES = {name.lower(): name for name in SCENARIOS}
_SCENARIO_ALIASES.update(
    {
        "eavesdrop-imsi": "EavesdropImsi",
        "replay-identity-request": "ReplayIdentityRequest",
        "replay-auth-request": "ReplayAuthRequest",
        "mitm-rewrite-av": "MitmRewriteAv",
        "impersonate-with-stale-key": "ImpersonateWithStaleKey",
    }
)


@dataclass(frozen=True)
class AttackReport:
    scenario: str
    protocol: Protocol
    succeeded: bool
    evidence: str
    sessions: tuple[SessionResult, ...] = ()


def _coerce_protocol(protocol) -> Protocol:
    if isinstance(protocol, Protocol):
        return protocol
    return Protocol(str(protocol).lower())


def canonical_scenario(name: str) -> str:
    key = name.strip().lower()
    if key not in _SCENARIO_ALIASES:
        raise UnknownScenario(f"no attack scenario named {name!r}")
    return _SCENARIO_ALIASES[key]


def run_attack_scenario(
    scenario: str,
    protocol,
    seed: int = 0,
    elgamal_bits: int = 1024,
) -> AttackReport:
    scenario = canonical_scenario(scenario)
    protocol = _coerce_protocol(protocol)
    runner = {
        "EavesdropImsi": _attack_eavesdrop_imsi,
        "ReplayIdentityRequest": _attack_replay_identity_request,
        "ReplayAuthRequest": _attack_replay_auth_request,
        "MitmRewriteAv": _attack_mitm_rewrite_av,
        "ImpersonateWithStaleKey": _attack_impersonate_stale_key,
    }[scenario]
    return runner(protocol, seed, elgamal_bits)


def _fresh(protocol: Protocol, seed: int, elgamal_bits: int) -> tuple[Provisioning, SimNet]:
    prov = provision(seed, protocol=protocol, elgamal_bits=elgamal_bits)
    net = SimNet(seed=seed ^ 0x5151)
    return prov, net


def _attack_eavesdrop_imsi(protocol, seed, elgamal_bits) -> AttackReport:
    prov, net = _fresh(protocol, seed, elgamal_bits)
    tap = EavesdropTap()
    net.add_tap(tap)
    result = run_session(prov, net)
    needle = prov.imsi.digits.encode("ascii")
    hits = [
        _frame_tag(f) for (_, _, _, f) in tap.captured if needle in f
    ]
    if hits:
        evidence = (
            f"identity digits recovered from captured {hits[0]} frame "
            f"({len(hits)} frame(s) leaked them)"
        )
    else:
        evidence = (
            f"{len(tap.captured)} frames captured; the identity digit string "
            "appears in none of them"
        )
    return AttackReport(
        scenario="EavesdropImsi",
        protocol=protocol,
        succeeded=bool(hits),
        evidence=evidence,
        sessions=(result,),
    )


def _attack_replay_identity_request(protocol, seed, elgamal_bits) -> AttackReport:
    if protocol == Protocol.EPS:
        return AttackReport(
            scenario="ReplayIdentityRequest",
            protocol=protocol,
            succeeded=False,
            evidence="baseline never sends an identity request, nothing to replay",
        )
    prov, net = _fresh(protocol, seed, elgamal_bits)
    tap = EavesdropTap()
    net.add_tap(tap)
    first = run_session(prov, net)
    old_frames = tap.frames_with_tag(MsgType.IDENTITY_REQUEST)
    if not old_frames:
        return AttackReport(
            scenario="ReplayIdentityRequest",
            protocol=protocol,
            succeeded=False,
            evidence="capture phase saw no identity request",
            sessions=(first,),
        )
    stale = old_frames[0]

    def swap(frame, src, dst, now):
        if len(frame) > 4 and frame[4] == MsgType.IDENTITY_REQUEST:
            return stale
        return frame

    net2 = SimNet(seed=seed ^ 0xA7A7)
    net2.add_tap(RewriteTap(swap))
    second = run_session(prov, net2, start_time=1000)
    succeeded = second.authenticated
    if succeeded:
        evidence = "subscriber answered a replayed identity request"
    else:
        evidence = (
            "replayed request refused: session rejected with "
            f"{second.reason.label if second.reason else '?'}"
        )
    return AttackReport(
        scenario="ReplayIdentityRequest",
        protocol=protocol,
        succeeded=succeeded,
        evidence=evidence,
        sessions=(first, second),
    )


def _attack_replay_auth_request(protocol, seed, elgamal_bits) -> AttackReport:
    prov, net = _fresh(protocol, seed, elgamal_bits)
    tap = EavesdropTap()
    net.add_tap(tap)
    first = run_session(prov, net)
    old_frames = tap.frames_with_tag(MsgType.USER_AUTH_REQUEST)
    if not old_frames:
        return AttackReport(
            scenario="ReplayAuthRequest",
            protocol=protocol,
            succeeded=False,
            evidence="capture phase saw no authentication challenge",
            sessions=(first,),
        )
    stale = old_frames[0]

    def swap(frame, src, dst, now):
        if len(frame) > 4 and frame[4] == MsgType.USER_AUTH_REQUEST:
            return stale
        return frame

    net2 = SimNet(seed=seed ^ 0xB3B3)
    net2.add_tap(RewriteTap(swap))
    second = run_session(prov, net2, start_time=1000)
    succeeded = second.authenticated and prov.ue.accepted_challenge
    if succeeded:
        evidence = "subscriber accepted a replayed challenge"
    else:
        evidence = (
            "replayed challenge refused: session rejected with "
            f"{second.reason.label if second.reason else '?'}"
        )
    return AttackReport(
        scenario="ReplayAuthRequest",
        protocol=protocol,
        succeeded=succeeded,
        evidence=evidence,
        sessions=(first, second),
    )


def _attack_mitm_rewrite_av(protocol, seed, elgamal_bits) -> AttackReport:
    """Forge the challenge with a root key compromised before rotation."""
    prov, net = _fresh(protocol, seed, elgamal_bits)
    if protocol == Protocol.IPG:
        compromised = derive_lte_key(
            prov.grid, prov.ks, prov.feeder_seed, epoch=0
        ).bits
    else:
        compromised = prov.static_k
    first = run_session(prov, net)  # key rotates here for the grid variant

    forged_rand = bytes.fromhex("00112233445566778899aabbccddeeff")
    forged_av = build_auth_vector(compromised, 900, prov.mme.snid, forged_rand)

    def swap(frame, src, dst, now):
        if len(frame) > 4 and frame[4] == MsgType.USER_AUTH_REQUEST:
            forged = ProtocolMessage(
                src=MME,
                dst=UE,
                body=UserAuthRequest(
                    rand=forged_av.rand, autn=forged_av.autn, ksi_asme=0
                ),
            )
            return proto.serialize_message(forged)
        return frame

    net2 = SimNet(seed=seed ^ 0xC5C5)
    net2.add_tap(RewriteTap(swap))
    second = run_session(prov, net2, start_time=2000)
    succeeded = (
        prov.ue.accepted_challenge and prov.ue.accepted_rand == forged_rand
    )
    if succeeded:
        evidence = "subscriber accepted a forged challenge built from the compromised key"
    else:
        evidence = (
            "forged challenge refused: session rejected with "
            f"{second.reason.label if second.reason else '?'}"
        )
    return AttackReport(
        scenario="MitmRewriteAv",
        protocol=protocol,
        succeeded=succeeded,
        evidence=evidence,
        sessions=(first, second),
    )


class _StaleKeyUe(proto.UeActor):
    """Impersonator: answers the challenge with captured key material and
    skips network authentication entirely."""

    def __init__(self, template: proto.UeActor, stale_root: bytes):
        super().__init__(
            imsi=template.imsi,
            protocol=template.protocol,
            snid=template.snid,
            authority_public=template.authority_public,
            entropy_seed=0xDEAD,
            grid=template.grid,
            ks=template.ks,
            feeder_seed=template.feeder_seed,
            epoch=template.epoch,
            static_k=template.static_k,
        )
        self.stale_root = stale_root

    def _on_challenge(self, body: UserAuthRequest):
        self.state = proto._UeStateName.DONE
        res = compute_res(self.stale_root, body.rand)
        return [ProtocolMessage(src=UE, dst=MME, body=UserAuthResponse(res))]


def _attack_impersonate_stale_key(protocol, seed, elgamal_bits) -> AttackReport:
    prov, net = _fresh(protocol, seed, elgamal_bits)
    if protocol == Protocol.IPG:
        stale = derive_lte_key(prov.grid, prov.ks, prov.feeder_seed, epoch=0).bits
    else:
        stale = prov.static_k
    first = run_session(prov, net)  # the network moves on; the capture does not

    prov.ue = _StaleKeyUe(prov.ue, stale)
    net2 = SimNet(seed=seed ^ 0xD7D7)
    second = run_session(prov, net2, start_time=2000)
    succeeded = second.authenticated
    if succeeded:
        evidence = "network authenticated an impersonator holding an old root key"
    else:
        evidence = (
            "impersonation refused: session rejected with "
            f"{second.reason.label if second.reason else '?'}"
        )
    return AttackReport(
        scenario="ImpersonateWithStaleKey",
        protocol=protocol,
        succeeded=succeeded,
        evidence=evidence,
        sessions=(first, second),
    )


def attack_matrix(seed: int = 0, elgamal_bits: int = 1024) -> dict:
    """Every scenario against both protocol variants."""
    out = {}
    for scenario in SCENARIOS:
        for protocol in (Protocol.IPG, Protocol.EPS):
            out[(scenario, protocol.value)] = run_attack_scenario(
                scenario, protocol, seed=seed, elgamal_bits=elgamal_bits
            )
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    protocol: Protocol = Protocol.IPG
    seed: int = 0
    latency_ms: int = 1
    jitter_ms: int = 0
    drop_pct: int = 0
    sessions: int = 1
    subscribers: int = 1

    @classmethod
    def parse(cls, text: str) -> "ScenarioConfig":
        fields: dict = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UnknownScenario(f"line {lineno}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key == "scenario":
                fields[key] = canonical_scenario(value)
            elif key == "protocol":
                fields[key] = _coerce_protocol(value)
            elif key in ("seed", "latency_ms", "jitter_ms", "drop_pct", "sessions", "subscribers"):
                fields[key] = int(value, 0)
            else:
                raise UnknownScenario(f"line {lineno}: unknown key {key!r}")
        if "scenario" not in fields:
            raise UnknownScenario("config names no scenario")
        return cls(**fields)
