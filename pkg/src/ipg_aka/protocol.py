"""Authentication and key agreement flows.

Two protocol variants run over the same simulated transport:

* the grid-backed variant conceals the subscriber identity behind signed
  ElGamal parameters and derives the session root key dynamically per epoch;
* the classic baseline sends the identity in the clear at attach and uses a
  static provisioned root key.

A full run of the grid-backed variant is seven wire messages: attach,
identity request, identity response, authentication data request and
response, user authentication request and response.  The baseline skips the
identity preamble and needs five.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

from . import imsi_crypto
from .cgrid import CGrid, generate_grid
from .errors import IpgAkaError, MalformedMessage
from .imsi_crypto import (
    ElGamalParams,
    Imsi,
    ImsiCiphertext,
    SecretKey,
    SignedIdentityRequest,
)
from .key_hierarchy import (
    AuthVector,
    KeyTree,
    SqnState,
    VerifyStatus,
    build_auth_vector,
    compute_res,
    derive_key_tree,
    kasme,
    verify_autn,
)
from .keygen import KeySequence, derive_lte_key, form_key_sequence
from .prf import ByteStream

UE = "UE"
MME = "MME"
HSS = "HSS"

_ENDPOINT_CODES = {UE: 1, MME: 2, HSS: 3}
_ENDPOINT_NAMES = {v: k for k, v in _ENDPOINT_CODES.items()}


class Protocol(Enum):
    IPG = "ipg"
    EPS = "eps"


class NetworkType(IntEnum):
    EUTRAN = 0
    OTHER = 1


class MsgType(IntEnum):
    ATTACH_REQUEST = 1
    IDENTITY_REQUEST = 2
    IDENTITY_RESPONSE = 3
    AUTH_DATA_REQUEST = 4
    AUTH_DATA_RESPONSE = 5
    USER_AUTH_REQUEST = 6
    USER_AUTH_RESPONSE = 7
    AUTH_REJECT = 8


class RejectReason(IntEnum):
    SIGNATURE_INVALID = 1
    STALE_TIMESTAMP = 2
    UNKNOWN_IMSI = 3
    SNID_REJECTED = 4
    MAC_FAILURE = 5
    SQN_OUT_OF_RANGE = 6
    RES_MISMATCH = 7
    PROTOCOL_VIOLATION = 8
    DELIVERY_FAILURE = 9

    @property
    def label(self) -> str:
        return "".join(part.capitalize() for part in self.name.split("_"))


### message bodies

@dataclass(frozen=True)
class AttachRequest:
    # The baseline carries the identity digits in the clear; the grid-backed
    # variant attaches anonymously and waits for the identity request.
    imsi_plain: str | None = None


@dataclass(frozen=True)
class IdentityRequest:
    signed: SignedIdentityRequest


@dataclass(frozen=True)
class IdentityResponse:
    blocks: tuple[ImsiCiphertext, ...]


@dataclass(frozen=True)
class AuthDataRequest:
    imsi_value: int  # binary form; digit text never touches the wire here
    snid: bytes
    network_type: NetworkType


@dataclass(frozen=True)
class AuthDataResponse:
    av: AuthVector


@dataclass(frozen=True)
class UserAuthRequest:
    rand: bytes
    autn: bytes
    ksi_asme: int  # 3-bit key set identifier, carried but never inspected


@dataclass(frozen=True)
class UserAuthResponse:
    res: bytes


@dataclass(frozen=True)
class AuthReject:
    reason: RejectReason


Body = (
    AttachRequest
    | IdentityRequest
    | IdentityResponse
    | AuthDataRequest
    | AuthDataResponse
    | UserAuthRequest
    | UserAuthResponse
    | AuthReject
)

_BODY_TAGS = {
    AttachRequest: MsgType.ATTACH_REQUEST,
    IdentityRequest: MsgType.IDENTITY_REQUEST,
    IdentityResponse: MsgType.IDENTITY_RESPONSE,
    AuthDataRequest: MsgType.AUTH_DATA_REQUEST,
    AuthDataResponse: MsgType.AUTH_DATA_RESPONSE,
    UserAuthRequest: MsgType.USER_AUTH_REQUEST,
    UserAuthResponse: MsgType.USER_AUTH_RESPONSE,
    AuthReject: MsgType.AUTH_REJECT,
}


@dataclass(frozen=True)
class ProtocolMessage:
    src: str
    dst: str
    body: Body

    @property
    def tag(self) -> MsgType:
        return _BODY_TAGS[type(self.body)]


### wire format: length-prefixed frames, fixed-width big-endian fields

def _w_bigint(out: bytearray, value: int, width: int | None = None):
    if width is None:
        width = max(1, (value.bit_length() + 7) // 8)
    out += width.to_bytes(4, "big")
    out += value.to_bytes(width, "big")


def _w_lp(out: bytearray, data: bytes, lenbytes: int = 2):
    out += len(data).to_bytes(lenbytes, "big")
    out += data


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MalformedMessage("frame truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return int.from_bytes(self.take(2), "big")

    def u64(self) -> int:
        return int.from_bytes(self.take(8), "big")

    def bigint(self) -> int:
        width = int.from_bytes(self.take(4), "big")
        if width > 1 << 20:
            raise MalformedMessage(f"implausible field width {width}")
        return int.from_bytes(self.take(width), "big")

    def lp(self, lenbytes: int = 2) -> bytes:
        n = int.from_bytes(self.take(lenbytes), "big")
        return self.take(n)

    def done(self):
        if self.pos != len(self.data):
            raise MalformedMessage(f"{len(self.data) - self.pos} trailing bytes")


def serialize_message(msg: ProtocolMessage) -> bytes:
    body = msg.body
    out = bytearray()
    out.append(msg.tag)
    out.append(_ENDPOINT_CODES[msg.src])
    out.append(_ENDPOINT_CODES[msg.dst])

    if isinstance(body, AttachRequest):
        if body.imsi_plain is None:
            out.append(0)
        else:
            out.append(1)
            _w_lp(out, body.imsi_plain.encode("ascii"), 1)
    elif isinstance(body, IdentityRequest):
        p = body.signed.params
        width = p.modulus_bytes()
        _w_bigint(out, p.p)
        _w_bigint(out, p.alpha, width)
        _w_bigint(out, p.beta, width)
        _w_bigint(out, p.n, width)
        out += body.signed.timestamp.to_bytes(8, "big")
        _w_lp(out, body.signed.signature)
    elif isinstance(body, IdentityResponse):
        out += len(body.blocks).to_bytes(2, "big")
        for blk in body.blocks:
            out += blk.block_index.to_bytes(2, "big")
            _w_bigint(out, blk.r)
            _w_bigint(out, blk.t)
    elif isinstance(body, AuthDataRequest):
        out += body.imsi_value.to_bytes(8, "big")
        if len(body.snid) != 3:
            raise MalformedMessage("snid must be 3 bytes")
        out += body.snid
        out.append(int(body.network_type))
    elif isinstance(body, AuthDataResponse):
        av = body.av
        out += av.rand
        out += av.autn
        _w_lp(out, av.xres, 1)
        out += av.k_asme
    elif isinstance(body, UserAuthRequest):
        out += body.rand
        out += body.autn
        out.append(body.ksi_asme & 0x07)
    elif isinstance(body, UserAuthResponse):
        _w_lp(out, body.res, 1)
    elif isinstance(body, AuthReject):
        out.append(int(body.reason))
    else:  # pragma: no cover
        raise MalformedMessage(f"unserializable body {type(body).__name__}")

    return len(out).to_bytes(4, "big") + bytes(out)


def deserialize_message(frame: bytes) -> ProtocolMessage:
    if len(frame) < 7:
        raise MalformedMessage("frame shorter than header")
    length = int.from_bytes(frame[:4], "big")
    if length != len(frame) - 4:
        raise MalformedMessage(f"length prefix {length} != {len(frame) - 4}")
    r = _Reader(frame[4:])
    tag_raw, src_c, dst_c = r.u8(), r.u8(), r.u8()
    try:
        tag = MsgType(tag_raw)
        src = _ENDPOINT_NAMES[src_c]
        dst = _ENDPOINT_NAMES[dst_c]
    except (ValueError, KeyError):
        raise MalformedMessage(f"bad header ({tag_raw}, {src_c}, {dst_c})") from None

    body: Body
    if tag == MsgType.ATTACH_REQUEST:
        has = r.u8()
        if has not in (0, 1):
            raise MalformedMessage("bad attach flag")
        body = AttachRequest(r.lp(1).decode("ascii") if has else None)
    elif tag == MsgType.IDENTITY_REQUEST:
        p = r.bigint()
        alpha = r.bigint()
        beta = r.bigint()
        n = r.bigint()
        ts = r.u64()
        sig = r.lp()
        body = IdentityRequest(
            SignedIdentityRequest(
                params=ElGamalParams(p=p, alpha=alpha, beta=beta, n=n),
                timestamp=ts,
                signature=sig,
            )
        )
    elif tag == MsgType.IDENTITY_RESPONSE:
        count = r.u16()
        blocks = []
        for _ in range(count):
            idx = r.u16()
            rr = r.bigint()
            tt = r.bigint()
            blocks.append(ImsiCiphertext(r=rr, t=tt, block_index=idx))
        body = IdentityResponse(tuple(blocks))
    elif tag == MsgType.AUTH_DATA_REQUEST:
        value = r.u64()
        snid = r.take(3)
        try:
            nt = NetworkType(r.u8())
        except ValueError:
            raise MalformedMessage("bad network type") from None
        body = AuthDataRequest(imsi_value=value, snid=snid, network_type=nt)
    elif tag == MsgType.AUTH_DATA_RESPONSE:
        rand = r.take(16)
        autn = r.take(16)
        xres = r.lp(1)
        k_asme = r.take(32)
        body = AuthDataResponse(AuthVector(rand=rand, autn=autn, xres=xres, k_asme=k_asme))
    elif tag == MsgType.USER_AUTH_REQUEST:
        rand = r.take(16)
        autn = r.take(16)
        ksi = r.u8()
        body = UserAuthRequest(rand=rand, autn=autn, ksi_asme=ksi)
    elif tag == MsgType.USER_AUTH_RESPONSE:
        body = UserAuthResponse(r.lp(1))
    else:
        try:
            body = AuthReject(RejectReason(r.u8()))
        except ValueError:
            raise MalformedMessage("bad reject reason") from None

    r.done()
    return ProtocolMessage(src=src, dst=dst, body=body)


### actors

def _counter() -> dict[str, int]:
    return {}


def _bump(ops: dict[str, int], name: str, by: int = 1):
    ops[name] = ops.get(name, 0) + by


@dataclass
class SubscriberRecord:
    """Network-side view of one subscriber."""

    imsi: Imsi
    grid: CGrid | None
    ks: KeySequence | None
    feeder_seed: int
    epoch: int
    sqn_state: SqnState
    static_k: bytes | None = None


class _UeStateName(Enum):
    IDLE = "idle"
    WAIT_IDENTITY_REQ = "wait-identity-request"
    WAIT_CHALLENGE = "wait-challenge"
    DONE = "done"


class UeActor:
    """Subscriber endpoint."""

    def __init__(
        self,
        imsi: Imsi,
        protocol: Protocol,
        snid: bytes,
        authority_public,
        entropy_seed: int,
        grid: CGrid | None = None,
        ks: KeySequence | None = None,
        feeder_seed: int = 0,
        epoch: int = 0,
        static_k: bytes | None = None,
        freshness_window: int = imsi_crypto.DEFAULT_FRESHNESS_WINDOW,
    ):
        self.imsi = imsi
        self.protocol = protocol
        self.snid = snid
        self.authority_public = authority_public
        self.grid = grid
        self.ks = ks
        self.feeder_seed = feeder_seed
        self.epoch = epoch
        self.static_k = static_k
        self.freshness_window = freshness_window
        self.sqn_state = SqnState()
        self.stream = ByteStream(entropy_seed, b"ue-entropy")
        self.ops = _counter()
        self.state = _UeStateName.IDLE
        self.k_asme: bytes | None = None
        self.key_tree: KeyTree | None = None
        self.accepted_challenge = False
        self.accepted_rand: bytes | None = None
        self.last_reject: RejectReason | None = None

    def begin_session(self):
        self.state = _UeStateName.IDLE
        self.k_asme = None
        self.key_tree = None
        self.accepted_challenge = False
        self.accepted_rand = None
        self.last_reject = None

    def start(self, now: int) -> list[ProtocolMessage]:
        """Kick off attachment; the baseline reveals the identity here."""
        if self.protocol == Protocol.IPG:
            body = AttachRequest(imsi_plain=None)
            self.state = _UeStateName.WAIT_IDENTITY_REQ
        else:
            body = AttachRequest(imsi_plain=self.imsi.digits)
            self.state = _UeStateName.WAIT_CHALLENGE
        return [ProtocolMessage(src=UE, dst=MME, body=body)]

    def _root_key(self) -> bytes:
        if self.protocol == Protocol.IPG:
            _bump(self.ops, "key_derivations")
            return derive_lte_key(self.grid, self.ks, self.feeder_seed, self.epoch).bits
        return self.static_k

    def _reject(self, reason: RejectReason) -> list[ProtocolMessage]:
        self.last_reject = reason
        self.state = _UeStateName.DONE
        return [ProtocolMessage(src=UE, dst=MME, body=AuthReject(reason))]

    def step(self, msg: ProtocolMessage, now: int) -> list[ProtocolMessage]:
        body = msg.body
        if isinstance(body, AuthReject):
            self.last_reject = body.reason
            self.state = _UeStateName.DONE
            return []

        if self.state == _UeStateName.WAIT_IDENTITY_REQ and isinstance(body, IdentityRequest):
            return self._on_identity_request(body, now)
        if self.state == _UeStateName.WAIT_CHALLENGE and isinstance(body, UserAuthRequest):
            return self._on_challenge(body)
        return self._reject(RejectReason.PROTOCOL_VIOLATION)

    def _on_identity_request(self, body: IdentityRequest, now: int) -> list[ProtocolMessage]:
        signed = body.signed
        _bump(self.ops, "signature_verifications")
        payload_ok = imsi_crypto.verify_identity_request(
            self.authority_public, signed, now, self.freshness_window
        )
        if not payload_ok:
            # Distinguish a broken signature from a stale-but-signed request.
            try:
                self.authority_public.verify(
                    signed.signature,
                    imsi_crypto._signed_payload(signed.params, signed.timestamp),
                )
                return self._reject(RejectReason.STALE_TIMESTAMP)
            except Exception:
                return self._reject(RejectReason.SIGNATURE_INVALID)

        params = signed.params
        blocks = imsi_crypto.split_blocks(self.imsi, params)
        cts = []
        for idx, block in enumerate(blocks):
            k = self.stream.randint(1, params.n - 1)
            cts.append(imsi_crypto.encrypt_imsi(params, block, k, block_index=idx))
            _bump(self.ops, "modexp", 2)
        self.state = _UeStateName.WAIT_CHALLENGE
        return [ProtocolMessage(src=UE, dst=MME, body=IdentityResponse(tuple(cts)))]

    def _on_challenge(self, body: UserAuthRequest) -> list[ProtocolMessage]:
        root = self._root_key()
        result = verify_autn(root, body.rand, body.autn, self.sqn_state)
        if result.status == VerifyStatus.MAC_FAILURE:
            return self._reject(RejectReason.MAC_FAILURE)
        if result.status == VerifyStatus.SQN_OUT_OF_RANGE:
            return self._reject(RejectReason.SQN_OUT_OF_RANGE)

        self.accepted_challenge = True
        self.accepted_rand = body.rand
        self.k_asme = kasme(root, body.rand, result.sqn, self.snid)
        self.key_tree = derive_key_tree(self.k_asme, 0)
        _bump(self.ops, "tree_derivations")
        res = compute_res(root, body.rand)
        self.state = _UeStateName.DONE
        return [ProtocolMessage(src=UE, dst=MME, body=UserAuthResponse(res))]

    def confirm_authenticated(self):
        """Bookkeeping on a completed run; epoch moves with the network."""
        if self.protocol == Protocol.IPG:
            self.epoch += 1


class _MmeStateName(Enum):
    WAIT_ATTACH = "wait-attach"
    WAIT_IDENTITY_RESP = "wait-identity-response"
    WAIT_AUTH_DATA = "wait-auth-data"
    WAIT_RES = "wait-res"
    DONE = "done"


class MmeActor:
    """Serving-network endpoint: runs the exchange and settles the outcome."""

    def __init__(
        self,
        protocol: Protocol,
        snid: bytes,
        authority_private=None,
        eg_params: ElGamalParams | None = None,
        eg_secret: SecretKey | None = None,
        network_type: NetworkType = NetworkType.EUTRAN,
    ):
        self.protocol = protocol
        self.snid = snid
        self.authority_private = authority_private
        self.eg_params = eg_params
        self.eg_secret = eg_secret
        self.network_type = network_type
        self.ksi_counter = 0
        self.ops = _counter()
        self.state = _MmeStateName.WAIT_ATTACH
        self.av: AuthVector | None = None
        self.outcome: tuple[str, RejectReason | None] | None = None
        self.k_asme: bytes | None = None
        self.key_tree: KeyTree | None = None
        self.imsi_value: int | None = None

    def begin_session(self):
        self.state = _MmeStateName.WAIT_ATTACH
        self.av = None
        self.outcome = None
        self.k_asme = None
        self.key_tree = None
        self.imsi_value = None

    def _fail(self, reason: RejectReason, notify_ue: bool = True) -> list[ProtocolMessage]:
        self.outcome = ("rejected", reason)
        self.state = _MmeStateName.DONE
        if notify_ue:
            return [ProtocolMessage(src=MME, dst=UE, body=AuthReject(reason))]
        return []

    def step(self, msg: ProtocolMessage, now: int) -> list[ProtocolMessage]:
        body = msg.body
        if isinstance(body, AuthReject):
            self.outcome = ("rejected", body.reason)
            self.state = _MmeStateName.DONE
            return []

        if self.state == _MmeStateName.WAIT_ATTACH and isinstance(body, AttachRequest):
            return self._on_attach(body, now)
        if self.state == _MmeStateName.WAIT_IDENTITY_RESP and isinstance(body, IdentityResponse):
            return self._on_identity_response(body)
        if self.state == _MmeStateName.WAIT_AUTH_DATA and isinstance(body, AuthDataResponse):
            return self._on_auth_data(body)
        if self.state == _MmeStateName.WAIT_RES and isinstance(body, UserAuthResponse):
            return self._on_res(body)
        return self._fail(RejectReason.PROTOCOL_VIOLATION)

    def _on_attach(self, body: AttachRequest, now: int) -> list[ProtocolMessage]:
        if self.protocol == Protocol.IPG:
            signed = imsi_crypto.sign_identity_request(
                self.authority_private, self.eg_params, timestamp=now
            )
            _bump(self.ops, "signatures")
            self.state = _MmeStateName.WAIT_IDENTITY_RESP
            return [ProtocolMessage(src=MME, dst=UE, body=IdentityRequest(signed))]

        if body.imsi_plain is None:
            return self._fail(RejectReason.PROTOCOL_VIOLATION)
        try:
            imsi = Imsi.parse(body.imsi_plain)
        except ValueError:
            return self._fail(RejectReason.PROTOCOL_VIOLATION)
        return self._forward_auth_request(imsi.as_int())

    def _on_identity_response(self, body: IdentityResponse) -> list[ProtocolMessage]:
        try:
            blocks = []
            for ct in sorted(body.blocks, key=lambda b: b.block_index):
                blocks.append(imsi_crypto.decrypt_imsi(self.eg_params, self.eg_secret, ct))
                _bump(self.ops, "modexp", 2)
            imsi = imsi_crypto.join_blocks(blocks, self.eg_params)
        except IpgAkaError:
            return self._fail(RejectReason.PROTOCOL_VIOLATION)
        return self._forward_auth_request(imsi.as_int())

    def _forward_auth_request(self, imsi_value: int) -> list[ProtocolMessage]:
        self.imsi_value = imsi_value
        self.state = _MmeStateName.WAIT_AUTH_DATA
        body = AuthDataRequest(
            imsi_value=imsi_value, snid=self.snid, network_type=self.network_type
        )
        return [ProtocolMessage(src=MME, dst=HSS, body=body)]

    def _on_auth_data(self, body: AuthDataResponse) -> list[ProtocolMessage]:
        self.av = body.av
        self.ksi_counter = (self.ksi_counter + 1) & 0x07
        self.state = _MmeStateName.WAIT_RES
        req = UserAuthRequest(
            rand=self.av.rand, autn=self.av.autn, ksi_asme=self.ksi_counter
        )
        return [ProtocolMessage(src=MME, dst=UE, body=req)]

    def _on_res(self, body: UserAuthResponse) -> list[ProtocolMessage]:
        if body.res == self.av.xres:
            self.outcome = ("authenticated", None)
            self.k_asme = self.av.k_asme
            self.key_tree = derive_key_tree(self.k_asme, 0)
            _bump(self.ops, "tree_derivations")
            self.state = _MmeStateName.DONE
            return []
        return self._fail(RejectReason.RES_MISMATCH)


class HssActor:
    """Home-network endpoint: subscriber registry and vector generation."""

    def __init__(self, snid_allowlist: set[bytes], entropy_seed: int):
        self.registry: dict[int, SubscriberRecord] = {}
        self.snid_allowlist = set(snid_allowlist)
        self.stream = ByteStream(entropy_seed, b"hss-entropy")
        self.ops = _counter()

    def add_subscriber(self, rec: SubscriberRecord):
        self.registry[rec.imsi.as_int()] = rec

    def step(self, msg: ProtocolMessage, now: int) -> list[ProtocolMessage]:
        body = msg.body
        if isinstance(body, AuthReject):
            return []
        if not isinstance(body, AuthDataRequest):
            return [
                ProtocolMessage(
                    src=HSS, dst=MME, body=AuthReject(RejectReason.PROTOCOL_VIOLATION)
                )
            ]
        if bytes(body.snid) not in self.snid_allowlist:
            return [
                ProtocolMessage(
                    src=HSS, dst=MME, body=AuthReject(RejectReason.SNID_REJECTED)
                )
            ]
        rec = self.registry.get(body.imsi_value)
        if rec is None:
            return [
                ProtocolMessage(
                    src=HSS, dst=MME, body=AuthReject(RejectReason.UNKNOWN_IMSI)
                )
            ]

        if rec.static_k is not None:
            root = rec.static_k
        else:
            _bump(self.ops, "key_derivations")
            root = derive_lte_key(rec.grid, rec.ks, rec.feeder_seed, rec.epoch).bits

        rec.sqn_state.sqn += 1  # issuance advances the network-side counter
        rand = self.stream.take(16)
        av = build_auth_vector(root, rec.sqn_state.sqn, body.snid, rand)
        _bump(self.ops, "av_builds")
        return [ProtocolMessage(src=HSS, dst=MME, body=AuthDataResponse(av))]

    def notify_authenticated(self, imsi_value: int):
        """Internal bookkeeping after the serving network reports success."""
        rec = self.registry.get(imsi_value)
        if rec is not None and rec.static_k is None:
            rec.epoch += 1


### provisioning

@dataclass
class Provisioning:
    """Matched actor set sharing one subscriber's secrets."""

    ue: UeActor
    mme: MmeActor
    hss: HssActor
    imsi: Imsi
    protocol: Protocol
    grid: CGrid | None = None
    ks: KeySequence | None = None
    feeder_seed: int = 0
    static_k: bytes | None = None


DEFAULT_SNID = b"\x13\x00\x14"
DEFAULT_IMSI = "001010123456789"


def provision(
    seed: int,
    protocol: Protocol = Protocol.IPG,
    imsi_digits: str = DEFAULT_IMSI,
    grid_n: int = 5,
    elgamal_bits: int = imsi_crypto.DEFAULT_BIT_LENGTH,
    epoch: int = 0,
    snid: bytes = DEFAULT_SNID,
    ue_grid_seed: int | None = None,
    hss_grid_seed: int | None = None,
    shared_crypto: tuple | None = None,
) -> Provisioning:
    """Build a consistent UE/MME/HSS triple from one master seed.

    Grid seeds can be overridden per side to provoke mismatched material.
    shared_crypto = (authority_private, authority_public, eg_params,
    eg_secret) skips the per-call parameter setup; bulk runs reuse one
    identity-concealment context while the keying material still varies.
    """
    imsi = Imsi.parse(imsi_digits)
    master = ByteStream(seed, b"provision")
    grid_seed = master.u64()
    kseq_seed = master.u64()
    feeder_seed = master.u64()
    authority_seed = master.u64()
    eg_seed = master.u64()
    ue_entropy = master.u64()
    hss_entropy = master.u64()
    static_k = master.take(32)

    if shared_crypto is None:
        auth_priv, auth_pub = imsi_crypto.authority_keypair(authority_seed)
        eg_pair = None
    else:
        auth_priv, auth_pub, eg_params_in, eg_secret_in = shared_crypto
        eg_pair = (eg_params_in, eg_secret_in)

    grid = ks = None
    ue_grid = ue_ks = None
    if protocol == Protocol.IPG:
        hss_seed = grid_seed if hss_grid_seed is None else hss_grid_seed
        ue_seed = grid_seed if ue_grid_seed is None else ue_grid_seed
        grid = generate_grid(grid_n, seed=hss_seed)
        ks = form_key_sequence(grid, kseq_seed)
        if ue_seed == hss_seed:
            ue_grid, ue_ks = grid, ks
        else:
            ue_grid = generate_grid(grid_n, seed=ue_seed)
            ue_ks = form_key_sequence(ue_grid, kseq_seed)

    ue = UeActor(
        imsi=imsi,
        protocol=protocol,
        snid=snid,
        authority_public=auth_pub,
        entropy_seed=ue_entropy,
        grid=ue_grid,
        ks=ue_ks,
        feeder_seed=feeder_seed,
        epoch=epoch,
        static_k=None if protocol == Protocol.IPG else static_k,
    )

    eg_params = eg_secret = None
    if protocol == Protocol.IPG:
        if eg_pair is not None:
            eg_params, eg_secret = eg_pair
        else:
            eg_params, eg_secret = imsi_crypto.gen_params(elgamal_bits, eg_seed)
    mme = MmeActor(
        protocol=protocol,
        snid=snid,
        authority_private=auth_priv,
        eg_params=eg_params,
        eg_secret=eg_secret,
    )

    hss = HssActor(snid_allowlist={snid}, entropy_seed=hss_entropy)
    hss.add_subscriber(
        SubscriberRecord(
            imsi=imsi,
            grid=grid,
            ks=ks,
            feeder_seed=feeder_seed,
            epoch=epoch,
            sqn_state=SqnState(),
            static_k=None if protocol == Protocol.IPG else static_k,
        )
    )

    return Provisioning(
        ue=ue,
        mme=mme,
        hss=hss,
        imsi=imsi,
        protocol=protocol,
        grid=grid,
        ks=ks,
        feeder_seed=feeder_seed,
        static_k=None if protocol == Protocol.IPG else static_k,
    )


### session driver

@dataclass(frozen=True)
class SessionResult:
    outcome: str  # "authenticated" or "rejected"
    reason: RejectReason | None
    k_asme: bytes | None
    key_tree: KeyTree | None
    message_count: int
    trace: tuple  # TraceRecord rows from the transport

    @property
    def authenticated(self) -> bool:
        return self.outcome == "authenticated"


def run_session(prov: Provisioning, net, start_time: int = 0) -> SessionResult:
    """Drive one full authentication over the given transport."""
    actors = {UE: prov.ue, MME: prov.mme, HSS: prov.hss}
    prov.ue.begin_session()
    prov.mme.begin_session()
    trace_start = len(net.trace)

    for msg in prov.ue.start(start_time):
        net.send(msg, start_time)

    while True:
        delivery = net.tick()
        if delivery is None:
            break
        now, _frame, msg = delivery
        if msg is None:
            # Tampered beyond parsing; the session cannot proceed honestly.
            prov.mme.outcome = ("rejected", RejectReason.PROTOCOL_VIOLATION)
            continue
        actor = actors.get(msg.dst)
        if actor is None:
            continue
        for out in actor.step(msg, now):
            net.send(out, now)

    trace = tuple(net.trace[trace_start:])
    if prov.mme.outcome is None:
        return SessionResult(
            outcome="rejected",
            reason=RejectReason.DELIVERY_FAILURE,
            k_asme=None,
            key_tree=None,
            message_count=len(trace),
            trace=trace,
        )

    kind, reason = prov.mme.outcome
    if kind == "authenticated":
        prov.ue.confirm_authenticated()
        prov.hss.notify_authenticated(prov.imsi.as_int())
        return SessionResult(
            outcome="authenticated",
            reason=None,
            k_asme=prov.mme.k_asme,
            key_tree=prov.mme.key_tree,
            message_count=len(trace),
            trace=trace,
        )
    return SessionResult(
        outcome="rejected",
        reason=reason,
        k_asme=None,
        key_tree=None,
        message_count=len(trace),
        trace=trace,
    )


def run_ipg_aka(prov: Provisioning, net, start_time: int = 0) -> SessionResult:
    if prov.protocol != Protocol.IPG:
        raise ValueError("provisioning is not for the grid-backed protocol")
    return run_session(prov, net, start_time)


def run_eps_aka(prov: Provisioning, net, start_time: int = 0) -> SessionResult:
    if prov.protocol != Protocol.EPS:
        raise ValueError("provisioning is not for the baseline protocol")
    return run_session(prov, net, start_time)
