import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ipg_aka import imsi_crypto
from ipg_aka.errors import MalformedMessage
from ipg_aka.key_hierarchy import AuthVector
from ipg_aka.protocol import (
    HSS,
    MME,
    UE,
    AttachRequest,
    AuthDataRequest,
    AuthDataResponse,
    AuthReject,
    IdentityRequest,
    IdentityResponse,
    MsgType,
    NetworkType,
    Protocol,
    ProtocolMessage,
    RejectReason,
    UserAuthRequest,
    UserAuthResponse,
    deserialize_message,
    provision,
    run_eps_aka,
    run_ipg_aka,
    run_session,
    serialize_message,
)
from ipg_aka.simnet import SimNet, LinkConfig


def _roundtrip(msg: ProtocolMessage) -> ProtocolMessage:
    return deserialize_message(serialize_message(msg))


def _sample_messages(eg_small):
    params, _ = eg_small
    priv, _ = imsi_crypto.authority_keypair(1)
    signed = imsi_crypto.sign_identity_request(priv, params, timestamp=44)
    av = AuthVector(rand=bytes(16), autn=bytes(range(16)), xres=b"\x01" * 8, k_asme=b"\x02" * 32)
    return [
        ProtocolMessage(UE, MME, AttachRequest(None)),
        ProtocolMessage(UE, MME, AttachRequest("001010123456789")),
        ProtocolMessage(MME, UE, IdentityRequest(signed)),
        ProtocolMessage(
            UE,
            MME,
            IdentityResponse(
                (
                    imsi_crypto.ImsiCiphertext(r=5, t=9, block_index=0),
                    imsi_crypto.ImsiCiphertext(r=7, t=11, block_index=1),
                )
            ),
        ),
        ProtocolMessage(
            MME, HSS, AuthDataRequest(imsi_value=1010123456789, snid=b"\x13\x00\x14", network_type=NetworkType.EUTRAN)
        ),
        ProtocolMessage(HSS, MME, AuthDataResponse(av)),
        ProtocolMessage(MME, UE, UserAuthRequest(rand=bytes(16), autn=bytes(16), ksi_asme=5)),
        ProtocolMessage(UE, MME, UserAuthResponse(res=b"\x07" * 8)),
        ProtocolMessage(MME, UE, AuthReject(RejectReason.MAC_FAILURE)),
    ]


def test_wire_round_trip_all_types(eg_small):
    for msg in _sample_messages(eg_small):
        again = _roundtrip(msg)
        assert again == msg
        assert again.tag == msg.tag


def test_frame_length_prefix(eg_small):
    for msg in _sample_messages(eg_small):
        frame = serialize_message(msg)
        assert int.from_bytes(frame[:4], "big") == len(frame) - 4


def test_malformed_frames_rejected(eg_small):
    frame = serialize_message(_sample_messages(eg_small)[0])
    with pytest.raises(MalformedMessage):
        deserialize_message(frame[:5])
    with pytest.raises(MalformedMessage):
        deserialize_message(frame + b"\x00")
    bad_tag = bytearray(frame)
    bad_tag[4] = 200
    with pytest.raises(MalformedMessage):
        deserialize_message(bytes(bad_tag))
    bad_src = bytearray(frame)
    bad_src[5] = 9
    with pytest.raises(MalformedMessage):
        deserialize_message(bytes(bad_src))


def test_reject_reason_labels():
    assert RejectReason.MAC_FAILURE.label == "MacFailure"
    assert RejectReason.SQN_OUT_OF_RANGE.label == "SqnOutOfRange"
    assert RejectReason.RES_MISMATCH.label == "ResMismatch"
    assert RejectReason.STALE_TIMESTAMP.label == "StaleTimestamp"
    assert RejectReason.PROTOCOL_VIOLATION.label == "ProtocolViolation"
    assert RejectReason.DELIVERY_FAILURE.label == "DeliveryFailure"


def test_honest_ipg_session(shared_crypto_768):
    prov = provision(seed=100, shared_crypto=shared_crypto_768)
    result = run_ipg_aka(prov, SimNet(seed=100))
    assert result.authenticated
    assert result.message_count == 7
    assert result.k_asme == prov.ue.k_asme == prov.mme.k_asme
    assert prov.ue.key_tree == prov.mme.key_tree
    assert result.key_tree is not None


def test_honest_ipg_no_imsi_digits_on_air(shared_crypto_768):
    prov = provision(seed=101, shared_crypto=shared_crypto_768)
    result = run_ipg_aka(prov, SimNet(seed=101))
    needle = prov.imsi.digits.encode("ascii")
    assert result.authenticated
    assert all(needle not in rec.frame for rec in result.trace)


def test_honest_eps_session():
    prov = provision(seed=102, protocol=Protocol.EPS)
    result = run_eps_aka(prov, SimNet(seed=102))
    assert result.authenticated
    assert result.message_count == 5
    assert result.message_count <= 7
    needle = prov.imsi.digits.encode("ascii")
    assert any(needle in rec.frame for rec in result.trace)
    assert result.k_asme == prov.ue.k_asme


def test_runner_protocol_guard(shared_crypto_768):
    prov = provision(seed=103, shared_crypto=shared_crypto_768)
    with pytest.raises(ValueError):
        run_eps_aka(prov, SimNet(seed=1))
    eps = provision(seed=104, protocol=Protocol.EPS)
    with pytest.raises(ValueError):
        run_ipg_aka(eps, SimNet(seed=1))


def test_mismatched_grids_reject(shared_crypto_768):
    prov = provision(
        seed=105, shared_crypto=shared_crypto_768, ue_grid_seed=1, hss_grid_seed=2
    )
    result = run_ipg_aka(prov, SimNet(seed=105))
    assert not result.authenticated
    # the subscriber's challenge check fires before any response comparison
    assert result.reason == RejectReason.MAC_FAILURE


def test_epoch_advances_only_on_success(shared_crypto_768):
    prov = provision(seed=106, shared_crypto=shared_crypto_768)
    assert prov.ue.epoch == 0
    run_ipg_aka(prov, SimNet(seed=1))
    assert prov.ue.epoch == 1
    assert prov.hss.registry[prov.imsi.as_int()].epoch == 1

    bad = provision(
        seed=107, shared_crypto=shared_crypto_768, ue_grid_seed=3, hss_grid_seed=4
    )
    run_ipg_aka(bad, SimNet(seed=2))
    assert bad.ue.epoch == 0
    assert bad.hss.registry[bad.imsi.as_int()].epoch == 0


def test_consecutive_sessions_fresh_kasme(shared_crypto_768):
    prov = provision(seed=108, shared_crypto=shared_crypto_768)
    seen = set()
    pairs = 0
    prev = None
    for i in range(101):
        result = run_ipg_aka(prov, SimNet(seed=i))
        assert result.authenticated
        assert result.k_asme not in seen
        seen.add(result.k_asme)
        if prev is not None:
            assert result.k_asme != prev
            pairs += 1
        prev = result.k_asme
    assert pairs == 100


def test_mme_rejects_out_of_order_identity_response(shared_crypto_768):
    prov = provision(seed=109, shared_crypto=shared_crypto_768)
    msg = ProtocolMessage(
        UE, MME, IdentityResponse((imsi_crypto.ImsiCiphertext(r=1, t=1, block_index=0),))
    )
    out = prov.mme.step(msg, now=0)
    assert len(out) == 1
    assert isinstance(out[0].body, AuthReject)
    assert out[0].body.reason == RejectReason.PROTOCOL_VIOLATION


def test_ue_answers_identity_request_per_block(eg_small):
    params, _ = eg_small
    priv, pub = imsi_crypto.authority_keypair(9)
    prov = provision(seed=110)
    ue = prov.ue
    ue.authority_public = pub
    ue.begin_session()
    ue.state = type(ue.state).WAIT_IDENTITY_REQ
    signed = imsi_crypto.sign_identity_request(priv, params, timestamp=0)
    out = ue.step(ProtocolMessage(MME, UE, IdentityRequest(signed)), now=0)
    assert len(out) == 1
    body = out[0].body
    assert isinstance(body, IdentityResponse)
    expected_blocks = len(imsi_crypto.split_blocks(prov.imsi, params))
    assert len(body.blocks) == expected_blocks
    assert expected_blocks > 1  # small modulus forces splitting
    rs = [ct.r for ct in body.blocks]
    assert len(set(rs)) == len(rs)  # fresh ephemeral per block


def test_ue_rejects_bad_signature(shared_crypto_768):
    prov = provision(seed=111, shared_crypto=shared_crypto_768)
    ue = prov.ue
    ue.begin_session()
    ue.state = type(ue.state).WAIT_IDENTITY_REQ
    priv, _, params, _ = shared_crypto_768
    signed = imsi_crypto.sign_identity_request(priv, params, timestamp=0)
    tampered = dataclasses.replace(
        signed, signature=bytes([signed.signature[0] ^ 1]) + signed.signature[1:]
    )
    out = ue.step(ProtocolMessage(MME, UE, IdentityRequest(tampered)), now=0)
    assert out[0].body.reason == RejectReason.SIGNATURE_INVALID


def test_ue_rejects_stale_timestamp(shared_crypto_768):
    prov = provision(seed=112, shared_crypto=shared_crypto_768)
    ue = prov.ue
    ue.begin_session()
    ue.state = type(ue.state).WAIT_IDENTITY_REQ
    priv, _, params, _ = shared_crypto_768
    signed = imsi_crypto.sign_identity_request(priv, params, timestamp=0)
    out = ue.step(ProtocolMessage(MME, UE, IdentityRequest(signed)), now=5000)
    assert out[0].body.reason == RejectReason.STALE_TIMESTAMP


def test_hss_unknown_imsi(shared_crypto_768):
    prov = provision(seed=113, shared_crypto=shared_crypto_768)
    prov.hss.registry.clear()
    result = run_ipg_aka(prov, SimNet(seed=113))
    assert not result.authenticated
    assert result.reason == RejectReason.UNKNOWN_IMSI


def test_hss_snid_rejected(shared_crypto_768):
    prov = provision(seed=114, shared_crypto=shared_crypto_768)
    prov.hss.snid_allowlist.clear()
    result = run_ipg_aka(prov, SimNet(seed=114))
    assert not result.authenticated
    assert result.reason == RejectReason.SNID_REJECTED


def test_replayed_challenge_same_epoch_sqn_out_of_range(shared_crypto_768):
    # First session stalls after the subscriber has accepted the challenge
    # (its response is dropped), so no epoch advance happens.  Replaying the
    # captured challenge then trips the sequence-number monotonicity check.
    from ipg_aka.simnet import EavesdropTap, RewriteTap

    prov = provision(seed=115, shared_crypto=shared_crypto_768)
    net = SimNet(seed=115)
    tap = EavesdropTap()
    net.add_tap(tap)

    def drop_res(frame, src, dst, now):
        if len(frame) > 4 and frame[4] == MsgType.USER_AUTH_RESPONSE:
            return None
        return frame

    net.add_tap(RewriteTap(drop_res))
    first = run_session(prov, net)
    assert not first.authenticated
    assert first.reason == RejectReason.DELIVERY_FAILURE
    assert prov.ue.epoch == 0

    old = tap.frames_with_tag(MsgType.USER_AUTH_REQUEST)[0]

    def swap(frame, src, dst, now):
        if len(frame) > 4 and frame[4] == MsgType.USER_AUTH_REQUEST:
            return old
        return frame

    net2 = SimNet(seed=116)
    net2.add_tap(RewriteTap(swap))
    second = run_session(prov, net2, start_time=500)
    assert not second.authenticated
    assert second.reason == RejectReason.SQN_OUT_OF_RANGE


def test_injected_extra_message_never_wrong_auth(shared_crypto_768):
    prov = provision(seed=117, shared_crypto=shared_crypto_768)
    net = SimNet(seed=117)
    rogue = ProtocolMessage(
        UE, MME, IdentityResponse((imsi_crypto.ImsiCiphertext(r=2, t=3, block_index=0),))
    )
    net.inject_frame(serialize_message(rogue), UE, MME, 0)
    result = run_session(prov, net)
    assert not result.authenticated


def test_replay_after_close_protocol_violation(shared_crypto_768):
    prov = provision(seed=118, shared_crypto=shared_crypto_768)
    result = run_ipg_aka(prov, SimNet(seed=118))
    assert result.authenticated
    replayed = ProtocolMessage(
        MME, UE, UserAuthRequest(rand=bytes(16), autn=bytes(16), ksi_asme=1)
    )
    out = prov.ue.step(replayed, now=99)
    assert out[0].body.reason == RejectReason.PROTOCOL_VIOLATION


def test_total_loss_is_delivery_failure(shared_crypto_768):
    prov = provision(seed=119, shared_crypto=shared_crypto_768)
    net = SimNet(seed=119, default_link=LinkConfig(latency_ms=1, drop_pct=100))
    result = run_session(prov, net)
    assert not result.authenticated
    assert result.reason == RejectReason.DELIVERY_FAILURE
    assert result.k_asme is None


def test_ksi_carried_verbatim(eg_small):
    msg = ProtocolMessage(MME, UE, UserAuthRequest(rand=bytes(16), autn=bytes(16), ksi_asme=6))
    assert _roundtrip(msg).body.ksi_asme == 6


@settings(max_examples=50, deadline=None)
@given(
    rand=st.binary(min_size=16, max_size=16),
    autn=st.binary(min_size=16, max_size=16),
    ksi=st.integers(min_value=0, max_value=7),
    res=st.binary(min_size=1, max_size=32),
    value=st.integers(min_value=0, max_value=2**64 - 1),
)
def test_property_wire_round_trip(rand, autn, ksi, res, value):
    messages = [
        ProtocolMessage(MME, UE, UserAuthRequest(rand=rand, autn=autn, ksi_asme=ksi)),
        ProtocolMessage(UE, MME, UserAuthResponse(res=res)),
        ProtocolMessage(
            MME, HSS, AuthDataRequest(imsi_value=value, snid=b"\x00\x01\x02", network_type=NetworkType.OTHER)
        ),
    ]
    for msg in messages:
        assert _roundtrip(msg) == msg
