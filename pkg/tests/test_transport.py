import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from wdmesh.channels import DATAGRAM, STREAM, InterfaceKind, multicast
from wdmesh.costmodel import CostParams
from wdmesh.errors import InvalidArgument, NoRoute, PreconditionViolated
from wdmesh.topology import Role
from wdmesh.transport import Payload, broadcast_in_group, send
from wdmesh.world import World

P2P, WLAN = InterfaceKind.P2P, InterfaceKind.WLAN
MB = 10**6


def group_world(members=(("c1", Role.GM),), seed=0):
    w = World()
    w.add_node("go")
    rng = np.random.default_rng(seed)
    w.create_group("go", "g", rng)
    for n, r in members:
        w.add_node(n)
        w.connect(n, "g", r, rng)
    return w


def params(**links):
    p = CostParams()
    for k, v in links.items():
        p = p.override(k.replace("__", "."), v)
    return p


def test_payload_chunks():
    p = Payload(3000, 1400)
    assert p.n_chunks == 3
    assert list(p.chunk_sizes()) == [1400, 1400, 200]
    assert Payload(0).n_chunks == 0
    with pytest.raises(InvalidArgument):
        Payload(10, 0)
    with pytest.raises(InvalidArgument):
        Payload(-1)


def test_stream_10mb_takes_4s():
    w = group_world()
    r = send("go", "c1", STREAM, Payload(10 * MB), w, CostParams(), np.random.default_rng(0))
    assert r.bytes_delivered == 10 * MB
    assert r.duration_s == pytest.approx(4.0, abs=1e-12)


def test_multicast_expected_93_percent():
    w = group_world()
    ratios = [
        send("go", "c1", multicast(P2P), Payload(10 * MB), w, CostParams(), np.random.default_rng(s)).bytes_delivered / (10 * MB)
        for s in range(20)
    ]
    assert np.mean(ratios) == pytest.approx(0.93, abs=0.005)


@pytest.mark.parametrize("ch", [STREAM, DATAGRAM, multicast(P2P)])
def test_zero_bytes(ch):
    w = group_world()
    r = send("go", "c1", ch, Payload(0), w, CostParams(), np.random.default_rng(0))
    assert (r.bytes_delivered, r.duration_s, r.energy_j) == (0, 0.0, 0.0)


def test_multicast_penalty_doubles_duration():
    w = group_world()
    p = params(link__p2p__p_deliver=1.0)
    s = send("go", "c1", STREAM, Payload(10 * MB), w, p, np.random.default_rng(0))
    m = send("go", "c1", multicast(P2P), Payload(10 * MB), w, p, np.random.default_rng(0))
    assert m.duration_s == 2 * s.duration_s
    assert m.bytes_delivered == 10 * MB


def test_unreachable_raises():
    w = group_world()
    w.add_node("stranger")
    with pytest.raises(NoRoute):
        send("go", "stranger", STREAM, Payload(10), w, CostParams(), np.random.default_rng(0))


def test_multicast_matches_bernoulli_oracle():
    # same seed, same draw order: the delivered chunks must be exactly the oracle's
    w = group_world()
    payload = Payload(1000 * 1400)
    r = send("go", "c1", multicast(P2P), payload, w, CostParams(), np.random.default_rng(42))
    oracle = np.random.default_rng(42).random(1000) < 0.93
    assert np.array_equal(r.mask, oracle)
    assert r.bytes_delivered == 1400 * int(oracle.sum())


@given(st.integers(0, 5 * MB), st.integers(1, 5000), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_never_more_than_sent(size, chunk, seed):
    w = group_world()
    payload = Payload(size, chunk)
    for ch in (STREAM, DATAGRAM, multicast(P2P)):
        r = send("go", "c1", ch, payload, w, CostParams(), np.random.default_rng(seed))
        assert 0 <= r.bytes_delivered <= size
        if ch is STREAM:
            assert r.bytes_delivered == size


@given(st.integers(0, 10 * MB), st.integers(0, 10 * MB))
@settings(max_examples=60, deadline=None)
def test_duration_monotone_and_multicast_slower(a, b):
    w = group_world()
    lo, hi = sorted((a, b))
    rng = np.random.default_rng(0)
    d = lambda n, ch: send("go", "c1", ch, Payload(n), w, CostParams(), rng).duration_s
    assert d(lo, STREAM) <= d(hi, STREAM)
    assert d(hi, multicast(P2P)) >= d(hi, STREAM)


def test_client_to_client_takes_two_legs():
    w = group_world((("c1", Role.GM), ("c2", Role.LC)))
    r = send("c1", "c2", STREAM, Payload(10 * MB), w, CostParams(), np.random.default_rng(0))
    assert r.hops == 2
    assert r.duration_s == pytest.approx(8.0)


def test_go_broadcast_lossless():
    w = group_world((("c1", Role.GM), ("c2", Role.GM)))
    out = broadcast_in_group("go", "g", multicast(P2P), Payload(10 * MB), w, params(link__p2p__p_deliver=1.0), np.random.default_rng(0))
    assert set(out) == {"c1", "c2"}
    assert all(r.bytes_delivered == 10 * MB and r.hops == 1 for r in out.values())


def test_client_broadcast_goes_through_go():
    w = group_world((("c1", Role.GM), ("c2", Role.GM), ("c3", Role.GM)))
    out = broadcast_in_group("c1", "g", DATAGRAM, Payload(10 * MB), w, CostParams(), np.random.default_rng(0))
    assert set(out) == {"go", "c2", "c3"}
    assert out["go"].hops == 1
    assert out["c2"].hops == out["c3"].hops == 2
    assert out["c2"].duration_s > out["go"].duration_s


def test_broadcast_preconditions():
    w = group_world()
    w.add_node("x")
    with pytest.raises(PreconditionViolated):
        broadcast_in_group("x", "g", DATAGRAM, Payload(10), w, CostParams(), np.random.default_rng(0))
    with pytest.raises(InvalidArgument):
        broadcast_in_group("go", "g", STREAM, Payload(10), w, CostParams(), np.random.default_rng(0))
    with pytest.raises(NoRoute):
        broadcast_in_group("go", "g", multicast(WLAN), Payload(10), w, CostParams(), np.random.default_rng(0))


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_broadcast_binomial_interval_and_oracle(seed):
    w = group_world((("c1", Role.GM), ("c2", Role.GM)))
    n = 1000
    out = broadcast_in_group("go", "g", multicast(P2P), Payload(n * 1400), w, CostParams(), np.random.default_rng(seed))
    oracle = np.random.default_rng(seed)
    lo, hi = binom.interval(0.99, n, 0.93)
    for m in ("c1", "c2"):
        expected = oracle.random(n) < 0.93
        assert np.array_equal(out[m].mask, expected)
        assert lo <= out[m].mask.sum() <= hi
