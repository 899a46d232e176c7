from ipaddress import IPv4Address

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wdmesh.addressing import (
    AddressBook,
    assign_address,
    route,
    routing_table,
    reachable,
    scope_for,
)
from wdmesh.channels import DATAGRAM, STREAM, InterfaceKind, multicast
from wdmesh.errors import ScopeExhausted
from wdmesh.gateway import build_world
from wdmesh.topology import GatewayConfig, Mode, Network, Role, Stack
from wdmesh.world import World

WLAN, P2P = InterfaceKind.WLAN, InterfaceKind.P2P
GO_ADDR = IPv4Address("192.168.49.1")


def gateway_world(a="LC", b="GM", stack="stock", seed=0, **kw):
    cfg = GatewayConfig(a, b, mode=Mode.SIMULTANEOUS, stack=stack, **kw)
    return build_world(cfg, "non_stock" if stack == "nonstock" else "udp_multicast", "A", np.random.default_rng(seed))


def test_stock_go_address():
    for k in range(4):
        assert scope_for(k, Stack.STOCK).go_address == GO_ADDR


def test_nonstock_go_address():
    for k in range(4):
        assert scope_for(k, Stack.NON_STOCK).go_address == IPv4Address(f"192.168.{49 + k}.1")


def test_stock_client_range():
    w = World()
    for n in ("go", "c1", "c2"):
        w.add_node(n)
    w.create_group("go", "g", np.random.default_rng(1))
    for n in ("c1", "c2"):
        w.connect(n, "g", Role.GM, np.random.default_rng(1))
        addr = w.book.address("g", n)
        assert IPv4Address("192.168.49.2") <= addr <= IPv4Address("192.168.49.254")
    assert w.book.address("g", "go") == GO_ADDR
    assert w.book.address("g", "c1") != w.book.address("g", "c2")


def test_scope_exhausted_after_253_clients():
    net = Network()
    net.add_node("go")
    g = net.create_group("go", "g")
    book = AddressBook()
    rng = np.random.default_rng(0)
    assign_address(book, g, "go", rng)
    for i in range(253):
        net.add_node(f"c{i}")
        g.add_member(f"c{i}", Role.GM)
        assign_address(book, g, f"c{i}", rng)
    assert len(set(book.leases["g"].values())) == 254
    net.add_node("late")
    g.add_member("late", Role.GM)
    with pytest.raises(ScopeExhausted):
        assign_address(book, g, "late", rng)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_assignment_is_deterministic(seed):
    a = gateway_world(seed=seed)
    b = gateway_world(seed=seed)
    assert a.book.leases == b.book.leases


@pytest.mark.parametrize("cfg", [("LC", "GM"), ("GM", "LC"), ("LC", "GO"), ("GO", "LC")])
def test_stock_gos_share_address_and_nonstock_is_unique(cfg):
    stock = gateway_world(*cfg)
    gos = [stock.book.address(g, stock.group(g).owner) for g in "AB"]
    assert gos[0] == gos[1] == GO_ADDR
    ns = gateway_world(*cfg, stack="nonstock")
    addrs = ns.book.all_addresses()
    assert len(addrs) == len(set(addrs))


def test_route_prefers_wlan_on_overlap():
    w = gateway_world("LC", "GM")
    table = routing_table(w, "gw")
    assert route(table, GO_ADDR, STREAM) is WLAN
    assert route(table, GO_ADDR, DATAGRAM) is WLAN
    for dest in (GO_ADDR, IPv4Address("10.0.0.1")):
        assert route(table, dest, multicast(P2P)) is P2P
        assert route(table, dest, multicast(WLAN)) is WLAN


def test_route_sole_p2p_link():
    w = gateway_world("LC", "GM")
    w.disconnect("gw", "A")
    table = routing_table(w, "gw")
    assert route(table, GO_ADDR, STREAM) is P2P
    assert route(table, GO_ADDR, multicast(WLAN)) is None
    assert route(table, IPv4Address("10.0.0.1"), STREAM) is None


def test_multicast_route_independent_of_other_attachment():
    w = gateway_world("LC", "GM")
    before = route(routing_table(w, "gw"), GO_ADDR, multicast(P2P))
    w.disconnect("gw", "A")
    assert route(routing_table(w, "gw"), GO_ADDR, multicast(P2P)) is before is P2P


def test_lc_gm_unicast_reaches_only_wlan_side_go():
    w = gateway_world("LC", "GM")
    assert reachable("gw", "node_a", STREAM, w)
    assert not reachable("gw", "node_b", STREAM, w)
    assert not reachable("gw", "node_b", DATAGRAM, w)


def test_go_plus_lc_gateway():
    w = gateway_world("GO", "LC")
    assert reachable("gw", "node_b", STREAM, w)
    assert reachable("node_b", "gw", STREAM, w)
    # node_a holds a 192.168.49.x lease that the WLAN subnet captures
    assert not reachable("gw", "node_a", DATAGRAM, w)
    assert not reachable("gw", "node_a", STREAM, w)


def test_loopback():
    w = gateway_world()
    for n in ("gw", "node_a", "node_b"):
        for ch in (STREAM, DATAGRAM, multicast(P2P)):
            assert reachable(n, n, ch, w)


def test_no_path_between_groups():
    w = gateway_world("LC", "GM", stack="nonstock")
    assert not reachable("node_a", "node_b", DATAGRAM, w)


def test_nonstock_unicast_both_links():
    w = gateway_world("LC", "GM", stack="nonstock")
    for peer in ("node_a", "node_b"):
        assert reachable("gw", peer, STREAM, w)
        assert reachable(peer, "gw", STREAM, w)


def test_client_to_client_via_go():
    w = World()
    for n in ("go", "c1", "c2"):
        w.add_node(n)
    rng = np.random.default_rng(0)
    w.create_group("go", "g", rng)
    w.connect("c1", "g", Role.GM, rng)
    w.connect("c2", "g", Role.LC, rng)
    assert reachable("c1", "c2", STREAM, w)
    assert reachable("c2", "c1", DATAGRAM, w)
