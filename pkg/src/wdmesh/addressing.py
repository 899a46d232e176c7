"""DHCP-style address assignment and the host routing/reachability oracle.

Stock Android hard-codes one DHCP scope for every group: each GO is
192.168.49.1 and clients draw from .2-.254.  A gateway attached to two groups
therefore holds two interfaces on the same subnet.  Routing follows the weak
end system model: unicast picks an interface from the destination address
alone, and the WLAN interface wins whenever its subnet matches.  Multicast
sockets name their interface explicitly and bypass that decision.
"""

from __future__ import annotations

from dataclasses import dataclass
from ipaddress import IPv4Address, IPv4Network
from typing import TYPE_CHECKING

from .channels import DATAGRAM, STREAM, Channel, InterfaceKind, multicast
from .errors import InvalidArgument, ScopeExhausted
from .topology import Group, Role, Stack

if TYPE_CHECKING:
    from .world import World

__all__ = [
    "AddressScope",
    "AddressBook",
    "Attachment",
    "RoutingTable",
    "scope_for",
    "assign_address",
    "routing_table",
    "route",
    "reachable",
    "STREAM",
    "DATAGRAM",
    "multicast",
]

STOCK_THIRD_OCTET = 49


@dataclass(frozen=True)
class AddressScope:
    network: IPv4Network
    go_address: IPv4Address
    client_lo: IPv4Address
    client_hi: IPv4Address

    def contains(self, addr: IPv4Address) -> bool:
        return addr in self.network

    def client_addresses(self) -> list[IPv4Address]:
        return [IPv4Address(i) for i in range(int(self.client_lo), int(self.client_hi) + 1)]


def scope_for(index: int, stack: Stack) -> AddressScope:
    """DHCP scope of the ``index``-th group.

    Stock: always 192.168.49.0/24.  Non-stock: 192.168.(49+index).0/24, so
    scopes of distinct groups are disjoint.
    """
    third = STOCK_THIRD_OCTET if Stack(stack) is Stack.STOCK else STOCK_THIRD_OCTET + index
    if not 0 <= third <= 255:
        raise InvalidArgument(f"group index {index} has no address scope")
    base = f"192.168.{third}"
    return AddressScope(
        IPv4Network(f"{base}.0/24"),
        IPv4Address(f"{base}.1"),
        IPv4Address(f"{base}.2"),
        IPv4Address(f"{base}.254"),
    )


class AddressBook:
    """Per-group scopes and leases.  Non-stock scope indices follow registration order."""

    def __init__(self, stack: Stack = Stack.STOCK):
        self.stack = Stack(stack)
        self.scopes: dict[str, AddressScope] = {}
        self.leases: dict[str, dict[str, IPv4Address]] = {}
        self._indices: dict[str, int] = {}

    def register(self, group_id: str, index: int | None = None) -> AddressScope:
        if group_id not in self._indices:
            if index is None:
                index = max(self._indices.values(), default=-1) + 1
            self._indices[group_id] = index
        scope = scope_for(self._indices[group_id], self.stack)
        self.scopes[group_id] = scope
        self.leases.setdefault(group_id, {})
        return scope

    def scope(self, group_id: str) -> AddressScope:
        return self.scopes.get(group_id) or self.register(group_id)

    def address(self, group_id: str, node: str) -> IPv4Address | None:
        return self.leases.get(group_id, {}).get(node)

    def owner_of(self, group_id: str, addr: IPv4Address) -> str | None:
        for node, a in self.leases.get(group_id, {}).items():
            if a == addr:
                return node
        return None

    def release(self, group_id: str, node: str) -> None:
        self.leases.get(group_id, {}).pop(node, None)

    def drop(self, group_id: str) -> None:
        self.leases[group_id] = {}

    def all_addresses(self) -> list[IPv4Address]:
        return [a for leases in self.leases.values() for a in leases.values()]


def assign_address(book: AddressBook, group: Group, node: str, rng) -> IPv4Address:
    """Lease an address in ``group``: the GO gets the scope's GO address, a client
    a uniformly random unused one from the client range."""
    if not group.contains(node):
        raise InvalidArgument(f"{node} is not in group {group.group_id}")
    scope = book.scope(group.group_id)
    leases = book.leases[group.group_id]
    if node in leases:
        return leases[node]
    if node == group.owner:
        addr = scope.go_address
    else:
        used = set(leases.values())
        free = [a for a in scope.client_addresses() if a not in used]
        if not free:
            raise ScopeExhausted(f"group {group.group_id}: all {len(scope.client_addresses())} client addresses in use")
        addr = free[int(rng.integers(len(free)))]
    leases[node] = addr
    return addr


@dataclass(frozen=True)
class Attachment:
    kind: InterfaceKind
    group_id: str
    scope: AddressScope
    address: IPv4Address


@dataclass(frozen=True)
class RoutingTable:
    node: str
    entries: tuple[Attachment, ...]

    def entry(self, kind: InterfaceKind) -> Attachment | None:
        for e in self.entries:
            if e.kind is kind:
                return e
        return None


def iface_for_role(role: Role) -> InterfaceKind:
    return InterfaceKind.WLAN if role is Role.LC else InterfaceKind.P2P


def routing_table(world: "World", node: str) -> RoutingTable:
    entries = []
    for gid in sorted(world.net.groups):
        group = world.net.groups[gid]
        if not group.contains(node):
            continue
        addr = world.book.address(gid, node)
        if addr is None:
            continue
        entries.append(Attachment(iface_for_role(group.role_of(node)), gid, world.book.scope(gid), addr))
    return RoutingTable(node, tuple(entries))


def route(table: RoutingTable, dest: IPv4Address, channel: Channel) -> InterfaceKind | None:
    """Interface a socket of kind ``channel`` would use to reach ``dest``; None if unreachable."""
    if channel.is_multicast:
        return channel.iface if table.entry(channel.iface) is not None else None
    wlan = table.entry(InterfaceKind.WLAN)
    p2p = table.entry(InterfaceKind.P2P)
    if wlan is not None and wlan.scope.contains(dest):
        return InterfaceKind.WLAN
    if p2p is not None and p2p.scope.contains(dest):
        return InterfaceKind.P2P
    return None


def forward_group(world: "World", a: str, b: str, channel: Channel) -> str | None:
    """Group whose link carries a packet from ``a`` to ``b``, or None if it goes astray."""
    table = routing_table(world, a)
    if channel.is_multicast:
        entry = table.entry(channel.iface)
        if entry is not None and world.net.groups[entry.group_id].contains(b):
            return entry.group_id
        return None
    for gid in sorted(world.net.groups):
        group = world.net.groups[gid]
        if not (group.contains(a) and group.contains(b)):
            continue
        dest = world.book.address(gid, b)
        if dest is None:
            continue
        iface = route(table, dest, channel)
        if iface is None:
            continue
        # the packet leaves on ``iface``; whoever holds ``dest`` on that subnet receives it
        gid_out = table.entry(iface).group_id
        if world.book.owner_of(gid_out, dest) == b:
            return gid_out
    return None


def _forward(world: "World", a: str, b: str, channel: Channel) -> bool:
    return forward_group(world, a, b, channel) is not None


def reachable(src: str, dst: str, channel: Channel, world: "World") -> bool:
    """Whether ``src`` can deliver to ``dst`` over ``channel`` in the current world.

    Only intragroup paths exist (client-client goes via the GO).  A stream
    also needs the reverse datagram path for its acknowledgements.
    """
    if src == dst:
        return True
    if not any(g.contains(src) and g.contains(dst) for g in world.net.groups.values()):
        return False
    if not _forward(world, src, dst, channel):
        return False
    if channel.kind == "stream":
        return _forward(world, dst, src, DATAGRAM)
    return True
