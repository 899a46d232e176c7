"""Simulation world: the group topology plus the address book kept in step with it."""

from __future__ import annotations

from .addressing import AddressBook, assign_address, iface_for_role, routing_table
from .channels import InterfaceKind
from .topology import Group, Network, Role, Stack


class World:
    def __init__(self, stack: Stack = Stack.STOCK):
        self.stack = Stack(stack)
        self.net = Network()
        self.book = AddressBook(self.stack)

    @property
    def clock(self) -> float:
        return self.net.clock

    @clock.setter
    def clock(self, t: float) -> None:
        self.net.clock = t

    def add_node(self, node_id: str, intent: int = 7, tie_breaker: bool = False) -> None:
        self.net.add_node(node_id, intent, tie_breaker)

    def register_group(self, group_id: str, index: int) -> None:
        self.book.register(group_id, index)

    def create_group(self, owner: str, group_id: str, rng) -> Group:
        group = self.net.create_group(owner, group_id)
        self.book.scope(group_id)
        assign_address(self.book, group, owner, rng)
        return group

    def connect(self, node: str, group_id: str, role: Role, rng) -> Group:
        group = self.net.attach(node, group_id, Role(role))
        assign_address(self.book, group, node, rng)
        return group

    def disconnect(self, node: str, group_id: str) -> None:
        group = self.net.groups[group_id]
        if node == group.owner:
            self.net.teardown(group_id)
            self.book.drop(group_id)
        else:
            self.net.detach(node, group_id)
            self.book.release(group_id, node)

    def roles_of(self, node: str) -> dict[str, Role]:
        return self.net.roles_of(node)

    def interfaces(self, node: str) -> dict[InterfaceKind, str]:
        """Live interfaces of ``node`` mapped to the group each is attached to."""
        return {iface_for_role(r): gid for gid, r in self.roles_of(node).items()}

    def routing_table(self, node: str):
        return routing_table(self, node)

    def group(self, group_id: str) -> Group | None:
        return self.net.groups.get(group_id)
