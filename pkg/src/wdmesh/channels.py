"""Interface and channel kinds shared by addressing, transport and the cost model."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class InterfaceKind(str, Enum):
    WLAN = "wlan"  # plain WiFi association (the gateway acting as LC)
    P2P = "p2p"  # WiFi Direct interface (GO or GM)

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Channel:
    """Socket flavour: ``stream``, ``datagram`` or interface-bound ``multicast``."""

    kind: str
    iface: InterfaceKind | None = None

    def __post_init__(self):
        if self.kind not in ("stream", "datagram", "multicast"):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if (self.kind == "multicast") != (self.iface is not None):
            raise ValueError("a multicast channel is bound to exactly one interface")
        if self.iface is not None:
            object.__setattr__(self, "iface", InterfaceKind(self.iface))

    @property
    def is_multicast(self) -> bool:
        return self.kind == "multicast"

    @property
    def is_unicast(self) -> bool:
        return self.kind != "multicast"

    def __str__(self) -> str:
        return f"multicast[{self.iface}]" if self.iface else self.kind


STREAM = Channel("stream")
DATAGRAM = Channel("datagram")


def multicast(iface: InterfaceKind | str) -> Channel:
    return Channel("multicast", InterfaceKind(iface))


def link_kind(client_role) -> InterfaceKind:
    """The link between a GO and one client is WLAN for an LC and P2P for a GM."""
    return InterfaceKind.WLAN if str(client_role) == "LC" else InterfaceKind.P2P
