"""Delivery semantics of the three socket flavours.

Streams are reliable: retransmissions are folded into the effective link
throughput, so every byte arrives.  Datagrams and multicast lose each chunk
independently with the link's ``p_deliver`` and never retransmit.  Multicast
also runs at a reduced throughput because it is one-to-many unicast
underneath.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .addressing import forward_group, iface_for_role, reachable
from .channels import DATAGRAM, STREAM, Channel, InterfaceKind, link_kind, multicast
from .costmodel import CostParams, transfer_cost
from .errors import InvalidArgument, NoRoute, PreconditionViolated

__all__ = [
    "Payload",
    "DeliveryResult",
    "send",
    "broadcast_in_group",
    "Channel",
    "STREAM",
    "DATAGRAM",
    "multicast",
]


@dataclass(frozen=True)
class Payload:
    size_bytes: int
    chunk_bytes: int = 1400

    def __post_init__(self):
        if self.size_bytes < 0:
            raise InvalidArgument("payload size must be nonnegative")
        if self.chunk_bytes <= 0:
            raise InvalidArgument("chunk size must be positive")

    @property
    def n_chunks(self) -> int:
        return math.ceil(self.size_bytes / self.chunk_bytes)

    def chunk_sizes(self) -> np.ndarray:
        n = self.n_chunks
        sizes = np.full(n, self.chunk_bytes, dtype=np.int64)
        if n:
            sizes[-1] = self.size_bytes - self.chunk_bytes * (n - 1)
        return sizes


@dataclass(frozen=True)
class DeliveryResult:
    bytes_delivered: int
    duration_s: float
    energy_j: float
    hops: int = 1
    # per-chunk delivery flags (lossy channels only)
    mask: np.ndarray | None = field(default=None, repr=False, compare=False)


def _legs(world, src: str, dst: str, gid: str) -> list[InterfaceKind]:
    group = world.net.groups[gid]
    if src == group.owner:
        return [link_kind(group.role_of(dst))]
    if dst == group.owner:
        return [link_kind(group.role_of(src))]
    # client to client, relayed by the GO
    return [link_kind(group.role_of(src)), link_kind(group.role_of(dst))]


def send(
    src: str,
    dst: str,
    channel: Channel,
    payload: Payload,
    world,
    params: CostParams,
    rng,
    meter: str | None = None,
) -> DeliveryResult:
    """Move ``payload`` from ``src`` to ``dst``; ``energy_j`` is spent at ``meter`` (default ``src``)."""
    if not reachable(src, dst, channel, world):
        raise NoRoute(f"no {channel} route from {src} to {dst}")
    meter = src if meter is None else meter
    if src == dst:
        return DeliveryResult(payload.size_bytes, 0.0, 0.0, hops=0)
    gid = forward_group(world, src, dst, channel)
    legs = _legs(world, src, dst, gid)
    if payload.size_bytes == 0:
        return DeliveryResult(0, 0.0, 0.0, hops=len(legs))

    sizes = payload.chunk_sizes()
    mask = None
    if channel.kind != "stream":
        mask = np.ones(sizes.size, dtype=bool)
        for kind in legs:
            mask &= rng.random(sizes.size) < params.link(kind).p_deliver

    times = [transfer_cost(payload.size_bytes, params.link(k), channel, "tx")[0] for k in legs]
    energy = 0.0
    if meter == src:
        energy = params.link(legs[0]).tx_power_w * times[0]
    elif meter == dst:
        energy = params.link(legs[-1]).rx_power_w * times[-1]
    elif len(legs) == 2 and meter == world.net.groups[gid].owner:
        energy = params.link(legs[0]).rx_power_w * times[0] + params.link(legs[1]).tx_power_w * times[1]

    delivered = payload.size_bytes if mask is None else int(sizes[mask].sum())
    return DeliveryResult(delivered, math.fsum(times), energy, hops=len(legs), mask=mask)


def broadcast_in_group(
    src: str,
    group_id: str,
    channel: Channel,
    payload: Payload,
    world,
    params: CostParams,
    rng,
    meter: str | None = None,
) -> dict[str, DeliveryResult]:
    """One lossy delivery to every other member of ``group_id``.

    A GO reaches each client in one transmission.  A client's broadcast goes to
    the GO first and the GO re-sends what it received to the other clients.
    Chunk-loss draws are made per recipient in sorted node order.  Each
    result's ``energy_j`` is the energy at ``meter`` (default: that recipient).
    """
    if channel.kind == "stream":
        raise InvalidArgument("broadcast needs a datagram or multicast channel")
    group = world.net.groups.get(group_id)
    if group is None or not group.contains(src):
        raise PreconditionViolated(f"{src} is not in group {group_id}")
    if channel.is_multicast and channel.iface is not iface_for_role(group.role_of(src)):
        raise NoRoute(f"{src} has no {channel.iface} interface in group {group_id}")

    sizes = payload.chunk_sizes()
    n = sizes.size

    def airtime(nbytes: int, kind: InterfaceKind) -> float:
        return transfer_cost(nbytes, params.link(kind), channel, "tx")[0]

    def result(node, nbytes, duration, hops, mask, rx_kind, rx_time):
        if meter is None or meter == node:
            energy = params.link(rx_kind).rx_power_w * rx_time
        else:
            energy = sender_energy.get(meter, 0.0)
        return DeliveryResult(nbytes, duration, energy, hops=hops, mask=mask)

    out: dict[str, DeliveryResult] = {}
    sender_energy: dict[str, float] = {}
    if src == group.owner:
        members = sorted(group.members)
        kinds = {m: link_kind(group.role_of(m)) for m in members}
        masks = {m: rng.random(n) < params.link(kinds[m]).p_deliver for m in members}
        t = max((airtime(payload.size_bytes, k) for k in kinds.values()), default=0.0)
        slow = max(kinds.values(), key=lambda k: airtime(payload.size_bytes, k), default=None)
        sender_energy[src] = params.link(slow).tx_power_w * t if slow else 0.0
        for m in members:
            out[m] = result(m, int(sizes[masks[m]].sum()), t, 1, masks[m], kinds[m], t)
        return out

    owner = group.owner
    up = link_kind(group.role_of(src))
    go_mask = rng.random(n) < params.link(up).p_deliver
    t1 = airtime(payload.size_bytes, up)
    relayed = int(sizes[go_mask].sum())
    others = [m for m in sorted(group.members) if m != src]
    kinds = {m: link_kind(group.role_of(m)) for m in others}
    masks = {m: go_mask & (rng.random(n) < params.link(kinds[m]).p_deliver) for m in others}
    t2 = max((airtime(relayed, k) for k in kinds.values()), default=0.0)
    sender_energy[src] = params.link(up).tx_power_w * t1
    sender_energy[owner] = params.link(up).rx_power_w * t1 + max(
        (params.link(k).tx_power_w * airtime(relayed, k) for k in kinds.values()), default=0.0
    )
    out[owner] = result(owner, relayed, t1, 1, go_mask, up, t1)
    for m in others:
        out[m] = result(m, int(sizes[masks[m]].sum()), t1 + t2, 2, masks[m], kinds[m], t2)
    return out
