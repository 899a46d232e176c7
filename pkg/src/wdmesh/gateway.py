"""Gateway relay strategies.

Each strategy moves one payload from the peer in the source group to the
peer in the destination group through the gateway node ``gw`` and returns a
TransferReport.  Strategies are generators driven by the event kernel; world
mutations (attach, detach) happen at the simulated instant they take effect.

time_sharing     disconnect, scan and reconnect between the two groups
udp_multicast    simultaneous LC + GM attachment, interface-bound multicast,
                 chunks forwarded as they arrive
hybrid           multicast control channel, reliable stream relay, with a
                 GM/LC -> LC/GM reconfiguration when needed
non_stock        unique GO addresses, streams over both links at once
relay_assisted   GO in one group + LC in the other, an extra relay client per
                 group and a lossy broadcast into the owned group
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .addressing import iface_for_role, reachable
from .channels import STREAM, multicast
from .costmodel import CostParams, PhaseName, sample_phase
from .errors import ConfigRejected, ControlTimeout, NoRoute, PreconditionViolated
from .sim import Simulator
from .topology import GatewayConfig, Mode, Role, Stack, check_config
from .transport import Payload, broadcast_in_group, send
from .world import World

TIME_SHARING = "time_sharing"
UDP_MULTICAST = "udp_multicast"
HYBRID = "hybrid"
NON_STOCK = "non_stock"
RELAY_ASSISTED = "relay_assisted"
STRATEGIES = (TIME_SHARING, UDP_MULTICAST, HYBRID, NON_STOCK, RELAY_ASSISTED)

GATEWAY = "gw"
PEERS = {"A": "node_a", "B": "node_b"}
RELAYS = {"A": "relay_a", "B": "relay_b"}

_DATA_PHASES = (PhaseName.RX, PhaseName.TX)


@dataclass(frozen=True)
class Phase:
    name: PhaseName
    duration_s: float
    energy_j: float
    parts: tuple["Phase", ...] = ()

    def __post_init__(self):
        if self.duration_s < 0 or self.energy_j < 0:
            raise ValueError(f"{self.name}: negative duration or energy")

    @classmethod
    def sampled(cls, name: PhaseName, params: CostParams, rng, **kw) -> "Phase":
        s = sample_phase(name, params, rng, **kw)
        return cls(name, s.duration_s, s.energy_j)

    @classmethod
    def combine(cls, name: PhaseName, parts: Sequence["Phase"]) -> "Phase":
        return cls(
            name,
            math.fsum(p.duration_s for p in parts),
            math.fsum(p.energy_j for p in parts),
            tuple(parts),
        )


@dataclass(frozen=True)
class ControlMessage:
    kind: str  # SendRequest | Ready | Reconfiguring
    source_group: str | None = None
    size_bytes: int | None = None

    def __str__(self) -> str:
        return self.kind


@dataclass(frozen=True)
class Session:
    payload_bytes: int = 10_000_000
    source: str = "A"

    def __post_init__(self):
        if self.source not in ("A", "B"):
            raise ValueError("session source must be 'A' or 'B'")
        if self.payload_bytes < 0:
            raise ValueError("payload must be nonnegative")

    @property
    def dest(self) -> str:
        return "B" if self.source == "A" else "A"

    def reversed(self) -> "Session":
        return Session(self.payload_bytes, self.dest)


@dataclass(frozen=True)
class TransferReport:
    strategy: str
    config: GatewayConfig
    source: str
    phases: tuple[Phase, ...]
    trace: tuple[str, ...]
    payload_bytes: int
    bytes_delivered: int
    reconfig_count: int
    hops: int
    t_total: float
    e_total: float
    airtime: dict = field(default_factory=dict, compare=False)

    @classmethod
    def build(cls, strategy, config, session, items, result) -> "TransferReport":
        phases = tuple(it for it in items if isinstance(it, Phase))
        return cls(
            strategy=strategy,
            config=config,
            source=session.source,
            phases=phases,
            trace=tuple(str(it.name) if isinstance(it, Phase) else str(it) for it in items),
            payload_bytes=session.payload_bytes,
            bytes_delivered=result["bytes"],
            reconfig_count=result.get("reconfig", 0),
            hops=result.get("hops", 2),
            t_total=math.fsum(p.duration_s for p in phases),
            e_total=math.fsum(p.energy_j for p in phases),
            airtime=result.get("airtime", {}),
        )

    def _sum(self, attr: str, names) -> float:
        return math.fsum(getattr(p, attr) for p in self.phases if p.name in names)

    def _sum_not(self, attr: str, names) -> float:
        return math.fsum(getattr(p, attr) for p in self.phases if p.name not in names)

    @property
    def t_rx(self) -> float:
        return self._sum("duration_s", (PhaseName.RX,))

    @property
    def t_tx(self) -> float:
        return self._sum("duration_s", (PhaseName.TX,))

    @property
    def t_switch(self) -> float:
        """Everything that is not reception or transmission of the payload."""
        return self._sum_not("duration_s", _DATA_PHASES)

    @property
    def e_rx(self) -> float:
        return self._sum("energy_j", (PhaseName.RX,))

    @property
    def e_tx(self) -> float:
        return self._sum("energy_j", (PhaseName.TX,))

    @property
    def e_switch(self) -> float:
        return self._sum_not("energy_j", _DATA_PHASES)

    @property
    def delivery_ratio(self) -> float:
        return self.bytes_delivered / self.payload_bytes if self.payload_bytes else 1.0

    def phase_names(self) -> tuple[str, ...]:
        return tuple(str(p.name) for p in self.phases)

    def protocol_trace(self) -> tuple[str, ...]:
        """Control messages plus the data-plane steps (Rx, Disconnect, Tx)."""
        keep = {"SendRequest", "Ready", "Reconfiguring", "Rx", "Disconnect", "Tx"}
        return tuple(t for t in self.trace if t in keep)


# --------------------------------------------------------------------------
# World construction
# --------------------------------------------------------------------------

def build_world(cfg: GatewayConfig, strategy: str, source: str, rng, relays: bool | None = None) -> World:
    """Two groups A and B, their peers, and the gateway attached as the strategy starts.

    A time-sharing gateway starts attached to the source group only; every
    other strategy starts attached to both groups.  A group the gateway owns
    exists only while the gateway is attached to it.
    """
    if relays is None:
        relays = strategy == RELAY_ASSISTED
    world = World(cfg.stack)
    world.add_node(GATEWAY)
    for side in "AB":
        world.add_node(PEERS[side])
        if relays:
            world.add_node(RELAYS[side])
    world.register_group("A", 0)
    world.register_group("B", 1)
    for side in "AB":
        attached = strategy != TIME_SHARING or side == source
        role = cfg.role(side)
        if role is Role.GO:
            if not attached:
                continue
            world.create_group(GATEWAY, side, rng)
            world.connect(PEERS[side], side, cfg.peer_role(side), rng)
        else:
            world.create_group(PEERS[side], side, rng)
            if attached:
                world.connect(GATEWAY, side, role, rng)
        if relays:
            world.connect(RELAYS[side], side, Role.GM, rng)
    return world


# --------------------------------------------------------------------------
# Strategies
# --------------------------------------------------------------------------

@dataclass
class Context:
    cfg: GatewayConfig
    session: Session
    world: World
    params: CostParams
    rng: np.random.Generator

    @property
    def payload(self) -> Payload:
        return Payload(self.session.payload_bytes, self.params.chunk_bytes)


def _need_roles(cfg: GatewayConfig, wanted: set[Role], strategy: str) -> None:
    if {cfg.role_in_a, cfg.role_in_b} != wanted or cfg.role_in_a == cfg.role_in_b:
        names = "/".join(sorted(r.value for r in wanted))
        raise ConfigRejected(f"{strategy} needs one {names.replace('/', ' and one ')} attachment, got {cfg.pair}")


def _connect_phase(ctx: Context, group: str, prev_role: Role) -> Iterator[Phase]:
    """Attach the gateway to ``group`` in its configured role (creating the group if GO)."""
    role = ctx.cfg.role(group)
    kw = dict(prev_role=prev_role, next_role=role)
    if role is Role.LC:
        yield Phase.sampled(PhaseName.CONNECT_LC, ctx.params, ctx.rng, **kw)
        ctx.world.connect(GATEWAY, group, Role.LC, ctx.rng)
    elif role is Role.GM:
        yield Phase.sampled(PhaseName.CONNECT_GM, ctx.params, ctx.rng, **kw)
        ctx.world.connect(GATEWAY, group, Role.GM, ctx.rng)
    else:
        peer_role = ctx.cfg.peer_role(group)
        yield Phase.sampled(PhaseName.CREATE_GO, ctx.params, ctx.rng, peer_role=peer_role, **kw)
        # the peer keeps scanning and joins as soon as the group is advertised
        ctx.world.create_group(GATEWAY, group, ctx.rng)
        ctx.world.connect(PEERS[group], group, peer_role, ctx.rng)


def _disconnect(ctx: Context, group: str) -> Phase:
    ctx.world.disconnect(GATEWAY, group)
    return Phase.sampled(PhaseName.DISCONNECT, ctx.params, ctx.rng)


def _stream(ctx: Context, src: str, dst: str, payload: Payload, name: PhaseName):
    res = send(src, dst, STREAM, payload, ctx.world, ctx.params, ctx.rng, meter=GATEWAY)
    return res, Phase(name, res.duration_s, res.energy_j)


def time_sharing(ctx: Context):
    src, dst = ctx.session.source, ctx.session.dest
    rx, phase = _stream(ctx, PEERS[src], GATEWAY, ctx.payload, PhaseName.RX)
    yield phase
    yield _disconnect(ctx, src)
    yield Phase.sampled(PhaseName.SCAN, ctx.params, ctx.rng)
    yield from _connect_phase(ctx, dst, ctx.cfg.role(src))
    tx, phase = _stream(ctx, GATEWAY, PEERS[dst], Payload(rx.bytes_delivered, ctx.params.chunk_bytes), PhaseName.TX)
    yield phase
    return {"bytes": tx.bytes_delivered, "hops": 2}


def pipeline_finish(arrivals: np.ndarray, service: np.ndarray) -> float:
    """Completion time of a FIFO forwarder: chunk i arrives at ``arrivals[i]``
    and needs ``service[i]`` seconds on the outgoing link."""
    if arrivals.size == 0:
        return 0.0
    tail = np.cumsum(service[::-1])[::-1]
    return float(np.max(arrivals + tail))


def udp_multicast(ctx: Context):
    src, dst = ctx.session.source, ctx.session.dest
    world, params, payload = ctx.world, ctx.params, ctx.payload
    src_group, dst_group = world.group(src), world.group(dst)
    peer_src, peer_dst = PEERS[src], PEERS[dst]
    in_ch = multicast(iface_for_role(src_group.role_of(peer_src)))
    out_ch = multicast(iface_for_role(dst_group.role_of(GATEWAY)))

    rx = send(peer_src, GATEWAY, in_ch, payload, world, params, ctx.rng, meter=GATEWAY)
    sizes = payload.chunk_sizes()
    got = rx.mask if rx.mask is not None else np.ones(sizes.size, dtype=bool)
    fwd = Payload(int(sizes[got].sum()), params.chunk_bytes)
    tx = send(GATEWAY, peer_dst, out_ch, fwd, world, params, ctx.rng, meter=GATEWAY)

    # chunks are forwarded on the second interface while reception continues
    in_link = params.link(iface_for_role(src_group.role_of(GATEWAY)))
    out_link = params.link(out_ch.iface)
    rx_rate = in_link.throughput_bps * in_link.multicast_penalty
    tx_rate = out_link.throughput_bps * out_link.multicast_penalty
    arrivals = np.cumsum(sizes * 8 / rx_rate)
    finish = pipeline_finish(arrivals[got], sizes[got] * 8 / tx_rate)
    rx_end = float(arrivals[-1]) if arrivals.size else 0.0
    yield Phase(PhaseName.RX, rx.duration_s, rx.energy_j)
    yield Phase(PhaseName.TX, max(0.0, finish - rx_end), tx.energy_j)
    return {
        "bytes": tx.bytes_delivered,
        "hops": 2,
        "airtime": {"rx": rx.duration_s, "tx": tx.duration_s},
    }


def hybrid(ctx: Context):
    src, dst = ctx.session.source, ctx.session.dest
    world, params, rng = ctx.world, ctx.params, ctx.rng
    peer_src, peer_dst = PEERS[src], PEERS[dst]
    ctrl = multicast(iface_for_role(world.group(src).role_of(peer_src)))
    if not reachable(peer_src, GATEWAY, ctrl, world):
        raise NoRoute(f"control channel from {peer_src} to the gateway is down")

    yield ControlMessage("SendRequest", src, ctx.session.payload_bytes)
    attempts = int(params.control_timeout_s // params.control_retry_s) + 1
    lost = 0
    while float(rng.random()) >= params.control_p_deliver:
        lost += 1
        if lost >= attempts:
            raise ControlTimeout(
                f"no control reply within {params.control_timeout_s} s ({attempts} attempts lost)"
            )
    base = Phase.sampled(PhaseName.CONTROL_EXCHANGE, params, rng)
    pc = params.phase(PhaseName.CONTROL_EXCHANGE)
    yield Phase(
        PhaseName.CONTROL_EXCHANGE,
        base.duration_s + lost * params.control_retry_s,
        base.energy_j + lost * pc.base_j,
    )

    reconfig = 0
    if ctx.cfg.role(src) is Role.LC:
        yield ControlMessage("Ready", src)
    else:
        yield ControlMessage("Reconfiguring", src)
        parts = [_disconnect(ctx, src), _disconnect(ctx, dst)]
        parts.append(Phase.sampled(PhaseName.CONNECT_LC, params, rng, prev_role=Role.GM, next_role=Role.LC))
        parts.append(Phase.sampled(PhaseName.CONNECT_GM, params, rng, prev_role=Role.LC, next_role=Role.GM))
        yield Phase.combine(PhaseName.RECONFIGURE, parts)
        world.connect(GATEWAY, src, Role.LC, rng)
        world.connect(GATEWAY, dst, Role.GM, rng)
        yield ControlMessage("Ready", src)
        reconfig = 1

    rx, phase = _stream(ctx, peer_src, GATEWAY, ctx.payload, PhaseName.RX)
    yield phase
    yield _disconnect(ctx, src)
    tx, phase = _stream(ctx, GATEWAY, peer_dst, Payload(rx.bytes_delivered, params.chunk_bytes), PhaseName.TX)
    yield phase
    return {"bytes": tx.bytes_delivered, "hops": 2, "reconfig": reconfig}


def non_stock(ctx: Context):
    src, dst = ctx.session.source, ctx.session.dest
    rx, phase = _stream(ctx, PEERS[src], GATEWAY, ctx.payload, PhaseName.RX)
    yield phase
    tx, phase = _stream(ctx, GATEWAY, PEERS[dst], Payload(rx.bytes_delivered, ctx.params.chunk_bytes), PhaseName.TX)
    yield phase
    return {"bytes": tx.bytes_delivered, "hops": 2}


def relay_assisted(ctx: Context):
    src, dst = ctx.session.source, ctx.session.dest
    world, params, rng = ctx.world, ctx.params, ctx.rng
    for side in "AB":
        group = world.group(side)
        if group is None or not group.contains(RELAYS[side]) or RELAYS[side] == group.owner:
            raise PreconditionViolated(f"group {side} has no relay client")
    peer_src, peer_dst = PEERS[src], PEERS[dst]

    if ctx.cfg.role(src) is Role.LC:
        hop, phase = _stream(ctx, peer_src, RELAYS[src], ctx.payload, PhaseName.RELAY_HOP)
        yield phase
        rx, phase = _stream(ctx, RELAYS[src], GATEWAY, ctx.payload, PhaseName.RX)
        yield phase
        received = rx.bytes_delivered
    else:
        ch = multicast(iface_for_role(world.group(src).role_of(peer_src)))
        res = broadcast_in_group(peer_src, src, ch, ctx.payload, world, params, rng, meter=GATEWAY)
        got = res[GATEWAY]
        yield Phase(PhaseName.RX, got.duration_s, got.energy_j)
        received = got.bytes_delivered

    fwd = Payload(received, params.chunk_bytes)
    if ctx.cfg.role(dst) is Role.GO:
        res = broadcast_in_group(GATEWAY, dst, multicast("p2p"), fwd, world, params, rng, meter=GATEWAY)
        out = res[peer_dst]
        yield Phase(PhaseName.TX, out.duration_s, out.energy_j)
        delivered = out.bytes_delivered
    else:
        tx, phase = _stream(ctx, GATEWAY, RELAYS[dst], fwd, PhaseName.TX)
        yield phase
        hop, phase = _stream(ctx, RELAYS[dst], peer_dst, fwd, PhaseName.RELAY_HOP)
        yield phase
        delivered = hop.bytes_delivered
    return {"bytes": delivered, "hops": 3}


_GENERATORS = {
    TIME_SHARING: time_sharing,
    UDP_MULTICAST: udp_multicast,
    HYBRID: hybrid,
    NON_STOCK: non_stock,
    RELAY_ASSISTED: relay_assisted,
}


def check_strategy(strategy: str, cfg: GatewayConfig) -> None:
    """Raise ConfigRejected unless ``cfg`` suits ``strategy``."""
    if strategy not in _GENERATORS:
        raise ConfigRejected(f"unknown strategy {strategy!r}; choose from {', '.join(STRATEGIES)}")
    check_config(cfg)
    if strategy == TIME_SHARING:
        if cfg.mode is not Mode.TIME_SHARING:
            raise ConfigRejected("time_sharing needs mode time_sharing")
        return
    if cfg.mode is not Mode.SIMULTANEOUS:
        raise ConfigRejected(f"{strategy} needs mode simultaneous")
    if strategy == NON_STOCK:
        if cfg.stack is not Stack.NON_STOCK:
            raise ConfigRejected("non_stock needs the non-stock stack (unique GO addresses)")
        return
    if strategy == HYBRID and cfg.stack is not Stack.STOCK:
        raise ConfigRejected("hybrid runs on the stock stack")
    if strategy in (UDP_MULTICAST, HYBRID):
        _need_roles(cfg, {Role.LC, Role.GM}, strategy)
    if strategy == RELAY_ASSISTED:
        _need_roles(cfg, {Role.GO, Role.LC}, strategy)


def session_process(strategy: str, cfg: GatewayConfig, session: Session, world: World, params: CostParams, rng):
    """Generator for one session; its return value is the TransferReport."""
    check_strategy(strategy, cfg)
    ctx = Context(cfg, session, world, params, rng)
    items = []
    gen = _GENERATORS[strategy](ctx)
    try:
        while True:
            item = next(gen)
            items.append(item)
            yield item
    except StopIteration as stop:
        return TransferReport.build(strategy, cfg, session, items, stop.value)


def run_strategy(
    strategy: str,
    cfg: GatewayConfig,
    session: Session,
    world: World | None,
    params: CostParams,
    rng,
    sim: Simulator | None = None,
) -> TransferReport:
    check_strategy(strategy, cfg)
    if world is None:
        world = build_world(cfg, strategy, session.source, rng)
    if sim is None:
        sim = Simulator(world)
    elif sim.world is None:
        sim.world = world
    proc = sim.spawn(session_process(strategy, cfg, session, world, params, rng), strategy)
    sim.run_until_idle()
    return proc.result


def run_time_sharing(cfg, session, world, params, rng) -> TransferReport:
    return run_strategy(TIME_SHARING, cfg, session, world, params, rng)


def run_udp_multicast(cfg, session, world, params, rng) -> TransferReport:
    return run_strategy(UDP_MULTICAST, cfg, session, world, params, rng)


def run_hybrid(cfg, session, world, params, rng) -> TransferReport:
    return run_strategy(HYBRID, cfg, session, world, params, rng)


def run_non_stock(cfg, session, world, params, rng) -> TransferReport:
    return run_strategy(NON_STOCK, cfg, session, world, params, rng)


def run_relay_assisted(cfg, session, world, params, rng) -> TransferReport:
    return run_strategy(RELAY_ASSISTED, cfg, session, world, params, rng)


def select_hybrid_gateway(cfgs: Sequence[GatewayConfig], source: str) -> GatewayConfig:
    """Among deployed gateways prefer one that is already LC in the source group."""
    if not cfgs:
        raise PreconditionViolated("no gateway deployed")
    for cfg in cfgs:
        if cfg.role(source) is Role.LC:
            return cfg
    return cfgs[0]


def run_hybrid_pair(cfgs: Sequence[GatewayConfig], session: Session, params: CostParams, rng) -> TransferReport:
    cfg = select_hybrid_gateway(cfgs, session.source)
    return run_strategy(HYBRID, cfg, session, None, params, rng)


def run_continuous(
    strategy: str,
    cfg: GatewayConfig,
    sessions: Sequence[Session],
    params: CostParams,
    rng,
) -> tuple[list[TransferReport], TransferReport]:
    """Back-to-back sessions on one world and clock.

    Returns the per-session reports and one combined report whose phases are
    all sessions' phases in order.
    """
    if not sessions:
        raise ValueError("at least one session")
    check_strategy(strategy, cfg)
    world = build_world(cfg, strategy, sessions[0].source, rng)
    sim = Simulator(world)

    def chain():
        reports = []
        for s in sessions:
            rep = yield from session_process(strategy, cfg, s, world, params, rng)
            reports.append(rep)
        return reports

    proc = sim.spawn(chain(), "continuous")
    sim.run_until_idle()
    reports = proc.result
    phases = tuple(p for r in reports for p in r.phases)
    combined = TransferReport(
        strategy=strategy,
        config=cfg,
        source=sessions[0].source,
        phases=phases,
        trace=tuple(t for r in reports for t in r.trace),
        payload_bytes=sum(r.payload_bytes for r in reports),
        bytes_delivered=sum(r.bytes_delivered for r in reports),
        reconfig_count=sum(r.reconfig_count for r in reports),
        hops=max(r.hops for r in reports),
        t_total=math.fsum(p.duration_s for p in phases),
        e_total=math.fsum(p.energy_j for p in phases),
    )
    return reports, combined
