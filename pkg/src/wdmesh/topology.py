"""Devices, WiFi Direct roles, groups and the three group-formation procedures.

A group is strictly 1:N: one Group Owner (GO) and a set of clients, each
either a Group Member (GM, speaks WiFi Direct) or a Legacy Client (LC, plain
WiFi association to the GO's soft AP).  Roles are fixed for the lifetime of a
group membership; changing role means leaving and re-joining.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Mapping

from .costmodel import CostParams, CostSample, sample_phase
from .errors import (
    AlreadyMember,
    ConfigRejected,
    ConnectionRefused,
    InvalidArgument,
    MissingCredentials,
    PreconditionViolated,
)

INTENT_MIN = 0
INTENT_MAX = 15


class Role(str, Enum):
    GO = "GO"
    GM = "GM"
    LC = "LC"
    DETACHED = "Detached"

    def __str__(self) -> str:
        return self.value

    @property
    def is_p2p(self) -> bool:
        return self in (Role.GO, Role.GM)


class FormationMode(str, Enum):
    STANDARD = "standard"
    PERSISTENT = "persistent"
    AUTONOMOUS = "autonomous"


class Mode(str, Enum):
    TIME_SHARING = "time_sharing"
    SIMULTANEOUS = "simultaneous"


class Stack(str, Enum):
    STOCK = "stock"
    NON_STOCK = "nonstock"


def check_intent(value: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidArgument(f"intent must be an integer, got {value!r}")
    if not INTENT_MIN <= value <= INTENT_MAX:
        raise InvalidArgument(f"intent {value} outside [{INTENT_MIN}, {INTENT_MAX}]")
    return value


def negotiate_go(intent_a: int, intent_b: int, tie_breaker_a: bool) -> str:
    """Return ``"A"`` or ``"B"``: the side that becomes Group Owner.

    Highest intent wins; equal intents are settled by the tie-breaker bit.
    """
    check_intent(intent_a)
    check_intent(intent_b)
    if intent_a != intent_b:
        return "A" if intent_a > intent_b else "B"
    return "A" if tie_breaker_a else "B"


@dataclass
class NodeState:
    node_id: str
    intent: int = 7
    tie_breaker: bool = False

    def __post_init__(self):
        check_intent(self.intent)


@dataclass
class Group:
    group_id: str
    owner: str
    ssid: str
    persistent: bool = True
    _members: dict[str, Role] = field(default_factory=dict, repr=False)

    @property
    def members(self) -> Mapping[str, Role]:
        return MappingProxyType(self._members)

    def contains(self, node: str) -> bool:
        return node == self.owner or node in self._members

    def role_of(self, node: str) -> Role:
        if node == self.owner:
            return Role.GO
        return self._members.get(node, Role.DETACHED)

    def nodes(self) -> list[str]:
        return [self.owner, *sorted(self._members)]

    def add_member(self, node: str, role: Role) -> None:
        if role not in (Role.GM, Role.LC):
            raise InvalidArgument(f"clients join as GM or LC, not {role}")
        if node == self.owner:
            raise AlreadyMember(f"{node} owns group {self.group_id} and cannot be its own client")
        if node in self._members:
            raise AlreadyMember(f"{node} is already {self._members[node]} of group {self.group_id}")
        self._members[node] = role

    def remove_member(self, node: str) -> Role:
        return self._members.pop(node)


@dataclass(frozen=True)
class CredentialRecord:
    """Stored persistent-group credentials: who owned the group and in which roles."""

    group_id: str
    owner: str
    ssid: str
    members: tuple[tuple[str, Role], ...]

    def involves(self, node: str) -> bool:
        return node == self.owner or any(n == node for n, _ in self.members)


@dataclass(frozen=True)
class AttachmentEvent:
    time_s: float
    node: str
    group_id: str
    role: Role
    action: str  # "attach" | "detach"


class Network:
    """Mutable registry of nodes, live groups and stored credentials.

    Every attach/detach is appended to ``log`` stamped with ``clock``; the
    engine advances ``clock`` as simulated time passes.
    """

    def __init__(self):
        self.nodes: dict[str, NodeState] = {}
        self.groups: dict[str, Group] = {}
        self.credentials: dict[str, CredentialRecord] = {}
        self.log: list[AttachmentEvent] = []
        self.clock = 0.0
        self._next_group = 1

    def add_node(self, node_id: str, intent: int = 7, tie_breaker: bool = False) -> NodeState:
        if node_id in self.nodes:
            raise InvalidArgument(f"duplicate node id {node_id!r}")
        state = NodeState(node_id, intent, tie_breaker)
        self.nodes[node_id] = state
        return state

    def _require_node(self, node: str) -> None:
        if node not in self.nodes:
            raise InvalidArgument(f"unknown node {node!r}")

    def roles_of(self, node: str) -> dict[str, Role]:
        return {
            gid: g.role_of(node) for gid, g in self.groups.items() if g.contains(node)
        }

    def owned_group(self, node: str) -> Group | None:
        for g in self.groups.values():
            if g.owner == node:
                return g
        return None

    def _check_interface_free(self, node: str, role: Role) -> None:
        # one P2P attachment (GO or GM) and one WLAN attachment (LC) per node
        for gid, held in self.roles_of(node).items():
            if held.is_p2p and role.is_p2p:
                raise ConnectionRefused(
                    f"{node} is already {held} of group {gid}; no second WiFi Direct interface"
                )
            if held is Role.LC and role is Role.LC:
                raise ConnectionRefused(f"{node} is already LC of group {gid}")

    def create_group(self, owner: str, group_id: str | None = None, persistent: bool = True) -> Group:
        self._require_node(owner)
        self._check_interface_free(owner, Role.GO)
        if group_id is None:
            while f"g{self._next_group}" in self.groups:
                self._next_group += 1
            group_id = f"g{self._next_group}"
            self._next_group += 1
        if group_id in self.groups:
            raise InvalidArgument(f"group {group_id} already exists")
        group = Group(group_id, owner, ssid=f"DIRECT-{group_id}-{owner}", persistent=persistent)
        self.groups[group_id] = group
        self.log.append(AttachmentEvent(self.clock, owner, group_id, Role.GO, "attach"))
        self._remember(group)
        return group

    def attach(self, node: str, group_id: str, role: Role) -> Group:
        self._require_node(node)
        group = self.groups.get(group_id)
        if group is None:
            raise PreconditionViolated(f"group {group_id} does not exist")
        if group.contains(node):
            raise AlreadyMember(f"{node} is already {group.role_of(node)} of group {group_id}")
        self._check_interface_free(node, role)
        group.add_member(node, role)
        self.log.append(AttachmentEvent(self.clock, node, group_id, role, "attach"))
        self._remember(group)
        return group

    def detach(self, node: str, group_id: str) -> None:
        """Leave a group; an owner leaving tears the whole group down."""
        group = self.groups[group_id]
        if node == group.owner:
            self.teardown(group_id)
            return
        role = group.remove_member(node)
        self.log.append(AttachmentEvent(self.clock, node, group_id, role, "detach"))

    def teardown(self, group_id: str) -> None:
        group = self.groups.pop(group_id)
        for node in sorted(group.members):
            role = group.remove_member(node)
            self.log.append(AttachmentEvent(self.clock, node, group_id, role, "detach"))
        self.log.append(AttachmentEvent(self.clock, group.owner, group_id, Role.GO, "detach"))

    def _remember(self, group: Group) -> None:
        if not group.persistent:
            return
        old = self.credentials.get(group.group_id)
        members = dict(old.members) if old and old.owner == group.owner else {}
        members.update(group.members)
        self.credentials[group.group_id] = CredentialRecord(
            group.group_id, group.owner, group.ssid, tuple(sorted(members.items()))
        )

    def find_credentials(self, a: str, b: str, group_id: str | None = None) -> CredentialRecord | None:
        if group_id is not None:
            rec = self.credentials.get(group_id)
            return rec if rec and rec.involves(a) and rec.involves(b) else None
        for gid in sorted(self.credentials):
            rec = self.credentials[gid]
            if rec.involves(a) and rec.involves(b):
                return rec
        return None


def form_group(
    net: Network,
    mode: FormationMode,
    initiator: str,
    responder: str | None = None,
    *,
    params: CostParams,
    rng,
    group_id: str | None = None,
) -> tuple[Group, list[CostSample]]:
    """Run one group-formation procedure and return the group plus its cost phases.

    Standard negotiates the owner by intent (or joins an existing GO), then
    provisions and assigns addresses.  Persistent re-forms a remembered group
    through an invitation and reduced provisioning.  Autonomous makes the
    initiator a GO with no clients.
    """
    mode = FormationMode(mode)
    net._require_node(initiator)

    if mode is FormationMode.AUTONOMOUS:
        if responder is not None:
            raise InvalidArgument("autonomous formation takes no responder")
        group = net.create_group(initiator, group_id)
        return group, [sample_phase("autonomous_creation", params, rng)]

    if responder is None:
        raise InvalidArgument(f"{mode.value} formation requires a responder")
    net._require_node(responder)
    if responder == initiator:
        raise InvalidArgument("a node cannot form a group with itself")

    if mode is FormationMode.PERSISTENT:
        rec = net.find_credentials(initiator, responder, group_id)
        if rec is None:
            raise MissingCredentials(f"no stored credentials shared by {initiator} and {responder}")
        if rec.group_id in net.groups:
            raise PreconditionViolated(f"group {rec.group_id} is already live")
        group = net.create_group(rec.owner, rec.group_id)
        stored = dict(rec.members)
        for node in (initiator, responder):
            if node != rec.owner:
                net.attach(node, rec.group_id, stored[node])
        costs = [
            sample_phase("invitation", params, rng),
            sample_phase("wps_reduced", params, rng),
            sample_phase("address_assignment", params, rng),
        ]
        return group, costs

    # Standard formation
    for gid, role in net.roles_of(responder).items():
        if role is Role.GM:
            raise ConnectionRefused(f"{responder} is GM of group {gid}; the connection is refused")

    existing = net.owned_group(responder) or net.owned_group(initiator)
    if existing is not None:
        joiner = initiator if existing.owner == responder else responder
        net.attach(joiner, existing.group_id, Role.GM)
        costs = [
            sample_phase("wps_provision", params, rng),
            sample_phase("address_assignment", params, rng),
        ]
        return existing, costs

    a, b = net.nodes[initiator], net.nodes[responder]
    costs = [sample_phase("go_negotiation", params, rng)]
    winner = negotiate_go(a.intent, b.intent, a.tie_breaker)
    owner, client = (initiator, responder) if winner == "A" else (responder, initiator)
    group = net.create_group(owner, group_id)
    net.attach(client, group.group_id, Role.GM)
    costs.append(sample_phase("wps_provision", params, rng))
    costs.append(sample_phase("address_assignment", params, rng))
    return group, costs


def join_as_lc(net: Network, node: str, group_id: str) -> Group:
    """Associate ``node`` to the group's soft AP as a Legacy Client."""
    return net.attach(node, group_id, Role.LC)


def join_as_gm(net: Network, node: str, group_id: str) -> Group:
    return net.attach(node, group_id, Role.GM)


_GATEWAY_ROLES = (Role.GO, Role.GM, Role.LC)


def _default_peer(role: Role) -> Role:
    return Role.GM if role is Role.GO else Role.GO


@dataclass(frozen=True)
class GatewayConfig:
    """Gateway roles in groups A and B, the peers' roles, and how it bridges them.

    ``peer_a_role`` is the role of Node A in group A (GO when the gateway is a
    client there, a client role when the gateway owns the group).
    """

    role_in_a: Role
    role_in_b: Role
    peer_a_role: Role | None = None
    peer_b_role: Role | None = None
    mode: Mode = Mode.TIME_SHARING
    stack: Stack = Stack.STOCK

    def __post_init__(self):
        object.__setattr__(self, "role_in_a", Role(self.role_in_a))
        object.__setattr__(self, "role_in_b", Role(self.role_in_b))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "stack", Stack(self.stack))
        for side in ("a", "b"):
            peer = getattr(self, f"peer_{side}_role")
            own = getattr(self, f"role_in_{side}")
            object.__setattr__(
                self, f"peer_{side}_role", _default_peer(own) if peer is None else Role(peer)
            )

    def role(self, group: str) -> Role:
        return self.role_in_a if group == "A" else self.role_in_b

    def peer_role(self, group: str) -> Role:
        return self.peer_a_role if group == "A" else self.peer_b_role

    @property
    def pair(self) -> str:
        return f"{self.role_in_a}/{self.role_in_b}"

    @property
    def label(self) -> str:
        return f"{self.peer_a_role}-{self.role_in_a}/{self.role_in_b}-{self.peer_b_role}"

    def swapped(self) -> "GatewayConfig":
        return GatewayConfig(
            self.role_in_b, self.role_in_a, self.peer_b_role, self.peer_a_role, self.mode, self.stack
        )


def validate_config(cfg: GatewayConfig) -> str | None:
    """Return ``None`` if the configuration is allowed, else the violated rule."""
    roles = (cfg.role_in_a, cfg.role_in_b)
    for side, role in zip("AB", roles):
        if role not in _GATEWAY_ROLES:
            return f"gateway role in group {side} must be GO, GM or LC, not {role}"
    if roles == (Role.GO, Role.GO):
        return "GO/GO: a GO cannot join another group as GO"
    for side, role, peer in (("A", cfg.role_in_a, cfg.peer_a_role), ("B", cfg.role_in_b, cfg.peer_b_role)):
        if role is Role.GO and peer not in (Role.GM, Role.LC):
            return f"group {side}: gateway is GO, so the peer must be GM or LC, not {peer}"
        if role is not Role.GO and peer is not Role.GO:
            return f"group {side}: gateway is a client, so the peer must be the GO, not {peer}"
    if cfg.mode is Mode.SIMULTANEOUS:
        if sorted(r.value for r in roles).count("LC") != 1 or not any(r.is_p2p for r in roles):
            return (
                f"{cfg.pair} {cfg.stack.value} simultaneous: needs exactly one LC (WLAN) attachment "
                "and one WiFi Direct attachment (GM or GO); multiple WiFi Direct interfaces are "
                "not supported"
            )
    return None


def check_config(cfg: GatewayConfig) -> GatewayConfig:
    reason = validate_config(cfg)
    if reason is not None:
        raise ConfigRejected(reason)
    return cfg


def time_sharing_pairs() -> list[tuple[Role, Role]]:
    return [
        (a, b)
        for a in _GATEWAY_ROLES
        for b in _GATEWAY_ROLES
        if validate_config(GatewayConfig(a, b)) is None
    ]
