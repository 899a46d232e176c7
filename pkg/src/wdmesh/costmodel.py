"""Stochastic time/energy model for protocol phases and bulk transfers.

Every phase duration is drawn from a small distribution family; phase energy
is ``base_j + power_w * duration``.  Transfers are priced from link
throughput and radio power.  Defaults are calibrated so that the switching
time of a time-sharing gateway is ~0.5 s when it joins as LC, bimodal
(<0.5 s or >8 s) when it joins as GM and ~4 s when it creates a group.
"""

from __future__ import annotations

import ast
import copy
import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Union

from .channels import Channel, InterfaceKind
from .errors import InvalidArgument, MissingParameter


class PhaseName(str, Enum):
    RX = "Rx"
    TX = "Tx"
    DISCONNECT = "Disconnect"
    SCAN = "Scan"
    CONNECT_LC = "ConnectLc"
    CONNECT_GM = "ConnectGm"
    CREATE_GO = "CreateGo"
    P2P_SERVICE_INIT = "P2pServiceInit"
    CONTROL_EXCHANGE = "ControlExchange"
    RECONFIGURE = "Reconfigure"
    RELAY_HOP = "RelayHop"

    def __str__(self) -> str:
        return self.value

    @property
    def key(self) -> str:
        return _PHASE_KEYS[self]


_PHASE_KEYS = {
    PhaseName.RX: "rx",
    PhaseName.TX: "tx",
    PhaseName.DISCONNECT: "disconnect",
    PhaseName.SCAN: "scan",
    PhaseName.CONNECT_LC: "connect_lc",
    PhaseName.CONNECT_GM: "connect_gm",
    PhaseName.CREATE_GO: "create_go",
    PhaseName.P2P_SERVICE_INIT: "p2p_service_init",
    PhaseName.CONTROL_EXCHANGE: "control_exchange",
    PhaseName.RECONFIGURE: "reconfigure",
    PhaseName.RELAY_HOP: "relay_hop",
}


# --------------------------------------------------------------------------
# Duration distributions
# --------------------------------------------------------------------------

def _phi(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _Phi(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


@dataclass(frozen=True)
class Constant:
    value_s: float

    def sample(self, rng) -> float:
        return float(self.value_s)

    def expected(self) -> float:
        return float(self.value_s)

    def variance(self) -> float:
        return 0.0

    def describe(self) -> str:
        return f"constant({self.value_s!r})"


@dataclass(frozen=True)
class Normal:
    """Normal distribution truncated to [0, inf) by rejection."""

    mean_s: float
    std_s: float

    def sample(self, rng) -> float:
        if self.std_s == 0:
            return max(float(self.mean_s), 0.0)
        for _ in range(10_000):
            x = float(rng.normal(self.mean_s, self.std_s))
            if x >= 0.0:
                return x
        return 0.0

    def _alpha(self) -> tuple[float, float]:
        a = -self.mean_s / self.std_s
        return a, _phi(a) / (1.0 - _Phi(a))

    def expected(self) -> float:
        if self.std_s == 0:
            return max(float(self.mean_s), 0.0)
        _, lam = self._alpha()
        return self.mean_s + self.std_s * lam

    def variance(self) -> float:
        if self.std_s == 0:
            return 0.0
        a, lam = self._alpha()
        return self.std_s**2 * (1.0 + a * lam - lam * lam)

    def describe(self) -> str:
        return f"normal({self.mean_s!r}, {self.std_s!r})"


@dataclass(frozen=True)
class Uniform:
    lo_s: float
    hi_s: float

    def sample(self, rng) -> float:
        return float(rng.uniform(self.lo_s, self.hi_s))

    def expected(self) -> float:
        return 0.5 * (self.lo_s + self.hi_s)

    def variance(self) -> float:
        return (self.hi_s - self.lo_s) ** 2 / 12.0

    def describe(self) -> str:
        return f"uniform({self.lo_s!r}, {self.hi_s!r})"


@dataclass(frozen=True)
class Mixture:
    """With probability ``weight`` draw from ``first``, otherwise from ``second``."""

    weight: float
    first: "Distribution"
    second: "Distribution"

    def sample(self, rng) -> float:
        pick_first = float(rng.random()) < self.weight
        return (self.first if pick_first else self.second).sample(rng)

    def expected(self) -> float:
        return self.weight * self.first.expected() + (1 - self.weight) * self.second.expected()

    def variance(self) -> float:
        m = self.expected()
        second_moment = self.weight * (self.first.variance() + self.first.expected() ** 2) + (
            1 - self.weight
        ) * (self.second.variance() + self.second.expected() ** 2)
        return second_moment - m * m

    def describe(self) -> str:
        return f"mixture({self.weight!r}, {self.first.describe()}, {self.second.describe()})"


Distribution = Union[Constant, Normal, Uniform, Mixture]

_DIST_CTORS = {"constant": Constant, "normal": Normal, "uniform": Uniform, "mixture": Mixture}


def parse_distribution(text: str) -> Distribution:
    """Parse a descriptor such as ``mixture(0.5, uniform(0.1, 0.3), constant(7))``."""
    try:
        tree = ast.parse(text.strip(), mode="eval").body
    except SyntaxError as exc:
        raise InvalidArgument(f"malformed distribution {text!r}") from exc

    def build(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -build(node.operand)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
            ctor = _DIST_CTORS.get(node.func.id.lower())
            if ctor is None:
                raise InvalidArgument(f"unknown distribution {node.func.id!r}")
            args = [build(a) for a in node.args]
            if len(args) != len(fields(ctor)):
                raise InvalidArgument(f"{node.func.id} takes {len(fields(ctor))} arguments")
            return ctor(*args)
        raise InvalidArgument(f"malformed distribution {text!r}")

    dist = build(tree)
    if isinstance(dist, float):
        raise InvalidArgument(f"expected a distribution, got a number in {text!r}")
    _check_distribution(dist)
    return dist


def _check_distribution(dist: Distribution) -> None:
    if isinstance(dist, Mixture):
        if not isinstance(dist.first, (Constant, Normal, Uniform, Mixture)) or not isinstance(
            dist.second, (Constant, Normal, Uniform, Mixture)
        ):
            raise InvalidArgument("mixture components must be distributions")
        if not 0.0 <= dist.weight <= 1.0:
            raise InvalidArgument(f"mixture weight {dist.weight} outside [0, 1]")
        _check_distribution(dist.first)
        _check_distribution(dist.second)
        return
    for f in fields(dist):
        v = getattr(dist, f.name)
        if not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
            raise InvalidArgument(f"{dist.describe()}: {f.name} must be finite and nonnegative")
    if isinstance(dist, Uniform) and dist.lo_s > dist.hi_s:
        raise InvalidArgument(f"{dist.describe()}: lo_s exceeds hi_s")


# --------------------------------------------------------------------------
# Parameters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseCost:
    duration: Distribution
    base_j: float = 0.0
    power_w: float = 0.0

    def energy(self, duration_s: float) -> float:
        return self.base_j + self.power_w * duration_s


@dataclass(frozen=True)
class LinkParams:
    throughput_bps: float
    tx_power_w: float
    rx_power_w: float
    multicast_penalty: float = 0.5
    p_deliver: float = 1.0

    def check(self, name: str) -> None:
        if not self.throughput_bps > 0:
            raise InvalidArgument(f"link.{name}.throughput_bps must be positive")
        if self.tx_power_w < 0 or self.rx_power_w < 0:
            raise InvalidArgument(f"link.{name}: radio power must be nonnegative")
        if not 0.0 < self.multicast_penalty <= 1.0:
            raise InvalidArgument(f"link.{name}.multicast_penalty must be in (0, 1]")
        if not 0.0 <= self.p_deliver <= 1.0:
            raise InvalidArgument(f"link.{name}.p_deliver must be in [0, 1]")


def default_phases() -> dict[str, PhaseCost]:
    return {
        # switching steps of the gateway (disconnect + scan add 0.15 s to every switch)
        "disconnect": PhaseCost(Constant(0.1), base_j=0.02, power_w=0.6),
        "scan": PhaseCost(Constant(0.05), base_j=0.02, power_w=1.2),
        "connect_lc": PhaseCost(Normal(0.35, 0.05), base_j=0.1, power_w=3.2),
        "connect_gm": PhaseCost(
            Mixture(0.5, Uniform(0.15, 0.35), Uniform(5.85, 8.85)), base_j=0.1, power_w=0.3
        ),
        "create_go": PhaseCost(Normal(4.1, 0.5), base_j=0.1, power_w=0.3),
        "p2p_service_init": PhaseCost(Constant(0.0), base_j=2.0, power_w=0.0),
        "control_exchange": PhaseCost(Constant(0.05), base_j=0.05, power_w=0.0),
        # first-time group formation
        "go_negotiation": PhaseCost(Uniform(1.5, 2.5), base_j=0.1, power_w=0.5),
        "wps_provision": PhaseCost(Uniform(2.5, 3.5), base_j=0.1, power_w=0.5),
        "address_assignment": PhaseCost(Uniform(0.8, 1.2), base_j=0.05, power_w=0.4),
        "invitation": PhaseCost(Uniform(0.3, 0.7), base_j=0.05, power_w=0.5),
        "wps_reduced": PhaseCost(Uniform(0.3, 0.7), base_j=0.05, power_w=0.5),
        "autonomous_creation": PhaseCost(Uniform(2.5, 3.5), base_j=0.1, power_w=0.4),
    }


def default_links() -> dict[str, LinkParams]:
    return {
        "wlan": LinkParams(20e6, tx_power_w=1.0, rx_power_w=0.8, multicast_penalty=0.5, p_deliver=1.0),
        "p2p": LinkParams(20e6, tx_power_w=0.9, rx_power_w=0.7, multicast_penalty=0.5, p_deliver=0.93),
    }


_SCALAR_KEYS = {
    "phase.create_go.lc_offset_s": "create_go_lc_offset_s",
    "transport.chunk_bytes": "chunk_bytes",
    "hybrid.control_p_deliver": "control_p_deliver",
    "hybrid.control_timeout_s": "control_timeout_s",
    "hybrid.control_retry_s": "control_retry_s",
}
_DIST_FIELDS = ("value_s", "mean_s", "std_s", "lo_s", "hi_s", "weight")
_LINK_FIELDS = tuple(f.name for f in fields(LinkParams))


@dataclass
class CostParams:
    phases: dict[str, PhaseCost] = field(default_factory=default_phases)
    links: dict[str, LinkParams] = field(default_factory=default_links)
    chunk_bytes: int = 1400
    create_go_lc_offset_s: float = 0.5
    control_p_deliver: float = 1.0
    control_timeout_s: float = 1.0
    control_retry_s: float = 0.25

    def link(self, kind: InterfaceKind | str) -> LinkParams:
        return self.links[str(getattr(kind, "value", kind))]

    def phase(self, name: PhaseName | str) -> PhaseCost:
        key = name.key if isinstance(name, PhaseName) else str(name)
        try:
            return self.phases[key]
        except KeyError:
            raise MissingParameter(f"no cost parameters for phase {key!r}") from None

    def copy(self) -> "CostParams":
        return copy.deepcopy(self)

    def validate(self) -> "CostParams":
        for name, pc in self.phases.items():
            _check_distribution(pc.duration)
            if pc.base_j < 0 or pc.power_w < 0:
                raise InvalidArgument(f"phase.{name}: base_j and power_w must be nonnegative")
        for name, lp in self.links.items():
            lp.check(name)
        if isinstance(self.chunk_bytes, bool) or not isinstance(self.chunk_bytes, int) or self.chunk_bytes <= 0:
            raise InvalidArgument("transport.chunk_bytes must be a positive integer")
        if self.create_go_lc_offset_s < 0:
            raise InvalidArgument("phase.create_go.lc_offset_s must be nonnegative")
        if not 0.0 <= self.control_p_deliver <= 1.0:
            raise InvalidArgument("hybrid.control_p_deliver must be in [0, 1]")
        if self.control_timeout_s < 0 or not self.control_retry_s > 0:
            raise InvalidArgument("hybrid control timeout must be >= 0 and retry interval > 0")
        return self

    # -- dotted-key overrides ------------------------------------------------

    def override(self, key: str, value) -> "CostParams":
        """Return a copy with one dotted key replaced, e.g. ``phase.connect_lc.mean_s``."""
        out = self.copy()
        parts = key.split(".")
        if key in _SCALAR_KEYS:
            attr = _SCALAR_KEYS[key]
            if attr == "chunk_bytes":
                value = _as_int(key, value)
            else:
                value = _as_float(key, value)
            setattr(out, attr, value)
        elif len(parts) == 3 and parts[0] == "phase":
            _, name, attr = parts
            if name not in out.phases:
                raise MissingParameter(f"unknown phase {name!r} in key {key!r}")
            pc = out.phases[name]
            if attr == "duration":
                dist = value if not isinstance(value, str) else parse_distribution(value)
                out.phases[name] = replace(pc, duration=dist)
            elif attr in ("base_j", "power_w"):
                out.phases[name] = replace(pc, **{attr: _as_float(key, value)})
            elif attr in _DIST_FIELDS:
                if attr not in {f.name for f in fields(pc.duration)}:
                    raise InvalidArgument(
                        f"{key}: phase {name} uses {pc.duration.describe()}, which has no {attr}"
                    )
                out.phases[name] = replace(pc, duration=replace(pc.duration, **{attr: _as_float(key, value)}))
            else:
                raise MissingParameter(f"unknown key {key!r}")
        elif len(parts) == 3 and parts[0] == "link":
            _, name, attr = parts
            if name not in out.links or attr not in _LINK_FIELDS:
                raise MissingParameter(f"unknown key {key!r}")
            out.links[name] = replace(out.links[name], **{attr: _as_float(key, value)})
        else:
            raise MissingParameter(f"unknown key {key!r}")
        return out.validate()

    def with_overrides(self, items) -> "CostParams":
        out = self
        for k, v in items:
            out = out.override(k, v)
        return out

    def all_constant(self) -> "CostParams":
        """Copy with every duration replaced by a constant at its expectation."""
        out = self.copy()
        for name, pc in out.phases.items():
            out.phases[name] = replace(pc, duration=Constant(pc.duration.expected()))
        return out


def is_param_key(key: str) -> bool:
    parts = key.split(".")
    if key in _SCALAR_KEYS:
        return True
    if len(parts) == 3 and parts[0] == "phase":
        return parts[2] in ("duration", "base_j", "power_w", *_DIST_FIELDS)
    if len(parts) == 3 and parts[0] == "link":
        return parts[2] in _LINK_FIELDS
    return False


def format_param_value(value) -> str:
    if isinstance(value, (Constant, Normal, Uniform, Mixture)):
        return value.describe()
    return repr(value) if isinstance(value, float) else str(value)


def _as_float(key: str, value) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise InvalidArgument(f"{key}: expected a number, got {value!r}") from None
    if not math.isfinite(out):
        raise InvalidArgument(f"{key}: value must be finite")
    return out


def _as_int(key: str, value) -> int:
    try:
        out = int(str(value).strip()) if not isinstance(value, int) else value
    except ValueError:
        raise InvalidArgument(f"{key}: expected an integer, got {value!r}") from None
    return out


# --------------------------------------------------------------------------
# Sampling and pricing
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CostSample:
    name: str
    duration_s: float
    energy_j: float


def sample_phase(
    name: PhaseName | str,
    params: CostParams,
    rng,
    *,
    prev_role=None,
    next_role=None,
    peer_role=None,
) -> CostSample:
    """Draw (duration, energy) for one phase.

    ``CreateGo`` is shortened by ``create_go_lc_offset_s`` when the peer that
    joins the new group is an LC.  Moving from an LC attachment to a WiFi
    Direct role (GM or GO) adds the ``p2p_service_init`` surcharge.
    """
    pc = params.phase(name)
    label = str(name)
    duration = pc.duration.sample(rng)
    if name in (PhaseName.CREATE_GO, "create_go") and peer_role is not None and str(peer_role) == "LC":
        duration = max(0.0, duration - params.create_go_lc_offset_s)
    energy = pc.energy(duration)
    if prev_role is not None and str(prev_role) == "LC" and str(next_role) in ("GM", "GO"):
        init = params.phase(PhaseName.P2P_SERVICE_INIT)
        extra = init.duration.sample(rng)
        duration += extra
        energy += init.energy(extra)
    return CostSample(label, duration, energy)


def transfer_cost(nbytes: int, link: LinkParams, channel: Channel, direction: str) -> tuple[float, float]:
    """Airtime and radio energy to move ``nbytes`` over one link.

    Multicast runs at ``multicast_penalty`` times the link throughput.
    ``direction`` is ``"tx"`` or ``"rx"`` and selects the radio power.
    """
    if nbytes < 0:
        raise InvalidArgument("byte count must be nonnegative")
    if direction not in ("tx", "rx"):
        raise InvalidArgument(f"direction must be 'tx' or 'rx', not {direction!r}")
    if nbytes == 0:
        return 0.0, 0.0
    rate = link.throughput_bps * (link.multicast_penalty if channel.is_multicast else 1.0)
    duration = nbytes * 8 / rate
    power = link.tx_power_w if direction == "tx" else link.rx_power_w
    return duration, power * duration


# Literature reference values for first-time (non-persistent) formation.
AUTONOMOUS_CREATION_S = 3.0
JOIN_EXISTING_S = 6.0


def reference_baselines(params: CostParams | None = None) -> dict[str, float]:
    return {"autonomous_creation_s": AUTONOMOUS_CREATION_S, "join_existing_s": JOIN_EXISTING_S}


def expected_formation_time(params: CostParams, mode: str) -> float:
    steps = {
        "standard": ("go_negotiation", "wps_provision", "address_assignment"),
        "persistent": ("invitation", "wps_reduced", "address_assignment"),
        "autonomous": ("autonomous_creation",),
    }[mode]
    return math.fsum(params.phase(s).duration.expected() for s in steps)
