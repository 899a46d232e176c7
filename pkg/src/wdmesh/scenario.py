"""Flat ``key = value`` scenario files.

Blank lines and ``#`` comments are ignored.  Recognised keys::

    strategy      time_sharing | udp_multicast | hybrid | non_stock | relay_assisted
    role_in_a     GO | GM | LC            (gateway role in group A)
    role_in_b     GO | GM | LC
    peer_a_role   role of Node A in group A (default: GO, or GM if the gateway is GO)
    peer_b_role
    stack         stock | nonstock        (default: nonstock for non_stock, else stock)
    payload_mb    decimal megabytes, 1 MB = 10**6 bytes
    runs          number of seeded repetitions
    seed          master seed

plus any cost-model key such as ``phase.connect_lc.mean_s`` or
``link.p2p.p_deliver``.  Duplicate and unknown keys are errors.
"""

from __future__ import annotations

from .costmodel import CostParams, is_param_key
from .engine import MB, ExperimentSpec
from .errors import ScenarioError, SimError
from .gateway import NON_STOCK, STRATEGIES, TIME_SHARING, check_strategy
from .topology import GatewayConfig, Mode, Role, Stack

DEFAULTS = {
    "strategy": TIME_SHARING,
    "role_in_a": "GM",
    "role_in_b": "GM",
    "payload_mb": "10",
    "runs": "50",
    "seed": "0",
}
SPEC_KEYS = ("strategy", "role_in_a", "role_in_b", "peer_a_role", "peer_b_role", "stack", "payload_mb", "runs", "seed")


def read_items(text: str) -> tuple[dict[str, tuple[int, str]], list[str]]:
    """Split scenario text into {key: (line number, value)} and syntax errors."""
    items: dict[str, tuple[int, str]] = {}
    errors: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected key = value, got {raw.strip()!r}")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            errors.append(f"line {lineno}: missing key")
        elif key not in SPEC_KEYS and not is_param_key(key):
            errors.append(f"line {lineno}: unknown key {key!r}")
        elif key in items:
            errors.append(f"line {lineno}: duplicate key {key!r} (first set on line {items[key][0]})")
        else:
            items[key] = (lineno, value)
    return items, errors


def _where(lineno: int | None) -> str:
    return f"line {lineno}" if lineno else "command line"


def build_spec(items: dict[str, tuple[int | None, str]], errors: list[str] | None = None) -> ExperimentSpec:
    """Turn parsed items into a validated ExperimentSpec or raise ScenarioError."""
    errors = list(errors or [])

    def get(key):
        if key in items:
            return items[key]
        return (None, DEFAULTS.get(key))

    def number(key, conv, minimum):
        lineno, text = get(key)
        try:
            value = conv(text)
        except (TypeError, ValueError):
            errors.append(f"{_where(lineno)}: {key}: expected a number, got {text!r}")
            return None
        if not value >= minimum:
            errors.append(f"{_where(lineno)}: {key}: must be at least {minimum}, got {text!r}")
            return None
        return value

    lineno, strategy = get("strategy")
    if strategy not in STRATEGIES:
        errors.append(f"{_where(lineno)}: strategy: unknown {strategy!r}; choose from {', '.join(STRATEGIES)}")
        strategy = None

    roles = {}
    for key in ("role_in_a", "role_in_b", "peer_a_role", "peer_b_role"):
        lineno, text = get(key)
        if text is None:
            roles[key] = None
            continue
        try:
            roles[key] = Role(text.upper() if text.lower() != "detached" else "Detached")
        except ValueError:
            errors.append(f"{_where(lineno)}: {key}: unknown role {text!r} (GO, GM or LC)")
            roles[key] = False

    lineno, text = get("stack")
    stack = None
    if text is not None:
        try:
            stack = Stack(text.lower().replace("-", "").replace("_", ""))
        except ValueError:
            errors.append(f"{_where(lineno)}: stack: expected stock or nonstock, got {text!r}")
    if stack is None:
        stack = Stack.NON_STOCK if strategy == NON_STOCK else Stack.STOCK

    payload_mb = number("payload_mb", float, 0.0)
    runs = number("runs", int, 1)
    seed = number("seed", int, 0)

    overrides = []
    params = CostParams()
    for key, (lineno, value) in items.items():
        if key in SPEC_KEYS:
            continue
        try:
            params = params.override(key, value)
        except (SimError, ValueError, KeyError) as exc:
            errors.append(f"{_where(lineno)}: {key}: {exc}")
            continue
        overrides.append((key, value))

    cfg = None
    if strategy is not None and all(v is not False for v in roles.values()):
        try:
            cfg = GatewayConfig(
                roles["role_in_a"],
                roles["role_in_b"],
                roles["peer_a_role"],
                roles["peer_b_role"],
                Mode.TIME_SHARING if strategy == TIME_SHARING else Mode.SIMULTANEOUS,
                stack,
            )
            check_strategy(strategy, cfg)
        except SimError as exc:
            role_lines = [items[k][0] for k in ("role_in_a", "role_in_b") if k in items and items[k][0]]
            where = _where(max(role_lines)) if role_lines else _where(get("strategy")[0])
            errors.append(f"{where}: invalid configuration: {getattr(exc, 'reason', exc)}")
            cfg = None

    if errors:
        raise ScenarioError(errors)
    return ExperimentSpec(
        strategy=strategy,
        config=cfg,
        payload_bytes=int(round(payload_mb * MB)),
        n_runs=runs,
        seed=seed,
        overrides=tuple(overrides),
    )


def parse_scenario(text: str) -> ExperimentSpec:
    items, errors = read_items(text)
    return build_spec(items, errors)


def format_scenario(spec: ExperimentSpec) -> str:
    """Render ``spec`` as scenario text that parses back to an equal spec."""
    cfg = spec.config
    lines = [
        f"strategy = {spec.strategy}",
        f"role_in_a = {cfg.role_in_a.value}",
        f"role_in_b = {cfg.role_in_b.value}",
        f"peer_a_role = {cfg.peer_a_role.value}",
        f"peer_b_role = {cfg.peer_b_role.value}",
        f"stack = {cfg.stack.value}",
        f"payload_mb = {spec.payload_bytes / MB!r}",
        f"runs = {spec.n_runs}",
        f"seed = {spec.seed}",
    ]
    lines += [f"{k} = {v}" for k, v in spec.overrides]
    return "\n".join(lines) + "\n"
