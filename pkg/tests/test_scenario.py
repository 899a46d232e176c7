import pytest
from hypothesis import given, settings, strategies as st

from wdmesh.engine import ExperimentSpec
from wdmesh.errors import ScenarioError
from wdmesh.scenario import format_scenario, parse_scenario
from wdmesh.topology import GatewayConfig, Mode, Stack


def test_hybrid_example():
    spec = parse_scenario("strategy=hybrid\nrole_in_a=GM\nrole_in_b=LC\npayload_mb=10\nruns=50\nseed=7")
    assert spec.strategy == "hybrid"
    assert spec.config == GatewayConfig("GM", "LC", mode=Mode.SIMULTANEOUS)
    assert (spec.payload_bytes, spec.n_runs, spec.seed) == (10_000_000, 50, 7)


def test_go_go_rejected():
    with pytest.raises(ScenarioError) as exc:
        parse_scenario("role_in_a=GO\nrole_in_b=GO")
    assert any("GO/GO" in e and e.startswith("line 2") for e in exc.value.errors)


def test_empty_file_defaults():
    spec = parse_scenario("")
    assert spec == ExperimentSpec()
    assert spec.strategy == "time_sharing"
    assert spec.config.pair == "GM/GM"
    assert (spec.payload_bytes, spec.n_runs, spec.seed) == (10_000_000, 50, 0)


def test_comments_and_whitespace():
    spec = parse_scenario("# a comment\n\n  strategy = non_stock   # trailing\nrole_in_a = LC\nrole_in_b=GM\n")
    assert spec.config.stack is Stack.NON_STOCK


def test_line_numbered_errors_collected():
    text = "strategy=hybrid\nbogus=1\nruns=zero\nrole_in_a=XX\nno equals sign\nseed=1\nseed=2\nphase.scan.mean_s=1\n"
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(text)
    errs = exc.value.errors
    for n in (2, 3, 4, 5, 7, 8):
        assert any(e.startswith(f"line {n}:") for e in errs), (n, errs)


def test_strategy_role_mismatch():
    with pytest.raises(ScenarioError) as exc:
        parse_scenario("strategy=udp_multicast\nrole_in_a=GM\nrole_in_b=GM")
    assert "line 3" in exc.value.errors[0]


def test_param_keys():
    spec = parse_scenario("strategy=udp_multicast\nrole_in_a=LC\nrole_in_b=GM\nlink.p2p.p_deliver=1.0\nphase.connect_gm.weight=0.2")
    assert spec.overrides == (("link.p2p.p_deliver", "1.0"), ("phase.connect_gm.weight", "0.2"))
    assert spec.params().link("p2p").p_deliver == 1.0


ROLES = st.sampled_from(["GO", "GM", "LC"])


@settings(max_examples=100, deadline=None)
@given(
    st.sampled_from(["time_sharing", "udp_multicast", "hybrid", "non_stock", "relay_assisted"]),
    ROLES,
    ROLES,
    st.integers(0, 10**9),
    st.integers(1, 500),
    st.integers(0, 2**63 - 1),
    st.lists(st.sampled_from([("link.p2p.p_deliver", "0.8"), ("phase.connect_lc.mean_s", "0.4"), ("transport.chunk_bytes", "512")]), unique=True),
)
def test_round_trip(strategy, a, b, payload, runs, seed, overrides):
    mode = Mode.TIME_SHARING if strategy == "time_sharing" else Mode.SIMULTANEOUS
    stack = Stack.NON_STOCK if strategy == "non_stock" else Stack.STOCK
    spec = ExperimentSpec(strategy, GatewayConfig(a, b, mode=mode, stack=stack), payload, runs, seed, tuple(overrides))
    try:
        spec.validate()
    except Exception:
        return
    assert parse_scenario(format_scenario(spec)) == spec
