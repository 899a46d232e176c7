import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wdmesh.channels import DATAGRAM, STREAM, InterfaceKind, multicast
from wdmesh.costmodel import (
    Constant,
    CostParams,
    LinkParams,
    Mixture,
    Normal,
    PhaseName,
    Uniform,
    expected_formation_time,
    parse_distribution,
    reference_baselines,
    sample_phase,
    transfer_cost,
)
from wdmesh.errors import InvalidArgument, MissingParameter

P = CostParams()
LINK = LinkParams(20e6, 1.0, 0.8)


def draws(name, n=4000, seed=0, **kw):
    rng = np.random.default_rng(seed)
    return np.array([sample_phase(name, P, rng, **kw).duration_s for _ in range(n)])


def switch_time(connect, n=4000, **kw):
    """Disconnect + Scan + connect phase, which is what a time-sharing switch costs."""
    rng = np.random.default_rng(1)
    out = []
    for _ in range(n):
        parts = [PhaseName.DISCONNECT, PhaseName.SCAN]
        out.append(sum(sample_phase(p, P, rng).duration_s for p in parts) + sample_phase(connect, P, rng, **kw).duration_s)
    return np.array(out)


def test_lc_switch_near_half_second():
    t = switch_time(PhaseName.CONNECT_LC)
    assert t.mean() == pytest.approx(0.5, abs=0.01)
    assert np.quantile(t, 0.05) > 0.35 and np.quantile(t, 0.95) < 0.65


def test_gm_connect_is_bimodal():
    t = switch_time(PhaseName.CONNECT_GM)
    assert t.min() < 0.5
    assert t.max() > 8.0
    assert 0.4 < np.mean(t < 1.0) < 0.6
    assert not np.any((t > 0.6) & (t < 5.9))


def test_create_go_near_four_seconds_and_faster_for_lc():
    gm = switch_time(PhaseName.CREATE_GO, peer_role="GM")
    lc = switch_time(PhaseName.CREATE_GO, peer_role="LC")
    assert 3.5 <= lc.mean() < gm.mean() <= 4.5


def test_transfer_cost_examples():
    assert transfer_cost(10**7, LINK, STREAM, "tx") == pytest.approx((4.0, 4.0))
    assert transfer_cost(10**7, LINK, DATAGRAM, "rx") == pytest.approx((4.0, 3.2))
    assert transfer_cost(10**7, LINK, multicast(InterfaceKind.P2P), "tx")[0] == pytest.approx(8.0)
    assert transfer_cost(0, LINK, STREAM, "tx") == (0.0, 0.0)


def test_reference_baselines():
    ref = reference_baselines(P)
    assert ref == {"autonomous_creation_s": 3.0, "join_existing_s": 6.0}
    assert expected_formation_time(P, "autonomous") == pytest.approx(ref["autonomous_creation_s"])
    assert expected_formation_time(P, "standard") == pytest.approx(ref["join_existing_s"])
    assert expected_formation_time(P, "persistent") < ref["join_existing_s"]


def test_unknown_phase():
    with pytest.raises(MissingParameter):
        sample_phase("warp_drive", P, np.random.default_rng(0))


def test_service_init_surcharge_only_from_lc_to_p2p():
    surcharge = P.phase(PhaseName.P2P_SERVICE_INIT).base_j
    for nxt, extra in (("GM", True), ("GO", True), ("LC", False)):
        rng_a, rng_b = np.random.default_rng(5), np.random.default_rng(5)
        name = {"GM": PhaseName.CONNECT_GM, "GO": PhaseName.CREATE_GO, "LC": PhaseName.CONNECT_LC}[nxt]
        plain = sample_phase(name, P, rng_a, prev_role="GM", next_role=nxt)
        from_lc = sample_phase(name, P, rng_b, prev_role="LC", next_role=nxt)
        assert from_lc.duration_s == plain.duration_s
        assert from_lc.energy_j - plain.energy_j == pytest.approx(surcharge if extra else 0.0)


def test_energy_is_base_plus_power_times_duration():
    rng = np.random.default_rng(3)
    for name in P.phases:
        s = sample_phase(name, P, rng)
        pc = P.phase(name)
        assert s.energy_j == pytest.approx(pc.base_j + pc.power_w * s.duration_s)


def test_lc_switch_power_exceeds_gm():
    def mean_power(name):
        pc = P.phase(name)
        t = pc.duration.expected()
        return (pc.base_j + pc.power_w * t) / t
    assert mean_power(PhaseName.CONNECT_LC) > mean_power(PhaseName.CONNECT_GM)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(sorted(P.phases)))
def test_samples_nonnegative(seed, name):
    s = sample_phase(name, P, np.random.default_rng(seed), peer_role="LC")
    assert s.duration_s >= 0 and s.energy_j >= 0


@pytest.mark.parametrize("dist", [Constant(0.3), Normal(0.5, 0.2), Normal(0.05, 0.1), Uniform(1, 3), Mixture(0.3, Uniform(0, 1), Constant(5))])
def test_analytic_moments_match_sampling(dist):
    rng = np.random.default_rng(0)
    x = np.array([dist.sample(rng) for _ in range(40000)])
    assert x.mean() == pytest.approx(dist.expected(), abs=0.02)
    assert x.var() == pytest.approx(dist.variance(), abs=0.03 + 0.03 * dist.variance())


def test_parse_distribution_round_trip():
    for d in (Constant(0.1), Normal(0.35, 0.05), Uniform(0.2, 0.4), Mixture(0.5, Uniform(0.15, 0.35), Uniform(5.85, 8.85))):
        assert parse_distribution(d.describe()) == d


@pytest.mark.parametrize("text", ["Normal(-1, 1)", "Uniform(2, 1)", "Mixture(1.5, Constant(1), Constant(2))", "Gamma(1)", "__import__('os')", "Constant(nan)"])
def test_parse_distribution_rejects(text):
    with pytest.raises((InvalidArgument, ValueError)):
        parse_distribution(text)


def test_overrides():
    p = P.override("phase.connect_lc.mean_s", "0.7")
    assert p.phase(PhaseName.CONNECT_LC).duration == Normal(0.7, 0.05)
    assert P.phase(PhaseName.CONNECT_LC).duration.mean_s != 0.7
    p = p.override("link.p2p.p_deliver", 1.0).override("transport.chunk_bytes", "512")
    assert p.link(InterfaceKind.P2P).p_deliver == 1.0
    assert p.chunk_bytes == 512
    p = p.override("phase.scan.duration", "Uniform(0.1, 0.2)")
    assert p.phase(PhaseName.SCAN).duration == Uniform(0.1, 0.2)


@pytest.mark.parametrize(
    "key,value,err",
    [
        ("phase.scan.mean_s", "1", InvalidArgument),  # scan is Constant
        ("phase.nope.base_j", "1", MissingParameter),
        ("link.p2p.p_deliver", "1.5", InvalidArgument),
        ("link.wlan.throughput_bps", "0", InvalidArgument),
        ("phase.scan.base_j", "-1", InvalidArgument),
        ("phase.scan.base_j", "abc", InvalidArgument),
        ("bogus", "1", MissingParameter),
    ],
)
def test_bad_overrides(key, value, err):
    with pytest.raises(err):
        P.override(key, value)


def test_all_constant_uses_means():
    c = P.all_constant()
    for name, pc in c.phases.items():
        assert isinstance(pc.duration, Constant)
        assert pc.duration.value_s == pytest.approx(P.phases[name].duration.expected())
    assert math.isclose(c.phase(PhaseName.CONNECT_LC).duration.value_s, 0.35, rel_tol=1e-3)
