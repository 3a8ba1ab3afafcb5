import threading

import pytest

from simatlas.clock import ManualClock
from simatlas.metering import (
    BillingClient,
    BillingHttp,
    BillingScenario,
    BillingSimulator,
    Classifier,
    Flow,
    billing_simulate,
    round_up,
)

MIB = 1024 * 1024


def scenario(**kw):
    defaults = dict(
        name="test-op",
        classifier=Classifier.BY_SNI,
        zero_rated_names=frozenset({"app.snapchat.com"}),
        rounding_bytes=1,
        cdr_delay_s=0.0,
        quota_bytes=1024 * MIB,
    )
    defaults.update(kw)
    return BillingScenario(**defaults)


def flow(**kw):
    defaults = dict(src_ip="100.64.0.9", dst_ip="198.51.100.7", bytes_up=1000, bytes_down=0)
    defaults.update(kw)
    return Flow(**defaults)


def test_sni_spoof_is_free_under_sni_classifier():
    out = billing_simulate(
        scenario(), [flow(protocol="https", sni="app.snapchat.com", bytes_up=4 * MIB)]
    )
    assert out["quota_after"] == 1024 * MIB
    assert out["cdrs"][0].zero_rated is True


def test_ip_allowlist_ignores_spoofed_names():
    sc = scenario(
        classifier=Classifier.BY_IP_ALLOWLIST,
        zero_rated_names=frozenset(),
        zero_rated_ips=("203.0.113.0/24",),
    )
    out = billing_simulate(sc, [flow(protocol="https", sni="app.snapchat.com", bytes_up=4 * MIB)])
    assert out["quota_after"] == 1024 * MIB - 4 * MIB
    legit = billing_simulate(sc, [flow(dst_ip="203.0.113.10", bytes_up=4 * MIB)])
    assert legit["quota_after"] == 1024 * MIB


def test_host_header_classifier_accepts_http_and_https_names():
    sc = scenario(classifier=Classifier.BY_HOST_HEADER)
    http_spoof = billing_simulate(sc, [flow(protocol="http", host="app.snapchat.com", bytes_up=MIB)])
    https_spoof = billing_simulate(sc, [flow(protocol="https", sni="app.snapchat.com", bytes_up=MIB)])
    assert http_spoof["quota_after"] == 1024 * MIB
    assert https_spoof["quota_after"] == 1024 * MIB
    # SNI-only classifier must not accept the plain-HTTP host spoof
    sni_only = billing_simulate(scenario(), [flow(protocol="http", host="app.snapchat.com", bytes_up=MIB)])
    assert sni_only["quota_after"] == 1024 * MIB - MIB


def test_internal_dns_discrepancy_between_contexts():
    sc = scenario(internal_dns_billed_domestic=False, internal_dns_billed_roaming=True)
    dns = flow(protocol="dns", dst_ip="10.11.12.53", is_internal_dns=True, bytes_up=MIB)
    domestic = billing_simulate(sc, [dns], roaming=False)
    assert domestic["quota_after"] == 1024 * MIB
    roamed = billing_simulate(sc, [dns], roaming=True)
    assert roamed["quota_after"] == 1024 * MIB - MIB


def test_zero_rating_can_vanish_in_roaming():
    sc = scenario(zero_rating_in_roaming=False)
    legit = flow(protocol="https", sni="app.snapchat.com", bytes_up=MIB)
    assert billing_simulate(sc, [legit], roaming=False)["quota_after"] == 1024 * MIB
    assert billing_simulate(sc, [legit], roaming=True)["quota_after"] == 1024 * MIB - MIB


def test_batch_rounding_is_round_up_once():
    sc = scenario(rounding_bytes=100 * 1024)
    flows = [flow(bytes_up=MIB), flow(bytes_up=37 * 1024)]
    out = billing_simulate(sc, flows)
    billed = 1024 * MIB - out["quota_after"]
    assert billed == round_up(MIB + 37 * 1024, 100 * 1024)


def test_billing_conservation_across_batches():
    clock = ManualClock()
    sc = scenario(rounding_bytes=4096, cdr_delay_s=10.0)
    sim = BillingSimulator(sc, clock)
    q0 = sim.quota_bytes()
    sim.post_flows([flow(bytes_up=5000), flow(protocol="https", sni="app.snapchat.com", bytes_up=999)])
    clock.advance(5)
    sim.post_flows([flow(bytes_up=3000)])
    clock.advance(100)
    cdrs = sim.cdrs()
    assert len(cdrs) == 3
    by_batch = {}
    for cdr in cdrs:
        if cdr.billed:
            by_batch.setdefault(cdr.batch_id, 0)
            by_batch[cdr.batch_id] += cdr.bytes_up + cdr.bytes_down
    expected = sum(round_up(v, 4096) for v in by_batch.values())
    assert q0 - sim.quota_bytes() == expected


def test_cdr_delay_gates_quota_change():
    clock = ManualClock()
    sc = scenario(cdr_delay_s=60.0)
    sim = BillingSimulator(sc, clock)
    sim.post_flows([flow(bytes_up=MIB)])
    assert sim.quota_bytes() == 1024 * MIB
    assert sim.pending_batches() == 1
    clock.advance(59)
    assert sim.quota_bytes() == 1024 * MIB
    clock.advance(2)
    assert sim.quota_bytes() == 1024 * MIB - MIB
    assert sim.pending_batches() == 0
    assert all(c.posted_at <= clock.now() for c in sim.cdrs())


def test_simulator_is_total_on_odd_flows():
    sc = scenario()
    out = billing_simulate(sc, [flow(bytes_up=0, bytes_down=0), flow(protocol="udp", bytes_up=17)])
    assert out["quota_after"] <= 1024 * MIB


def test_http_api_round_trip():
    clock = ManualClock()
    sim = BillingSimulator(scenario(cdr_delay_s=30.0, rounding_bytes=1024), clock)
    http = BillingHttp(sim)
    http.start()
    try:
        client = BillingClient(http.url, clock=clock)
        q = client.quota()
        assert q["remaining_bytes"] == 1024 * MIB
        assert q["plan"] == "test-op"
        client.post_flows([flow(bytes_up=10_000)])
        assert client.quota()["pending_batches"] == 1
        clock.advance(31)
        q = client.quota()
        assert q["remaining_bytes"] == 1024 * MIB - round_up(10_000, 1024)
        assert q["pending_batches"] == 0
        cdrs = client.cdrs()
        assert len(cdrs) == 1 and cdrs[0]["billed"] is True
    finally:
        http.stop()
