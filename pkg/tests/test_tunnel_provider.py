"""End-to-end tunnel client <-> provider service tests over real TCP."""

import threading

import pytest

from simatlas.clock import ManualClock
from simatlas.analytics import luhn_check_digit
from simatlas.gsmtap import read_gsmtap_pcap
from simatlas.iso7816 import Apdu, ResponseApdu
from simatlas.provider import (
    ApduLogRecord,
    DuplicateImsi,
    ProviderService,
    RegistryEntry,
    RegistrySimBusy,
    SimRegistry,
    UnknownCircuit,
)
from simatlas.provider.apdulog import jsonl_to_log
from simatlas.simcard import SimProfile
from simatlas.tunnel import (
    BadToken,
    CapacityExceeded,
    Detached,
    SimBusy,
    TunnelClient,
    TunnelTimeout,
    UnknownImsi,
)


def make_profile(suffix="001", **kw):
    payload = "894303" + suffix.rjust(12, "0")
    defaults = dict(
        imsi="23203" + suffix.rjust(10, "0"),
        iccid=payload + str(luhn_check_digit(payload)),
        ki=bytes(range(16)),
        home_country="AT",
        label=f"demo-{suffix}",
    )
    defaults.update(kw)
    return SimProfile(**defaults)


@pytest.fixture
def provider():
    registry = SimRegistry()
    registry.register_profile(make_profile("001"))
    service = ProviderService(registry, port=0, require_tokens=False)
    service.start()
    yield service
    service.stop()


def connect(service, **kw):
    client = TunnelClient("127.0.0.1", service.port, keepalive_interval_s=0, **kw)
    client.connect()
    return client


IMSI = "2320300000000001"[:15]


def test_attach_returns_profile_atr(provider):
    client = connect(provider)
    atr = client.attach("232030000000001", b"")
    assert atr == provider.registry.get("232030000000001").backend.atr()
    client.detach()


def test_attach_unknown_imsi(provider):
    client = connect(provider)
    with pytest.raises(UnknownImsi):
        client.attach("262010000000001", b"")
    client.close()


def test_relay_select_over_live_circuit(provider):
    client = connect(provider)
    client.attach("232030000000001", b"")
    resp = client.relay(Apdu(0xA0, 0xA4, 0, 0, data=bytes.fromhex("3f00")))
    assert resp.sw1 == 0x9F
    client.detach()


def test_relay_after_detach_fails(provider):
    client = connect(provider)
    client.attach("232030000000001", b"")
    client.detach()
    with pytest.raises(Detached):
        client.relay(Apdu(0xA0, 0xA4, 0, 0, data=bytes.fromhex("3f00")))


def test_second_concurrent_attach_is_busy(provider):
    first = connect(provider)
    first.attach("232030000000001", b"")
    second = connect(provider)
    with pytest.raises(SimBusy):
        second.attach("232030000000001", b"")
    first.detach()
    second.close()


def test_detached_sim_is_reusable(provider):
    client = connect(provider)
    client.attach("232030000000001", b"")
    client.detach()
    again = connect(provider)
    atr = again.attach("232030000000001", b"")
    assert atr
    again.detach()


def test_forged_token_rejected():
    registry = SimRegistry()
    registry.register_profile(make_profile("002"))
    service = ProviderService(registry, port=0, require_tokens=True)
    service.start()
    try:
        imsi = registry.entries()[0].imsi
        service.push_token(imsi, b"\x01" * 32, "circuit-1")
        client = connect(service)
        with pytest.raises(BadToken):
            client.attach(imsi, b"\x02" * 32)
        client.close()
        client = connect(service)
        assert client.attach(imsi, b"\x01" * 32)
        assert service.active_circuits()[0].circuit_id == "circuit-1"
        client.detach()
    finally:
        service.stop()


def test_attach_race_yields_one_winner(provider):
    imsi = "232030000000001"
    for _ in range(20):
        results = []
        barrier = threading.Barrier(2)

        def racer():
            client = connect(provider)
            barrier.wait()
            try:
                client.attach(imsi, b"")
                results.append(("granted", client))
            except SimBusy:
                results.append(("busy", client))

        threads = [threading.Thread(target=racer) for _ in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        outcomes = sorted(r[0] for r in results)
        assert outcomes == ["busy", "granted"]
        for outcome, client in results:
            if outcome == "granted":
                client.detach()
            else:
                client.close()


def test_capacity_limit_and_reuse():
    registry = SimRegistry()
    for i in range(3):
        registry.register_profile(make_profile(f"10{i}"))
    service = ProviderService(registry, port=0, require_tokens=False, max_concurrent_sims=2)
    service.start()
    try:
        imsis = [e.imsi for e in registry.entries()]
        clients = []
        for imsi in imsis[:2]:
            c = connect(service)
            c.attach(imsi, b"")
            clients.append(c)
        overflow = connect(service)
        with pytest.raises(CapacityExceeded):
            overflow.attach(imsis[2], b"")
        assert len(service.active_circuits()) == 2
        clients[0].detach()
        retry = connect(service)
        retry.attach(imsis[2], b"")
        retry.detach()
        clients[1].detach()
        overflow.close()
    finally:
        service.stop()


def test_flaky_backend_refuses_attach():
    registry = SimRegistry()
    registry.register_profile(make_profile("200", flaky_attach_probability=1.0))
    service = ProviderService(registry, port=0, require_tokens=False)
    service.start()
    try:
        client = connect(service)
        imsi = registry.entries()[0].imsi
        with pytest.raises(Exception) as err:
            client.attach(imsi, b"")
        assert "reader" in str(err.value)
        client.close()
    finally:
        service.stop()


def test_unregister_guards():
    registry = SimRegistry()
    profile = make_profile("300")
    registry.register_profile(profile)
    with pytest.raises(DuplicateImsi):
        registry.register_profile(make_profile("300"))
    service = ProviderService(registry, port=0, require_tokens=False)
    service.start()
    try:
        client = connect(service)
        client.attach(profile.imsi, b"")
        with pytest.raises(RegistrySimBusy):
            service.unregister_sim(profile.imsi)
        client.detach()
        service.unregister_sim(profile.imsi)
        assert len(registry) == 0
    finally:
        service.stop()


def test_response_ordering_across_threads(provider):
    echo = type(
        "Echo",
        (),
        {
            "atr": lambda self: bytes.fromhex("3b00"),
            "reset": lambda self: None,
            "exchange": lambda self, apdu: ResponseApdu(data=bytes([apdu.p1, apdu.p2])),
        },
    )()
    provider.registry.register_entry(RegistryEntry(imsi="232030000009999", backend=echo))
    client = connect(provider)
    client.attach("232030000009999", b"")
    errors = []

    def worker(base):
        for i in range(25):
            p1, p2 = base, i
            resp = client.relay(Apdu(0xA0, 0xF2, p1, p2, le=2))
            if resp.data != bytes([p1, p2]):
                errors.append((p1, p2, resp.data))

    threads = [threading.Thread(target=worker, args=(n,)) for n in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert errors == []
    client.detach()


def test_log_counts_and_export(provider):
    client = connect(provider)
    client.attach("232030000000001", b"")
    for _ in range(3):
        client.relay(Apdu(0xA0, 0xA4, 0, 0, data=bytes.fromhex("3f00")))
    circuit = provider.active_circuits()[0]
    client.detach()

    jsonl = provider.export_apdu_log(circuit.circuit_id, "jsonl")
    lines = jsonl.decode().strip().splitlines()
    assert len(lines) == 6  # ToSim + FromSim per exchange
    records = jsonl_to_log(jsonl)
    directions = [r.direction.value for r in records]
    assert directions == ["ToSim", "FromSim"] * 3
    mono = [r.ts_mono for r in records]
    assert mono == sorted(mono)

    pcap = provider.export_apdu_log(circuit.circuit_id, "gsmtap")
    assert provider.export_apdu_log(circuit.circuit_id, "gsmtap") == pcap  # deterministic
    parsed = read_gsmtap_pcap(pcap)
    assert len(parsed) == 6
    assert parsed[0][1] == bytes.fromhex("a0a40000023f00")

    with pytest.raises(UnknownCircuit):
        provider.export_apdu_log("nope", "jsonl")


def test_empty_circuit_pcap_is_header_only(provider):
    client = connect(provider)
    client.attach("232030000000001", b"")
    circuit = provider.active_circuits()[0]
    pcap = provider.export_apdu_log(circuit.circuit_id, "gsmtap")
    assert len(pcap) == 24
    client.detach()


def test_relay_timeout_on_injected_silence_fake_clock():
    clock = ManualClock()
    registry = SimRegistry()
    registry.register_profile(make_profile("400"))
    service = ProviderService(registry, port=0, require_tokens=False, clock=clock)
    service.start()
    try:
        client = TunnelClient("127.0.0.1", service.port, clock=clock, keepalive_interval_s=0)
        client.connect()
        client.attach(registry.entries()[0].imsi, b"")
        service.inject_latency(60_000)  # server sleeps on the fake clock
        outcome = {}

        def call():
            try:
                client.relay(Apdu(0xA0, 0xA4, 0, 0, data=bytes.fromhex("3f00")))
                outcome["resp"] = True
            except TunnelTimeout:
                outcome["timeout"] = True
            except Detached:
                outcome["detached"] = True

        t = threading.Thread(target=call, daemon=True)
        t.start()
        # wait (real time) until the relay request is in flight, then
        # advance past the 30 s default deadline
        import time

        deadline = time.monotonic() + 5
        while not client._pending and time.monotonic() < deadline:
            time.sleep(0.01)
        assert client._pending, "relay request never became pending"
        clock.advance(31)
        t.join(timeout=5)
        assert not t.is_alive()
        assert outcome == {"timeout": True}
        client.close()
    finally:
        service.stop()


def test_zero_latency_injection_is_byte_identical(provider):
    def run_once():
        client = connect(provider)
        client.attach("232030000000001", b"")
        for _ in range(2):
            client.relay(Apdu(0xA0, 0xA4, 0, 0, data=bytes.fromhex("3f00")))
        circuit = [c for c in provider.active_circuits() if c.imsi == "232030000000001"][0]
        raw = b"".join(r.raw for r in circuit.log)
        client.detach()
        return raw

    baseline = run_once()
    provider.inject_latency(0)
    assert run_once() == baseline


def test_keepalive_ping_pong():
    registry = SimRegistry()
    registry.register_profile(make_profile("500"))
    service = ProviderService(registry, port=0, require_tokens=False)
    service.start()
    try:
        client = TunnelClient("127.0.0.1", service.port, keepalive_interval_s=0.05)
        client.connect()
        client.attach(registry.entries()[0].imsi, b"")
        import time

        time.sleep(0.3)
        assert client.state.value == "Active"
        client.ping()
        client.detach()
    finally:
        service.stop()
