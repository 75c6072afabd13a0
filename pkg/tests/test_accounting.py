import pytest

from scenario_support import make_config

from ecosense import presets
from ecosense.accounting import (
    DivisionByZeroBaselineError,
    RunLedger,
    SystemMetrics,
    ZeroTotalEnergyError,
    breakdown,
    build_ledger,
    dtvr,
    ecr,
    energy_of,
    realtime_check,
)
from ecosense.domain import ChannelProfile, PlatformProfile
from ecosense.oracles import DifficultyModel
from ecosense.pipeline import RoutingPolicy, run_scenario

TPU_DEV = PlatformProfile("TPU Dev", 9, 3.47, "edge")
ALVEO = PlatformProfile("Alveo U200", 16.8, 17.8, "cloud")
CHANNEL = ChannelProfile(1.25e6, 1e-7, 256)


def ledgers_for(config):
    from dataclasses import replace

    out = {}
    frames = config.build_frames()
    for mode in ("collaborative", "all-edge", "all-cloud"):
        results = run_scenario(
            replace(config, routing=replace(config.routing, mode=mode)), frames=frames
        )
        out[mode] = build_ledger(results, config.edge_platform, config.cloud_platform,
                                 config.channel)
    return out


class TestEnergyOf:
    def test_zero_events(self):
        assert energy_of([], TPU_DEV, ALVEO, CHANNEL) == (0.0, 0.0, 0.0)

    def test_single_edge_inference_on_tpu_dev(self):
        config = make_config(routing=RoutingPolicy(mode="all-edge"), frame_count=1)
        results = run_scenario(config)
        edge_j, comm_j, cloud_j = energy_of(results, TPU_DEV, ALVEO, CHANNEL)
        n = results[0].edge_inferences
        # 9 ms at 3.47 W is 0.031230 J per inference.
        assert edge_j == pytest.approx(n * 0.031230, abs=1e-9)
        assert comm_j == 0.0 and cloud_j == 0.0

    def test_ten_cloud_inferences_on_alveo(self):
        ledger = RunLedger(cloud_inferences=10)
        assert 10 * ALVEO.energy_per_inference_j == pytest.approx(2.99040, abs=1e-9)
        assert ledger.cloud_inferences * ALVEO.energy_per_inference_j == pytest.approx(2.99040)

    def test_matches_ledger_totals(self):
        config = make_config(frame_count=20)
        results = run_scenario(config)
        triple = energy_of(results, config.edge_platform, config.cloud_platform, config.channel)
        ledger = build_ledger(results, config.edge_platform, config.cloud_platform,
                              config.channel)
        assert triple == pytest.approx(
            (ledger.edge_energy_j, ledger.comm_energy_j, ledger.cloud_energy_j)
        )


class TestDtvr:
    def test_no_cloud_routing_is_zero(self):
        config = make_config(
            routing=RoutingPolicy(tau=1.0),
            difficulty=DifficultyModel(p_hard=0.2, p_edge_correct_easy=1.0, tpr=1.0, fpr=0.0),
        )
        ledgers = ledgers_for(config)
        assert dtvr(ledgers["collaborative"], ledgers["all-cloud"]) == 0.0

    def test_self_baseline_is_one(self):
        ledgers = ledgers_for(make_config())
        assert dtvr(ledgers["all-cloud"], ledgers["all-cloud"]) == 1.0

    def test_zero_baseline_rejected(self):
        with pytest.raises(DivisionByZeroBaselineError):
            dtvr(RunLedger(), RunLedger())

    def test_collaborative_below_one_for_subframe_crops(self):
        ledgers = ledgers_for(make_config(frame_count=30))
        assert dtvr(ledgers["collaborative"], ledgers["all-cloud"]) <= 1.0


class TestEcr:
    def test_self_baseline_is_one(self):
        ledgers = ledgers_for(make_config())
        assert ecr(ledgers["all-cloud"], ledgers["all-cloud"]) == 1.0

    def test_degenerate_limit_is_ratio_of_cloud_counts(self):
        ours = RunLedger(cloud_inferences=3, cloud_energy_j=3 * ALVEO.energy_per_inference_j)
        base = RunLedger(cloud_inferences=12, cloud_energy_j=12 * ALVEO.energy_per_inference_j)
        assert ecr(ours, base) == pytest.approx(0.25)

    def test_decomposition_identity(self):
        ledgers = ledgers_for(make_config(frame_count=40))
        ours, base = ledgers["collaborative"], ledgers["all-cloud"]
        ratio = ecr(ours, base)
        assert ratio * base.total_energy_j == pytest.approx(ours.total_energy_j, rel=1e-9)

    def test_zero_baseline_rejected(self):
        with pytest.raises(DivisionByZeroBaselineError):
            ecr(RunLedger(), RunLedger())


class TestBreakdown:
    def test_only_comm(self):
        assert breakdown(RunLedger(comm_energy_j=2.0)) == (0.0, 1.0, 0.0)

    def test_equal_thirds(self):
        shares = breakdown(RunLedger(edge_energy_j=5.0, comm_energy_j=5.0, cloud_energy_j=5.0))
        assert shares == pytest.approx((1 / 3, 1 / 3, 1 / 3))

    def test_sums_to_one_and_comm_share_shrinks_vs_centralized(self):
        ledgers = ledgers_for(make_config(frame_count=40))
        ours = breakdown(ledgers["collaborative"])
        base = breakdown(ledgers["all-cloud"])
        assert sum(ours) == pytest.approx(1.0, abs=1e-9)
        assert sum(base) == pytest.approx(1.0, abs=1e-9)
        assert ours[1] < base[1]

    def test_zero_total_rejected(self):
        with pytest.raises(ZeroTotalEnergyError):
            breakdown(RunLedger())


class TestRealtimeCheck:
    def test_tpu_dev_passes(self):
        assert realtime_check(TPU_DEV)

    def test_jetson_nano_fails(self):
        assert not realtime_check(PlatformProfile("Nano", 350, 3.9, "edge"))

    def test_full_platform_sweep_matches_published_sets(self):
        verdicts = {
            p.name: realtime_check(p) for p in presets.platforms() if p.role == "edge"
        }
        assert {name for name, ok in verdicts.items() if ok} == {
            "TPU USB", "TPU Dev", "TPU Mini",
        }
        assert {name for name, ok in verdicts.items() if not ok} == {
            "Orin", "Orin Nano", "Nano", "ZCU104", "Kria 260",
        }

    def test_monotone_in_latency(self):
        slow = PlatformProfile("slow", 65.9, 1.0, "edge")
        faster = PlatformProfile("faster", 30.0, 1.0, "edge")
        assert realtime_check(slow)
        assert realtime_check(faster)
        assert not realtime_check(PlatformProfile("too-slow", 66.0, 1.0, "edge"))


class TestModeConsistency:
    def test_all_edge_ledger_transmits_nothing(self):
        ledgers = ledgers_for(make_config(frame_count=20))
        assert ledgers["all-edge"].bytes_up == 0
        assert ledgers["all-edge"].bytes_down == 0

    def test_all_cloud_ledger_ships_frames_plus_result_envelopes(self):
        config = make_config(frame_count=20)
        ledgers = ledgers_for(config)
        cloud = ledgers["all-cloud"]
        assert cloud.bytes_up == 20 * config.frame.frame_bytes
        assert cloud.bytes_down == cloud.events * config.channel.result_metadata_bytes


class TestLedgerAdditivity:
    def test_concatenation_equals_summed_ledgers(self):
        config = make_config(frame_count=30)
        frames = config.build_frames()
        results = run_scenario(config, frames=frames)
        first = build_ledger(results[:10], config.edge_platform, config.cloud_platform,
                             config.channel)
        second = build_ledger(results[10:], config.edge_platform, config.cloud_platform,
                              config.channel)
        whole = build_ledger(results, config.edge_platform, config.cloud_platform,
                             config.channel)
        merged = first + second
        merged_dict = merged.to_dict()
        whole_dict = whole.to_dict()
        for key in ("correct_by_class", "incorrect_by_class"):
            assert merged_dict.pop(key) == whole_dict.pop(key)
        assert merged_dict == pytest.approx(whole_dict)

    def test_metrics_of_merged_ledgers_match(self):
        config = make_config(frame_count=30)
        ledgers = ledgers_for(config)
        ours, base = ledgers["collaborative"], ledgers["all-cloud"]
        doubled_ours = ours + ours
        doubled_base = base + base
        assert dtvr(doubled_ours, doubled_base) == pytest.approx(dtvr(ours, base))
        assert ecr(doubled_ours, doubled_base) == pytest.approx(ecr(ours, base))
        assert breakdown(doubled_ours) == pytest.approx(breakdown(ours))


class TestSystemMetrics:
    def test_breakdown_must_sum_to_one(self):
        with pytest.raises(ValueError):
            SystemMetrics(dtvr=0.1, ecr=0.2, accuracy=0.9,
                          breakdown=(0.5, 0.2, 0.2), realtime_ok=True)

    def test_round_trip_dict(self):
        metrics = SystemMetrics(dtvr=0.1, ecr=0.2, accuracy=0.9,
                                breakdown=(0.5, 0.3, 0.2), realtime_ok=True)
        data = metrics.to_dict()
        assert data["breakdown_comm"] == 0.3
        assert data["realtime_ok"] is True
