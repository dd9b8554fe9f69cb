"""Simulation harness: frame labeling, metrics extraction, report/log
consistency, loss sweeps, and risk-table plumbing."""

from __future__ import annotations

import math

import pytest

from tcassim import fta, harness
from tcassim import modes_codec as codec
from tcassim import scenario as scen
from tcassim.airspace import read_event_log, write_event_log


def crossing_doc(**extra) -> dict:
    """Two aircraft meeting head-on at the same altitude: guaranteed contact."""
    doc = {
        "schema_version": 1,
        "name": "crossing",
        "duration_s": 60.0,
        "aircraft": [
            {"name": "one", "icao": "100001", "mode": "xpdr", "squitter": False,
             "position": {"x_nmi": -4.0, "y_nmi": 0.0, "altitude_ft": 20000.0},
             "velocity": {"vx_kt": 480.0, "vy_kt": 0.0, "vertical_rate_fpm": 0.0}},
            {"name": "two", "icao": "100002", "mode": "xpdr", "squitter": False,
             "position": {"x_nmi": 4.0, "y_nmi": 0.0, "altitude_ft": 20000.0},
             "velocity": {"vx_kt": -480.0, "vy_kt": 0.0, "vertical_rate_fpm": 0.0}},
        ],
        "success": ["nmac_occurred"],
    }
    doc.update(extra)
    return doc


class TestFrameLabel:
    def test_self_checking_downlink_formats(self):
        df11 = codec.build_reply("all_call", 0xABC123)
        df17 = codec.build_reply("extended_squitter", 0xABC123, altitude_ft=10000)
        assert harness.frame_label(df11.to_hex()) == "DF11"
        assert harness.frame_label(df17.to_hex()) == "DF17"

    def test_all_call_interrogation_splits_on_parity(self):
        uf11 = codec.build_interrogation("all_call")
        assert harness.frame_label(uf11.to_hex()) == "UF11"

    def test_addressed_formats_split_on_destination(self):
        uf4 = codec.build_interrogation("surveillance_short", 0xABC123)
        df4 = codec.build_reply("surveillance_short", 0xABC123, altitude_ft=9000)
        assert harness.frame_label(uf4.to_hex(), "abc123") == "UF4"
        assert harness.frame_label(df4.to_hex(), "*") == "DF4"
        uf20 = codec.build_interrogation("surveillance_long", 0xABC123, sender=0x0000FF)
        assert harness.frame_label(uf20.to_hex(), "abc123") == "UF20"

    def test_garbage(self):
        assert harness.frame_label("zz") == "invalid"


class TestSimulate:
    def test_nmac_detected_and_logged(self):
        result = harness.simulate(scen.load_scenario(crossing_doc()))
        report = result.report
        assert report.nmac_occurred
        ((a, b, on_ns, off_ns),) = report.nmac_windows
        assert {a, b} == {"one", "two"}
        # 8 nmi head-on at 960 kt: contact half-window is 500 ft of closure
        center = 8.0 / 960.0 * 3600.0
        half = 500.0 / 6076.115485564304 / (960.0 / 3600.0)
        assert on_ns / 1e9 == pytest.approx(center - half, abs=1e-3)
        assert off_ns / 1e9 == pytest.approx(center + half, abs=1e-3)
        assert report.success == {"nmac_occurred": True}
        assert any(r.kind == "nmac" for r in result.records)

    def test_report_recomputable_from_log(self, tmp_path):
        scenario = scen.bundled_scenario("all_call_flood")
        result = harness.simulate(scenario)
        path = tmp_path / "events.log"
        write_event_log(path, result.records)
        again = harness.metrics_from_log(read_event_log(path), scenario)
        assert again == result.report

    def test_flood_delivery_count(self):
        report = harness.simulate(scen.bundled_scenario("all_call_flood")).report
        assert report.deliveries["DF11>ground"] == 1000
        assert report.frames_sent["UF11"] == 100
        assert report.success == {"flood_complete": True}

    def test_jammed_transmissions_counted(self):
        report = harness.simulate(scen.bundled_scenario("head_on_phantom")).report
        assert report.transmit_outcomes["jammed"] > 0
        assert report.transmit_outcomes["sent"] > 0

    def test_plan_error_series_present_for_phantom(self):
        report = harness.simulate(scen.bundled_scenario("head_on_phantom")).report
        assert len(report.plan_error_series) > 100
        worst = max(abs(err) for _, _, _, err in report.plan_error_series)
        assert worst < 0.01

    def test_lossy_links_balance(self):
        doc = crossing_doc(seed=13, channel={"kind": "awgn", "snr_db": 4.0},
                           duration_s=10.0, success=[])
        doc["aircraft"][0].update(mode="ta_ra", squitter=True)
        doc["aircraft"][1].update(squitter=True)
        report = harness.simulate(scen.load_scenario(doc)).report
        assert report.links  # traffic flowed
        lost = 0
        for stats in report.links.values():
            assert stats["attempts"] == stats["decoded"] + stats["lost"]
            lost += stats["lost"]
        assert lost > 0  # 4 dB is a hostile channel

    def test_benign_pair_round_counts(self):
        report = harness.simulate(scen.bundled_scenario("benign_pair")).report
        assert set(report.rounds_per_track.values()) == {600}
        assert report.advisories == []
        assert not report.nmac_occurred


class TestLossSweep:
    SCENARIO = scen.load_scenario({
        "schema_version": 1, "name": "probe", "duration_s": 1.0, "seed": 21,
        "channel": {"kind": "awgn", "snr_db": 10.0},
        "aircraft": [{"name": "solo", "icao": "ABC123", "mode": "xpdr",
                      "position": {"x_nmi": 0.0, "y_nmi": 0.0, "altitude_ft": 30000.0}}],
    })

    def test_rows_sorted_and_sized(self):
        points = harness.loss_sweep(self.SCENARIO, [20.0, 5.0, None], corpus_size=60)
        assert [p.snr_db for p in points] == [5.0, 20.0, None]
        assert all(p.samples == 60 for p in points)

    def test_noiseless_sentinel_is_lossless(self):
        (point,) = harness.loss_sweep(self.SCENARIO, [None], corpus_size=80)
        assert point.lost == 0
        assert point.loss_fraction == 0.0
        (point,) = harness.loss_sweep(self.SCENARIO, [math.inf], corpus_size=80)
        assert point.lost == 0

    def test_deterministic(self):
        a = harness.loss_sweep(self.SCENARIO, [8.0, 12.0], corpus_size=50)
        b = harness.loss_sweep(self.SCENARIO, [8.0, 12.0], corpus_size=50)
        assert a == b

    def test_csv_rendering(self):
        points = harness.loss_sweep(self.SCENARIO, [None], corpus_size=10)
        text = harness.loss_table_csv(points)
        assert text.splitlines()[0] == "snr_db,samples,lost,loss_fraction"
        assert text.splitlines()[1] == "inf,10,0,0"


class TestFtaReport:
    def test_default_document_gives_published_row(self):
        rows, table = harness.fta_report(None)
        assert len(rows) == 1
        rep = rows[0].report
        assert (rep.p_unresolved, rep.p_induced) == (0.413, 0.11)
        assert rep.p_top_sum == pytest.approx(0.523, abs=1e-12)
        assert rep.p_top_published == 0.424
        assert "0.413,0.11,0.523,0.424" in table

    def test_grid_cardinality(self):
        rows, _ = harness.fta_report({"grid": {"rnf": [0, 0.5, 1], "ti": [0, 1]}})
        assert len(rows) == 6

    def test_factors_document(self):
        rows, _ = harness.fta_report({"factors": {"ti": 0.5}})
        assert rows[0].report.p_induced == pytest.approx(0.405, abs=1e-12)

    def test_attack_overrides_elevate_and_flag(self):
        rows, _ = harness.fta_report({
            "factors": {"vna": 1.0, "tna": 1.0, "rnf": 1.0},
            "overrides": {"n": 1.0, "o": 1.0}})
        rep = rows[0].report
        assert rep.risk_ratio > 1.0
        assert "p_unresolved>1" in rep.flags

    def test_unknown_fields_rejected(self):
        with pytest.raises(fta.FtaError, match="mood"):
            harness.fta_report({"mood": {}})
        with pytest.raises(fta.FtaError):
            harness.fta_report({"overrides": {"zz": 0.5}})


class TestSuccessRegistry:
    def test_registry_matches_scenario_vocabulary(self):
        assert set(harness.SUCCESS_CHECKS) == set(scen.SUCCESS_PREDICATES)
