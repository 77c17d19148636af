"""Scenario engine, trace files, reports, and probe tests.

The long acceptance-grade runs live in test_acceptance.py; these tests
exercise the machinery on short scenarios.
"""

import math
import os

import numpy as np
import pytest

from rta.harness import (
    SimTrace,
    benchmark,
    export_trace,
    import_trace,
    invariance_probe,
    render_report,
    run_scenario,
)
from rta.scenarios import (
    ScenarioConfig,
    build_runtime,
    builtin_scenarios,
    dump_scenario,
    load_scenario,
)


def short_fw_scenario(**overrides) -> ScenarioConfig:
    cfg = {
        "name": "short",
        "model": {"kind": "fixed_wing", "params": {"V_T": 150.0},
                  "initial_state": {"H": 6400.0}},
        "safety": {"constraints": [{"name": "floor", "kind": "alt_floor", "H_min": 500.0}]},
        "backup": {"kind": "turn"},
        "blend": {"beta": 1.0},
        "pilot": {"name": "p", "phases": [{"t0": 0.0, "t1": 5.0, "law": "trim"}]},
        "run": {"duration": 2.0, "sim_dt": 0.01},
    }
    cfg.update(overrides)
    return ScenarioConfig(**cfg)


class TestRunScenario:
    def test_null_pilot_is_untouched(self):
        """Far from all constraints the filter passes the pilot through
        exactly and lambda stays below 1e-6."""
        tr, rep = run_scenario(short_fw_scenario())
        assert rep.passed
        assert (tr.lam < 1e-6).all()
        np.testing.assert_array_equal(tr.u_d, tr.u_out)

    def test_trace_shape_and_time_grid(self):
        cfg = short_fw_scenario()
        tr, _ = run_scenario(cfg)
        assert len(tr) == 200
        assert tr.t[0] == 0.0
        np.testing.assert_allclose(np.diff(tr.t), 0.01, rtol=1e-12)

    def test_domain_exit_aborts_with_partial_trace(self):
        # filter disabled from the start: the sustained 6 g pull pitches
        # through the model's vertical singularity
        cfg = short_fw_scenario(
            pilot={"name": "p", "phases": [
                {"t0": 0.0, "t1": 30.0, "law": "const", "params": {"u_P": 0.0, "u_z": 6.0}}]},
            run={"duration": 30.0, "sim_dt": 0.01, "filter_disable_at": 0.0},
            limits={"sat_z": (-1.0, 6.0), "load": None},
        )
        tr, rep = run_scenario(cfg)
        assert tr.aborted and rep.aborted
        assert not rep.passed
        assert len(tr) < 3000

    def test_filter_disable_window(self):
        cfg = short_fw_scenario(
            run={"duration": 2.0, "sim_dt": 0.01, "filter_disable_at": 1.0},
        )
        tr, rep = run_scenario(cfg)
        assert rep.filter_disabled_at == 1.0
        assert tr.filter_on[:100].all()
        assert not tr.filter_on[100:].any()
        assert np.isnan(tr.h_I[100:]).all()

    def test_simplified_model_runs(self):
        cfg = ScenarioConfig(
            name="simplified_floor",
            model={"kind": "simplified", "params": {"V_T": 150.0},
                   "initial_state": {"H": 5900.0}},
            safety={"constraints": [{"name": "floor", "kind": "alt_floor", "H_min": 5500.0}]},
            backup={"kind": "turn", "horizon": 8.0, "rollout_dt": 0.1},
            blend={"beta": 1.0},
            pilot={"name": "dive", "phases": [
                {"t0": 0.0, "t1": 20.0, "law": "s_nz_step", "params": {"u_z": 0.4}}]},
            run={"duration": 20.0, "sim_dt": 0.05},
        )
        tr, rep = run_scenario(cfg)
        assert rep.passed, rep.failures
        assert tr.states[:, 0].min() >= 5500.0 - 3.0
        assert tr.lam.max() > 0.5  # the dive forces an intervention


class TestBuiltinScenarios:
    def test_catalog_contents(self):
        cfgs = builtin_scenarios()
        for required in (
            "g_limit_assault", "ceiling_floor_assault", "geofence_assault",
            "geofence_floor", "geofence_floor_gload", "quad_geofence",
        ):
            assert required in cfgs

    def test_geofence_assault_starts_perpendicular(self):
        cfg = builtin_scenarios()["geofence_assault"]
        from rta.scenarios import initial_state

        x0 = initial_state(cfg)
        fence = cfg.safety.constraints[0]
        n_g = np.asarray(fence.n_g, dtype=float)
        heading = np.array([math.cos(x0[2]), math.sin(x0[2])])
        assert float(heading @ n_g) == pytest.approx(-1.0)  # head-on

    def test_quad_starts_at_100_kmh(self):
        cfg = builtin_scenarios()["quad_geofence"]
        from rta.scenarios import initial_state

        v = initial_state(cfg)[7:10]
        assert np.linalg.norm(v) * 3.6 == pytest.approx(100.8)

    def test_every_builtin_validates(self):
        # pydantic re-validation of a round-tripped dump
        for name, cfg in builtin_scenarios().items():
            ScenarioConfig(**cfg.model_dump())


class TestScenarioFiles:
    def test_yaml_round_trip(self, tmp_path):
        cfg = short_fw_scenario()
        p = tmp_path / "s.yaml"
        p.write_text(dump_scenario(cfg))
        cfg2 = load_scenario(str(p))
        assert cfg2 == cfg

    def test_unknown_keys_are_errors(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text(dump_scenario(short_fw_scenario()).replace("name: short", "name: short\nbogus_key: 1"))
        with pytest.raises(Exception):
            load_scenario(str(p))

    def test_feet_and_meters_are_exclusive(self):
        with pytest.raises(Exception):
            short_fw_scenario(
                safety={"constraints": [
                    {"name": "floor", "kind": "alt_floor", "H_min": 500.0, "H_min_ft": 1000.0}]},
            )

    def test_pilot_must_cover_duration(self):
        with pytest.raises(Exception):
            short_fw_scenario(
                pilot={"name": "p", "phases": [{"t0": 0.0, "t1": 1.0, "law": "trim"}]},
                run={"duration": 5.0, "sim_dt": 0.01},
            )


class TestTraceCSV:
    def test_header_matches_interface(self, tmp_path):
        tr, _ = run_scenario(short_fw_scenario())
        p = tmp_path / "t.csv"
        export_trace(tr, str(p))
        header = p.read_text().splitlines()[0]
        assert header == (
            "t_s,phi_rad,theta_rad,psi_rad,pN_m,pE_m,H_ft,P_radps,Nz_g,"
            "uP_d_radps,uz_d_g,uP_out_radps,uz_out_g,lambda,h_I,h_min,active_constraint"
        )

    def test_round_trip_identity(self, tmp_path):
        """Parsing the CSV and re-serializing with the same formatter
        reproduces the file byte for byte (full-precision numbers)."""
        tr, _ = run_scenario(short_fw_scenario())
        p = tmp_path / "t.csv"
        export_trace(tr, str(p))
        rec = import_trace(str(p))
        original = p.read_text().splitlines()
        header = original[0].split(",")
        for i, line in enumerate(original[1:]):
            rebuilt = ",".join(
                rec[c][i] if c == "active_constraint" else repr(float(rec[c][i]))
                for c in header
            )
            assert rebuilt == line

    def test_empty_trace_gives_header_only(self, tmp_path):
        tr = SimTrace(
            model_kind="fixed_wing", constraint_names=["floor"],
            t=np.empty(0), states=np.empty((0, 8)), u_d=np.empty((0, 2)),
            u_out=np.empty((0, 2)), lam=np.empty(0), h_I=np.empty(0),
            h_min=np.empty(0), active=[], h_by_name={"floor": np.empty(0)},
            filter_on=np.empty(0, dtype=bool),
        )
        p = tmp_path / "empty.csv"
        export_trace(tr, str(p))
        assert p.read_text().splitlines() == [p.read_text().splitlines()[0]]

    def test_determinism_byte_identical(self, tmp_path):
        cfg = short_fw_scenario()
        tr1, _ = run_scenario(cfg)
        tr2, _ = run_scenario(cfg)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        export_trace(tr1, str(p1))
        export_trace(tr2, str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_io_error_carries_path(self):
        tr, _ = run_scenario(short_fw_scenario())
        with pytest.raises(OSError, match="no/such/dir"):
            export_trace(tr, "/no/such/dir/t.csv")


class TestRenderReport:
    def test_altitude_panels(self, tmp_path):
        cfg = short_fw_scenario()
        model, spec, limits, _ = build_runtime(cfg)
        tr, rep = run_scenario(cfg)
        paths = render_report(tr, rep, spec, str(tmp_path))
        names = sorted(os.path.basename(p) for p in paths)
        assert "report.txt" in names
        assert "panel_a_altitude.csv" in names
        assert "panel_b_load_factor.csv" in names
        assert "panel_c_pitch.csv" in names
        assert "panel_d_lambda.csv" in names

    def test_geofence_panels_include_ground_track(self, tmp_path):
        cfg = builtin_scenarios()["geofence_assault"]
        cfg = cfg.model_copy(deep=True)
        cfg.run.duration = 2.0
        model, spec, limits, _ = build_runtime(cfg)
        tr, rep = run_scenario(cfg)
        paths = render_report(tr, rep, spec, str(tmp_path))
        names = {os.path.basename(p) for p in paths}
        assert "panel_a_ground_track.csv" in names
        assert "panel_f_lambda.csv" in names


class TestInvarianceProbe:
    def test_rejects_negative_margin(self):
        with pytest.raises(ValueError, match="margin0"):
            invariance_probe(builtin_scenarios()["null_trim"], samples=5, margin0=-0.1)

    def test_rejects_zero_samples(self):
        with pytest.raises(ValueError):
            invariance_probe(builtin_scenarios()["null_trim"], samples=0)

    def test_small_probe_passes(self):
        pr = invariance_probe(builtin_scenarios()["geofence_assault"], samples=40, seed=3)
        assert pr.passed, pr.failures
        assert pr.samples == 40
        assert pr.violations == 0
        assert pr.fine_check_agreement >= 0.99

    def test_probe_is_seed_deterministic(self):
        a = invariance_probe(builtin_scenarios()["null_trim"], samples=20, seed=5)
        b = invariance_probe(builtin_scenarios()["null_trim"], samples=20, seed=5)
        assert a.worst_path_margin == b.worst_path_margin
        assert a.candidates_tried == b.candidates_tried


class TestBenchmark:
    def test_reports_timing_fields(self):
        out = benchmark(ticks=150)
        assert out["tick_ms_p99"] > 0
        assert out["implicit_h_ms_p50"] > 0
        assert out["rollout_horizon_s"] == 30.0
