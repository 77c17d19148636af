"""Acceptance suite: one test per acceptance criterion, each printing a
pass/fail line with the measured values and the tolerance it was held to.

The flight-test scenario classes are reproduced in simulation with
scripted adversarial pilots; tolerances follow the discretization-aware
rule tol = 2 * rate * dt (reported per criterion).  Run with

    pytest tests/test_acceptance.py -v -s
"""

import math
import time

import numpy as np
import pytest

from rta.constraints import violation_tolerances
from rta.filtering import LAMBDA_SNAP, BlendConfig, ControlLimits, GenericBackupPolicy, blend_lambda, blended_filter
from rta.dynamics import FixedWingModel, FixedWingParams
from rta.harness import benchmark, export_trace, invariance_probe, run_scenario
from rta.scenarios import build_model, build_runtime, build_spec, builtin_scenarios
from rta.units import m_to_ft

FIXED_WING_SCENARIOS = [
    "null_trim",
    "g_limit_assault",
    "ceiling_floor_assault",
    "geofence_assault",
    "geofence_floor",
    "geofence_floor_gload",
]


def check(label: str, ok: bool, detail: str):
    print(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    assert ok, f"{label}: {detail}"


@pytest.fixture(scope="module")
def runs():
    """All built-in scenarios, run once and cached for the whole module."""
    out = {}
    for name, cfg in builtin_scenarios().items():
        t0 = time.perf_counter()
        trace, report = run_scenario(cfg)
        out[name] = (cfg, trace, report, time.perf_counter() - t0)
    return out


class TestLoadFactorLimiting:
    def test_command_clamped_exactly(self, runs):
        cfg, tr, rep, wall = runs["g_limit_assault"]
        lo, hi = cfg.limits.load
        requested = tr.u_d[:, 1]
        commanded = tr.u_out[:, 1]
        ok = bool((commanded <= hi).all() and (commanded >= lo).all())
        check(
            "load-factor command clamp (exact)",
            ok and requested.max() > hi,  # the pilot really asked for more
            f"commanded u_z in [{commanded.min():.3f}, {commanded.max():.3f}] g "
            f"vs limits [{lo}, {hi}] g, pilot requested up to {requested.max():.1f} g",
        )

    def test_measured_overshoot(self, runs):
        cfg, tr, rep, wall = runs["g_limit_assault"]
        lo, hi = cfg.limits.load
        n_z = tr.states[:, 7]
        overshoot = max(float(n_z.max() - hi), float(lo - n_z.min()), 0.0)
        check(
            "measured N_z overshoot <= 0.3 g",
            overshoot <= 0.3,
            f"transient overshoot {overshoot:.4f} g (N_z in "
            f"[{n_z.min():.3f}, {n_z.max():.3f}])",
        )

    def test_runtime_budget(self, runs):
        _, _, _, wall = runs["g_limit_assault"]
        check("load-factor scenario runtime < 5 s", wall < 5.0, f"wall {wall:.2f} s")


class TestAltitudeLimits:
    def test_altitude_stays_inside_band(self, runs):
        cfg, tr, rep, wall = runs["ceiling_floor_assault"]
        model = build_model(cfg)
        spec = build_spec(cfg, model)
        tol_m = violation_tolerances(spec, cfg.run.sim_dt, model)["floor"] * model.params.V_T
        tol_ft = m_to_ft(tol_m)
        H_ft = np.array([m_to_ft(v) for v in tr.states[:, 5]])
        ok = bool((H_ft >= 18700.0 - tol_ft).all() and (H_ft <= 22700.0 + tol_ft).all())
        check(
            "altitude within [floor - tol, ceiling + tol], tol < 50 ft",
            ok and tol_ft < 50.0,
            f"H in [{H_ft.min():.1f}, {H_ft.max():.1f}] ft vs [18700, 22700] ft, "
            f"tol_inv = {tol_ft:.2f} ft",
        )

    def test_pilot_keeps_partial_authority(self, runs):
        _, tr, rep, _ = runs["ceiling_floor_assault"]
        check(
            "max lambda < 1 for the entire run",
            rep.max_lambda < 1.0,
            f"max lambda = {rep.max_lambda:.6f}",
        )

    def test_authority_returns_after_turn_away(self, runs):
        _, tr, rep, _ = runs["ceiling_floor_assault"]
        ok = all(ev["ok"] for ev in rep.authority_return)
        detail = "; ".join(
            f"turn-away {ev['t_away']:.0f}s -> lambda<0.05 by "
            + (f"{ev['recovered_by']:.1f}s" if ev["ok"] else "never")
            for ev in rep.authority_return
        )
        check("lambda < 0.05 within 10 s of turning away", ok, detail)

    def test_runtime_budget(self, runs):
        _, _, _, wall = runs["ceiling_floor_assault"]
        check("altitude scenario runtime < 10 s", wall < 10.0, f"wall {wall:.2f} s")


def _parallel_window(tr, n_g, limit_deg=10.0):
    """Longest trailing window (s) with heading within limit_deg of
    fence-parallel."""
    psi = tr.states[:, 2]
    heading_away = np.abs(
        np.cos(psi) * n_g[0] + np.sin(psi) * n_g[1]
    )  # |cos(angle to normal)|; parallel when ~0
    dev_deg = np.degrees(np.arcsin(np.clip(heading_away, 0, 1)))
    ok = dev_deg <= limit_deg
    n = len(ok)
    k = n
    while k > 0 and ok[k - 1]:
        k -= 1
    return (n - k) * (tr.t[1] - tr.t[0])


class TestGeofence:
    def test_fence_never_meaningfully_crossed(self, runs):
        cfg, tr, rep, _ = runs["geofence_assault"]
        tol = rep.tol_by_constraint["fence"]
        h5_min = rep.min_h_by_constraint["fence"]
        check(
            "min h5 >= -tol_inv",
            h5_min >= -tol,
            f"min fence margin {h5_min:.4f} vs tolerance -{tol:.3f} "
            "(scaled distance on the violating side)",
        )

    def test_final_track_parallel(self, runs):
        cfg, tr, rep, _ = runs["geofence_assault"]
        n_g = np.asarray(cfg.safety.constraints[0].n_g, dtype=float)
        window = _parallel_window(tr, n_g)
        check(
            "final ground track fence-parallel within 10 deg for >= 20 s",
            window >= 20.0,
            f"trailing parallel window {window:.1f} s",
        )


class TestCombinedConstraints:
    def test_all_three_criteria_over_two_episodes(self, runs):
        cfg, tr, rep, _ = runs["geofence_floor_gload"]
        lo, hi = cfg.limits.load
        commanded = tr.u_out[:, 1]
        load_ok = bool((commanded >= lo).all() and (commanded <= hi).all())
        check(
            "combined: load command clamp (exact)",
            load_ok and tr.u_d[:, 1].max() > hi,
            f"commanded u_z in [{commanded.min():.3f}, {commanded.max():.3f}] g",
        )

        floor_tol = rep.tol_by_constraint["floor"]
        floor_min = rep.min_h_by_constraint["floor"]
        check(
            "combined: altitude floor satisfied",
            floor_min >= -floor_tol,
            f"min floor margin {floor_min:.4f} (tol {floor_tol:.3f})",
        )

        fence_tol = rep.tol_by_constraint["fence"]
        fence_min = rep.min_h_by_constraint["fence"]
        check(
            "combined: geofence satisfied",
            fence_min >= -fence_tol,
            f"min fence margin {fence_min:.4f} (tol {fence_tol:.3f})",
        )

        # two distinct intervention episodes: clusters of lambda >= 0.05
        # containing lambda > 0.5, separated by pilot-in-control stretches
        active = tr.lam >= 0.05
        edges = np.flatnonzero(np.diff(active.astype(int)))
        segments = np.split(np.arange(len(tr)), edges + 1)
        episodes = [
            seg for seg in segments if active[seg[0]] and tr.lam[seg].max() > 0.5
        ]
        check(
            "combined: two assault episodes",
            len(episodes) == 2,
            f"{len(episodes)} intervention episodes at "
            f"t = {[round(float(tr.t[s[0]]), 1) for s in episodes]}",
        )

        recov_ok = all(ev["ok"] for ev in rep.authority_return)
        check(
            "combined: authority returns after each episode",
            recov_ok,
            "; ".join(
                f"{ev['t_away']:.0f}s -> "
                + (f"{ev['recovered_by']:.1f}s" if ev["ok"] else "never")
                for ev in rep.authority_return
            ),
        )


class TestEmpiricalInvariance:
    @pytest.mark.parametrize("name", FIXED_WING_SCENARIOS)
    def test_probe_500_samples(self, name):
        pr = invariance_probe(builtin_scenarios()[name], samples=500, seed=20)
        check(
            f"invariance probe[{name}]: zero violations at tol_inv",
            pr.violations == 0 and pr.samples == 500,
            f"{pr.samples} samples (tried {pr.candidates_tried}), "
            f"{pr.violations} violations, worst path margin "
            f"{pr.worst_path_margin:.3f}, tol {pr.tol:.3f}",
        )
        check(
            f"invariance probe[{name}]: fine-step agreement >= 99%",
            pr.fine_check_agreement >= 0.99 and pr.fine_disagreements_bounded,
            f"h_I sign agreement {pr.fine_check_agreement:.4f}, "
            f"disagreements confined to |h_I| < 2 tol: {pr.fine_disagreements_bounded}",
        )


class TestFilterAlgebra:
    N = 10_000

    def _random_states(self, rng, n):
        return np.column_stack(
            [
                rng.uniform(-0.9, 0.9, n),
                rng.uniform(-0.5, 0.5, n),
                rng.uniform(-math.pi, math.pi, n),
                rng.uniform(-8000, 8000, n),
                rng.uniform(-8000, 8000, n),
                rng.uniform(4000, 8000, n),
                rng.uniform(-1.0, 1.0, n),
                rng.uniform(0.0, 4.0, n),
            ]
        )

    def test_h_I_never_exceeds_h_now(self):
        cfg = builtin_scenarios()["geofence_assault"]
        model, spec, limits, runtime = build_runtime(cfg)
        from rta.constraints import combine

        rng = np.random.default_rng(31)
        worst = math.inf
        for x in self._random_states(rng, self.N):
            _, h_I = runtime.best_policy(x)
            h_now, _ = combine(spec, x, model)
            worst = min(worst, h_now - h_I)
            assert h_I <= h_now + 1e-9
        check(
            "h_I <= h at theta = 0 (10^4 random states)",
            True,
            f"min(h - h_I) = {worst:.4f} >= -1e-9",
        )

    def test_lambda_range_and_monotonicity(self):
        rng = np.random.default_rng(32)
        cfg = BlendConfig(beta=1.0)
        hs = np.sort(rng.uniform(-20.0, 60.0, self.N))
        lams = np.array([blend_lambda(h, cfg) for h in hs])
        ok = bool(
            ((lams >= 0.0) & (lams <= 1.0)).all()
            and (lams[:-1] >= lams[1:] - 1e-15).all()
        )
        check(
            "lambda in [0,1] and monotone (10^4 points)",
            ok,
            f"range [{lams.min():.3g}, {lams.max():.3g}], nonincreasing",
        )

    def test_blend_box_preservation(self):
        """u_out stays in the box whenever the clamped pilot command and the
        backup command are both inside it (10^4 triples)."""
        rng = np.random.default_rng(33)
        model = FixedWingModel(FixedWingParams())
        from rta.constraints import ConstraintSpec, SafetySpec

        spec = SafetySpec(
            [ConstraintSpec(name="f", kind="alt_floor", params={"H_min": 0.0}, scale=150.0)]
        )
        limits = ControlLimits.fixed_wing(load=None)
        cfg = BlendConfig(beta=1.0)
        x = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 6000.0, 0.0, 1.0])
        worst = 0.0
        for _ in range(self.N):
            u_b = rng.uniform(limits.lo, limits.hi)
            u_d = rng.uniform(limits.lo, limits.hi)
            hb = rng.uniform(-1.0, 3.0)
            pol = GenericBackupPolicy(
                controller=lambda s, t, u=u_b: u,
                backup_set=lambda s, v=hb: v,
                horizon=0.5,
                rollout_dt=0.5,
            )
            dec = blended_filter(
                x, 0.0, lambda s, t, u=u_d: u, pol, spec, cfg, limits, model=model
            )
            worst = max(
                worst,
                float(np.max(dec.u_out - limits.hi)),
                float(np.max(limits.lo - dec.u_out)),
            )
        check(
            "blend preserves the input box (10^4 triples)",
            worst <= 0.0,
            f"worst box excess {worst:.3g}",
        )

    def test_snap_to_pilot_below_threshold(self):
        """lambda < 1e-6 implies u_out == clamp(u_d) exactly."""
        cfg = builtin_scenarios()["null_trim"]
        model, spec, limits, runtime = build_runtime(cfg)
        rng = np.random.default_rng(34)
        checked = 0
        for _ in range(2000):
            x = np.array(
                [
                    rng.uniform(-0.3, 0.3), rng.uniform(-0.2, 0.2),
                    rng.uniform(-math.pi, math.pi), 0.0, 0.0,
                    rng.uniform(5500, 7500), rng.uniform(-0.3, 0.3),
                    rng.uniform(0.5, 2.0),
                ]
            )
            u_d = np.array([rng.uniform(-2, 2), rng.uniform(-1, 7)])
            runtime.reset()
            dec = runtime.decide(x, 0.0, u_d)
            if dec.lam < LAMBDA_SNAP:
                assert np.array_equal(dec.u_out, limits.clamp(u_d))
                checked += 1
        check(
            "lambda < 1e-6 implies exact pilot passthrough",
            checked > 1000,
            f"{checked} states verified bit-exact",
        )


class TestQuadrotor:
    def test_stops_without_crossing(self, runs):
        cfg, tr, rep, _ = runs["quad_geofence"]
        speed = np.linalg.norm(tr.states[:, 7:10], axis=1)
        eps = 2.0
        tol = max(rep.tol_by_constraint.values())
        min_margin = min(rep.min_h_by_constraint.values())
        check(
            "quad stops from 28 m/s without crossing the box",
            min_margin >= -tol and speed[-1] < eps,
            f"min normalized box margin {min_margin:.4f} (tol {tol:.3f}), "
            f"peak speed {speed.max():.1f} m/s, terminal speed {speed[-1]:.3f} "
            f"< eps = {eps} m/s",
        )


class TestDeterminism:
    @pytest.mark.parametrize("name", list(builtin_scenarios().keys()))
    def test_byte_identical_reruns(self, name, runs, tmp_path):
        cfg, first_trace, _, _ = runs[name]
        second_trace, _ = run_scenario(builtin_scenarios()[name])
        p1 = tmp_path / "a.csv"
        p2 = tmp_path / "b.csv"
        export_trace(first_trace, str(p1))
        export_trace(second_trace, str(p2))
        ok = p1.read_bytes() == p2.read_bytes()
        check(f"determinism[{name}]: byte-identical CSV", ok,
              f"{p1.stat().st_size} bytes compared")


class TestRealTimeBudget:
    def test_p99_tick_under_10ms(self):
        timing = benchmark(ticks=2000)
        check(
            "p99 per-tick filter+integrate+serialize < 10 ms "
            "(30 s / 0.02 s rollout)",
            timing["tick_ms_p99"] < 10.0,
            f"p99 {timing['tick_ms_p99']:.3f} ms, max {timing['tick_ms_max']:.3f} ms, "
            f"mean {timing['tick_ms_mean']:.3f} ms",
        )
