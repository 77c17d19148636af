"""Constraint evaluation, normalization, TTC transform, and min-combination."""

import math

import numpy as np
import pytest

from rta import _kernels
from rta.constraints import (
    EPS_V,
    TTC_MAX,
    ConstraintSpec,
    MissingFieldError,
    SafetySpec,
    combine,
    constraint_margin,
    eval_constraint,
    geofence_ttc,
    pack_constraints,
    tol_inv,
)
from rta.dynamics import FixedWingModel, FixedWingParams, QuadModel, SimplifiedModel
from rta.units import ft_to_m

FW = FixedWingModel(FixedWingParams(V_T=150.0))


def fw_state(phi=0.0, theta=0.0, psi=0.0, p_n=0.0, p_e=0.0, H=6000.0, P=0.0, N_z=1.0):
    return np.array([phi, theta, psi, p_n, p_e, H, P, N_z])


def alt_floor(H_min_m, scale=None, name="floor"):
    return ConstraintSpec(
        name=name, kind="alt_floor", params={"H_min": H_min_m}, scale=scale or FW.params.V_T
    )


def alt_ceiling(H_max_m, scale=None, name="ceiling"):
    return ConstraintSpec(
        name=name, kind="alt_ceiling", params={"H_max": H_max_m}, scale=scale or FW.params.V_T
    )


def fence(p_g, n_g, name="fence"):
    return ConstraintSpec(name=name, kind="geofence", params={"p_g": p_g, "n_g": n_g})


class TestEvalConstraint:
    def test_floor_boundary_is_zero(self):
        c = alt_floor(ft_to_m(18700.0))
        x = fw_state(H=ft_to_m(18700.0))
        assert eval_constraint(c, x, FW) == pytest.approx(0.0, abs=1e-12)

    def test_load_max_values(self):
        c = ConstraintSpec(name="gmax", kind="load_max", params={"N_z_max": 4.0}, scale=1.0)
        assert eval_constraint(c, fw_state(N_z=4.0), FW) == pytest.approx(0.0)
        assert eval_constraint(c, fw_state(N_z=2.0), FW) == pytest.approx(2.0)

    def test_geofence_dot_product_geometry(self):
        c = fence(p_g=(1000.0, 0.0), n_g=(1.0, 0.0))
        on_fence = fw_state(p_n=1000.0, p_e=500.0)
        assert eval_constraint(c, on_fence, FW) == pytest.approx(0.0)
        behind = fw_state(p_n=900.0, p_e=0.0)
        assert eval_constraint(c, behind, FW) == pytest.approx(-100.0)

    def test_sign_soundness_random(self):
        rng = np.random.default_rng(3)
        floor = alt_floor(5000.0)
        gmax = ConstraintSpec(name="g", kind="load_max", params={"N_z_max": 4.0}, scale=2.0)
        f = fence(p_g=(2000.0, -500.0), n_g=(-1 / math.sqrt(2), 1 / math.sqrt(2)))
        for _ in range(500):
            x = fw_state(
                H=rng.uniform(3000, 7000),
                N_z=rng.uniform(-1, 6),
                p_n=rng.uniform(-3000, 3000),
                p_e=rng.uniform(-3000, 3000),
            )
            assert (eval_constraint(floor, x, FW) >= 0) == (x[5] >= 5000.0)
            assert (eval_constraint(gmax, x, FW) >= 0) == (x[7] <= 4.0)
            raw = np.dot(
                [-1 / math.sqrt(2), 1 / math.sqrt(2)], [x[3] - 2000.0, x[4] + 500.0]
            )
            assert (eval_constraint(f, x, FW) >= 0) == (raw >= 0)

    def test_missing_field(self):
        c = fence(p_g=(0.0, 0.0), n_g=(1.0, 0.0))
        with pytest.raises(MissingFieldError):
            eval_constraint(c, np.array([5000.0, 0.0, 1.0]), SimplifiedModel())

    def test_simplified_supports_altitude_and_load(self):
        m = SimplifiedModel(FixedWingParams(V_T=150.0))
        c = alt_floor(5000.0)
        assert eval_constraint(c, np.array([5150.0, 0.0, 1.0]), m) == pytest.approx(1.0)

    def test_normal_must_be_unit(self):
        with pytest.raises(ValueError):
            fence(p_g=(0.0, 0.0), n_g=(1.0, 1.0))


class TestGeofenceTTC:
    def test_head_on(self):
        # 3000 m out, flying straight at the fence at 150 m/s -> 20 s
        c = fence(p_g=(3000.0, 0.0), n_g=(-1.0, 0.0))
        x = fw_state(psi=0.0, p_n=0.0)
        assert geofence_ttc(c, x, FW) == pytest.approx(20.0, rel=1e-12)

    def test_parallel_capped(self):
        c = fence(p_g=(3000.0, 0.0), n_g=(-1.0, 0.0))
        x = fw_state(psi=math.pi / 2)
        assert geofence_ttc(c, x, FW) == pytest.approx(TTC_MAX)

    def test_boundary_is_zero(self):
        c = fence(p_g=(3000.0, 0.0), n_g=(-1.0, 0.0))
        x = fw_state(psi=0.0, p_n=3000.0)
        assert geofence_ttc(c, x, FW) == pytest.approx(0.0)

    def test_continuity_across_speed_floor(self):
        """Sweep heading through the closing-speed = EPS_V boundary; the TTC
        must be continuous there."""
        c = fence(p_g=(2000.0, 0.0), n_g=(-1.0, 0.0))
        # closing speed = V cos(psi); EPS_V at psi = acos(EPS_V / V)
        psi0 = math.acos(EPS_V / FW.params.V_T)
        psis = np.linspace(psi0 - 0.02, psi0 + 0.02, 4001)
        vals = [geofence_ttc(c, fw_state(psi=p, p_n=1990.0), FW) for p in psis]
        jumps = np.abs(np.diff(vals))
        assert jumps.max() < 0.05  # fine sweep, no step discontinuity


class TestCombine:
    def test_single_constraint(self):
        spec = SafetySpec([alt_floor(5000.0)])
        x = fw_state(H=5300.0)
        h, name = combine(spec, x, FW)
        assert h == pytest.approx(2.0)  # 300 m / 150 m/s
        assert name == "floor"

    def test_min_and_argmin(self):
        spec = SafetySpec(
            [
                alt_floor(3000.0, scale=1.0, name="a"),
                alt_floor(7000.0, scale=1.0, name="b"),
                alt_floor(5000.0, scale=1.0, name="c"),
            ]
        )
        h, name = combine(spec, fw_state(H=6500.0), FW)
        assert h == pytest.approx(-500.0)
        assert name == "b"

    def test_equal_margins_at_band_midpoint(self):
        # floor 18700 ft, ceiling 22700 ft, H at the 20700 ft midpoint:
        # both margins are 2000 ft = 4.064 s at V_T = 150 (equal to within
        # one ulp of the ft->m conversion)
        spec = SafetySpec([alt_floor(ft_to_m(18700.0)), alt_ceiling(ft_to_m(22700.0))])
        x = fw_state(H=ft_to_m(20700.0))
        h, name = combine(spec, x, FW)
        assert h == pytest.approx(4.064, rel=1e-12)

    def test_exact_tie_takes_first_listed(self):
        # margins computed from identical operands tie bit-exactly
        spec = SafetySpec([alt_floor(5000.0), alt_ceiling(7000.0)])
        x = fw_state(H=6000.0)
        h, name = combine(spec, x, FW)
        assert h == pytest.approx(1000.0 / 150.0)
        assert name == "floor"

    def test_combined_never_exceeds_any_member(self):
        rng = np.random.default_rng(11)
        spec = SafetySpec(
            [
                alt_floor(5000.0),
                alt_ceiling(7000.0),
                fence(p_g=(4000.0, 1000.0), n_g=(-1.0, 0.0)),
            ]
        )
        for _ in range(300):
            x = fw_state(
                theta=rng.uniform(-0.3, 0.3),
                psi=rng.uniform(-math.pi, math.pi),
                p_n=rng.uniform(-2000, 6000),
                p_e=rng.uniform(-2000, 2000),
                H=rng.uniform(4000, 8000),
                N_z=rng.uniform(0, 5),
            )
            h, _ = combine(spec, x, FW)
            for c in spec.constraints:
                assert h <= eval_constraint(c, x, FW) + 1e-12

    def test_lipschitz_regression_guard(self):
        """Empirical difference quotients over the flight envelope stay below
        the sampled maximum times 1.1 (regression guard, not a proof)."""
        rng = np.random.default_rng(19)
        spec = SafetySpec(
            [alt_floor(5000.0), alt_ceiling(7000.0), fence(p_g=(4000.0, 0.0), n_g=(-1.0, 0.0))]
        )

        def sample():
            return fw_state(
                phi=rng.uniform(-1.0, 1.0),
                theta=rng.uniform(-0.4, 0.4),
                psi=rng.uniform(-math.pi, math.pi),
                p_n=rng.uniform(-2000, 3800),
                p_e=rng.uniform(-2000, 2000),
                H=rng.uniform(5000, 7000),
                N_z=rng.uniform(0, 4),
            )

        quotients = []
        for _ in range(10_000):
            a, b = sample(), sample()
            d = np.linalg.norm(a - b)
            if d < 1e-9:
                continue
            quotients.append(abs(combine(spec, a, FW)[0] - combine(spec, b, FW)[0]) / d)
        L = max(quotients) * 1.1
        for _ in range(2000):
            a, b = sample(), sample()
            d = np.linalg.norm(a - b)
            if d < 1e-9:
                continue
            assert abs(combine(spec, a, FW)[0] - combine(spec, b, FW)[0]) <= L * d

    def test_empty_spec_rejected(self):
        with pytest.raises(ValueError):
            SafetySpec([])
        with pytest.raises(ValueError):
            SafetySpec([alt_floor(1.0, name="x"), alt_floor(2.0, name="x")])


class TestKernelAgreement:
    def test_margins_match_python(self):
        """The compiled margin evaluation agrees with the reference path."""
        rng = np.random.default_rng(5)
        spec = SafetySpec(
            [
                alt_floor(5000.0),
                alt_ceiling(7000.0),
                fence(p_g=(4000.0, 500.0), n_g=(-0.6, 0.8)),
            ]
        )
        kinds, prm, scales = pack_constraints(spec)
        out = np.empty(len(spec.constraints))
        for _ in range(500):
            x = fw_state(
                theta=rng.uniform(-0.4, 0.4),
                psi=rng.uniform(-math.pi, math.pi),
                p_n=rng.uniform(-2000, 6000),
                p_e=rng.uniform(-2000, 2000),
                H=rng.uniform(4000, 8000),
                N_z=rng.uniform(0, 5),
            )
            hk, arg = _kernels.fw_margins(
                x, kinds, prm, scales, FW.params.V_T, EPS_V, TTC_MAX, out
            )
            hp, name = combine(spec, x, FW)
            assert hk == pytest.approx(hp, rel=1e-13, abs=1e-13)
            assert spec.constraints[arg].name == name
            for i, c in enumerate(spec.constraints):
                assert out[i] == pytest.approx(constraint_margin(c, x, FW), rel=1e-13)


class TestTolInv:
    def test_altitude_only_spec(self):
        spec = SafetySpec([alt_floor(5000.0), alt_ceiling(7000.0)])
        # margins scaled by V_T change at <= 1 unit/s
        assert tol_inv(spec, 0.01, FW) == pytest.approx(0.02)

    def test_geofence_dominates(self):
        spec = SafetySpec([alt_floor(5000.0), fence(p_g=(0.0, 0.0), n_g=(1.0, 0.0))])
        assert tol_inv(spec, 0.01, FW) == pytest.approx(0.04)
