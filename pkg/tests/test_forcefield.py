import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trailmaker import forcefield as ff
from trailmaker import geometry as geo
from trailmaker.errors import ValidationError


def line_trail(end=(24, 0)):
    trail = geo.Trail()
    trail = geo.add_target(trail, (0, 0))
    trail = geo.add_target(trail, end)
    return geo.generate_segments(trail)


class TestAssistConfig:
    def test_defaults_valid(self):
        cfg = ff.AssistConfig()
        assert cfg.admissible_cap <= cfg.device_cap

    @pytest.mark.parametrize("kwargs", [
        {"scale": -0.1}, {"scale": 1.5},
        {"k_lead": -1}, {"admissible_cap": 4.0},
    ])
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValidationError):
            ff.AssistConfig(**kwargs)


class TestPlaneRetaining:
    def test_in_plane(self):
        assert ff.plane_retaining((5, 5, 0), ff.AssistConfig()) == (0, 0, 0)

    def test_above_plane(self):
        cfg = ff.AssistConfig(k_plane=0.5)
        assert ff.plane_retaining((0, 0, 2.0), cfg) == (0, 0, -1.0)

    def test_below_plane(self):
        cfg = ff.AssistConfig(k_plane=0.5)
        assert ff.plane_retaining((0, 0, -4.0), cfg) == (0, 0, 2.0)


class TestPathLeading:
    def test_zero_deviation_zero_force(self):
        trail = line_trail()
        cfg = ff.AssistConfig(scale=1.0, k_lead=0.2)
        assert ff.path_leading((16, 0), trail, cfg, True) == (0, 0)

    def test_assist_off_zero(self):
        trail = line_trail()
        cfg = ff.AssistConfig()
        assert ff.path_leading((7, 3), trail, cfg, False) == (0, 0)

    def test_hand_computed_pull(self):
        # oracle: both unit vectors and the normalized resultant, by hand
        trail = line_trail()
        cfg = ff.AssistConfig(scale=1.0, k_lead=0.2)
        fx, fy = ff.path_leading((7, 3), trail, cfg, True)

        u_np = (np.array([8, 0]) - [7, 3]) / math.sqrt(10)
        u_nt = (np.array([24, 0]) - [7, 3]) / np.linalg.norm(np.array([24, 0]) - [7, 3])
        direction = (u_np + u_nt) / np.linalg.norm(u_np + u_nt)
        expected = 0.2 * math.sqrt(10) * direction

        assert math.hypot(fx, fy) == pytest.approx(0.2 * math.sqrt(10), abs=1e-12)
        np.testing.assert_allclose([fx, fy], expected, atol=1e-12)

    def test_clamped_to_admissible_cap(self):
        trail = line_trail()
        cfg = ff.AssistConfig(scale=1.0, k_lead=0.2, admissible_cap=2.0)
        fx, fy = ff.path_leading((8, -100), trail, cfg, True)
        assert math.hypot(fx, fy) == pytest.approx(2.0, abs=1e-12)

    def test_antiparallel_pulls_return_zero(self):
        # pen on the segment axis between candidates: nearest candidate (0,0)
        # pulls backward, next target (10,0) pulls forward, the unit vectors
        # cancel exactly and the guard must return zero instead of flipping
        trail = line_trail(end=(10, 0))
        cfg = ff.AssistConfig()
        nearest = geo.nearest_point(trail, (4, 0))
        assert nearest.point == (0.0, 0.0) and nearest.distance_ds == 4.0
        assert ff.path_leading((4, 0), trail, cfg, True) == (0.0, 0.0)

    @settings(max_examples=100, deadline=None)
    @given(scale=st.floats(0.01, 1.0), h=st.floats(0.1, 9.9))
    def test_linear_in_scale_and_deviation(self, scale, h):
        trail = line_trail()
        cfg = ff.AssistConfig(scale=scale, k_lead=0.2)
        fx, fy = ff.path_leading((8, -h), trail, cfg, True)
        assert math.hypot(fx, fy) == pytest.approx(scale * 0.2 * h, rel=1e-9)

    @settings(max_examples=200, deadline=None)
    @given(px=st.floats(-50, 70), py=st.floats(-50, 50), scale=st.floats(0, 1))
    def test_direction_soundness(self, px, py, scale):
        # lead force never pushes away from N_p while the two pulls agree
        # to within 90 degrees
        trail = line_trail()
        cfg = ff.AssistConfig(scale=scale, k_lead=0.2)
        nearest = geo.nearest_point(trail, (px, py))
        if nearest.distance_ds == 0:
            return
        u_np = (np.asarray(nearest.point) - [px, py]) / nearest.distance_ds
        nt = geo.next_target(trail, nearest)
        to_next = np.array([nt.x - px, nt.y - py])
        if np.linalg.norm(to_next) == 0:
            return
        u_nt = to_next / np.linalg.norm(to_next)
        if np.dot(u_np, u_nt) < 0:
            return
        f = np.array(ff.path_leading((px, py), trail, cfg, True))
        assert np.dot(f, u_np) >= -1e-12


class TestGravityCompensation:
    def test_straight_up_full_weight(self):
        f = ff.gravity_compensation((0, 1), ff.AssistConfig())
        np.testing.assert_allclose(f, (0, 0.30), atol=1e-12)

    def test_horizontal_zero(self):
        f = ff.gravity_compensation((1, 0), ff.AssistConfig())
        np.testing.assert_allclose(f, (0, 0), atol=1e-12)

    def test_sixty_degree_elevation(self):
        u = (math.cos(math.radians(60)), math.sin(math.radians(60)))
        f = ff.gravity_compensation(u, ff.AssistConfig())
        mag = math.hypot(*f)
        assert mag == pytest.approx(0.30 * math.sin(math.radians(60)), abs=1e-12)
        assert mag == pytest.approx(0.2598, abs=1e-4)
        # acts along the segment direction
        assert f[0] * u[1] - f[1] * u[0] == pytest.approx(0, abs=1e-12)

    def test_downward_travel_pushes_up(self):
        f = ff.gravity_compensation((0, -1), ff.AssistConfig())
        np.testing.assert_allclose(f, (0, 0.30), atol=1e-12)

    def test_non_unit_normalized(self):
        f1 = ff.gravity_compensation((0, 5), ff.AssistConfig())
        f2 = ff.gravity_compensation((0, 1), ff.AssistConfig())
        np.testing.assert_allclose(f1, f2, atol=1e-12)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValidationError):
            ff.gravity_compensation((0, 0), ff.AssistConfig())

    @settings(max_examples=100, deadline=None)
    @given(theta=st.floats(0, 2 * math.pi))
    def test_magnitude_matches_cos_closed_form(self, theta):
        # theta measured from the vertical axis
        u = (math.sin(theta), math.cos(theta))
        f = ff.gravity_compensation(u, ff.AssistConfig())
        assert math.hypot(*f) == pytest.approx(0.30 * abs(math.cos(theta)), abs=1e-9)


class TestCompose:
    def test_all_quiet(self):
        trail = line_trail()  # horizontal: no gravity component
        bd = ff.compose((16, 0, 0), trail, ff.AssistConfig(), assist_on=False)
        np.testing.assert_allclose(bd.total, (0, 0, 0), atol=1e-12)
        assert not bd.assist_active

    def test_huge_deviation_clamped(self):
        trail = line_trail()
        bd = ff.compose((8, -100, 0), trail, ff.AssistConfig(scale=1.0, k_lead=0.2), True)
        lead_mag = math.hypot(*bd.lead)
        assert lead_mag <= 2.0 + 1e-12
        planar = np.array(bd.lead) + bd.gravity_comp
        assert np.linalg.norm(planar) <= 2.0 + 1e-12

    def test_breakdown_sums_to_total(self):
        trail = geo.builtin_shape("triangle", 100.0)
        bd = ff.compose((40, -90, 3.0), trail, ff.AssistConfig(), True)
        summed = np.array(bd.plane) + bd.lead + bd.gravity_comp
        np.testing.assert_allclose(summed, bd.total, atol=1e-9)

    @settings(max_examples=300, deadline=None)
    @given(
        px=st.floats(-215, 215), py=st.floats(-175, 175), pz=st.floats(-30, 30),
        scale=st.floats(0, 1), k_lead=st.floats(0, 2), k_plane=st.floats(0, 2),
        assist=st.booleans(),
    )
    def test_cap_invariants(self, px, py, pz, scale, k_lead, k_plane, assist):
        trail = geo.builtin_shape("infinity", 80.0)
        cfg = ff.AssistConfig(scale=scale, k_lead=k_lead, k_plane=k_plane)
        bd = ff.compose((px, py, pz), trail, cfg, assist)
        assert bd.lead[2] == 0.0
        assert bd.plane[0] == 0.0 and bd.plane[1] == 0.0
        planar = np.array(bd.lead) + bd.gravity_comp
        assert np.linalg.norm(planar) <= cfg.admissible_cap + 1e-9
        assert np.linalg.norm(bd.total) <= cfg.device_cap + 1e-9
        summed = np.array(bd.plane) + bd.lead + bd.gravity_comp
        np.testing.assert_allclose(summed, bd.total, atol=1e-9)

    def test_zero_deviation_zero_lead_many_configs(self):
        trail = line_trail()
        for scale in (0.0, 0.3, 1.0):
            for k_lead in (0.0, 0.2, 1.5):
                bd = ff.compose((8, 0, 0), trail, ff.AssistConfig(scale=scale, k_lead=k_lead), True)
                assert bd.lead == (0.0, 0.0, 0.0)
