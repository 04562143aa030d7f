import math

import numpy as np
import pytest

from evomomentum import DimensionError, SimplexPoint
from evomomentum.experiments import DEFAULT_X0, rps_landscape
from evomomentum.dynamics import DynamicsConfig, iterate
from evomomentum.ternary import (
    BASELINE,
    HEIGHT,
    LEFT,
    SIDE,
    WIDTH,
    barycentric_to_cartesian,
    render_ternary_svg,
    to_pixels,
)


def test_centroid():
    uv = barycentric_to_cartesian(SimplexPoint.barycenter(3))
    np.testing.assert_allclose(uv, [0.5, math.sqrt(3) / 6], atol=1e-15)


@pytest.mark.parametrize("vertex,uv", [((1, 0, 0), (0.0, 0.0)), ((0, 1, 0), (1.0, 0.0)),
                                       ((0, 0, 1), (0.5, math.sqrt(3) / 2))])
def test_corners(vertex, uv):
    np.testing.assert_allclose(barycentric_to_cartesian(vertex), uv, atol=1e-15)


def test_canvas_geometry():
    assert (WIDTH, HEIGHT, SIDE) == (800, 693, 600.0)
    corners = to_pixels(barycentric_to_cartesian(np.eye(3)))
    assert corners[0][0] == LEFT and corners[0][1] == BASELINE
    assert corners[1][0] - corners[0][0] == SIDE
    assert 0 < corners[2][1] < corners[0][1] < HEIGHT


def test_rejects_other_dimensions(tmp_path):
    with pytest.raises(DimensionError):
        render_ternary_svg([np.full((5, 4), 0.25)], tmp_path / "x.svg")
    with pytest.raises(DimensionError):
        barycentric_to_cartesian([0.5, 0.5])


def test_stationary_polyline_is_centroid():
    c = SimplexPoint.barycenter(3)
    svg = render_ternary_svg([np.tile(c.coords, (4, 1))], None, ["still"])
    px = to_pixels(barycentric_to_cartesian(c))
    point = f"{px[0]:.3f},{px[1]:.3f}"
    assert f'points="{point} {point} {point} {point}"' in svg
    assert ">still</text>" in svg


def test_deterministic_bytes(tmp_path):
    traj = iterate(DynamicsConfig(momentum="polyak", learning_rate=1 / 200, beta=0.65, max_steps=500),
                   rps_landscape(), DEFAULT_X0)
    render_ternary_svg([traj], tmp_path / "a.svg", ["run"])
    render_ternary_svg([traj], tmp_path / "b.svg", ["run"])
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    assert 'width="800" height="693"' in (tmp_path / "a.svg").read_text()


def test_momentum_pair_is_distinct():
    runs = []
    for m in ("polyak", "nesterov"):
        cfg = DynamicsConfig(momentum=m, learning_rate=1 / 200, beta=0.65, max_steps=20000)
        runs.append(iterate(cfg, rps_landscape(), DEFAULT_X0, SimplexPoint.barycenter(3), stop_at_convergence=False))
    svg = render_ternary_svg(runs, None, ["polyak", "nesterov"])
    assert svg.count("<polyline") == 2
    centroid = barycentric_to_cartesian(SimplexPoint.barycenter(3))
    dist = [np.linalg.norm(barycentric_to_cartesian(r.final_state) - centroid) for r in runs]
    start = np.linalg.norm(barycentric_to_cartesian(DEFAULT_X0) - centroid)
    assert dist[0] > start > dist[1]


def test_escapes_labels():
    svg = render_ternary_svg([np.array([[0.2, 0.3, 0.5]])], None, ["a<b & c"])
    assert "a&lt;b &amp; c" in svg
