"""Shared fixtures and synthetic level builders."""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from skitrain.calibration import CalibrationProfile
from skitrain.terrain import (
    Arc,
    Heightmap,
    Level,
    LevelParams,
    PropSet,
    Track,
    difficulty_preset,
    generate_heightmap,
    generate_level,
    place_props,
)

SYMMETRIC_PROFILE = CalibrationProfile(
    x_left=0.25, x_right=0.25, z_front=0.20, z_back=0.20,
    y_upright=1.65, stance_offset=0.05)


def straight_track(length: float = 200.0) -> Track:
    # one near-straight arc: huge radius, sweep sized to the length
    radius = 1.0e7
    return Track(arcs=(Arc(center=(radius, 0.0), radius=radius,
                           start_angle=math.pi, sweep=length / radius),),
                 start=(0.0, 0.0), goal_arc_length=length)


def flat_level(length: float = 200.0, half_width: float = 50.0) -> Level:
    """Zero-slope terrain with a straight corridor and no props."""
    track = straight_track(length)
    params = LevelParams(seed=0, curve_radius_range=(1e7, 1e7), num_curves=1,
                         base_slope=1e-6, noise_amplitude=0.0, noise_cell_size=8.0,
                         corridor_half_width=half_width, cube_spacing=length,
                         track_length=length)
    hm = Heightmap(origin_xz=(-half_width - 10.0, -length - 20.0),
                   cell_size=8.0,
                   rows=int((length + 60.0) // 8) + 2,
                   cols=int((2 * half_width + 40.0) // 8) + 2,
                   heights=np.zeros((int((length + 60.0) // 8) + 2,
                                     int((2 * half_width + 40.0) // 8) + 2)))
    return Level(params=params, track=track, heightmap=hm,
                 props=PropSet(poles=(), trees=(), cubes=()))


def straight_slope_level(length: float = 200.0, slope_deg: float = 8.0,
                         half_width: float = 12.0, with_props: bool = False) -> Level:
    """Noise-free linear descent along a straight corridor."""
    track = straight_track(length)
    params = LevelParams(seed=0, curve_radius_range=(1e7, 1e7), num_curves=1,
                         base_slope=math.radians(slope_deg), noise_amplitude=0.0,
                         noise_cell_size=8.0, corridor_half_width=half_width,
                         cube_spacing=25.0, track_length=length)
    hm = generate_heightmap(track, params)
    props = place_props(track, hm, params) if with_props else PropSet((), (), ())
    return Level(params=params, track=track, heightmap=hm, props=props)


@pytest.fixture(scope="session")
def level1():
    return generate_level(difficulty_preset(1, seed=42))


@pytest.fixture(scope="session")
def noise_free_level2():
    import dataclasses

    params = dataclasses.replace(difficulty_preset(2, seed=11), noise_amplitude=0.0)
    return generate_level(params)
