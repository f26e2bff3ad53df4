import numpy as np
import pytest

from shift_scenery.battery import (
    CONTINUITY_MARGIN,
    battery_from_config,
    continuity_margin,
    default_battery,
)
from shift_scenery.errors import ConfigError
from shift_scenery.jacobian import limit_mass_exact


def test_default_battery_size_and_margins(mstar, bg_r3):
    for model in (mstar, bg_r3):
        battery = default_battery(model, 3, 20)
        assert len(battery) == 20
        for gset in battery:
            assert gset.a < gset.b
            assert continuity_margin(model, gset) >= CONTINUITY_MARGIN


def test_default_battery_deterministic(mstar):
    assert default_battery(mstar, 3, 20) == default_battery(mstar, 3, 20)


def test_default_battery_mixes_masses(mstar):
    qs = {limit_mass_exact(mstar, g) for g in default_battery(mstar, 3, 20)}
    assert any(0.0 < q < 1.0 for q in qs)


def test_default_battery_exhaustion(bern07):
    # products have one atom value per word: few admissible intervals exist
    with pytest.raises(ValueError):
        default_battery(bern07, 1, 20)


def test_battery_from_config_valid(mstar):
    raw = [{"e": [0], "a": 0.5, "b": 0.95}]
    battery = battery_from_config(raw, mstar)
    assert battery[0].e == (0,)


def test_battery_from_config_rejects_boundary_touch(mstar):
    # 0.9 is an atom value of the limit for the word (0)
    with pytest.raises(ConfigError):
        battery_from_config([{"e": [0], "a": 0.9, "b": 0.95}], mstar)
    with pytest.raises(ConfigError):
        battery_from_config([{"e": [0], "a": 0.5, "b": 0.9 + 1e-8}], mstar)


def test_battery_from_config_structural_errors(mstar):
    with pytest.raises(ConfigError):
        battery_from_config([], mstar)
    with pytest.raises(ConfigError):
        battery_from_config([{"e": [0], "a": 0.5}], mstar)
    with pytest.raises(ConfigError):
        battery_from_config([{"e": [0], "a": 0.7, "b": 0.2}], mstar)
