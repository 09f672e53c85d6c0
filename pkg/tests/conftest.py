"""Shared test fixtures."""

import json
import os
from unittest.mock import patch

import pytest

from kornlab.gallery import l_shape, rooms_and_corridors, square
from kornlab.geom import whitney_decompose
from kornlab.models import ExponentParams, RoomsSpec

# Parameter sets of the rooms-and-corridors experiments
KORN_FAILS = {"p": 2, "a": 0, "b": 2, "sigma": 2, "tau": 1}
JOHN = {"p": 2, "a": 0, "b": 2, "sigma": 1, "tau": 1}

SQUARE_SPEC = {"name": "square", "rects": [["0", "0", "1", "1"]]}
L_SHAPE_SPEC = {"name": "l", "rects": [["0", "0", "1", "0.25"], ["0", "0", "0.25", "1"]]}


@pytest.fixture(autouse=True)
def isolated_config(tmp_path_factory):
    """Keep user config files and KORNLAB_* variables out of every test."""
    home = tmp_path_factory.mktemp("xdg")
    env = {k: v for k, v in os.environ.items() if not k.startswith("KORNLAB_")}
    env["XDG_CONFIG_HOME"] = str(home)
    with patch.dict(os.environ, env, clear=True):
        yield home


@pytest.fixture
def unit_square():
    return square()


@pytest.fixture
def thin_l():
    return l_shape(1, 0.25)


@pytest.fixture
def square_decomp(unit_square):
    """Sixteen level-3 cubes covering [1/4, 3/4]²."""
    return whitney_decompose(unit_square, 3)


@pytest.fixture
def rooms3():
    return rooms_and_corridors(RoomsSpec(sigma=2, tau=1, rooms=3))


@pytest.fixture
def korn_fails_params():
    return ExponentParams(**KORN_FAILS)


@pytest.fixture
def john_params():
    return ExponentParams(**JOHN)


@pytest.fixture
def write_json(tmp_path):
    """Write a dict to a JSON file under tmp_path and return its path."""

    def _write(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path

    return _write
