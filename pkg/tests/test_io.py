import json

import numpy as np
import pytest

from fockstop.errors import ConfigurationError, ShapeError
from fockstop.fock import make_grid, random_operator
from fockstop.io import (
    load_stopping_time,
    read_operator_csv,
    read_vector_csv,
    save_stopping_time,
    stopping_time_from_json,
    stopping_time_to_json,
    write_operator_csv,
    write_vector_csv,
)
from fockstop.lab import samplers as sm
from fockstop.stopping import INF, time_projection


def test_operator_round_trip(tmp_path, rng):
    Z = random_operator(8, rng)
    write_operator_csv(tmp_path / "z.csv", Z)
    assert np.array_equal(read_operator_csv(tmp_path / "z.csv"), Z)


def test_vector_round_trip(tmp_path, rng):
    x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    write_vector_csv(tmp_path / "x.csv", x)
    assert np.array_equal(read_vector_csv(tmp_path / "x.csv"), x)
    write_operator_csv(tmp_path / "m.csv", np.eye(2))
    with pytest.raises(ShapeError):
        read_vector_csv(tmp_path / "m.csv")


def test_malformed_operator_csv(tmp_path):
    (tmp_path / "bad.csv").write_text("1,0,2\n0,0,1\n")
    with pytest.raises(ShapeError):
        read_operator_csv(tmp_path / "bad.csv")
    (tmp_path / "ragged.csv").write_text("1,0,2,0\n0,0\n")
    with pytest.raises(ShapeError):
        read_operator_csv(tmp_path / "ragged.csv")


@pytest.mark.parametrize("inline", [True, False])
def test_stopping_time_round_trip(tmp_path, inline):
    g = make_grid(3)
    S = sm.stopping_time(g, np.random.default_rng(4))
    save_stopping_time(tmp_path / "s.json", S, inline=inline)
    back = load_stopping_time(tmp_path / "s.json", g)
    assert list(back.atoms) == list(S.atoms)
    for t in S.atoms:
        assert np.array_equal(back.atoms[t], S.atoms[t])
    assert np.array_equal(time_projection(back), time_projection(S))
    data = json.loads((tmp_path / "s.json").read_text())
    assert data["n_cells"] == 3
    if INF in S.atoms:
        assert data["support"][-1] == "inf"


def test_stopping_time_json_errors():
    g = make_grid(2)
    with pytest.raises(ConfigurationError):
        stopping_time_from_json({"support": [1]}, g)
    with pytest.raises(ConfigurationError):
        stopping_time_from_json({"support": [1, "inf"], "atoms": []}, g)
    data = stopping_time_to_json(sm.stopping_time(g, np.random.default_rng(0)))
    assert stopping_time_from_json(data, g).grid == g
