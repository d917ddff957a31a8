import numpy as np
import pytest

from inexact_gmres.config import (ConfigError, ExperimentConfig, build_rhs, config_from_dict,
                                  load_config, load_matrix)
from inexact_gmres.tolerance import TableRange


def _write(tmp_path, text):
    p = tmp_path / "run.toml"
    p.write_text(text)
    return str(p)


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.epsilon == 2.0 ** -52 and cfg.threshold == "aggressive"
    assert cfg.mode == "perturbation" and cfg.seed == 0 and cfg.kmax is None


def test_full_file(tmp_path):
    p = _write(tmp_path, """
rhs = "ones"
epsilon = 1e-8
relative_epsilon = true
threshold = "fixed-table"
kmax = 60
seed = 3

[matrix]
generator = "grcar"
n = 40
superdiags = 2

[[table]]
start = 5
stop = 9
value = 1e-4
""")
    cfg = load_config(p)
    assert cfg.generator == {"name": "grcar", "n": 40, "superdiags": 2}
    assert cfg.table == (TableRange(5, 9, 1e-4),)
    A = load_matrix(cfg)
    assert A.shape == (40, 40)
    assert np.array_equal(build_rhs(cfg, A), np.ones(40))


def test_relative_matrix_path(tmp_path):
    (tmp_path / "sub").mkdir()
    p = tmp_path / "sub" / "c.toml"
    p.write_text('matrix = "m.mtx"\n')
    assert load_config(str(p)).matrix == str(tmp_path / "sub" / "m.mtx")


@pytest.mark.parametrize("text,key", [
    ("epsilon = -1.0\n", "epsilon"),
    ("threshold = \"lazy\"\n", "threshold"),
    ("mode = \"quad\"\n", "mode"),
    ("kmax = 0\n", "kmax"),
    ("seed = \"x\"\n", "seed"),
    ("relative_epsilon = 1\n", "relative_epsilon"),
    ("colour = \"red\"\n", "colour"),
    ("[matrix]\ngenerator = \"hilbert\"\n", "matrix.generator"),
    ("[matrix]\ngenerator = \"grcar\"\nsize = 3\n", "matrix.size"),
    ("[[table]]\nstart = 3\nstop = 1\nvalue = 1.0\n", "table"),
    ("[[table]]\nstart = 1\nvalue = 1.0\n", "table[0]"),
])
def test_errors_name_the_key(tmp_path, text, key):
    with pytest.raises(ConfigError) as info:
        load_config(_write(tmp_path, text))
    assert key in str(info.value)
    assert "run.toml" in str(info.value)


def test_syntax_error(tmp_path):
    with pytest.raises(ConfigError, match="syntax"):
        load_config(_write(tmp_path, "epsilon = = 1\n"))


def test_matrix_and_generator_exclusive():
    with pytest.raises(ConfigError):
        ExperimentConfig(matrix="a.mtx", generator={"name": "grcar", "n": 4})


def test_rhs_from_file_and_length_check(tmp_path):
    vec = tmp_path / "b.txt"
    vec.write_text("1\n2\n3\n")
    cfg = config_from_dict({"matrix": {"generator": "grcar", "n": 3}, "rhs": str(vec)})
    A = load_matrix(cfg)
    assert np.array_equal(build_rhs(cfg, A), [1, 2, 3])
    cfg = cfg.replace(generator={"name": "grcar", "n": 4})
    with pytest.raises(ConfigError, match="length 3"):
        build_rhs(cfg, load_matrix(cfg))


def test_missing_matrix():
    with pytest.raises(ConfigError, match="no matrix"):
        load_matrix(ExperimentConfig())
