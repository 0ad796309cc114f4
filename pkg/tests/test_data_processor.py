import pytest

from utils.data_processor import DataProcessor, parse_number
from utils.errors import ConfigInvalid, UnsupportedField
from utils.exact_field import ExactScalar


@pytest.fixture
def processor():
    return DataProcessor()


def test_defaults_are_filled_in(processor):
    config = processor.process_config({"command": "gabor", "lattice": "1,0;0,1/2"})
    assert config.params["window"] == "gaussian"
    assert config.params["grid"] == 256
    assert config.format == "json" and config.output == "-" and config.seed == 0


def test_params_block_and_overrides(processor):
    raw = {"command": "finite-wh", "params": {"N": 4, "a": 1, "b": 4, "window": "1,0,0,0"}, "seed": 5}
    config = processor.process_config(raw, {"b": 2, "seed": None})
    assert config.params["b"] == 2
    assert config.seed == 5


def test_all_problems_are_reported_together(processor):
    with pytest.raises(ConfigInvalid) as excinfo:
        processor.process_config({"command": "finite-wh", "N": 4, "a": 0, "b": 1, "window": "random", "seed": -1, "format": "xml"})
    messages = excinfo.value.errors
    assert any(m.startswith("format") for m in messages)
    assert any(m.startswith("seed") for m in messages)
    assert any("positive integer" in m for m in messages)


def test_unknown_command(processor):
    with pytest.raises(ConfigInvalid, match="unknown command"):
        processor.process_config({"command": "fourier"})


def test_tolerances_must_be_positive(processor):
    with pytest.raises(ConfigInvalid, match="tolerances.tol"):
        processor.process_config({"command": "classify", "invariant": "1/2", "tolerances": {"tol": 0}})


def test_bergman_checks(processor):
    errors = processor.validate_params("bergman", {"alpha": 1, "base": "-2i", "group": "psl2z", "radius": 1, "stabilizer_radius": 4})
    assert len(errors) == 2
    assert processor.validate_params("bergman", {"alpha": 2.5, "base": "0.5+2i", "group": "psl2z", "radius": 1, "stabilizer_radius": 4}) == []


def test_window_length_must_match(processor):
    errors = processor.validate_params("finite-wh", {"N": 4, "a": 1, "b": 1, "window": "1,0"})
    assert errors == ["finite-wh: window has 2 entries, expected N=4"]


def test_sweep_values_are_parsed(processor):
    config = processor.process_config(
        {"command": "sweep", "target": "finite-wh", "parameter": "a", "values": "1, 2", "N": 4, "b": 1, "window": "random"}
    )
    assert config.params["values"] == [1, 2]
    with pytest.raises(ConfigInvalid, match="sweeps one of"):
        processor.process_config({"command": "sweep", "target": "bergman", "parameter": "N", "values": [1]})


def test_sweep_point(processor):
    point = processor.sweep_point("gabor", "density", "1/3", {"target": "gabor", "parameter": "density", "values": ["1/3"], "grid": 32})
    assert point["lattice"] == "1,0;0,1/3"
    assert point["grid"] == 32
    assert "values" not in point


def test_parse_scalar(processor):
    assert str(processor.parse_scalar("1/3+2*sqrt(5)")) == "1/3+2*sqrt(5)"
    assert processor.parse_scalar(3) == 3
    assert processor.parse_scalar(0.25) == 0.25
    with pytest.raises(UnsupportedField):
        processor.parse_scalar("banana")
    with pytest.raises(UnsupportedField):
        processor.parse_scalar(True)


def test_parse_matrix(processor):
    rows = processor.parse_matrix("1, 0; 0, sqrt(2)")
    assert rows[1][1] == ExactScalar.sqrt(2)
    assert processor.parse_matrix([[1, 0], [0, 0.5]])[1][1] == 0.5
    with pytest.raises(UnsupportedField):
        processor.parse_matrix("1,2;3")
    with pytest.raises(UnsupportedField):
        processor.parse_matrix("1,0;0,1", size=4)


def test_parse_complex(processor):
    assert processor.parse_complex("2i") == 2j
    assert processor.parse_complex("-1+0.5i") == complex(-1, 0.5)
    assert processor.parse_complex("3") == 3
    assert processor.parse_complex(1.5) == 1.5
    with pytest.raises(UnsupportedField):
        processor.parse_complex("2k")


def test_parse_gabor_window(processor):
    assert processor.parse_gabor_window("gaussian") == ("gaussian", 1.0)
    assert processor.parse_gabor_window("Gaussian:0.5") == ("gaussian", 0.5)
    assert processor.parse_gabor_window("box") == ("box", 1.0)
    with pytest.raises(UnsupportedField):
        processor.parse_gabor_window("box:2")
    with pytest.raises(UnsupportedField):
        processor.parse_gabor_window("hann")


def test_parse_number():
    assert parse_number("7") == 7 and isinstance(parse_number("7"), int)
    assert parse_number("2.5") == 2.5
