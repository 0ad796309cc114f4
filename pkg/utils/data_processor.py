import json
import logging
import re
from dataclasses import dataclass, field

from utils.errors import ConfigInvalid, DensityLabError, UnsupportedField
from utils.exact_field import parse_exact

logger = logging.getLogger(__name__)

COMMANDS = ("classify", "gabor", "finite-wh", "bergman", "kleppner", "sweep")
FORMATS = ("json", "csv")
KLEPPNER_MODES = ("auto", "holds", "fails", "unknown")

# Flag names that are not model parameters.
RUN_KEYS = ("command", "output", "format", "seed", "tolerances", "timing")

DEFAULTS = {
    "classify": {"kleppner": "auto", "contains_center": False},
    "gabor": {"window": "gaussian", "radius": 3, "method": "zz", "grid": 256, "trunc": 16},
    "finite-wh": {"normalize": True, "samples": 200},
    "bergman": {"group": "psl2z", "base": "2i", "radius": 2, "stabilizer_radius": 4},
    "kleppner": {"brute_radius": 0},
    "sweep": {},
}

REQUIRED = {
    "classify": ("invariant",),
    "gabor": ("lattice",),
    "finite-wh": ("N", "a", "b", "window"),
    "bergman": ("alpha",),
    "kleppner": ("basis",),
    "sweep": ("target", "parameter", "values"),
}

SWEEP_PARAMETERS = {
    "gabor": ("density",),
    "finite-wh": ("N", "a", "b"),
    "bergman": ("alpha",),
    "classify": ("invariant",),
}

_COMPLEX_PATTERN = re.compile(r"^[+-]?(\d+(\.\d*)?([eE][+-]?\d+)?)?([+-]?(\d+(\.\d*)?([eE][+-]?\d+)?)?[ij])?$")
_WINDOW_PATTERN = re.compile(r"^(gaussian|box)(?::(\S+))?$")


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    output: str = "-"
    format: str = "json"
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    timing: bool = False

    def echo(self):
        """Config as it appears in the RunReport."""
        return {
            "command": self.command,
            "params": dict(sorted(self.params.items())),
            "output": self.output,
            "format": self.format,
            "seed": self.seed,
            "tolerances": dict(sorted(self.tolerances.items())),
        }


class DataProcessor:
    """Turns JSON config files and command-line overrides into validated experiment configs."""

    def load_config(self, path):
        """
        Read a JSON config file.

        Args:
            path: file path, or None for an empty config

        Returns:
            dict: raw config
        """
        if path is None:
            return {}
        try:
            with open(path, encoding="utf-8") as handle:
                raw = json.load(handle)
        except OSError as e:
            raise ConfigInvalid(f"Cannot read config {path}: {e}")
        except json.JSONDecodeError as e:
            raise ConfigInvalid(f"Config {path} is not valid JSON: {e}")
        if not isinstance(raw, dict):
            raise ConfigInvalid(f"Config {path} must hold a JSON object")
        return raw

    def process_config(self, raw, overrides=None):
        """
        Merge overrides into a raw config and validate it.

        Args:
            raw: dict from the config file; model parameters may sit at top level or under "params"
            overrides: dict of flag values, None entries ignored; flags win

        Returns:
            ExperimentConfig
        """
        merged = {k: v for k, v in raw.items() if k != "params"}
        merged.update(raw.get("params", {}) or {})
        merged.update({k: v for k, v in (overrides or {}).items() if v is not None})

        errors = []
        command = merged.get("command")
        if not command:
            errors.append("command: missing (one of " + ", ".join(COMMANDS) + ")")
        elif command not in COMMANDS:
            errors.append(f"command: unknown command {command!r}")

        output_format = merged.get("format", "json")
        if output_format not in FORMATS:
            errors.append(f"format: must be one of {FORMATS}, got {output_format!r}")

        seed = merged.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            errors.append(f"seed: must be a non-negative integer, got {seed!r}")

        tolerances = merged.get("tolerances", {}) or {}
        if not isinstance(tolerances, dict):
            errors.append("tolerances: must be an object")
            tolerances = {}
        for name, value in tolerances.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                errors.append(f"tolerances.{name}: must be positive, got {value!r}")

        params = {}
        if command in COMMANDS:
            params = dict(DEFAULTS[command])
            params.update({k: v for k, v in merged.items() if k not in RUN_KEYS})
            errors.extend(self.validate_params(command, params))

        if errors:
            logger.error("Config rejected: %s", errors)
            raise ConfigInvalid(errors)

        return ExperimentConfig(
            command=command,
            params=params,
            output=merged.get("output", "-") or "-",
            format=output_format,
            seed=seed,
            tolerances=dict(tolerances),
            timing=bool(merged.get("timing", False)),
        )

    def validate_params(self, command, params):
        """Error messages for one command's parameters (empty when valid)."""
        errors = [f"{command}: missing required field {name!r}" for name in REQUIRED[command] if params.get(name) in (None, "")]
        if errors:
            return errors

        checks = {
            "classify": self._check_classify,
            "gabor": self._check_gabor,
            "finite-wh": self._check_finite_wh,
            "bergman": self._check_bergman,
            "kleppner": self._check_kleppner,
            "sweep": self._check_sweep,
        }
        try:
            checks[command](params, errors)
        except DensityLabError as e:
            errors.append(f"{command}: {e}")
        return errors

    def _check_classify(self, params, errors):
        self.parse_scalar(params["invariant"])
        if params["kleppner"] not in KLEPPNER_MODES:
            errors.append(f"classify: kleppner must be one of {KLEPPNER_MODES}")
        if params.get("basis"):
            self.parse_matrix(params["basis"])

    def _check_gabor(self, params, errors):
        self.parse_matrix(params["lattice"], size=2)
        self.parse_gabor_window(params["window"])
        if params["method"] not in ("zz", "gram"):
            errors.append("gabor: method must be 'zz' or 'gram'")
        for name in ("radius", "grid", "trunc"):
            if not _is_count(params[name]):
                errors.append(f"gabor: {name} must be a non-negative integer")

    def _check_finite_wh(self, params, errors):
        for name in ("N", "a", "b"):
            if not _is_count(params[name]) or params[name] < 1:
                errors.append(f"finite-wh: {name} must be a positive integer")
        if errors:
            return
        if params["N"] % params["a"] or params["N"] % params["b"]:
            errors.append("finite-wh: a and b must divide N")
        if params["window"] != "random":
            window = self.parse_vector(params["window"])
            if len(window) != params["N"]:
                errors.append(f"finite-wh: window has {len(window)} entries, expected N={params['N']}")

    def _check_bergman(self, params, errors):
        alpha = params["alpha"]
        if isinstance(alpha, bool) or not isinstance(alpha, (int, float)) or not alpha > 1:
            errors.append(f"bergman: alpha must be a number > 1, got {alpha!r}")
        base = self.parse_complex(params["base"])
        if not base.imag > 0:
            errors.append(f"bergman: base point {params['base']!r} is not in the upper half-plane")
        if params["group"] != "psl2z" and not params.get("group_file"):
            errors.append("bergman: only the bundled group 'psl2z' is available without group_file")
        for name in ("radius", "stabilizer_radius"):
            if not _is_count(params[name]):
                errors.append(f"bergman: {name} must be a non-negative integer")

    def _check_kleppner(self, params, errors):
        rows = self.parse_matrix(params["basis"])
        if len(rows) % 2:
            errors.append("kleppner: basis must be 2d x 2d")
        if not _is_count(params["brute_radius"]):
            errors.append("kleppner: brute_radius must be a non-negative integer")

    def _check_sweep(self, params, errors):
        target, parameter = params["target"], params["parameter"]
        if target not in SWEEP_PARAMETERS:
            errors.append(f"sweep: target must be one of {tuple(SWEEP_PARAMETERS)}")
            return
        if parameter not in SWEEP_PARAMETERS[target]:
            errors.append(f"sweep: {target} sweeps one of {SWEEP_PARAMETERS[target]}, got {parameter!r}")
        values = params["values"]
        if isinstance(values, str):
            values = [v.strip() for v in values.split(",") if v.strip()]
        if isinstance(values, list):
            try:
                values = [_sweep_value(target, v) for v in values]
            except ValueError as e:
                errors.append(f"sweep: bad value in {values!r}: {e}")
                return
            params["values"] = values
        if not isinstance(values, list) or not values:
            errors.append("sweep: values must be a non-empty list")
            return
        if errors:
            return
        point = self.sweep_point(target, parameter, values[0], params)
        errors.extend(self.validate_params(target, point))

    def sweep_point(self, target, parameter, value, params):
        """Parameters of the single run at one sweep value."""
        point = dict(DEFAULTS[target])
        point.update({k: v for k, v in params.items() if k not in ("target", "parameter", "values")})
        if target == "gabor":
            point["lattice"] = f"1,0;0,{value}"
        else:
            point[parameter] = value
        return point

    def parse_scalar(self, text):
        """Exact scalar when the text is exact, float otherwise."""
        if isinstance(text, bool):
            raise UnsupportedField(f"Cannot read {text!r} as a number")
        if isinstance(text, int):
            return parse_exact(str(text))
        if isinstance(text, float):
            return text
        try:
            return parse_exact(text)
        except UnsupportedField:
            try:
                return float(text)
            except ValueError:
                raise UnsupportedField(f"Cannot read {text!r} as a number")

    def parse_matrix(self, text, size=None):
        """
        Parse ``"a,b;c,d"`` (rows separated by ';') or a nested JSON list.

        Returns:
            list of rows of ExactScalar or float
        """
        if isinstance(text, list):
            rows = [[self.parse_scalar(v) for v in row] for row in text]
        else:
            rows = [
                [self.parse_scalar(v.strip()) for v in row.split(",")]
                for row in str(text).split(";")
                if row.strip()
            ]
        if not rows or any(len(row) != len(rows) for row in rows):
            raise UnsupportedField(f"Matrix {text!r} is not square")
        if size is not None and len(rows) != size:
            raise UnsupportedField(f"Matrix {text!r} must be {size}x{size}")
        return rows

    def parse_complex(self, text):
        """Parse ``x+yi`` style complex numbers (``2i``, ``-1+0.5i``, ``3``)."""
        if isinstance(text, (int, float)) and not isinstance(text, bool):
            return complex(text)
        compact = str(text).replace(" ", "")
        if not compact or not _COMPLEX_PATTERN.match(compact):
            raise UnsupportedField(f"Cannot read {text!r} as a complex number")
        try:
            return complex(compact.replace("i", "j"))
        except ValueError:
            raise UnsupportedField(f"Cannot read {text!r} as a complex number")

    def parse_vector(self, text):
        if isinstance(text, list):
            return [self.parse_complex(v) for v in text]
        return [self.parse_complex(v) for v in str(text).split(",")]

    def parse_gabor_window(self, text):
        """``gaussian``, ``gaussian:<width>`` or ``box``; returns (kind, width)."""
        match = _WINDOW_PATTERN.match(str(text).strip().lower())
        if not match:
            raise UnsupportedField(f"Unknown Gabor window {text!r}")
        kind, width = match.group(1), match.group(2)
        if width is None:
            return kind, 1.0
        if kind != "gaussian":
            raise UnsupportedField("Only the Gaussian window takes a width")
        width = float(width)
        if not width > 0:
            raise UnsupportedField(f"Gaussian width must be positive, got {width}")
        return kind, width


def _is_count(value):
    return isinstance(value, int) and not isinstance(value, bool) and value >= 0


def _sweep_value(target, value):
    if target == "finite-wh":
        return int(value)
    if target == "bergman":
        return parse_number(value)
    return value


def parse_number(value):
    """int when the text is integral, float otherwise."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return value
    text = str(value).strip()
    return int(text) if re.fullmatch(r"[+-]?\d+", text) else float(text)
