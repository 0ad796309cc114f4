import argparse
import logging
import sys
import time

import numpy as np

from utils import frame_core
from utils.bergman import BUNDLED_GROUPS, FuchsianGroup, UHPoint, bergman_classification, kernel_orbit_gram
from utils.data_processor import COMMANDS, FORMATS, KLEPPNER_MODES, SWEEP_PARAMETERS, DataProcessor, parse_number
from utils.density import (
    FAILS,
    HOLDS,
    UNKNOWN,
    KleppnerResult,
    SymplecticLattice,
    classify,
    covolume,
    heisenberg_invariant,
    kleppner_agrees,
    kleppner_brute,
    kleppner_check,
)
from utils.errors import ComputationError, ConfigInvalid, ValidationError
from utils.export_manager import ExportManager, RunReport, canonical_json
from utils.finite_wh import FiniteLattice, FiniteWHRep, wh_report, wh_system
from utils.gabor import PlaneLattice, Window, gabor_report
from utils.quadrature import QuadratureParams
from utils.sweep import SweepRunner, summarize

logger = logging.getLogger("densitylab")

processor = DataProcessor()
exporter = ExportManager()

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


class ConfigParser(argparse.ArgumentParser):
    """argparse that reports bad flags as ConfigInvalid instead of exiting."""

    def error(self, message):
        raise ConfigInvalid([message])


MODEL_FLAGS = {
    "classify": [
        ("--invariant", {"help": "vol * d_pi, e.g. 1/2 or 1/3+2*sqrt(5)"}),
        ("--kleppner", {"choices": KLEPPNER_MODES}),
        ("--basis", {"help": "lattice basis 'a,b;c,d' for the auto Kleppner mode"}),
        ("--contains-center", {"action": "store_true", "help": "lattice in SL(2,R) containing -I"}),
    ],
    "gabor": [
        ("--window", {"help": "gaussian, gaussian:<width> or box"}),
        ("--lattice", {"help": "basis 'a,b;c,d'"}),
        ("--radius", {"type": int}),
        ("--method", {"choices": ("zz", "gram")}),
        ("--grid", {"type": int}),
        ("--trunc", {"type": int}),
    ],
    "finite-wh": [
        ("--N", {"type": int}),
        ("--a", {"type": int}),
        ("--b", {"type": int}),
        ("--window", {"help": "comma-separated entries of g, or 'random'"}),
        ("--normalize", {"action": argparse.BooleanOptionalAction}),
        ("--samples", {"type": int, "help": "random vectors for the frame-inequality oracle"}),
    ],
    "bergman": [
        ("--alpha", {"type": parse_number}),
        ("--group", {"choices": tuple(BUNDLED_GROUPS)}),
        ("--group-file", {"help": "JSON {generators: [[a,b,c,d],...], covolume}"}),
        ("--base", {"help": "base point x+yi"}),
        ("--radius", {"type": int, "help": "word radius of the orbit Gram"}),
        ("--stabilizer-radius", {"type": int}),
    ],
    "kleppner": [
        ("--basis", {"help": "basis 'a,b;c,d' (2d x 2d)"}),
        ("--brute-radius", {"type": int, "help": "also run the brute-force oracle up to this sup norm"}),
    ],
}

SWEEP_FLAGS = [
    ("--target", {"choices": tuple(SWEEP_PARAMETERS)}),
    ("--parameter", {}),
    ("--values", {"help": "comma-separated values"}),
]


def build_parser():
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--config", help="JSON experiment config; flags override its fields")
    common.add_argument("--output", help="output path, '-' for stdout")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--seed", type=int)
    common.add_argument("--timing", action="store_true", help="add wall time to the report")
    common.add_argument("--log-level", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    for action in common._actions:
        action.default = argparse.SUPPRESS

    parser = ConfigParser(prog="densitylab", parents=[common], allow_abbrev=False)
    subparsers = parser.add_subparsers(dest="command")
    for command in COMMANDS:
        sub = subparsers.add_parser(command, parents=[common], allow_abbrev=False)
        flags = SWEEP_FLAGS + _sweepable_flags() if command == "sweep" else MODEL_FLAGS[command]
        for flag, options in flags:
            sub.add_argument(flag, default=argparse.SUPPRESS, **options)
    return parser


def _sweepable_flags():
    flags, seen = [], set()
    for target in SWEEP_PARAMETERS:
        for flag, options in MODEL_FLAGS[target]:
            if flag not in seen:
                seen.add(flag)
                flags.append((flag, options))
    return flags


def make_rng(seed):
    """Counter-based Philox stream; identical draws on every platform."""
    return np.random.Generator(np.random.Philox(seed))


def handle_classify(params, seed, tolerances):
    invariant = processor.parse_scalar(params["invariant"])
    mode = params["kleppner"]
    check = None
    if mode == "auto":
        check = _auto_kleppner(invariant, params.get("basis"))
        status = check.status
    else:
        status = mode
    verdict = classify(
        invariant,
        status,
        contains_center=bool(params.get("contains_center")),
        error=tolerances.get("invariant_error"),
    )
    results = verdict.to_dict()
    results["kleppner_mode"] = mode
    results["kleppner_check"] = check.to_dict() if check else None
    invariant = results["invariant"] or results["invariant_float"]
    return results, [{"invariant": invariant, **summarize("classify", results)}]


def _auto_kleppner(invariant, basis):
    if basis:
        return kleppner_check(SymplecticLattice(processor.parse_matrix(basis)))
    if isinstance(invariant, float):
        return KleppnerResult(UNKNOWN, method="skipped", note="floating-point invariant")
    # d = 1 Heisenberg reading: invariant = |det A|, Kleppner fails iff it is rational
    status = FAILS if invariant.is_rational else HOLDS
    return KleppnerResult(status, method="heisenberg_d1", note="holds iff |det A| is irrational")


def handle_kleppner(params, seed, tolerances):
    lattice = SymplecticLattice(processor.parse_matrix(params["basis"]))
    exact = kleppner_check(lattice)
    volume = covolume(lattice)
    verdict = classify(heisenberg_invariant(lattice), exact.status, error=tolerances.get("invariant_error"))
    results = {
        "basis": [[str(x) for x in row] for row in lattice.basis],
        "covolume": str(volume),
        "covolume_float": float(volume),
        "kleppner": exact.to_dict(),
        "verdict": verdict.to_dict(),
        "brute": None,
        "agrees": None,
    }
    row = {"status": exact.status, "witness": exact.witness or (), "method": exact.method}
    radius = params["brute_radius"]
    if radius:
        brute = kleppner_brute(lattice, radius)
        results["brute"] = brute.to_dict()
        results["agrees"] = kleppner_agrees(exact, brute)
        row.update(brute_status=brute.status, agrees=results["agrees"])
    return results, [row]


def handle_gabor(params, seed, tolerances):
    kind, width = processor.parse_gabor_window(params["window"])
    window = Window.gaussian(width) if kind == "gaussian" else Window.box()
    lattice = PlaneLattice.from_rows(processor.parse_matrix(params["lattice"], size=2))
    quadrature = QuadratureParams(max_error=tolerances.get("max_error", 1e-10))
    results = gabor_report(
        window,
        lattice,
        radius=params["radius"],
        method=params["method"],
        grid=params["grid"],
        trunc=params["trunc"],
        params=quadrature,
    )
    bounds = results["bounds"]
    parameter = str(lattice.covolume) if lattice.exact is not None else lattice.volume
    return results, [{"parameter": parameter, "A": bounds["A"], "B": bounds["B"]}]


def handle_finite_wh(params, seed, tolerances):
    N, a, b = params["N"], params["a"], params["b"]
    tol = tolerances.get("tol", frame_core.DEFAULT_TOL)
    rng = make_rng(seed)
    if params["window"] == "random":
        g = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    else:
        g = np.array(processor.parse_vector(params["window"]), dtype=complex)
    results = wh_report(N, a, b, g, normalize=params["normalize"], tol=tol)
    results["window"] = g.tolist()

    samples = params["samples"]
    results["oracle"] = None
    if samples and results["frame_bounds"]["rank"] == N:
        window = g / np.linalg.norm(g) if params["normalize"] else g
        system = wh_system(FiniteWHRep(N), FiniteLattice(N, a, b), window)
        draws = rng.standard_normal((samples, N)) + 1j * rng.standard_normal((samples, N))
        lower, upper = frame_core.frame_inequality_slack(system, draws, tol=tol)
        results["oracle"] = {"samples": samples, "lower_violation": lower, "upper_violation": upper}
    return results, [{"N": N, "a": a, "b": b, **summarize("finite-wh", results)}]


def handle_bergman(params, seed, tolerances):
    if params.get("group_file"):
        group = FuchsianGroup.from_json(processor.load_config(params["group_file"]))
    else:
        group = BUNDLED_GROUPS[params["group"]]()
    base = UHPoint(processor.parse_complex(params["base"]))
    alpha = params["alpha"]
    results = bergman_classification(alpha, group, base, params["stabilizer_radius"])
    gram = kernel_orbit_gram(alpha, group, base, params["radius"])
    results["gram"] = {
        "radius": params["radius"],
        "points": [p.to_dict() for p in gram.points],
        "spectrum": gram.report.to_dict(),
    }
    rows = [{"index": i, "eigenvalue": value} for i, value in enumerate(gram.report.eigenvalues)]
    return results, rows


def handle_sweep(params, seed, tolerances):
    runner = SweepRunner(processor, lambda command, point: execute(command, point, seed, tolerances))
    return runner.run(params)


HANDLERS = {
    "classify": handle_classify,
    "kleppner": handle_kleppner,
    "gabor": handle_gabor,
    "finite-wh": handle_finite_wh,
    "bergman": handle_bergman,
    "sweep": handle_sweep,
}


def execute(command, params, seed=0, tolerances=None):
    """Run one command on validated parameters; returns (results, csv rows)."""
    logger.info("Running %s", command)
    return HANDLERS[command](params, seed, tolerances or {})


def run(config):
    """
    Dispatch an ExperimentConfig to the owning module.

    Returns:
        RunReport
    """
    start = time.perf_counter()
    results, rows = execute(config.command, config.params, config.seed, config.tolerances)
    wall_time = time.perf_counter() - start if config.timing else None
    return RunReport(config=config.echo(), results=results, rows=rows, wall_time=wall_time)


def error_payload(error):
    messages = error.errors if isinstance(error, ConfigInvalid) else [str(error)]
    return {"errors": [{"code": error.code, "message": message} for message in messages]}


def main(argv=None):
    parser = build_parser()
    try:
        args = vars(parser.parse_args(argv))
        logging.basicConfig(
            level=getattr(logging, args.pop("log_level", "WARNING")),
            stream=sys.stderr,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        raw = processor.load_config(args.pop("config", None))
        config = processor.process_config(raw, args)
        report = run(config)
        exporter.write(exporter.export_report(report, config.format), config.output)
    except ValidationError as e:
        logger.error("Invalid input: %s", e)
        print(canonical_json(error_payload(e)))
        return EXIT_INVALID
    except (ComputationError, np.linalg.LinAlgError, FloatingPointError) as e:
        logger.error("Numerical failure: %s", e)
        failure = e if isinstance(e, ComputationError) else ComputationError(str(e))
        print(canonical_json(error_payload(failure)))
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
