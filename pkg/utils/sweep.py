import logging
import os
from concurrent.futures import ThreadPoolExecutor

from utils.errors import ConfigInvalid

logger = logging.getLogger(__name__)


def thread_count():
    """Worker cap from DENSITYLAB_THREADS (default 1)."""
    raw = os.getenv("DENSITYLAB_THREADS", "1")
    try:
        count = int(raw)
    except ValueError:
        raise ConfigInvalid(f"DENSITYLAB_THREADS must be an integer, got {raw!r}")
    return max(count, 1)


class SweepRunner:
    """Runs one command over a list of parameter values and collects summary rows in value order."""

    def __init__(self, processor, run_point, max_workers=None):
        """
        Args:
            processor: DataProcessor used to build and validate each point
            run_point: callable (command, params) -> (results, rows)
            max_workers: thread cap; DENSITYLAB_THREADS when omitted
        """
        self.processor = processor
        self.run_point = run_point
        self.max_workers = max_workers or thread_count()

    def run(self, params):
        target, parameter, values = params["target"], params["parameter"], params["values"]
        points = [self.processor.sweep_point(target, parameter, value, params) for value in values]

        errors = []
        for value, point in zip(values, points):
            errors.extend(f"{parameter}={value}: {e}" for e in self.processor.validate_params(target, point))
        if errors:
            raise ConfigInvalid(errors)

        logger.info("Sweeping %s.%s over %d values with %d worker(s)", target, parameter, len(values), self.max_workers)
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            outcomes = list(pool.map(lambda point: self.run_point(target, point), points))

        rows = [
            {parameter: value, **summarize(target, results)}
            for value, (results, _) in zip(values, outcomes)
        ]
        results = {
            "target": target,
            "parameter": parameter,
            "values": list(values),
            "points": [results for results, _ in outcomes],
        }
        return results, rows


def summarize(target, results):
    """Summary scalars of one sweep point."""
    if target == "gabor":
        bounds = results["bounds"]
        sandwich = results.get("sandwich") or {}
        return {
            "A": bounds["A"],
            "B": bounds["B"],
            "method": bounds["method"],
            "sandwich_ok": sandwich.get("ok"),
        }
    if target == "finite-wh":
        return {
            "invariant": str(results["invariant"]),
            "A": results["frame_bounds"]["min_nonzero"],
            "B": results["frame_bounds"]["max"],
            "parseval": results["parseval"],
            "onb": results["onb"],
        }
    if target == "bergman":
        return {
            "invariant": results["invariant"] or results["invariant_float"],
            "regime": results["verdict"]["regime"],
            "kernel_complete": results["kernel"]["complete"],
            "lambda_min": results["gram"]["spectrum"]["eigenvalues"][0],
        }
    return {
        "regime": results["regime"],
        "kleppner": results["kleppner"],
        "claims": results["claims"],
    }
