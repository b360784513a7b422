"""Config-driven experiment runner.

Exit status 0 on success, 2 when the config or a validation check fails,
3 when a numerical routine does not converge.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np
import scipy

from . import __version__
from .escape_flow import escape_rate_flow, flow_survival_log_measure, lattice_step, monte_carlo_survival, theorem_a_curve
from .exceptions import NumericalError, ValidationError
from .gibbs import build_transfer, certify_gibbs, equilibrium_state
from .open_system import Hole, discrete_ratio_curve, escape_rate_discrete, make_nested_cylinders, validate_nested
from .sft import AperiodicPoint, PeriodicPoint, parse_word, system_from_dict
from .suspension import (
    DiscretizationParams,
    RoofFunction,
    build_suspension_sft,
    choose_discretization,
    induced_potential,
    mu_tilde,
    roof_lower,
    roof_upper,
    verify_invariance,
)

log = logging.getLogger("semiflow_escape")

AUTO_DELTA_REQUEST = 0.1
FLOW_COLUMNS = [
    "n", "delta", "m", "R_lower", "R_upper", "hole_measure", "nu_slab_measure",
    "ratio_lo", "ratio_hi", "gamma", "mc_estimate", "mc_stderr",
]


# ----------------------------------------------------------------------------
# serialization


def fmt(x: Any) -> str:
    """17 significant digits for reals; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON with reals at 17 significant digits and non-finite reals as null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (Mapping, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    return json.dumps(str(obj))


class ArtifactWriter:
    """Single writer for all artifacts of a run; tags each one with the config hash."""

    def __init__(self, out: Path, config_hash: str):
        self.out = out
        self.config_hash = config_hash
        self.artifacts: list[dict] = []
        out.mkdir(parents=True, exist_ok=True)

    def json(self, name: str, doc: Mapping) -> None:
        body = {"config_sha256": self.config_hash, **doc}
        (self.out / name).write_text(dumps(body) + "\n")
        self.artifacts.append({"path": name, "kind": "json"})

    def csv(self, name: str, columns: list[str], rows: list[Mapping]) -> None:
        with open(self.out / name, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns + ["config_sha256"])
            for row in rows:
                w.writerow([fmt(row.get(c)) for c in columns] + [self.config_hash])
        self.artifacts.append({"path": name, "kind": "csv", "rows": len(rows)})


# ----------------------------------------------------------------------------
# config


def _field(doc: Mapping, key: str, where: str = "config"):
    if not isinstance(doc, Mapping) or key not in doc:
        raise ValidationError(f"missing required field {where}.{key}" if where != "config" else
                              f"missing required field {key!r}")
    return doc[key]


class Experiment:
    """Parsed config with lazily built system objects."""

    def __init__(self, doc: Mapping):
        if not isinstance(doc, Mapping):
            raise ValidationError("config must be a JSON object")
        self.doc = doc
        self.A, self.functions = system_from_dict(doc)
        self._mu = None

    def function(self, key: str):
        name = self.doc.get(key)
        if name is None:
            return None
        if name not in self.functions:
            raise ValidationError(f"{key} refers to unknown function {name!r}")
        return self.functions[name]

    @property
    def mu(self):
        if self._mu is None:
            self._mu = equilibrium_state(self.A, self.function("potential"))
        return self._mu

    @property
    def roof(self) -> RoofFunction:
        f = self.function("roof")
        if f is None:
            raise ValidationError("missing required field 'roof'")
        return RoofFunction(f, self.A)

    def params(self) -> DiscretizationParams:
        d = _field(self.doc, "discretization")
        delta, m = _field(d, "delta", "discretization"), d.get("m", "auto")
        roof = self.roof
        if delta == "auto":
            p = choose_discretization(roof, self.mu, AUTO_DELTA_REQUEST)
            if m != "auto":
                p = DiscretizationParams.for_roof(roof, int(m), p.delta)
        else:
            if not isinstance(delta, (int, float)) or delta <= 0:
                raise ValidationError("discretization.delta must be a positive number or 'auto'")
            if m == "auto":
                p = choose_discretization(roof, self.mu, float(delta))
                if p.delta != float(delta):
                    raise ValidationError(f"discretization.delta = {delta} is too large for this roof")
            else:
                p = DiscretizationParams.for_roof(roof, int(m), float(delta))
        return p.check(roof, self.mu)

    def target(self):
        t = _field(self.doc, "target")
        if "periodic" in t:
            return PeriodicPoint.checked(parse_word(str(t["periodic"])), self.A)
        if "aperiodic" in t:
            return AperiodicPoint(parse_word(str(t["aperiodic"])))
        raise ValidationError("target needs a 'periodic' or 'aperiodic' word")

    def n_range(self) -> list[int]:
        h = _field(self.doc, "holes")
        lo, hi = int(_field(h, "n_min", "holes")), int(_field(h, "n_max", "holes"))
        if not 1 <= lo <= hi:
            raise ValidationError("holes needs 1 <= n_min <= n_max")
        return list(range(lo, hi + 1))

    def holes(self) -> list[Hole]:
        """Explicit holes from ``holes.list``, otherwise cylinders about the target."""
        h = _field(self.doc, "holes")
        if "list" in h:
            return [Hole.from_json(x).check(self.A) for x in h["list"]]
        seq = make_nested_cylinders(self.target(), self.n_range(), self.mu)
        return [seq.holes[n] for n in seq.n_values]

    def monte_carlo(self) -> dict | None:
        mc = self.doc.get("monte_carlo")
        if mc is None:
            return None
        return {
            "samples": int(_field(mc, "samples", "monte_carlo")),
            "seed": int(_field(mc, "seed", "monte_carlo")),
            "t": float(_field(mc, "t", "monte_carlo")),
        }


# ----------------------------------------------------------------------------
# subcommands


def _map(fn: Callable, items: list, jobs: int) -> list:
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def cmd_pressure(ex: Experiment, w: ArtifactWriter, jobs: int) -> None:
    T = build_transfer(ex.A, ex.function("potential"))
    w.json("pressure.json", {"pressure": math.log(T.eigenvalue), "eigenvalue": T.eigenvalue})


def cmd_gibbs_certify(ex: Experiment, w: ArtifactWriter, jobs: int) -> None:
    n_max = int(ex.doc.get("gibbs", {}).get("n_max", 8))
    cert = certify_gibbs(ex.mu, n_max)
    w.csv("gibbs_certificate.csv", ["n", "c1", "c2"],
          [{"n": n, "c1": lo, "c2": hi} for n, lo, hi in cert.per_length])
    w.json("gibbs_certificate.json", {"n_max": n_max, "c1": cert.c1_observed, "c2": cert.c2_observed,
                                      "pressure": ex.mu.pressure})


def cmd_escape_discrete(ex: Experiment, w: ArtifactWriter, jobs: int) -> None:
    holes = ex.holes()
    g = ex.mu.gamma(ex.target()) if "target" in ex.doc else None
    results = _map(lambda h: escape_rate_discrete(ex.mu, h, k_max=0), holes, jobs)
    rows = [{
        "n": h.depth, "words": " ".join("".join(map(str, x)) for x in sorted(h.words)),
        "rate": r.rate, "open_eigenvalue": r.open_eigenvalue, "hole_measure": r.hole_measure,
        "ratio": r.rate / r.hole_measure, "gamma": g,
    } for h, r in zip(holes, results)]
    w.csv("escape_discrete.csv", ["n", "words", "rate", "open_eigenvalue", "hole_measure", "ratio", "gamma"], rows)


def cmd_validate_nested(ex: Experiment, w: ArtifactWriter, jobs: int) -> None:
    seq = make_nested_cylinders(ex.target(), ex.n_range(), ex.mu)
    report = validate_nested(seq, ex.mu)
    w.json("validate_nested.json", {
        "c": seq.c, "rho": seq.rho, "kappa": seq.kappa, "passed": report.passed,
        "items": [{"item": r.item, "passed": r.passed, "witness": r.witness, "detail": r.detail}
                  for r in report.items],
    })
    if not report.passed:
        raise ValidationError(f"nested condition fails items {report.failed_items}")


def _step(ex: Experiment, side: str):
    p = ex.params()
    make = roof_upper if side == "upper" else roof_lower
    return p, make(ex.roof, p.m, p.delta)


def cmd_build_suspension(ex: Experiment, w: ArtifactWriter, jobs: int) -> None:
    side = ex.doc.get("suspension", {}).get("side", "upper")
    if side not in ("upper", "lower"):
        raise ValidationError("suspension.side must be 'upper' or 'lower'")
    p, step = _step(ex, side)
    S = build_suspension_sft(ex.A, step, max(p.m, ex.mu.depth))
    nu = mu_tilde(ex.mu, step, S)
    w.json("suspension.json", {"side": side, "delta": p.delta, "m": p.m, "period": S.period,
                               **S.to_json(nu.state_mass)})


def cmd_verify_invariance(ex: Experiment, w: ArtifactWriter, jobs: int) -> None:
    L = int(ex.doc.get("suspension", {}).get("L", 8))
    out = {}
    ok = True
    for side in ("upper", "lower"):
        p, step = _step(ex, side)
        S = build_suspension_sft(ex.A, step, max(p.m, ex.mu.depth))
        nu = mu_tilde(ex.mu, step, S)
        rep = verify_invariance(nu, L)
        _, ind = induced_potential(nu, L)
        out[side] = {
            "n_cylinders": rep.n_cylinders, "total_mass_error": rep.total_mass_error,
            "right_extension_error": rep.right_extension_error,
            "left_extension_error": rep.left_extension_error,
            "projection_error": rep.projection_error, "passed": rep.passed,
            "gibbs_c1": ind.c1_observed, "gibbs_c2": ind.c2_observed,
            "gibbs_c1_predicted": ind.c1_predicted, "gibbs_c2_predicted": ind.c2_predicted,
        }
        ok &= rep.passed and ind.within_predicted
    w.json("invariance.json", {"L": L, **out})
    if not ok:
        raise ValidationError("suspension measure fails the consistency scan")


def _flow_row(r, mc=None) -> dict:
    lo, hi = r.ratio_interval
    return {
        "n": r.n, "delta": r.params.delta, "m": r.params.m, "R_lower": r.R_lower, "R_upper": r.R_upper,
        "hole_measure": r.hole_measure, "nu_slab_measure": r.nu_slab_measure, "ratio_lo": lo, "ratio_hi": hi,
        "gamma": None if math.isnan(r.gamma_target) else r.gamma_target,
        "mc_estimate": None if mc is None else mc.estimate, "mc_stderr": None if mc is None else mc.stderr,
    }


def _with_mc(ex: Experiment, results, holes) -> list[dict]:
    mc = ex.monte_carlo()
    rows = []
    for r, h in zip(results, holes):
        est = monte_carlo_survival(ex.mu, ex.roof, h, mc["t"], mc["samples"], mc["seed"]) if mc else None
        rows.append(_flow_row(r, est))
    return rows


def cmd_escape_flow(ex: Experiment, w: ArtifactWriter, jobs: int) -> None:
    p = ex.params()
    holes = ex.holes()
    target = ex.target() if "target" in ex.doc else None
    results = _map(lambda h: escape_rate_flow(ex.mu, ex.roof, h, p, target=target, check=False), holes, jobs)
    w.csv("escape_flow.csv", FLOW_COLUMNS, _with_mc(ex, results, holes))


def cmd_theorem_a(ex: Experiment, w: ArtifactWriter, jobs: int) -> None:
    p = ex.params()
    z = ex.target()
    ns = ex.n_range()
    results = theorem_a_curve(ex.mu, ex.roof, z, ns, p, jobs=jobs)
    seq = make_nested_cylinders(z, ns, ex.mu)
    w.csv("theorem_a.csv", FLOW_COLUMNS, _with_mc(ex, results, [seq.holes[n] for n in ns]))
    discrete = discrete_ratio_curve(ex.mu, seq)
    w.csv("discrete_ratio.csv", ["n", "rate", "hole_measure", "ratio", "gamma"],
          [{"n": d.n, "rate": d.rate, "hole_measure": d.hole_measure, "ratio": d.ratio, "gamma": d.gamma}
           for d in discrete])


def cmd_monte_carlo(ex: Experiment, w: ArtifactWriter, jobs: int) -> None:
    mc = ex.monte_carlo()
    if mc is None:
        raise ValidationError("missing required field 'monte_carlo'")
    try:
        lattice_step(list(ex.roof.underlying.values.values()) + [mc["t"]])
        exact = True
    except ValidationError:
        exact = False
    rows = []
    for h in ex.holes():
        est = monte_carlo_survival(ex.mu, ex.roof, h, mc["t"], mc["samples"], mc["seed"])
        op = math.exp(flow_survival_log_measure(ex.mu, ex.roof, h, mc["t"])) if exact else None
        rows.append({
            "n": h.depth, "t": mc["t"], "samples": mc["samples"], "seed": mc["seed"],
            "mc_estimate": est.estimate, "mc_stderr": est.stderr, "operator": op,
            "z_score": None if op is None else (est.estimate - op) / est.stderr if est.stderr > 0 else 0.0,
        })
    w.csv("monte_carlo.csv", ["n", "t", "samples", "seed", "mc_estimate", "mc_stderr", "operator", "z_score"], rows)


COMMANDS: dict[str, Callable] = {
    "pressure": cmd_pressure,
    "gibbs-certify": cmd_gibbs_certify,
    "escape-discrete": cmd_escape_discrete,
    "validate-nested": cmd_validate_nested,
    "build-suspension": cmd_build_suspension,
    "verify-invariance": cmd_verify_invariance,
    "escape-flow": cmd_escape_flow,
    "theorem-a": cmd_theorem_a,
    "monte-carlo": cmd_monte_carlo,
}


# ----------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semiflow-escape", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out", default="out", help="artifact directory")
    parser.add_argument("--jobs", type=int, default=1, help="concurrent per-hole jobs")
    parser.add_argument("--verbose", action="store_true")
    return parser


def run(command: str, config_path: str | Path, out: str | Path, jobs: int = 1) -> int:
    """Run one subcommand; returns the exit status."""
    started = time.perf_counter()
    try:
        raw = Path(config_path).read_bytes()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    config_hash = hashlib.sha256(raw).hexdigest()
    writer = ArtifactWriter(Path(out), config_hash)
    status, message = 0, None
    try:
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from exc
        ex = Experiment(doc)
        if jobs < 1:
            raise ValidationError("--jobs must be >= 1")
        COMMANDS[command](ex, writer, jobs)
    except ValidationError as exc:
        status, message = 2, f"validation error: {exc}"
    except NumericalError as exc:
        status, message = 3, f"numerical error: {exc}"
    if message:
        print(message, file=sys.stderr)
    manifest = {
        "command": command,
        "config": str(config_path),
        "config_sha256": config_hash,
        "exit_status": status,
        "error": message,
        "artifacts": writer.artifacts,
        "versions": {
            "semiflow_escape": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
        },
        "timings": {"total_seconds": time.perf_counter() - started},
    }
    (Path(out) / "manifest.json").write_text(dumps(manifest) + "\n")
    return status


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.info("running %s with %s", args.command, args.config)
    return run(args.command, args.config, args.out, args.jobs)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
