"""``parisi-lab <subcommand> --config <path> [--out DIR] [--seed N]``.

Exit status: 0 when every check passes, 2 when an inequality violation
survives refinement, 1 on any error.
"""

import argparse
import copy
import sys
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, ParisiLabError
from .functional import ParisiMinimizer, ParisiProblem, parisi_functional, parisi_value
from .initial import build_piecewise, from_config, mollify, mollify_pair, validate_pair
from .io import load_config, write_csv, write_json
from .params import StepParam, dominance_witness, penalty_integral, random_step_param
from .pde import ParisiSolver
from .plot import plot_csv
from .probe import (
    asymptotic_check,
    conjecture_scan,
    m_curve,
    inequality_suite,
    max_principle_scan,
    odd_comparison_check,
    one_sided_scan,
    sinh_representation,
)
from .quad import gauss_expectation

COMMANDS = (
    "solve",
    "parisi-eval",
    "minimize",
    "convexity-scan",
    "conjecture-scan",
    "ineq-suite",
    "max-principle",
    "mollify-demo",
    "asymptotics",
    "m-curve",
    "plot",
)

DEFAULTS = {
    "problem": {"beta": 1.0, "h": 0.0, "phi": "log_cosh", "phi2": None, "k": 1, "orientation": "literal"},
    "params": {"a": 1.0, "a1": None, "a2": None},
    "solver": {"x_min": -16.0, "x_max": 16.0, "h": 0.02, "order": 60, "interpolation": "hermite"},
    "grids": {
        "alphas": {"start": 0.0, "stop": 1.0, "num": 11},
        "xs": [-2.0, -1.0, 0.0, 1.0, 2.0],
        "ms": {"start": 0.0, "stop": 1.0, "num": 41},
        "ts": [0.25, 0.5, 1.0],
        "rs": [2, 4, 8, 16],
    },
    "tolerances": {
        "gap": 1e-7,
        "covariance": 1e-10,
        "curve": 1e-8,
        "asymptotic": 1e-6,
        "max_F": 1e-7,
        "eps_grad": 1e-3,
        "eps": 1e-6,
        "eps_t": 1e-5,
        "mollify": 1e-9,
    },
    "minimize": {"n_starts": 8, "monotone": True, "maxiter": None},
    "conjecture": {"n_pairs": 0, "max_breaks": 2},
    "ineq": {"n_cases": 200},
    "asymptotics": {"m": 0.5, "xs": [-15.0, -8.0, 8.0, 15.0], "ts": {"start": 0.0, "stop": 1.0, "num": 11}},
    "max_principle": {"configs": [{"m1": 0.3, "m2": 0.7, "alpha": 0.4}]},
    "plot": {"csv": None, "x": None, "y": None, "group": None, "kind": "line", "title": "", "output": "plot.svg"},
}


def _grid(value, name):
    if isinstance(value, dict):
        try:
            arr = np.linspace(float(value["start"]), float(value["stop"]), int(value["num"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"grids.{name}: expected a list or {{start, stop, num}}") from exc
    else:
        try:
            arr = np.asarray(value, dtype=float).reshape(-1)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"grids.{name}: not a list of numbers") from exc
    if arr.size == 0:
        raise ConfigError(f"grids.{name} is empty")
    return arr


def _param(value, name):
    if value is None:
        return None
    try:
        if isinstance(value, (int, float)):
            return StepParam.constant(float(value))
        if isinstance(value, dict):
            return StepParam.from_dict(value)
    except (ParisiLabError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"params.{name}: {exc}") from exc
    raise ConfigError(f"params.{name}: expected a number or {{breakpoints, values}}")


def _phi(value, name):
    try:
        return from_config(value)
    except ConfigError as exc:
        raise ConfigError(f"problem.{name}: {exc}") from exc


@dataclass
class ExperimentConfig:
    """A validated experiment with every default filled in."""

    command: str
    seed: int = 0
    out: str = "results"
    sections: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def from_dict(cls, data, command=None):
        data = dict(data)
        cmd = command or data.pop("command", None)
        data.pop("command", None)
        if cmd not in COMMANDS:
            raise ConfigError(f"unknown command {cmd!r}; expected one of {', '.join(COMMANDS)}")
        seed = data.pop("seed", 0)
        out = data.pop("out", "results")
        sections = copy.deepcopy(DEFAULTS)
        for key, val in data.items():
            if key not in sections:
                raise ConfigError(f"unknown config section {key!r}")
            if not isinstance(val, dict):
                raise ConfigError(f"section {key!r} must be a table")
            for sub, v in val.items():
                if sub not in sections[key]:
                    raise ConfigError(f"unknown key {key}.{sub}")
                sections[key][sub] = v
        try:
            seed = int(seed)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"seed must be an integer, got {seed!r}") from exc
        cfg = cls(cmd, seed, str(out), sections)
        cfg.validate()
        return cfg

    def to_dict(self):
        d = {"command": self.command, "seed": self.seed, "out": self.out}
        d.update(copy.deepcopy(self.sections))
        for name in self.sections["grids"]:
            d["grids"][name] = [float(v) for v in self.grid(name)]
        for name in ("xs", "ts"):
            d["asymptotics"][name] = [float(v) for v in self.grid(name, "asymptotics")]
        return d

    def validate(self):
        for name in self.sections["grids"]:
            self.grid(name)
        for name in ("xs", "ts"):
            self.grid(name, "asymptotics")
        for name, v in self.sections["tolerances"].items():
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"tolerances.{name} must be positive, got {v!r}")
        self.phi
        if self.sections["problem"]["phi2"] is not None:
            self.phi2
        for name in ("a", "a1", "a2"):
            _param(self.sections["params"][name], name)
        if self.sections["problem"]["orientation"] not in ("literal", "reversed"):
            raise ConfigError("problem.orientation must be 'literal' or 'reversed'")
        try:
            self.solver._grid()
        except ParisiLabError as exc:
            raise ConfigError(f"solver: {exc}") from exc

    # accessors ------------------------------------------------------------

    def grid(self, name, section="grids"):
        return _grid(self.sections[section][name], name)

    def tol(self, name):
        return float(self.sections["tolerances"][name])

    @property
    def problem(self):
        return self.sections["problem"]

    @cached_property
    def phi(self):
        return _phi(self.problem["phi"], "phi")

    @cached_property
    def phi2(self):
        spec = self.problem["phi2"]
        return self.phi if spec is None else _phi(spec, "phi2")

    def param(self, name):
        a = _param(self.sections["params"][name], name)
        if a is None:
            raise ConfigError(f"params.{name} is required for {self.command}")
        return a.reversed() if self.problem["orientation"] == "reversed" else a

    @property
    def solver(self):
        s = self.sections["solver"]
        return ParisiSolver(float(s["x_min"]), float(s["x_max"]), float(s["h"]), int(s["order"]), s["interpolation"])

    def option(self, section, name):
        return self.sections[section][name]


# --------------------------------------------------------------------------
# subcommands; each returns the exit status


def _run_solve(cfg, out):
    trace = cfg.solver.propagate(cfg.phi, cfg.param("a"))
    rows = [
        {"x": float(x), "t": float(t), "F": float(trace.evaluate(x, t))}
        for t in cfg.grid("ts")
        for x in cfg.grid("xs")
    ]
    write_csv(out / "solve.csv", rows, ["x", "t", "F"])
    snaps = [r for g in trace.snapshots for r in g.rows()]
    write_csv(out / "snapshots.csv", snaps, ["t", "x", "F", "Fx"])
    return 0


def _problem(cfg):
    return ParisiProblem(float(cfg.problem["beta"]), float(cfg.problem["h"]), cfg.phi, int(cfg.problem["k"]))


def _run_parisi_eval(cfg, out):
    prob = _problem(cfg)
    a = cfg.param("a")
    solver = cfg.solver
    row = {
        "beta": prob.beta,
        "h": prob.h,
        "F": float(parisi_functional(prob.phi, prob.x, a, solver)),
        "penalty": penalty_integral(a),
        "value": float(parisi_value(prob, a, solver)),
    }
    write_csv(out / "parisi_eval.csv", [row], list(row))
    write_json(out / "parisi_eval.json", {"param": a.to_dict(), **row})
    return 0


def _run_minimize(cfg, out):
    prob = _problem(cfg)
    opts = cfg.sections["minimize"]
    est = ParisiMinimizer(
        n_starts=int(opts["n_starts"]),
        seed=cfg.seed,
        monotone=bool(opts["monotone"]),
        maxiter=opts["maxiter"],
        solver=cfg.solver,
    ).fit(prob)
    res = est.result_
    write_json(out / "minimize.json", {"beta": prob.beta, "h": prob.h, "k": prob.k, **res.to_dict()})
    rows = [{"step": i, "value": v, "param": p.to_json()} for i, (v, p) in enumerate(res.history)]
    write_csv(out / "minimize_history.csv", rows, ["step", "value", "param"])
    print(f"best value {res.value:.12g} converged={res.converged} clusters={len(res.incumbent_clusters())}")
    return 0


def _report_out(report, out, stem):
    write_csv(out / f"{stem}.csv", report.rows(), ["alpha", "x", "gap"])
    write_json(
        out / f"{stem}_summary.json",
        {
            "min_gap": report.min_gap,
            "max_violation": report.max_violation,
            "passed": report.passed,
            "candidates": report.candidates,
            "metadata": report.metadata,
        },
    )
    print(report.summary_line())


def _run_convexity(cfg, out):
    report = one_sided_scan(
        cfg.phi, cfg.phi2, cfg.param("a1"), cfg.param("a2"), cfg.grid("alphas"), cfg.grid("xs"), cfg.solver, cfg.tol("gap")
    )
    _report_out(report, out, "convexity_scan")
    return 0 if report.passed else 2


def _crossing_pairs(rng, n, max_breaks):
    pairs = []
    while len(pairs) < n:
        a1 = random_step_param(rng, max_breaks, monotone=True)
        a2 = random_step_param(rng, max_breaks, monotone=True)
        if dominance_witness(a1, a2) is not None and dominance_witness(a2, a1) is not None:
            pairs.append((a1, a2))
    return pairs


def _run_conjecture(cfg, out):
    opts = cfg.sections["conjecture"]
    n_pairs = int(opts["n_pairs"])
    if n_pairs > 0:
        pairs = _crossing_pairs(np.random.default_rng(cfg.seed), n_pairs, int(opts["max_breaks"]))
    else:
        pairs = [(cfg.param("a1"), cfg.param("a2"))]
    rows, candidates, worst = [], [], np.inf
    for i, (a1, a2) in enumerate(pairs):
        rep = conjecture_scan(cfg.phi, a1, a2, cfg.grid("alphas"), cfg.grid("xs"), cfg.solver, cfg.tol("gap"))
        worst = min(worst, rep.min_gap)
        rows += [{"pair": i, **r} for r in rep.rows()]
        candidates += [{"pair": i, "a1": a1.to_json(), "a2": a2.to_json(), **c} for c in rep.candidates]
    write_csv(out / "conjecture_scan.csv", rows, ["pair", "alpha", "x", "gap"])
    write_csv(out / "conjecture_candidates.csv", candidates, ["pair", "a1", "a2", "alpha", "x", "gap", "refined_gap"])
    summary = {
        "pairs": [{"a1": a1.to_dict(), "a2": a2.to_dict()} for a1, a2 in pairs],
        "min_gap": worst,
        "surviving_candidates": len(candidates),
    }
    write_json(out / "conjecture_summary.json", summary)
    status = "PASS" if not candidates else "FAIL"
    print(f"{status} pairs={len(pairs)} min_gap={worst:.3e} surviving_candidates={len(candidates)}")
    return 0 if not candidates else 2


def _run_ineq(cfg, out):
    tol = cfg.tol("covariance")
    rows = inequality_suite(int(cfg.sections["ineq"]["n_cases"]), cfg.seed)
    cov_min = min(r["covariance"] for r in rows)
    sinh_err = abs(sinh_representation(np.tanh, 1.0, 1.0) - gauss_expectation(200, np.tanh, 1.0, 1.0))
    odd_gap = odd_comparison_check(np.tanh, lambda u: np.asarray(u, dtype=float), np.linspace(0.0, 3.0, 31), 1.0)
    ok = cov_min >= -tol and sinh_err <= 1e-8 and odd_gap >= -tol
    write_csv(out / "ineq_suite.csv", rows, ["case", "variant", "x", "sigma", "covariance"])
    write_json(out / "ineq_summary.json", {"min_covariance": cov_min, "sinh_error": sinh_err, "odd_gap": odd_gap, "passed": ok})
    print(f"{'PASS' if ok else 'FAIL'} min_covariance={cov_min:.3e} sinh_error={sinh_err:.3e} odd_gap={odd_gap:.3e}")
    return 0 if ok else 2


def _run_max_principle(cfg, out):
    rows, summaries, ok = [], [], True
    for i, c in enumerate(cfg.sections["max_principle"]["configs"]):
        try:
            m1, m2, alpha = float(c["m1"]), float(c["m2"]), float(c["alpha"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"max_principle.configs[{i}] needs numeric m1, m2, alpha") from exc
        rep = max_principle_scan(
            cfg.phi,
            cfg.phi2,
            m1,
            m2,
            alpha,
            cfg.grid("xs"),
            cfg.grid("ts"),
            eps_grad=cfg.tol("eps_grad"),
            eps=cfg.tol("eps"),
            eps_t=cfg.tol("eps_t"),
        )
        rep.F_tol = cfg.tol("max_F")
        ok &= rep.passed
        rows += [{"config": i, **r} for r in rep.records]
        summaries.append({"config": i, "passed": rep.passed, "max_F": rep.max_F, "c1": rep.c1, "c2": rep.c2, "violations": rep.n_violations})
        print(rep.summary_line())
    cols = ["config", "x", "t", "F", "Fx", "Fxx", "Ft", "delta1", "delta2", "delta2_factored", "c1", "c2"]
    write_csv(out / "max_principle.csv", rows, cols)
    write_json(out / "max_principle_summary.json", {"configs": summaries, "passed": ok})
    return 0 if ok else 2


def _run_mollify(cfg, out):
    phi = cfg.phi
    tol = cfg.tol("mollify")
    xs = cfg.grid("xs")
    rows, prev_gap, ok = [], None, True
    checks = []
    for r in cfg.grid("rs"):
        r = int(r)
        s = build_piecewise(phi, r)
        phi_r = mollify(s)
        gap = phi.value(xs) - phi_r.value(xs)
        lower_ok = bool(np.all(gap >= 1.0 / (2 * r) - tol))
        monotone_ok = prev_gap is None or bool(np.all(gap <= prev_gap + tol))
        prev_gap = gap
        M = phi_r.tail.M
        probe = np.linspace(M, M + 10.0, 101)
        lin = max(
            float(np.max(np.abs(phi_r.value(probe) - phi_r.tail.right(probe)))),
            float(np.max(np.abs(phi_r.value(-probe) - phi_r.tail.left(-probe)))),
        )
        pair = None
        if cfg.problem["phi2"] is not None:
            pair = validate_pair(*mollify_pair(phi, cfg.phi2, r))
        ok &= lower_ok and monotone_ok and lin <= 1e-10
        checks.append({"r": r, "lower_bound": lower_ok, "monotone": monotone_ok, "linearity_error": lin, "pair_class": pair})
        rows += [{"r": r, "x": float(x), "phi": float(p), "phi_r": float(q), "s_r": float(v)} for x, p, q, v in zip(xs, phi.value(xs), phi_r.value(xs), s(xs))]
    write_csv(out / "mollify.csv", rows, ["r", "x", "phi", "phi_r", "s_r"])
    write_json(out / "mollify_summary.json", {"checks": checks, "passed": ok})
    print(f"{'PASS' if ok else 'FAIL'} " + " ".join(f"r={c['r']}:{c['linearity_error']:.1e}" for c in checks))
    return 0 if ok else 2


def _run_asymptotics(cfg, out):
    rep = asymptotic_check(
        cfg.phi, float(cfg.sections["asymptotics"]["m"]), cfg.grid("ts", "asymptotics"), cfg.grid("xs", "asymptotics")
    )
    ok = rep.max_deviation <= cfg.tol("asymptotic")
    write_csv(out / "asymptotics.csv", rep.rows(), ["t", "x", "deviation"])
    write_json(out / "asymptotics_summary.json", {"m": rep.m, "max_deviation": rep.max_deviation, "passed": ok})
    print(f"{'PASS' if ok else 'FAIL'} m={rep.m:g} max_deviation={rep.max_deviation:.3e}")
    return 0 if ok else 2


def _run_curve(cfg, out):
    rows, ok = [], True
    for x in cfg.grid("xs"):
        rep = m_curve(cfg.phi, float(x), cfg.grid("ms"), tolerance=cfg.tol("curve"))
        ok &= rep.convex
        rows += [{"x": float(x), **r} for r in rep.rows()]
    write_csv(out / "m_curve.csv", rows, ["x", "m", "value"])
    print(f"{'PASS' if ok else 'FAIL'} curves={len(cfg.grid('xs'))}")
    return 0 if ok else 2


def _run_plot(cfg, out):
    p = cfg.sections["plot"]
    if not p["csv"] or not p["x"] or not p["y"]:
        raise ConfigError("plot needs plot.csv, plot.x and plot.y")
    plot_csv(p["csv"], out / p["output"], p["x"], p["y"], p["group"], p["kind"], p["title"])
    return 0


RUNNERS = {
    "solve": _run_solve,
    "parisi-eval": _run_parisi_eval,
    "minimize": _run_minimize,
    "convexity-scan": _run_convexity,
    "conjecture-scan": _run_conjecture,
    "ineq-suite": _run_ineq,
    "max-principle": _run_max_principle,
    "mollify-demo": _run_mollify,
    "asymptotics": _run_asymptotics,
    "m-curve": _run_curve,
    "plot": _run_plot,
}


def run(command, config_path, out=None, seed=None):
    """Load, validate and execute one experiment; returns the exit status."""
    data = load_config(config_path)
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data["out"] = str(out)
    cfg = ExperimentConfig.from_dict(data, command)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "effective_config.json", cfg.to_dict())
    return RUNNERS[command](cfg, out_dir)


def build_parser():
    parser = argparse.ArgumentParser(prog="parisi-lab", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="TOML or JSON experiment file")
    parser.add_argument("--out", default=None, help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return run(args.command, args.config, args.out, args.seed)
    except (ParisiLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
