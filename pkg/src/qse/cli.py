"""Command-line interface.

One JSON config document drives every command; a handful of flags override
individual fields. Reports are JSON/CSV with figures rendered next to them,
all byte-deterministic for a fixed config (floats are written with shortest
round-trip precision and seeded simulations use counter-based streams).

Exit codes: 0 success, 2 validation error, 3 numerical failure. Failures
print a single machine-parsable JSON line to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .assessment import classify
from .config import DEFAULT_TOLERANCES
from .errors import NumericalFailureError, QseError, ValidationError
from .estimation import (
    hh_certificate,
    minimum_error,
    operator_moments,
    optimal_strategy,
)
from .models import (
    POM,
    ParameterizedState,
    PriorDensity,
    custom_prior,
    flat_prior,
    jeffreys_prior,
    log_flat_prior,
    log_normal_prior,
)
from .multiparam import (
    MultiPrior,
    jeffreys_product_prior,
    multi_bound,
    multi_moments,
    product_prior,
    tensor_product_states,
)
from .multishot import exact_multishot_error, simulate_batch, worker_count
from .numerics import Grid, make_log_grid
from .serialize import (
    matrix_from_obj,
    matrix_to_obj,
    read_hamiltonian_csv,
    read_pom_json,
    read_prior_csv,
    read_state_json,
    write_json,
)
from .thermometry import r_coefficients, thermal_state_family

COMMANDS = ("solve", "thermometry", "assess", "simulate", "multishot-exact", "multiparam")

_PATH_KEYS = ("prior_path", "state_path", "hamiltonian_path", "pom_path", "multi_state_path")


@dataclass
class RunConfig:
    """Resolved configuration for one command invocation."""

    command: str
    raw: dict[str, Any]
    out: Path
    plots: bool = True
    seed: int = 0
    shots: int = 1
    trajectories: int = 1
    kb: float = 1.0
    theta_u: float = 1.0
    base: Path = field(default_factory=Path)

    def get(self, key: str, default: Any = None) -> Any:
        return self.raw.get(key, default)

    def path(self, key: str) -> Path | None:
        value = self.raw.get(key)
        if value is None:
            return None
        return (self.base / str(value)).resolve()

    def provenance(self) -> dict[str, Any]:
        """Config echoed into reports; output location is not part of it."""
        cfg = {k: v for k, v in self.raw.items() if k != "out"}
        return {"tool": {"name": "qse", "version": __version__}, "config": cfg}


def _load_config(args: argparse.Namespace) -> RunConfig:
    cfg_path = Path(args.config)
    if not cfg_path.is_file():
        raise ValidationError(f"config file not found: {cfg_path}")
    try:
        raw = json.loads(cfg_path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")

    declared = raw.get("command")
    if declared is not None and declared != args.command:
        raise ValidationError(
            f"config declares command {declared!r} but {args.command!r} was invoked"
        )

    # flag overrides
    grid = dict(raw.get("grid", {}))
    for key, flag in (("theta_min", args.theta_min), ("theta_max", args.theta_max), ("n", args.grid_n)):
        if flag is not None:
            grid[key] = flag
    if grid:
        raw["grid"] = grid
    for key, flag in (
        ("seed", args.seed),
        ("shots", args.shots),
        ("kb", args.kb),
        ("theta_u", args.theta_u),
        ("out", args.out),
    ):
        if flag is not None:
            raw[key] = flag

    cfg = RunConfig(
        command=args.command,
        raw=raw,
        out=Path(raw.get("out", "qse-out")),
        plots=bool(raw.get("plots", True)),
        seed=int(raw.get("seed", 0)),
        shots=int(raw.get("shots", 1)),
        trajectories=int(raw.get("trajectories", 1)),
        kb=float(raw.get("kb", 1.0)),
        theta_u=float(raw.get("theta_u", 1.0)),
        base=cfg_path.parent,
    )
    if cfg.theta_u <= 0:
        raise ValidationError("theta_u must be positive")
    for key in _PATH_KEYS:
        p = cfg.path(key)
        if p is not None and not p.is_file():
            raise ValidationError(f"{key} does not resolve to a file: {p}")
    paths = cfg.raw.get("hamiltonian_paths")
    if paths is not None:
        for p in paths:
            if not (cfg.base / str(p)).is_file():
                raise ValidationError(f"hamiltonian_paths entry does not resolve to a file: {p}")
    return cfg


def _build_grid(cfg: RunConfig) -> Grid:
    spec = cfg.get("grid")
    if not spec:
        raise ValidationError("config needs a 'grid' object (theta_min, theta_max, n)")
    try:
        return make_log_grid(float(spec["theta_min"]), float(spec["theta_max"]), int(spec["n"]))
    except KeyError as exc:
        raise ValidationError(f"grid spec missing {exc}") from None


def _build_prior(cfg: RunConfig, grid: Grid | None) -> PriorDensity:
    path = cfg.path("prior_path")
    if path is not None:
        return read_prior_csv(path)
    if grid is None:
        grid = _build_grid(cfg)
    spec = cfg.get("prior", {"kind": "flat_in_log"})
    kind = spec.get("kind", "flat_in_log")
    if kind == "jeffreys":
        return jeffreys_prior(grid)
    if kind == "flat":
        return flat_prior(grid)
    if kind == "flat_in_log":
        return log_flat_prior(grid)
    if kind == "log_normal":
        try:
            return log_normal_prior(grid, float(spec["mu"]), float(spec["sigma"]))
        except KeyError as exc:
            raise ValidationError(f"log_normal prior needs {exc}") from None
    if kind == "custom":
        values = spec.get("values")
        if values is None:
            raise ValidationError("custom prior needs a 'values' array")
        return custom_prior(grid, values)
    raise ValidationError(f"unknown prior kind {kind!r}")


def _build_state(cfg: RunConfig, prior: PriorDensity) -> ParameterizedState:
    state_path = cfg.path("state_path")
    if state_path is not None:
        state = read_state_json(state_path)
        if not state.grid.same_as(prior.grid):
            raise ValidationError("state file grid does not match the prior grid")
        return state
    h_path = cfg.path("hamiltonian_path")
    if h_path is not None:
        h = read_hamiltonian_csv(h_path, k_B=cfg.kb)
        return thermal_state_family(h, prior.grid)
    raise ValidationError("config needs 'state_path' or 'hamiltonian_path'")


def _single_param_inputs(cfg: RunConfig) -> tuple[PriorDensity, ParameterizedState]:
    state_path = cfg.path("state_path")
    grid = None
    if state_path is not None and cfg.path("prior_path") is None:
        grid = read_state_json(state_path).grid  # file grids take precedence
    prior = _build_prior(cfg, grid)
    return prior, _build_state(cfg, prior)


def _build_pom(cfg: RunConfig, prior: PriorDensity, state: ParameterizedState) -> POM:
    path = cfg.path("pom_path")
    if path is not None:
        pom = read_pom_json(path)
        if pom.dim != state.dim:
            raise ValidationError(f"POM dimension {pom.dim} does not match state {state.dim}")
        return pom
    m = operator_moments(prior, state, cfg.theta_u)
    return optimal_strategy(m).as_pom()


def _prepare_out(cfg: RunConfig) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


def _write_csv(path: Path, header: list[str], rows: list[list[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])


def _cmd_solve(cfg: RunConfig) -> None:
    prior, state = _single_param_inputs(cfg)
    out = _prepare_out(cfg)
    m = operator_moments(prior, state, cfg.theta_u)
    strat = optimal_strategy(m)
    report = minimum_error(m, strat)
    cert = hh_certificate(m, strat)
    assessment = classify(prior, state, strat.as_pom())
    write_json(
        out / "minimum.json",
        {
            "epsilon_min": report.epsilon_min,
            "prior_term": report.prior_term,
            "trace_term": report.trace_term,
            "theta_u": report.theta_u,
            "certificate": {
                "trace_upsilon": cert.trace_upsilon,
                "min_eigs": [float(x) for x in cert.min_eigs],
            },
            "assessment": {
                "epsilon_p": assessment.epsilon_p,
                "theta_p": assessment.theta_p,
                "K": assessment.K,
                "J": assessment.J,
                "classification": assessment.classification,
                "tol_rel": assessment.tol_rel,
                "almost_rel": assessment.almost_rel,
            },
            **cfg.provenance(),
        },
    )
    write_json(
        out / "strategy.json",
        {
            "theta_u": strat.theta_u,
            "labels": list(strat.outcome_labels()),
            "eigenvalues": [float(s) for s in strat.eigenvalues],
            "estimates": [float(v) for v in strat.estimates],
            "projectors": [matrix_to_obj(p) for p in strat.projectors],
            **cfg.provenance(),
        },
    )
    if cfg.plots:
        from .plots import plot_strategy

        plot_strategy(prior, strat, out / "strategy.png")


def _cmd_thermometry(cfg: RunConfig) -> None:
    h_path = cfg.path("hamiltonian_path")
    if h_path is None:
        raise ValidationError("thermometry needs 'hamiltonian_path'")
    h = read_hamiltonian_csv(h_path, k_B=cfg.kb)
    prior = _build_prior(cfg, None)
    out = _prepare_out(cfg)
    from .thermometry import thermometry_optimum

    strat, report, diag = thermometry_optimum(h, prior, cfg.theta_u)
    rt = r_coefficients(h, prior, cfg.theta_u)
    s_vals = rt.s_values()
    _write_csv(
        out / "rtable.csv",
        ["energy", "r0", "r1", "s", "estimate"],
        [
            [float(e), float(r0), float(r1), float(s), float(cfg.theta_u * np.exp(s))]
            for e, r0, r1, s in zip(h.energies, rt.r0, rt.r1, s_vals)
        ],
    )
    write_json(
        out / "thermometry.json",
        {
            "epsilon_min": report.epsilon_min,
            "prior_term": report.prior_term,
            "trace_term": report.trace_term,
            "theta_u": report.theta_u,
            "diagnostics": {
                "max_offdiagonal": diag.max_offdiagonal,
                "s_deviation": [float(x) for x in diag.s_deviation],
            },
            "estimates": [float(v) for v in strat.estimates],
            **cfg.provenance(),
        },
    )
    if cfg.plots:
        from .plots import plot_level_estimates

        plot_level_estimates(h.energies, cfg.theta_u * np.exp(s_vals), out / "thermometry.png")


def _cmd_assess(cfg: RunConfig) -> None:
    prior, state = _single_param_inputs(cfg)
    pom = _build_pom(cfg, prior, state)
    out = _prepare_out(cfg)
    report = classify(
        prior,
        state,
        pom,
        tol_rel=float(cfg.get("tol_rel", DEFAULT_TOLERANCES.classify_tol_rel)),
        almost_rel=float(cfg.get("almost_rel", DEFAULT_TOLERANCES.classify_almost_rel)),
    )
    write_json(
        out / "assessment.json",
        {
            "epsilon_p": report.epsilon_p,
            "theta_p": report.theta_p,
            "K": report.K,
            "J": report.J,
            "classification": report.classification,
            "tol_rel": report.tol_rel,
            "almost_rel": report.almost_rel,
            **cfg.provenance(),
        },
    )
    if cfg.plots:
        from .plots import plot_gains

        plot_gains(report.K, report.J, report.classification, out / "assessment.png")


def _cmd_simulate(cfg: RunConfig) -> None:
    prior, state = _single_param_inputs(cfg)
    pom = _build_pom(cfg, prior, state)
    true_theta = cfg.get("true_theta")
    if true_theta is None:
        raise ValidationError("simulate needs 'true_theta'")
    out = _prepare_out(cfg)
    trajectories = simulate_batch(
        prior,
        state,
        pom,
        float(true_theta),
        cfg.shots,
        cfg.trajectories,
        cfg.seed,
        theta_u=cfg.theta_u,
        workers=worker_count(),
    )
    for i, tr in enumerate(trajectories):
        _write_csv(
            out / f"trajectory_{i:04d}.csv",
            ["shot", "outcome", "estimate", "experimental_error"],
            [
                [n + 1, tr.outcomes[n], float(tr.estimates[n]), float(tr.experimental_errors[n])]
                for n in range(len(tr.outcomes))
            ],
        )
    finals = np.array([tr.experimental_errors[-1] for tr in trajectories])
    write_json(
        out / "summary.json",
        {
            "trajectories": len(trajectories),
            "shots": cfg.shots,
            "seed": cfg.seed,
            "true_theta": float(true_theta),
            "mean_final_error": float(finals.mean()),
            "stddev_final_error": float(finals.std(ddof=1)) if len(finals) > 1 else 0.0,
            **cfg.provenance(),
        },
    )
    if cfg.plots:
        from .plots import plot_trajectories

        plot_trajectories(trajectories, out / "simulate.png")


def _cmd_multishot_exact(cfg: RunConfig) -> None:
    prior, state = _single_param_inputs(cfg)
    pom = _build_pom(cfg, prior, state)
    out = _prepare_out(cfg)
    errors = [
        exact_multishot_error(prior, state, pom, n) for n in range(1, cfg.shots + 1)
    ]
    m = operator_moments(prior, state, cfg.theta_u)
    eps_min = minimum_error(m).epsilon_min
    _write_csv(
        out / "multishot.csv",
        ["shots", "exact_error"],
        [[n + 1, float(e)] for n, e in enumerate(errors)],
    )
    write_json(
        out / "multishot.json",
        {
            "errors": [float(e) for e in errors],
            "epsilon_min_single_shot": eps_min,
            **cfg.provenance(),
        },
    )
    if cfg.plots:
        from .plots import plot_error_vs_shots

        plot_error_vs_shots(errors, eps_min, out / "multishot.png")


def _build_multiparam_inputs(cfg: RunConfig) -> tuple[MultiPrior, np.ndarray, list[float]]:
    axes_spec = cfg.get("axes")
    multi_state_path = cfg.path("multi_state_path")
    h_paths = cfg.raw.get("hamiltonian_paths")

    if multi_state_path is not None:
        obj = json.loads(Path(multi_state_path).read_text())
        grids = [
            Grid(
                nodes=np.array([t for t, _ in axis]),
                weights=np.array([w for _, w in axis]),
            )
            for axis in obj["axes"]
        ]
        states = np.stack([matrix_from_obj(m) for m in obj["states"]])
    elif h_paths is not None:
        if not axes_spec or len(axes_spec) != len(h_paths):
            raise ValidationError("'axes' must list one grid spec per hamiltonian")
        grids = [
            make_log_grid(float(a["theta_min"]), float(a["theta_max"]), int(a["n"]))
            for a in axes_spec
        ]
        factors = []
        for g, p in zip(grids, h_paths):
            h = read_hamiltonian_csv(cfg.base / str(p), k_B=cfg.kb)
            factors.append(thermal_state_family(h, g).states)
        states = tensor_product_states(factors)
    else:
        raise ValidationError("multiparam needs 'multi_state_path' or 'hamiltonian_paths'")

    kind = cfg.get("prior", {"kind": "jeffreys"}).get("kind", "jeffreys")
    if kind == "jeffreys":
        prior = jeffreys_product_prior(grids)
    elif kind == "flat_in_log":
        prior = product_prior([log_flat_prior(g) for g in grids])
    elif kind == "flat":
        prior = product_prior([flat_prior(g) for g in grids])
    else:
        raise ValidationError(f"multiparam supports jeffreys/flat_in_log/flat priors, not {kind!r}")

    theta_u = cfg.get("theta_u_list")
    if theta_u is None:
        theta_u = [cfg.theta_u] * len(grids)
    if len(theta_u) != len(grids):
        raise ValidationError("'theta_u_list' must have one entry per axis")
    return prior, states, [float(t) for t in theta_u]


def _cmd_multiparam(cfg: RunConfig) -> None:
    prior, states, theta_u = _build_multiparam_inputs(cfg)
    out = _prepare_out(cfg)
    ms = multi_moments(prior, states, theta_u)
    report = multi_bound(ms, prior)
    write_json(
        out / "multiparam.json",
        {
            "per_parameter": [float(x) for x in report.per_parameter],
            "bound": report.bound,
            "commutator_norms": [[i, j, float(n)] for i, j, n in report.commutator_norms],
            "saturable": report.saturable,
            **cfg.provenance(),
        },
    )
    if cfg.plots:
        from .plots import plot_multi_bound

        plot_multi_bound(report, out / "multiparam.png")


_HANDLERS = {
    "solve": _cmd_solve,
    "thermometry": _cmd_thermometry,
    "assess": _cmd_assess,
    "simulate": _cmd_simulate,
    "multishot-exact": _cmd_multishot_exact,
    "multiparam": _cmd_multiparam,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qse",
        description="Scale-parameter estimation with quantum probes: "
        "precision limits, optimal measurements, and simulation.",
    )
    parser.add_argument("--version", action="version", version=f"qse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config document")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="master seed for simulations")
        p.add_argument("--shots", type=int, help="shots per trajectory / enumeration depth")
        p.add_argument("--kb", type=float, help="Boltzmann constant")
        p.add_argument("--grid-n", type=int, dest="grid_n", help="grid node count")
        p.add_argument("--theta-min", type=float, dest="theta_min")
        p.add_argument("--theta-max", type=float, dest="theta_max")
        p.add_argument("--theta-u", type=float, dest="theta_u", help="reference scale")
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        _HANDLERS[args.command](cfg)
    except ValidationError as exc:
        return _fail("validation", str(exc), 2)
    except NumericalFailureError as exc:
        return _fail("numerical-failure", str(exc), 3)
    except QseError as exc:  # pragma: no cover - safety net
        return _fail("error", str(exc), 3)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
