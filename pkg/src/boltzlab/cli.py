"""Batch harness: plain-text configs in, JSON-lines verdicts out.

Config files are line-oriented: ``key value [value ...]`` at top level,
with one level of named blocks in braces. ``#`` starts a comment.

::

    experiment verify
    checks cancellation elementary

    kernel {
      dim 3
      gamma -1.0
      s 0.25
      b0 0.4
      theta_min 1.1
      n_theta 8
      n_omega 4
    }
    grid {
      R 5.0
      N 16
    }
    functional {
      p 2.0
      k 4.0
      q 1.35
      eps 1e-2 1e-1 1
    }
    solver {
      dt 0.05
      T 0.3
      stepper forward-euler
      snapshot_stride 0
    }
    corpus {
      seed 7
      size 8
      rho 0.5
      E 10.0
      H 10.0
    }
    tolerance {
      exact_slack 1e-9
      fitted_slack 0.05
    }

Every key above is optional (the values shown are the defaults) and
unknown keys are rejected with their line number: a silently ignored
typo in gamma or s would invalidate a whole run. ``grid.N`` accepts a
value list only under ``experiment scan`` with ``axis N``.

Outputs land in the --out directory: ``verdicts.jsonl`` (one canonical
JSON object per check, sorted by check id), ``manifest.json`` (config
hash, seed, version, wall clock, pass/fail counts), and for solver
experiments ``trajectory.csv`` / ``trace.csv`` plus optional ``.npz``
state snapshots. Reruns with identical config and seed are
byte-identical except for the wall-clock entry in the manifest, which
is why the clock lives there and nowhere else.

Exit codes: 0 all asserted checks pass, 1 at least one check failed,
2 configuration error (parse or named validation gate), 3 runtime
error (a solver abort or an internal failure mid-suite).
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import click
import numpy as np

from . import __version__
from .angular import CollisionKernel
from .collision import (
    cancellation_convolution,
    cancellation_direct,
    changevar_check,
    conservation_residuals,
    coercivity_check,
    fit_coercivity_constants,
    q_strong,
)
from .functionals import (
    hls_check,
    interpolation_check,
    lp_norm,
    moment,
    prodi_serrin_from_q,
    sobolev_norm,
)
from .grid import ClassYBounds, GridFunction, VelocityGrid, make_maxwellian
from .inequalities import (
    build_corpus,
    commutator,
    commutator_bound_check,
    conv_bound_check,
    elementary_xy_check,
    eps_poincare,
    eps_poincare_weighted,
    fit_poincare_constant,
    poincare_stats,
    trilinear_check,
    weight_cancellation_check,
)
from .oracle import CROSS_CHECKS, run_cross_check
from .reports import InequalityVerdict, dumps_canonical
from .solver import (
    SolverConfig,
    SolverRunError,
    evolve,
    gronwall_envelope,
    lp_evolution_check,
    appearance_envelope,
    stability_run,
    write_trajectory_csv,
)

__all__ = ["main", "parse_config", "ExperimentConfig", "ConfigError", "SUITES"]


class ConfigError(ValueError):
    """Raised for malformed or schema-violating config text."""

    def __init__(self, message: str, *, line: int | None = None, key: str | None = None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if key is not None:
            loc.append(f"key {key!r}")
        prefix = ", ".join(loc)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line = line
        self.key = key


# ---------------------------------------------------------------------------
# schema


_EXPERIMENTS = ("verify", "evolve", "stability", "scan", "oracle")

# type tags: i int, f float, s string, i+ int list, f+ float list, s+ string list
_SCHEMA: dict[str | None, dict[str, str]] = {
    None: {
        "experiment": "s",
        "checks": "s*",
        "axis": "s",
        "target": "s",
        "initial": "s",
        "perturbation": "f",
    },
    "kernel": {
        "dim": "i",
        "gamma": "f",
        "s": "f",
        "b0": "f",
        "theta_min": "f",
        "n_theta": "i",
        "n_omega": "i",
    },
    "grid": {"R": "f", "N": "i+"},
    "functional": {"p": "f", "k": "f", "q": "f", "eps": "f+"},
    "solver": {"dt": "f", "T": "f", "stepper": "s", "snapshot_stride": "i"},
    "corpus": {"seed": "i", "size": "i", "rho": "f", "E": "f", "H": "f"},
    "tolerance": {"exact_slack": "f", "fitted_slack": "f"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; block contents stay primitive
    so the canonical serialization (and its hash) is trivial."""

    experiment: str = "verify"
    checks: tuple[str, ...] | None = None  # absent means: every suite; () means: none
    axis: str = "eps"
    target: str = ""  # empty means: every oracle target
    initial: str = "maxwellian"
    perturbation: float = 1e-3
    kernel: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    functional: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    corpus: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)

    def canonical(self) -> str:
        payload = {
            "experiment": self.experiment,
            "checks": None if self.checks is None else list(self.checks),
            "axis": self.axis,
            "target": self.target,
            "initial": self.initial,
            "perturbation": self.perturbation,
            "kernel": self.kernel,
            "grid": self.grid,
            "functional": self.functional,
            "solver": self.solver,
            "corpus": self.corpus,
            "tolerance": self.tolerance,
        }
        return dumps_canonical(payload)

    def build_kernel(self) -> CollisionKernel:
        k = self.kernel
        return CollisionKernel(
            k["dim"],
            k["gamma"],
            k["s"],
            b0=k["b0"],
            theta_min=k["theta_min"],
            n_theta=k["n_theta"],
            n_omega=k["n_omega"],
        )

    def build_grid(self, n: int | None = None) -> VelocityGrid:
        ns = self.grid["N"]
        if n is None:
            if len(ns) != 1:
                raise ConfigError("grid.N must be a single value outside scan axis N", key="grid.N")
            n = ns[0]
        return VelocityGrid(self.kernel["dim"], self.grid["R"], n)

    def bounds(self) -> ClassYBounds:
        c = self.corpus
        return ClassYBounds(c["rho"], c["E"], c["H"])


_DEFAULTS = {
    "experiment": "verify",
    "checks": None,
    "axis": "eps",
    "target": "",
    "initial": "maxwellian",
    "perturbation": 1e-3,
    "kernel": {
        "dim": 3,
        "gamma": -1.0,
        "s": 0.25,
        "b0": 0.4,
        "theta_min": 1.1,
        "n_theta": 8,
        "n_omega": 4,
    },
    "grid": {"R": 5.0, "N": [16]},
    "functional": {"p": 2.0, "k": 4.0, "q": 1.35, "eps": [1e-2, 1e-1, 1.0]},
    "solver": {"dt": 0.05, "T": 0.3, "stepper": "forward-euler", "snapshot_stride": 0},
    "corpus": {"seed": 7, "size": 8, "rho": 0.5, "E": 10.0, "H": 10.0},
    "tolerance": {"exact_slack": 1e-9, "fitted_slack": 0.05},
}


def _coerce(raw: list[str], kind: str, line: int, key: str):
    def one(tok: str, target: str):
        try:
            if target == "i":
                return int(tok)
            if target == "f":
                return float(tok)
        except ValueError:
            raise ConfigError(f"expected {'an int' if target == 'i' else 'a number'}, got {tok!r}", line=line, key=key) from None
        return tok

    if kind.endswith("*"):
        return [one(tok, kind[0]) for tok in raw]
    if kind.endswith("+"):
        if not raw:
            raise ConfigError("expected at least one value", line=line, key=key)
        return [one(tok, kind[0]) for tok in raw]
    if len(raw) != 1:
        raise ConfigError(f"expected exactly one value, got {len(raw)}", line=line, key=key)
    return one(raw[0], kind)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text against the schema; every
    diagnostic carries the offending line and key."""
    top: dict = {}
    blocks: dict[str, dict] = {}
    current: str | None = None
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        stripped = rawline.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped == "}":
            if current is None:
                raise ConfigError("unmatched '}'", line=lineno)
            current = None
            continue
        tokens = stripped.split()
        if tokens[-1] == "{":
            if current is not None:
                raise ConfigError("blocks do not nest", line=lineno)
            if len(tokens) != 2:
                raise ConfigError("block header must be 'name {'", line=lineno)
            name = tokens[0]
            if name not in _SCHEMA or name is None:
                raise ConfigError(f"unknown block {name!r}", line=lineno, key=name)
            current = name
            blocks.setdefault(name, {})
            continue
        key, values = tokens[0], tokens[1:]
        schema = _SCHEMA[current]
        scope = f"{current}.{key}" if current else key
        if key not in schema:
            raise ConfigError("unknown key", line=lineno, key=scope)
        parsed = _coerce(values, schema[key], lineno, scope)
        dest = top if current is None else blocks[current]
        if key in dest:
            raise ConfigError("duplicate key", line=lineno, key=scope)
        dest[key] = parsed
    if current is not None:
        raise ConfigError(f"unclosed block {current!r}")

    if "experiment" in top and top["experiment"] not in _EXPERIMENTS:
        raise ConfigError(
            f"must be one of {', '.join(_EXPERIMENTS)}", key="experiment"
        )
    merged: dict = {}
    for name in ("experiment", "axis", "target", "initial", "perturbation"):
        merged[name] = top.get(name, _DEFAULTS[name])
    merged["checks"] = tuple(top["checks"]) if "checks" in top else None
    for block in ("kernel", "grid", "functional", "solver", "corpus", "tolerance"):
        merged[block] = {**_DEFAULTS[block], **blocks.get(block, {})}
    cfg = ExperimentConfig(**merged)
    for suite in cfg.checks or ():
        if suite not in SUITES:
            raise ConfigError(f"unknown suite (known: {', '.join(sorted(SUITES))})", key=f"checks.{suite}")
    return cfg


# ---------------------------------------------------------------------------
# verification suites

# Each suite maps (config, rng) to a list of verdicts. Suites stay at
# desk scale so a full `verify` pass is a smoke test, not a benchmark;
# the acceptance-grade configurations live in the test suite.


def _kernel_meta(kernel: CollisionKernel) -> dict:
    return {
        "d": kernel.d,
        "gamma": kernel.gamma,
        "s": kernel.s,
        "b0": kernel.b0,
        "theta_min": kernel.theta_min,
    }


def _suite_cancellation(cfg: ExperimentConfig, rng: np.random.Generator) -> list[InequalityVerdict]:
    kernel = cfg.build_kernel()
    grid = cfg.build_grid()
    F = make_maxwellian(grid, 1.0, np.zeros(grid.d), 0.9)
    closed = cancellation_convolution(F, kernel)
    idx = rng.choice(grid.n_nodes, size=4, replace=False)
    direct = cancellation_direct(F, kernel, idx)
    ref = float(np.abs(closed.values).max())
    dev = float(np.abs(direct - closed.values.ravel()[idx]).max())
    return [
        InequalityVerdict(
            name="cancellation_agreement",
            lhs=dev / ref,
            rhs=0.02,
            provenance={"grid": grid.meta(), "kernel": _kernel_meta(kernel), "samples": idx.tolist()},
        )
    ]


def _suite_conservation(cfg: ExperimentConfig, rng: np.random.Generator) -> list[InequalityVerdict]:
    kernel = cfg.build_kernel()
    grid = cfg.build_grid()
    items = build_corpus(grid, min(cfg.corpus["size"], 6), cfg.corpus["seed"], bounds=cfg.bounds())
    out = []
    for it in items:
        res = conservation_residuals(it.f, it.f, kernel, prod_tol=1e-3)
        m2 = moment(it.f, 2)
        worst = max(max(abs(r) for r in res["momentum"]), abs(res["energy"])) / m2
        out.append(
            InequalityVerdict(
                name="conservation_residuals",
                lhs=worst,
                rhs=1e-2,
                provenance={"item": it.item_id, "mass_residual": res["mass"], "grid": grid.meta()},
            )
        )
        out.append(
            InequalityVerdict(
                name="conservation_mass",
                lhs=abs(res["mass"]) / m2,
                rhs=1e-12,
                provenance={"item": it.item_id, "grid": grid.meta()},
            )
        )
    return out


def _suite_equilibrium(cfg: ExperimentConfig, rng: np.random.Generator) -> list[InequalityVerdict]:
    kernel = cfg.build_kernel()
    grid = cfg.build_grid()
    M = make_maxwellian(grid, 1.0, np.zeros(grid.d), 1.0)
    ev = q_strong(M, M, kernel, with_residuals=False)
    sup = float(np.abs(ev.result.values).max())
    # pure interpolation error on an exact equilibrium; the bound is
    # h^2-scaled from the measured constant at N=16, theta_min=1e-2
    bound = 0.11 * kernel.b0 * grid.h**2 * max(1.0, kernel.theta_min ** (-2 * kernel.s))
    return [
        InequalityVerdict(
            name="equilibrium_sup",
            lhs=sup,
            rhs=bound,
            provenance={"grid": grid.meta(), "kernel": _kernel_meta(kernel)},
        )
    ]


def _suite_elementary(cfg: ExperimentConfig, rng: np.random.Generator) -> list[InequalityVerdict]:
    seeds = rng.integers(0, 2**31, size=4)
    ps = (cfg.functional["p"], 1.5, 3.0, 7.0)
    return [
        elementary_xy_check(20_000, p, seed=int(s), rel_tol=cfg.tolerance["exact_slack"] * 1e-3)
        for p, s in zip(ps, seeds)
    ]


def _suite_prodi_serrin(cfg: ExperimentConfig, rng: np.random.Generator) -> list[InequalityVerdict]:
    worst = 0.0
    n = 200
    for _ in range(n):
        d = int(rng.integers(2, 4))
        s = rng.uniform(0.05, min(0.95, (d - 0.2) / 2))
        # gamma + 2s < 0 keeps the admissible q-window inside (1, inf)
        gamma = rng.uniform(max(-4.0, -d) + 0.05, -2 * s - 0.05)
        lo, hi = d / (d + gamma + 2 * s), d / (d + gamma)
        t = rng.uniform(0.01, 0.99)
        q = lo + t * (hi - lo)
        ps = prodi_serrin_from_q(d, gamma, s, q)
        worst = max(worst, abs(2 * s / ps.r + d / q - (2 * s + d + gamma)))
    return [
        InequalityVerdict(
            name="prodi_serrin_identity",
            lhs=worst,
            rhs=1e-12,
            provenance={"samples": n},
        )
    ]


def _corpus_2d(cfg: ExperimentConfig) -> tuple:
    kernel = CollisionKernel(
        2, -1.6, 0.2,
        b0=cfg.kernel["b0"],
        theta_min=cfg.kernel["theta_min"],
        n_theta=cfg.kernel["n_theta"],
        n_omega=cfg.kernel["n_omega"],
    )
    grid = VelocityGrid(2, cfg.grid["R"], 128)
    bounds = ClassYBounds(0.1, cfg.corpus["E"], cfg.corpus["H"])
    items = build_corpus(
        grid,
        cfg.corpus["size"],
        cfg.corpus["seed"],
        bounds=bounds,
        temperature_range=(0.01, 1.2),
        mass=0.5,
        kinds=("maxwellian",),
    )
    return kernel, grid, items


def _suite_eps_poincare(cfg: ExperimentConfig, rng: np.random.Generator) -> list[InequalityVerdict]:
    kernel, grid, items = _corpus_2d(cfg)
    q = 3.5
    probes = [make_maxwellian(grid, 1.0, np.array(it.params["mean"]), 0.02) for it in items]
    stats = [poincare_stats(it.f, ph, kernel, q) for it, ph in zip(items, probes)]
    out = []
    for eps in cfg.functional["eps"]:
        C0 = fit_poincare_constant(stats[0::2], eps)
        for i in range(1, len(items), 2):
            v = eps_poincare(items[i].f, probes[i], kernel, q, eps, C0, slack=cfg.tolerance["fitted_slack"])
            v.provenance["item"] = items[i].item_id
            v.fitted_constants["C0"] = C0
            out.append(v)
    return out


def _suite_eps_poincare_weighted(cfg: ExperimentConfig, rng: np.random.Generator) -> list[InequalityVerdict]:
    kernel, grid, items = _corpus_2d(cfg)
    q, beta, a_exp = 3.5, 1.0, 3.0
    out = []
    for it in items[:4]:
        probe = make_maxwellian(grid, 1.0, np.array(it.params["mean"]), 0.02)
        v = eps_poincare_weighted(it.f, probe, kernel, q, beta, a_exp, 0.1, slack=cfg.tolerance["fitted_slack"])
        v.provenance["item"] = it.item_id
        out.append(v)
    return out


def _suite_conv_bound(cfg: ExperimentConfig, rng: np.random.Generator) -> list[InequalityVerdict]:
    kernel = cfg.build_kernel()
    grid = cfg.build_grid()
    items = build_corpus(grid, 4, cfg.corpus["seed"] + 1, bounds=cfg.bounds())
    alpha = kernel.gamma
    ell = 0.5 + max(0.0, 1.5 + alpha + 2 * kernel.s)
    out = []
    for chi, psi in ((items[0].f, items[1].f), (items[2].f, items[3].f)):
        out.append(conv_bound_check(chi, psi, kernel, alpha, 2.0, ell, slack=cfg.tolerance["fitted_slack"]))
    return out


def _suite_trilinear(cfg: ExperimentConfig, rng: np.random.Generator) -> list[InequalityVerdict]:
    kernel = cfg.build_kernel()
    grid = cfg.build_grid(min(cfg.grid["N"][0], 12))
    items = build_corpus(grid, 3, cfg.corpus["seed"] + 2, bounds=cfg.bounds())
    ell = max(6.0, (9.0 + kernel.gamma) / 2.0 + 2.0 * kernel.s) + 0.5
    return [
        trilinear_check(items[0].f, items[1].f, items[2].f, kernel, ell, slack=cfg.tolerance["fitted_slack"])
    ]


def _suite_commutator(cfg: ExperimentConfig, rng: np.random.Generator) -> list[InequalityVerdict]:
    kernel = cfg.build_kernel()
    grid = cfg.build_grid(min(cfg.grid["N"][0], 12))
    items = build_corpus(grid, 3, cfg.corpus["seed"] + 3, bounds=cfg.bounds())
    f, g, psi = items[0].f, items[1].f, items[2].f
    r0 = commutator(f, g, psi, kernel, 0.0)
    scale = lp_norm(f, 1) * lp_norm(g, 2) * lp_norm(psi, 2)
    out = [
        InequalityVerdict(
            name="commutator_vanishes_k0",
            lhs=abs(r0) / scale,
            rhs=1e-10,
            provenance={"grid": grid.meta()},
        ),
        # the bound needs a weight heavier than 11 + 4s; lift the configured
        # k when it sits below that threshold instead of erroring out
        commutator_bound_check(
            f, g, psi, kernel,
            max(cfg.functional["k"], 11.0 + 4.0 * kernel.s + 1.0),
            slack=cfg.tolerance["fitted_slack"],
        ),
    ]
    return out


def _suite_coercivity(cfg: ExperimentConfig, rng: np.random.Generator) -> list[InequalityVerdict]:
    kernel = cfg.build_kernel()
    grid = cfg.build_grid(min(cfg.grid["N"][0], 16))
    items = build_corpus(grid, 4, cfg.corpus["seed"] + 4, bounds=cfg.bounds())
    G = items[0].f
    c0, C0, info = fit_coercivity_constants(G, [it.f for it in items[1:3]], kernel)
    return [
        coercivity_check(G, items[3].f, kernel, c0 * 0.5, C0 * 2.0, bounds=cfg.bounds(), slack=cfg.tolerance["fitted_slack"])
    ]


def _suite_changevar(cfg: ExperimentConfig, rng: np.random.Generator) -> list[InequalityVerdict]:
    kernel = cfg.build_kernel()
    grid = cfg.build_grid()
    psi = make_maxwellian(grid, 1.0, np.zeros(grid.d), 0.8)
    return [changevar_check(psi, kernel, tol=0.05, n_samples=3)]


def _suite_interpolation(cfg: ExperimentConfig, rng: np.random.Generator) -> list[InequalityVerdict]:
    grid = cfg.build_grid()
    items = build_corpus(grid, 2, cfg.corpus["seed"] + 5, bounds=cfg.bounds())
    triple = ((3.0, 8.0 / 3.0), (2.0, 2.0), (4.0, 4.0))
    return [interpolation_check(it.f, triple, 0.5) for it in items]


def _suite_hls(cfg: ExperimentConfig, rng: np.random.Generator) -> list[InequalityVerdict]:
    grid = cfg.build_grid()
    items = build_corpus(grid, 4, cfg.corpus["seed"] + 6, bounds=cfg.bounds())
    d = grid.d
    lam = d / 2.0
    pm = 2 * d / (2 * d - lam)
    fitted = hls_check(items[0].f, items[1].f, pm, pm, lam)
    C = fitted.fitted_constants["C_hls"]
    return [fitted, hls_check(items[2].f, items[3].f, pm, pm, lam, constant=2.0 * C, slack=cfg.tolerance["fitted_slack"])]


def _suite_weight_cancellation(cfg: ExperimentConfig, rng: np.random.Generator) -> list[InequalityVerdict]:
    kernel = cfg.build_kernel()
    return [
        weight_cancellation_check(kernel, 4.0, 1.0, 4000, seed=cfg.corpus["seed"], slack=cfg.tolerance["fitted_slack"])
    ]


SUITES = {
    "cancellation": _suite_cancellation,
    "changevar": _suite_changevar,
    "coercivity": _suite_coercivity,
    "commutator": _suite_commutator,
    "conservation": _suite_conservation,
    "conv-bound": _suite_conv_bound,
    "elementary": _suite_elementary,
    "eps-poincare": _suite_eps_poincare,
    "eps-poincare-weighted": _suite_eps_poincare_weighted,
    "equilibrium": _suite_equilibrium,
    "hls": _suite_hls,
    "interpolation": _suite_interpolation,
    "prodi-serrin": _suite_prodi_serrin,
    "trilinear": _suite_trilinear,
    "weight-cancellation": _suite_weight_cancellation,
}


# ---------------------------------------------------------------------------
# artifact plumbing


def _write_verdicts(path: Path, rows: list[dict]) -> None:
    rows = sorted(rows, key=lambda r: r["check_id"])
    with path.open("w", newline="\n") as fp:
        for row in rows:
            fp.write(dumps_canonical(row))
            fp.write("\n")


def _verdict_rows(suite: str, verdicts: list[InequalityVerdict]) -> list[dict]:
    rows = []
    for i, v in enumerate(verdicts):
        rows.append({"check_id": f"{suite}/{i:03d}", **v.to_record()})
    return rows


def _manifest(cfg: ExperimentConfig, seed: int, rows: list[dict], t0: float, suites: list[str]) -> dict:
    n_checks = len(rows)
    n_passed = sum(1 for r in rows if r.get("pass", True))
    return {
        "record": "manifest",
        "config_sha256": hashlib.sha256(cfg.canonical().encode()).hexdigest(),
        "seed": seed,
        "version": __version__,
        "wall_clock_s": round(time.monotonic() - t0, 3),
        "suites": suites,
        "counts": {"checks": n_checks, "passed": n_passed, "failed": n_checks - n_passed},
    }


def _save_snapshot(path: Path, f: GridFunction) -> None:
    np.savez(path, values=f.values, d=f.grid.d, R=f.grid.R, N=f.grid.N)


def _initial_state(cfg: ExperimentConfig, grid: VelocityGrid) -> GridFunction:
    if cfg.initial == "maxwellian":
        return make_maxwellian(grid, 1.0, np.zeros(grid.d), 1.0)
    if cfg.initial == "two-bump":
        c = np.zeros(grid.d)
        c[0] = 0.3 * grid.R
        a = make_maxwellian(grid, 0.55, c, 0.22)
        b = make_maxwellian(grid, 0.45, -c, 0.3)
        return GridFunction(grid, a.values + b.values, nonneg=True)
    raise ConfigError("must be 'maxwellian' or 'two-bump'", key="initial")


def _solver_config(cfg: ExperimentConfig) -> SolverConfig:
    return SolverConfig(
        kernel=cfg.build_kernel(),
        grid=cfg.build_grid(),
        dt=cfg.solver["dt"],
        horizon=cfg.solver["T"],
        p=cfg.functional["p"],
        k=cfg.functional["k"],
        q=cfg.functional["q"],
        stepper=cfg.solver["stepper"],
    )


# ---------------------------------------------------------------------------
# experiment runners


def _run_verify(cfg: ExperimentConfig, seed: int, out: Path) -> tuple[list[dict], list[str]]:
    suites = sorted(SUITES) if cfg.checks is None else list(cfg.checks)
    rows: list[dict] = []
    for i, suite in enumerate(suites):
        rng = np.random.default_rng((seed, i))
        rows.extend(_verdict_rows(suite, SUITES[suite](cfg, rng)))
    return rows, suites


def _run_evolve(cfg: ExperimentConfig, seed: int, out: Path) -> tuple[list[dict], list[str]]:
    sc = _solver_config(cfg)
    f0 = _initial_state(cfg, sc.grid)
    traj = evolve(f0, sc)
    with (out / "trajectory.csv").open("w", newline="") as fp:
        write_trajectory_csv(fp, traj)
    stride = cfg.solver["snapshot_stride"]
    if stride > 0:
        for j in range(0, len(traj), stride):
            _save_snapshot(out / f"snapshot-{j:04d}.npz", traj.snapshots[j])
    verdicts = lp_evolution_check(traj, slack=cfg.tolerance["fitted_slack"])
    verdicts.append(gronwall_envelope(traj, slack=cfg.tolerance["fitted_slack"]).verdict)
    if cfg.initial == "two-bump":
        verdicts.append(appearance_envelope(traj, slack=cfg.tolerance["fitted_slack"]).verdict)
    return _verdict_rows("evolve", verdicts), ["evolve"]


def _run_stability(cfg: ExperimentConfig, seed: int, out: Path) -> tuple[list[dict], list[str]]:
    sc = _solver_config(cfg)
    g0 = _initial_state(cfg, sc.grid)
    rng = np.random.default_rng((seed, 99))
    bump = 1.0 + cfg.perturbation * rng.uniform(-1.0, 1.0, size=g0.values.shape)
    h0 = GridFunction(sc.grid, g0.values * bump, nonneg=True)
    trace, verdict = stability_run(h0, g0, sc, slack=cfg.tolerance["fitted_slack"])
    with (out / "trace.csv").open("w", newline="") as fp:
        fp.write("t,N,lambda_h,lambda_g,hs_h,ps_g,theta_raw\n")
        for j, t in enumerate(trace.times):
            fp.write(
                f"{t!r},{trace.n_vals[j]!r},{trace.lambda_h[j]!r},{trace.lambda_g[j]!r},"
                f"{trace.hs_h[j]!r},{trace.ps_g[j]!r},{trace.theta_raw[j]!r}\n"
            )
    return _verdict_rows("stability", [verdict]), ["stability"]


def _run_scan(cfg: ExperimentConfig, seed: int, out: Path) -> tuple[list[dict], list[str]]:
    rows: list[dict] = []
    summary: list[dict] = []
    if cfg.axis == "eps":
        kernel, grid, items = _corpus_2d(cfg)
        q = 3.5
        probes = [make_maxwellian(grid, 1.0, np.array(it.params["mean"]), 0.02) for it in items]
        stats = [poincare_stats(it.f, ph, kernel, q) for it, ph in zip(items, probes)]
        for j, eps in enumerate(cfg.functional["eps"]):
            C0 = fit_poincare_constant(stats[0::2], eps)
            block = []
            for i in range(1, len(items), 2):
                v = eps_poincare(items[i].f, probes[i], kernel, q, eps, C0, slack=cfg.tolerance["fitted_slack"])
                v.provenance["item"] = items[i].item_id
                block.append(v)
            rows.extend(_verdict_rows(f"scan-eps-{j:02d}", block))
            summary.append({"axis": "eps", "value": eps, "C0": C0})
    elif cfg.axis == "N":
        sups = []
        for j, n in enumerate(cfg.grid["N"]):
            sub = replace(cfg, grid={**cfg.grid, "N": [n]})
            block = _suite_equilibrium(sub, np.random.default_rng((seed, j)))
            rows.extend(_verdict_rows(f"scan-N-{j:02d}", block))
            sups.append(block[0].lhs)
            summary.append({"axis": "N", "value": n, "sup": sups[-1]})
        for j in range(1, len(sups)):
            summary[j]["richardson_ratio"] = sups[j] / sups[j - 1] if sups[j - 1] else float("nan")
    else:
        raise ConfigError("scan axis must be 'eps' or 'N'", key="axis")
    with (out / "scan.csv").open("w", newline="\n") as fp:
        keys = ["axis", "value", "C0", "sup", "richardson_ratio"]
        fp.write(",".join(keys) + "\n")
        for row in summary:
            fp.write(",".join("" if k not in row else repr(row[k]) for k in keys) + "\n")
    return rows, [f"scan:{cfg.axis}"]


def _run_oracle(cfg: ExperimentConfig, seed: int, out: Path) -> tuple[list[dict], list[str]]:
    kernel = cfg.build_kernel()
    grid = cfg.build_grid()
    targets = [cfg.target] if cfg.target else sorted(CROSS_CHECKS)
    rows = []
    for i, name in enumerate(targets):
        if name not in CROSS_CHECKS:
            raise ConfigError(f"unknown target (known: {', '.join(sorted(CROSS_CHECKS))})", key="target")
        rep = run_cross_check(name, grid, kernel=kernel)
        rows.append({"check_id": f"oracle-{name}/{i:03d}", **rep.to_record()})
    return rows, [f"oracle:{t}" for t in targets]


_RUNNERS = {
    "verify": _run_verify,
    "evolve": _run_evolve,
    "stability": _run_stability,
    "scan": _run_scan,
    "oracle": _run_oracle,
}


# ---------------------------------------------------------------------------
# entry points


def _load_config(config_path: str | None, seed: int | None, experiment: str | None) -> tuple[ExperimentConfig, int]:
    if config_path is None:
        cfg = ExperimentConfig(**{k: v for k, v in _DEFAULTS.items()})
    else:
        cfg = parse_config(Path(config_path).read_text())
    if experiment is not None:
        cfg = replace(cfg, experiment=experiment)
    run_seed = cfg.corpus["seed"] if seed is None else seed
    if seed is not None:
        cfg = replace(cfg, corpus={**cfg.corpus, "seed": seed})
    return cfg, run_seed


def _execute(experiment: str, config: str | None, seed: int | None, outdir: str, jobs: int) -> int:
    t0 = time.monotonic()
    try:
        cfg, run_seed = _load_config(config, seed, experiment)
        cfg.build_kernel()
        cfg.build_grid(cfg.grid["N"][0])
    except (ConfigError, ValueError, OSError) as exc:
        click.echo(f"config error: {exc}", err=True)
        return 2
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rows, suites = _RUNNERS[cfg.experiment](cfg, run_seed, out)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return 2
    except SolverRunError as exc:
        click.echo(f"runtime error: {exc}", err=True)
        return 3
    _write_verdicts(out / "verdicts.jsonl", rows)
    manifest = _manifest(cfg, run_seed, rows, t0, suites)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    n_failed = manifest["counts"]["failed"]
    click.echo(
        f"{cfg.experiment}: {manifest['counts']['checks']} checks, "
        f"{manifest['counts']['passed']} passed, {n_failed} failed -> {out}"
    )
    return 1 if n_failed else 0


def _common_options(fn):
    fn = click.option("--config", type=click.Path(), default=None, help="Config file path.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Override the corpus seed.")(fn)
    fn = click.option("--out", "outdir", type=click.Path(), default="out", show_default=True, help="Output directory.")(fn)
    fn = click.option(
        "--jobs",
        type=int,
        default=1,
        show_default=True,
        help="Worker bound; checks run serially regardless, so results never depend on it.",
    )(fn)
    return fn


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """Verification harness for the very-soft-potential collision laboratory."""


_HELP = {
    "verify": "Run inequality suites and write one verdict per check.",
    "evolve": "Integrate an initial state and check its norm envelopes.",
    "stability": "Track a perturbation pair inside the contraction cone.",
    "scan": "Sweep eps or the grid resolution and tabulate the trend.",
    "oracle": "Cross-check grid evaluators against the slow reference path.",
}


def _register(name: str) -> None:
    @main.command(name=name, help=_HELP[name])
    @_common_options
    def _cmd(config, seed, outdir, jobs, _name=name):
        sys.exit(_execute(_name, config, seed, outdir, jobs))


for _name in _EXPERIMENTS:
    _register(_name)


if __name__ == "__main__":
    main()
