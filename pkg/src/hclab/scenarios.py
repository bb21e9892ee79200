"""Built-in desk-scale scenarios and their configuration schema.

A scenario takes a validated configuration dict and returns a
:class:`ScenarioOutput`: an ordered list of tolerance checks, a results dict
and CSV curves.  Every check names the curve and column it is computed from
and the reduction applied to it, so a report can be re-derived from the
exported curves alone.

Configuration
-------------
A JSON object.  Only ``scenario`` is required; everything else falls back to
the scenario defaults (see :func:`default_config`).  Keys:

``scenario``      one of :data:`SCENARIOS`
``seed``          integer >= 0, drives every random choice
``order``         ODE order ``n``
``polynomials``   list of ``n`` polynomials (each a list of ``[re, im]``
                  coefficients, constant first) or ``{"COMPLETE": [...]}``
                  with the lower ``n - 1`` polynomials
``backend``       ``kind`` plus grid/model parameters (``N``, ``L``, ``b``,
                  ``c``, ``mu``, ``weight``)
``eigenfields``   ``interval``, ``samples``, ``integer_times``, ``branches``
``evolution``     ``t_max``, ``dt``, ``grid_n``, ``grid_L``, ``stride``
``targets``       ``t_star``, ``radius`` or ``radius_fraction``, ``W``,
                  ``lambda``, ``power``, ``membership_tolerance``
``instances``     random-instance generator (``count``, ``max_order``,
                  ``max_dim``, ``scale``, ``lambda_pairs``)
``oracle``        ``samples`` and ``short_horizon`` for the rotation model
``tolerances``    positive thresholds, keys fixed per scenario
``report_format`` ``json``, ``csv`` or ``both``
"""
from __future__ import annotations

import copy
import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from jsonschema import Draft202012Validator

from .backends import (
    GridSpec,
    OUParams,
    WeightSpec,
    admissible_weight_check,
    derivative_poly,
    diag_model,
    ou_eigenfunction,
    ou_matrix,
)
from .dynamics import MAX_STEPS, EvolutionConfig, Trajectory, acp_residual_curve, evolve, extract_derivatives
from .eigenfields import (
    EigenField,
    build_subspace,
    chebyshev_points,
    eigen_residuals,
    companion_lift,
    delta_lift,
)
from .errors import ConfigInvalidError, NotDivisibleError
from .polyspec import ComplexPoly, SpectralCondition, complete_condition, condition_holds_symbolic, matrix_poly
from .recurrence import (
    SURROGATE_NOTE,
    Ball,
    DeltaSource,
    HarnessMode,
    TargetSpec,
    fh_harness,
    lambda_independence,
    synthesize_candidate,
    torus_oracle_density,
)
from .reduction import (
    OperatorHandle,
    build_companion,
    build_delta,
    build_psi,
    derivatives_to_delta_state,
    psi_apply_inverse,
)

__all__ = [
    "SCENARIOS",
    "Check",
    "ScenarioOutput",
    "CONFIG_SCHEMA",
    "default_config",
    "resolve_config",
    "run",
    "describe_scenarios",
    "rederive",
]

# ---------------------------------------------------------------- schema

_POS = {"type": "number", "exclusiveMinimum": 0}
_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_POLY = {"type": "array", "items": _PAIR}
_COUNT = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["scenario"],
    "properties": {
        "scenario": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "order": {"type": "integer", "minimum": 1, "maximum": 8},
        "polynomials": {
            "oneOf": [
                {"type": "array", "items": _POLY},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["COMPLETE"],
                    "properties": {"COMPLETE": {"type": "array", "items": _POLY}},
                },
            ]
        },
        "backend": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["ou", "derivative", "diag", "random"]},
                "N": {"type": "integer", "minimum": 8, "maximum": 4096},
                "L": _POS,
                "b": _POS,
                "c": {"type": "number"},
                "mu": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "weight": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "rho": {"oneOf": [{"const": "ones"}, {"type": "array", "items": _POS}]},
                        "M": {"type": "number", "minimum": 1},
                        "omega": {"type": "number", "minimum": 0},
                    },
                },
            },
        },
        "eigenfields": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "interval": _PAIR,
                "samples": _COUNT,
                "integer_times": {"type": "boolean"},
                "branches": {"type": "array", "items": {"enum": [1, 2]}, "minItems": 1, "uniqueItems": True},
            },
        },
        "evolution": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_max": _POS,
                "dt": _POS,
                "grid_n": {"type": "integer", "minimum": 8, "maximum": 512},
                "grid_L": _POS,
                "stride": _COUNT,
            },
        },
        "targets": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_star": {"type": "number", "minimum": 0},
                "radius": _POS,
                "radius_fraction": _POS,
                "W": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                "lambda": _PAIR,
                "power": _COUNT,
                "membership_tolerance": _POS,
            },
        },
        "instances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "count": _COUNT,
                "max_order": {"type": "integer", "minimum": 1, "maximum": 6},
                "max_dim": {"type": "integer", "minimum": 1, "maximum": 32},
                "scale": _POS,
                "lambda_pairs": {"type": "integer", "minimum": 0},
            },
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"samples": {"type": "integer", "minimum": 1000}, "short_horizon": _POS},
        },
        "tolerances": {"type": "object", "additionalProperties": _POS},
        "report_format": {"enum": ["json", "csv", "both"]},
    },
}

_VALIDATOR = Draft202012Validator(CONFIG_SCHEMA)


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def _invalid(path: str, message: str) -> ConfigInvalidError:
    return ConfigInvalidError(f"{path}: {message}", path=path)


# ------------------------------------------------------------- defaults

_DEFAULTS = {
    "example21": {
        "seed": 0,
        "order": 4,
        "polynomials": [[], [], [[0, 0], [-2, 0]], [[2, 0], [-1, 0]]],
        "backend": {"kind": "ou", "b": 1.0, "c": 2.0, "L": 20.0, "N": 1024},
        "eigenfields": {"interval": [-2.0, 2.0], "samples": 17, "integer_times": False, "branches": [1, 2]},
        "evolution": {"t_max": 5.0, "dt": 1e-3, "grid_n": 64, "grid_L": 10.0, "stride": 10},
        "targets": {"t_star": 1.0, "radius_fraction": 0.3, "W": [0, 1], "lambda": [5.0, 0.0], "power": 1,
                    "membership_tolerance": 1e-6},
        "tolerances": {"backend_residual": 5e-3, "eigen_residual": 2e-2, "acp_residual": 5e-2},
        "report_format": "both",
    },
    "example23": {
        "seed": 0,
        "order": 3,
        "polynomials": [[], [], [[0, 0], [-1, 0]]],
        "backend": {"kind": "derivative", "N": 64, "L": math.pi, "weight": {"rho": "ones", "M": 1.0, "omega": 0.0}},
        "eigenfields": {"interval": [-5.0, 5.0], "samples": 11, "integer_times": True},
        "evolution": {"t_max": 20.0, "dt": 1e-3, "stride": 20},
        "targets": {"t_star": 1.0, "radius_fraction": 0.3, "W": [0, 1, 2], "membership_tolerance": 1e-6},
        "tolerances": {"eigen_residual": 1e-12, "acp_residual": 1e-4, "admissibility": 1e-12},
        "report_format": "both",
    },
    "diag-rotation": {
        "seed": 0,
        "order": 1,
        "polynomials": [[[0, 0], [-1, 0]]],
        "backend": {"kind": "diag", "mu": [1.0, math.sqrt(2.0), math.sqrt(3.0)]},
        "evolution": {"t_max": 20000.0, "dt": 0.01, "stride": 100},
        "targets": {"t_star": 7.0, "radius": 0.5, "W": [0]},
        "oracle": {"samples": 1000000, "short_horizon": 10000.0},
        "tolerances": {"eigen_residual": 1e-12, "acp_residual": 1e-3, "oracle_gap": 0.02, "horizon_drift": 0.02},
        "report_format": "both",
    },
    "delta-vs-companion": {
        "seed": 0,
        "backend": {"kind": "random"},
        "instances": {"count": 50, "max_order": 4, "max_dim": 8, "scale": 0.5, "lambda_pairs": 2},
        "evolution": {"t_max": 10.0, "dt": 1e-3},
        "tolerances": {"u_block": 1e-8, "psi_roundtrip": 1e-12},
        "report_format": "both",
    },
}

_DESCRIPTIONS = {
    "example21": "fourth-order OU example: exact condition, OU eigenfields, Delta lift, Delta evolution and densities",
    "example23": "third-order translation example on the periodic derivative backend with weight rho = 1",
    "diag-rotation": "rotation on a 3-torus (frequencies 1, sqrt2, sqrt3): density vs torus Monte Carlo oracle",
    "delta-vs-companion": "random instances: companion vs Delta evolution, Psi round trip, lambda independence",
}

SCENARIOS: tuple[str, ...] = ("example21", "example23", "diag-rotation", "delta-vs-companion")

_BACKEND_KIND = {"example21": "ou", "example23": "derivative", "diag-rotation": "diag", "delta-vs-companion": "random"}


def describe_scenarios() -> list[dict]:
    return [{"name": name, "description": _DESCRIPTIONS[name]} for name in SCENARIOS]


def default_config(name: str) -> dict:
    if name not in _DEFAULTS:
        raise _invalid("scenario", f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    cfg = copy.deepcopy(_DEFAULTS[name])
    cfg["scenario"] = name
    return cfg


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_config(user: dict) -> dict:
    """Merge ``user`` over the scenario defaults and validate.

    Raises :class:`ConfigInvalidError` whose message starts with the field
    path of the first problem.
    """
    if not isinstance(user, dict):
        raise _invalid("<root>", "configuration must be a JSON object")
    errors = sorted(_VALIDATOR.iter_errors(user), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise _invalid(_path(e.absolute_path), e.message)
    name = user["scenario"]
    cfg = _merge(default_config(name), user)
    errors = sorted(_VALIDATOR.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise _invalid(_path(e.absolute_path), e.message)
    _semantic_checks(cfg)
    return cfg


def _semantic_checks(cfg: dict) -> None:
    name = cfg["scenario"]
    if cfg["backend"]["kind"] != _BACKEND_KIND[name]:
        raise _invalid("backend.kind", f"scenario {name!r} needs backend kind {_BACKEND_KIND[name]!r}")
    allowed = set(_DEFAULTS[name]["tolerances"])
    for key in cfg["tolerances"]:
        if key not in allowed:
            raise _invalid(f"tolerances.{key}", f"unknown tolerance; expected one of {sorted(allowed)}")
    ev = cfg["evolution"]
    if ev["t_max"] / ev["dt"] > MAX_STEPS:
        raise _invalid("evolution.dt", f"t_max/dt exceeds {MAX_STEPS:.0e} steps")
    if "order" in cfg:
        n = cfg["order"]
        polys = cfg["polynomials"]
        if isinstance(polys, dict):
            if len(polys["COMPLETE"]) != n - 1:
                raise _invalid("polynomials.COMPLETE", f"need {n - 1} lower polynomials for order {n}")
        elif len(polys) != n:
            raise _invalid("polynomials", f"need {n} polynomials for order {n}, got {len(polys)}")
    tg = cfg.get("targets")
    if tg is not None:
        for k, i in enumerate(tg.get("W", [])):
            if i >= cfg.get("order", 1):
                raise _invalid(f"targets.W[{k}]", f"component {i} does not exist for order {cfg['order']}")
        if tg.get("t_star", 0) > ev["t_max"]:
            raise _invalid("targets.t_star", "must not exceed evolution.t_max")
    eig = cfg.get("eigenfields")
    if eig is not None and eig["interval"][0] > eig["interval"][1]:
        raise _invalid("eigenfields.interval", "lower end exceeds upper end")
    be = cfg["backend"]
    if be["kind"] == "ou" and not be["c"] > be["b"] / 2:
        raise _invalid("backend.c", "OU parameters need c > b/2")
    w = be.get("weight")
    if w is not None and isinstance(w.get("rho"), list) and len(w["rho"]) != be["N"]:
        raise _invalid("backend.weight.rho", f"need {be['N']} samples")
    orc = cfg.get("oracle")
    if orc is not None and orc["short_horizon"] > ev["t_max"]:
        raise _invalid("oracle.short_horizon", "must not exceed evolution.t_max")


def _polys(cfg: dict) -> tuple[int, list[ComplexPoly]]:
    n = cfg["order"]
    raw = cfg["polynomials"]
    if isinstance(raw, dict):
        lower = [ComplexPoly.from_json(p) for p in raw["COMPLETE"]]
        try:
            top = complete_condition(n, lower)
        except NotDivisibleError as exc:
            raise _invalid("polynomials.COMPLETE", str(exc)) from exc
        return n, lower + [top]
    return n, [ComplexPoly.from_json(p) for p in raw]


# -------------------------------------------------------------- checks

@dataclass(frozen=True)
class Check:
    """``reduce(curve[column]) <op> threshold``.

    ``op`` is ``le``, ``ge`` or ``eq``.  ``params`` carries whatever the
    reduction needs beyond the column itself.
    """

    name: str
    value: float
    threshold: float
    op: str
    curve: str
    column: str
    reduce: str
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        v = float(self.value)
        if not math.isfinite(v):
            return False
        if self.op == "le":
            return bool(v <= self.threshold)
        if self.op == "ge":
            return bool(v >= self.threshold)
        return bool(v == self.threshold)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": _num(self.value),  # NaN and inf become strings
            "threshold": self.threshold,
            "op": self.op,
            "passed": self.passed,
            "curve": f"curves/{self.curve}",
            "column": self.column,
            "reduce": self.reduce,
            "params": self.params,
        }


@dataclass
class ScenarioOutput:
    checks: list[Check] = field(default_factory=list)
    results: dict = field(default_factory=dict)
    curves: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _num(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _windowed_max(times: np.ndarray, values: np.ndarray, stride: int):
    """Rows ``(t_start, t_end, max)`` over consecutive windows of ``stride`` samples."""
    rows = []
    for s in range(0, values.shape[0], stride):
        e = min(s + stride, values.shape[0])
        rows.append((times[s], times[e - 1], float(values[s:e].max())))
    return rows


def rederive(check: dict, table: dict[str, np.ndarray]) -> float:
    """Recompute a check value from its exported curve.

    ``check`` is the report entry, ``table`` maps column names of the curve
    to arrays.
    """
    how, v = check["reduce"], np.asarray(table[check["column"]], dtype=float)
    if how == "max":
        return float(v.max()) if v.size else 0.0
    if how == "min":
        return float(v.min()) if v.size else 0.0
    if how == "sum":
        return float(v.sum())
    if how == "count":
        return float(v.size)
    if how == "first":
        return float(v[0])
    if how == "admissibility_excess":
        s = np.asarray(table["s"], dtype=float)
        p = check["params"]
        ratio = v[:, None] / (p["M"] * np.exp(p["omega"] * np.abs(s[None, :] - s[:, None])) * v[None, :])
        return float(ratio.max()) - 1.0
    raise ValueError(f"unknown reduction {how!r}")


# ------------------------------------------------------------ helpers

def _condition_part(out: ScenarioOutput, n: int, polys) -> bool:
    chk = condition_holds_symbolic(SpectralCondition(n, polys))
    out.curves["condition_coefficients.csv"] = _csv(
        ["power", "re", "im"], [(k, c.real, c.imag) for k, c in chk.offending]
    )
    out.checks.append(Check("conditionHolds", float(len(chk.offending)), 0.0, "eq",
                            "condition_coefficients.csv", "power", "count"))
    out.results["conditionHolds"] = bool(chk.holds)
    out.results["polynomials"] = [p.to_json() for p in polys]
    return chk.holds


def _operators(polys, A: np.ndarray) -> list[OperatorHandle]:
    return [OperatorHandle(matrix_poly(p, A), f"A{l}") for l, p in enumerate(polys)]


def _acp_part(out: ScenarioOutput, derivs, ops, traj: Trajectory, tol: float, stride: int) -> None:
    curve = acp_residual_curve(derivs, ops, traj.dt)
    rows = _windowed_max(traj.times[1:-1], curve, stride)
    out.curves["acp_residual.csv"] = _csv(["t_start", "t_end", "max_residual"], rows)
    out.checks.append(Check("acpResidual", float(curve.max()) if curve.size else 0.0, tol, "le",
                            "acp_residual.csv", "max_residual", "max"))


def _ball_targets(derivs, W, k_star: int, tg: dict, subspaces=None) -> TargetSpec:
    balls = {}
    for i in W:
        c = derivs[k_star, i]
        r = tg["radius"] if "radius" in tg else tg["radius_fraction"] * float(np.linalg.norm(c))
        balls[i] = Ball(c, r if r > 0 else tg.get("radius_fraction", 1.0))
    return TargetSpec(tuple(W), balls, subspaces or {}, tg.get("membership_tolerance", 1e-6))


def _density_result(res) -> dict:
    rep = res.report
    return {
        "mode": rep["mode"],
        "densityProxy": rep["densityProxy"],
        "finalRatio": rep["finalRatio"],
        "burnIn": res.estimate.burn_in,
        "visitMeasure": res.visits.measure(),
        "nearestApproach": rep["nearestApproach"],
        "target": rep["target"],
    }


def _k_star(t_star: float, dt: float, K: int) -> int:
    return min(K, int(round(t_star / dt)))


# ------------------------------------------------------------ scenarios

def _run_ou_example(cfg: dict) -> ScenarioOutput:
    out = ScenarioOutput()
    n, polys = _polys(cfg)
    _condition_part(out, n, polys)
    tol = cfg["tolerances"]
    be, eig, ev, tg = cfg["backend"], cfg["eigenfields"], cfg["evolution"], cfg["targets"]
    params = OUParams(be["b"], be["c"])
    a, b = eig["interval"]
    ts = chebyshev_points(a, b, eig["samples"])

    def fields(grid):
        return {br: EigenField((a, b), lambda t, br=br, g=grid: ou_eigenfunction(1j * t, br, params, g),
                               label=f"branch{br}") for br in eig["branches"]}

    grid = GridSpec.decaying(be["N"], be["L"])
    A = ou_matrix(params, grid)
    ops = _operators(polys, A.entries)
    delta = build_delta(ops)
    rows = []
    for br, f in fields(grid).items():
        lift = delta_lift(f, n, ops)
        lift_res = eigen_residuals(delta, lift, ts)
        for t, lr in zip(ts, lift_res):
            v = f(t)
            backend = np.linalg.norm(A.entries @ v - 1j * t * v) / np.linalg.norm(v)
            rows.append((br, t, backend, lr))
    out.curves["eigen_residuals.csv"] = _csv(["branch", "t", "backend_residual", "lift_residual"], rows)
    out.checks.append(Check("backendResidual", max(r[2] for r in rows), tol["backend_residual"], "le",
                            "eigen_residuals.csv", "backend_residual", "max"))
    out.checks.append(Check("deltaEigenResidual", max(r[3] for r in rows), tol["eigen_residual"], "le",
                            "eigen_residuals.csv", "lift_residual", "max"))
    del delta, ops, A

    # evolution runs on a coarser grid of its own
    egrid = GridSpec.decaying(ev["grid_n"], ev["grid_L"])
    eA = ou_matrix(params, egrid)
    eops = _operators(polys, eA.entries)
    edelta = build_delta(eops)
    lifts = [delta_lift(f, n, eops) for f in fields(egrid).values()]
    basis = build_subspace(lifts, [ts] * len(lifts))
    x0 = synthesize_candidate(basis, seed=cfg["seed"])
    traj = evolve(edelta, x0, EvolutionConfig(ev["t_max"], ev["dt"]))
    derivs = extract_derivatives(traj, eops)
    _acp_part(out, derivs, eops, traj, tol["acp_residual"], ev["stride"])

    k_star = _k_star(tg["t_star"], ev["dt"], traj.states.shape[0] - 1)
    W = tuple(tg["W"])
    deriv_spec = _ball_targets(derivs, W, k_star, tg)
    lam = complex(*tg["lambda"])
    R = lam * np.eye(edelta.size) - edelta.to_dense()
    center = np.linalg.matrix_power(R, tg["power"]) @ traj.states[k_star]
    radius = tg["radius"] if "radius" in tg else tg["radius_fraction"] * float(np.linalg.norm(center))
    delta_spec = TargetSpec(W, tolerance=tg["membership_tolerance"],
                        delta=DeltaSource(lam, tg["power"], center, radius))
    res_deriv = fh_harness(traj, deriv_spec, HarnessMode.DERIVATIVE, ops=eops, seed=cfg["seed"],
                           stride=ev["stride"])
    res_delta = fh_harness(traj, delta_spec, HarnessMode.DELTA, ops=eops, delta=edelta, seed=cfg["seed"],
                     stride=ev["stride"])
    out.curves["density_derivative.csv"] = res_deriv.estimate.to_csv()
    out.curves["density_delta.csv"] = res_delta.estimate.to_csv()
    out.results.update({
        "checkGrid": {"N": grid.N, "L": grid.L},
        "evolutionGrid": {"N": egrid.N, "L": egrid.L},
        "subspaceRank": basis.rank,
        "densities": {"derivative": _density_result(res_deriv), "delta": _density_result(res_delta)},
        "note": SURROGATE_NOTE,
    })
    return out


def _weight(be: dict, grid: GridSpec) -> WeightSpec:
    w = be.get("weight", {})
    rho = w.get("rho", "ones")
    rho = np.ones(grid.N) if rho == "ones" else np.asarray(rho, dtype=float)
    return WeightSpec(rho, w.get("M", 1.0), w.get("omega", 0.0))


def _run_translation_example(cfg: dict) -> ScenarioOutput:
    out = ScenarioOutput()
    n, polys = _polys(cfg)
    _condition_part(out, n, polys)
    tol = cfg["tolerances"]
    be, eig, ev, tg = cfg["backend"], cfg["eigenfields"], cfg["evolution"], cfg["targets"]
    grid = GridSpec.periodic(be["N"], be["L"])

    weight = _weight(be, grid)
    adm = admissible_weight_check(weight, grid)
    out.curves["weight.csv"] = _csv(["s", "rho"], zip(grid.x, weight.rho))
    out.checks.append(Check("weightAdmissible", adm.worst_ratio - 1.0, tol["admissibility"], "le",
                            "weight.csv", "rho", "admissibility_excess",
                            {"M": weight.M, "omega": weight.omega}))
    out.results["weight"] = {"admissible": adm.admissible, "worstRatio": adm.worst_ratio,
                             "worstPair": list(adm.worst_pair)}

    ops = [derivative_poly(p, grid) for p in polys]
    comp, delta = build_companion(ops), build_delta(ops)
    a, b = eig["interval"]
    if eig.get("integer_times", False):
        ts = np.arange(math.ceil(a), math.floor(b) + 1, dtype=float)
    else:
        ts = chebyshev_points(a, b, eig["samples"])
    s = grid.x
    # e^{its} is periodic on the grid only for t in (pi/L) Z
    base = EigenField((a, b), lambda t: np.exp(1j * t * s) / math.sqrt(grid.N), label="exp(its)")
    rows = []
    comp_lift, delta_l = companion_lift(base, n), delta_lift(base, n, ops)
    for t, rc, rd in zip(ts, eigen_residuals(comp, comp_lift, ts), eigen_residuals(delta, delta_l, ts)):
        rows.append((t, rc, rd))
    out.curves["eigen_residuals.csv"] = _csv(["t", "companion_residual", "delta_residual"], rows)
    out.checks.append(Check("companionEigenResidual", max(r[1] for r in rows), tol["eigen_residual"], "le",
                            "eigen_residuals.csv", "companion_residual", "max"))
    out.checks.append(Check("deltaEigenResidual", max(r[2] for r in rows), tol["eigen_residual"], "le",
                            "eigen_residuals.csv", "delta_residual", "max"))

    basis = build_subspace([comp_lift], [ts])
    x0 = synthesize_candidate(basis, seed=cfg["seed"])
    traj = evolve(comp, x0, EvolutionConfig(ev["t_max"], ev["dt"]))
    derivs = extract_derivatives(traj)
    _acp_part(out, derivs, ops, traj, tol["acp_residual"], ev["stride"])

    k_star = _k_star(tg["t_star"], ev["dt"], traj.states.shape[0] - 1)
    W = tuple(tg["W"])
    spec = _ball_targets(derivs, W, k_star, tg, {i: basis.block_bases[i] for i in W})
    res = fh_harness(traj, spec, HarnessMode.DERIVATIVE, seed=cfg["seed"], stride=ev["stride"])
    out.curves["density_derivative.csv"] = res.estimate.to_csv()
    out.results.update({
        "grid": {"N": grid.N, "L": grid.L},
        "sampleTimes": [float(t) for t in ts],
        "subspaceRank": basis.rank,
        "densities": {"derivative": _density_result(res)},
        "note": SURROGATE_NOTE,
    })
    return out


def _run_rotation(cfg: dict) -> ScenarioOutput:
    out = ScenarioOutput()
    n, polys = _polys(cfg)
    _condition_part(out, n, polys)
    tol = cfg["tolerances"]
    be, ev, tg, orc = cfg["backend"], cfg["evolution"], cfg["targets"], cfg["oracle"]
    mu = np.asarray(be["mu"], dtype=float)
    A = diag_model(1j * mu)
    ops = _operators(polys, A.entries)
    comp = build_companion(ops)
    eye = np.eye(mu.size, dtype=complex)

    def unit(t):
        return eye[int(np.argmin(np.abs(mu - t)))]

    base = EigenField((float(mu.min()), float(mu.max())), unit, label="coordinate axes")
    lift = companion_lift(base, n)
    res = eigen_residuals(comp, lift, mu)
    out.curves["eigen_residuals.csv"] = _csv(["t", "companion_residual"], zip(mu, res))
    out.checks.append(Check("companionEigenResidual", float(res.max()), tol["eigen_residual"], "le",
                            "eigen_residuals.csv", "companion_residual", "max"))

    basis = build_subspace([lift], [mu])
    x0 = synthesize_candidate(basis, seed=cfg["seed"])
    traj = evolve(comp, x0, EvolutionConfig(ev["t_max"], ev["dt"]))
    derivs = extract_derivatives(traj)
    _acp_part(out, derivs, ops, traj, tol["acp_residual"], ev["stride"])

    k_star = _k_star(tg["t_star"], ev["dt"], traj.states.shape[0] - 1)
    spec = _ball_targets(derivs, tuple(tg["W"]), k_star, tg)
    K_short = int(round(orc["short_horizon"] / ev["dt"]))
    short = Trajectory(traj.times[:K_short + 1].copy(), traj.states[:K_short + 1].copy(),
                       traj.form, traj.n, traj.d, traj.dt, traj.ops)
    long_res = fh_harness(traj, spec, seed=cfg["seed"], stride=ev["stride"])
    short_res = fh_harness(short, spec, seed=cfg["seed"], stride=ev["stride"])
    ball = spec.balls[spec.W[0]]
    oracle = torus_oracle_density(traj.states[0], ball.center, ball.radius, orc["samples"], cfg["seed"])
    gap = abs(long_res.estimate.proxy - oracle)
    drift = abs(long_res.estimate.proxy - short_res.estimate.proxy)
    out.curves["density_long.csv"] = long_res.estimate.to_csv()
    out.curves["density_short.csv"] = short_res.estimate.to_csv()
    out.curves["density_comparison.csv"] = _csv(
        ["horizon", "proxy", "oracle", "oracle_gap", "horizon_drift"],
        [(traj.t_max, long_res.estimate.proxy, oracle, gap, drift),
         (short.t_max, short_res.estimate.proxy, oracle, abs(short_res.estimate.proxy - oracle), drift)],
    )
    out.checks.append(Check("oracleGap", gap, tol["oracle_gap"], "le", "density_comparison.csv",
                            "oracle_gap", "first"))
    out.checks.append(Check("horizonDrift", drift, tol["horizon_drift"], "le", "density_comparison.csv",
                            "horizon_drift", "first"))
    norms = np.linalg.norm(traj.states, axis=1)
    out.results.update({
        "frequencies": mu.tolist(),
        "oracle": {"density": oracle, "samples": orc["samples"]},
        "densities": {"long": _density_result(long_res), "short": _density_result(short_res)},
        "normDrift": float(np.abs(norms - norms[0]).max()),
        "note": SURROGATE_NOTE,
    })
    return out


def _random_ops(rng, n: int, d: int, scale: float) -> list[np.ndarray]:
    return [(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) * (scale / math.sqrt(2 * d))
            for _ in range(n)]


def _lambda_pairs(rng, delta, pairs: int, points: int = 50):
    """Random ``(lam1, lam2)`` pairs away from the spectrum and sample states around each preimage."""
    D = delta.to_dense()
    rad = float(np.abs(np.linalg.eigvals(D)).max()) if D.size else 0.0
    total = [0, 0, 0, 0.0]
    for _ in range(pairs):
        lam1, lam2 = (
            (rad + 0.5 + rng.uniform(0, 2)) * np.exp(1j * rng.uniform(0, 2 * np.pi)) for _ in range(2)
        )
        power = int(rng.integers(1, 3))
        nd = D.shape[0]
        c = rng.standard_normal(nd) + 1j * rng.standard_normal(nd)
        r = float(rng.uniform(0.5, 2.0))
        src = DeltaSource(lam1, power, c, r)
        K = np.linalg.matrix_power(lam1 * np.eye(nd) - D, power)
        u = rng.standard_normal((points, nd)) + 1j * rng.standard_normal((points, nd))
        u /= np.linalg.norm(u, axis=1)[:, None]
        y = c + r * rng.uniform(0, 2, size=(points, 1)) * u
        X = np.linalg.solve(K, y.T).T
        chk = lambda_independence(delta, src, lam2, X)
        total[0] += chk.compared
        total[1] += chk.excluded
        total[2] += chk.mismatches
        total[3] = max(total[3], chk.max_distance_gap)
    return total


def _run_delta_vs_companion(cfg: dict) -> ScenarioOutput:
    out = ScenarioOutput()
    tol = cfg["tolerances"]
    inst, ev = cfg["instances"], cfg["evolution"]
    rng = np.random.default_rng(cfg["seed"])
    ecfg = EvolutionConfig(ev["t_max"], ev["dt"])
    rows = []
    for idx in range(inst["count"]):
        n = int(rng.integers(1, inst["max_order"] + 1))
        d = int(rng.integers(1, inst["max_dim"] + 1))
        ops = _random_ops(rng, n, d, inst["scale"])
        U0 = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
        comp, delta, psi = build_companion(ops), build_delta(ops), build_psi(ops)
        x = derivatives_to_delta_state(ops, U0)
        roundtrip = float(np.linalg.norm(psi_apply_inverse(psi, x) - U0.ravel()) / np.linalg.norm(U0))
        uc = evolve(comp, U0.ravel(), ecfg).states[:, :d]
        ud = evolve(delta, x, ecfg).states[:, :d]
        err = float(np.abs(uc - ud).max() / max(1.0, float(np.abs(uc).max())))
        compared, excluded, mism, gap = _lambda_pairs(rng, delta, inst["lambda_pairs"])
        rows.append((idx, n, d, err, roundtrip, compared, excluded, mism, gap))
    out.curves["instances.csv"] = _csv(
        ["instance", "n", "d", "u_block_error", "psi_roundtrip", "lambda_compared", "lambda_excluded",
         "lambda_mismatches", "lambda_distance_gap"], rows)
    out.checks.append(Check("uBlockAgreement", max(r[3] for r in rows), tol["u_block"], "le",
                            "instances.csv", "u_block_error", "max"))
    out.checks.append(Check("psiRoundTrip", max(r[4] for r in rows), tol["psi_roundtrip"], "le",
                            "instances.csv", "psi_roundtrip", "max"))
    out.checks.append(Check("lambdaIndependence", float(sum(r[7] for r in rows)), 0.0, "eq",
                            "instances.csv", "lambda_mismatches", "sum"))
    out.results.update({
        "instances": inst["count"],
        "errorMeasure": "max |u_companion - u_delta| / max(1, max |u_companion|)",
        "lambdaPointsCompared": int(sum(r[5] for r in rows)),
        "lambdaPointsExcluded": int(sum(r[6] for r in rows)),
    })
    return out


_RUNNERS: dict[str, Callable[[dict], ScenarioOutput]] = {
    "example21": _run_ou_example,
    "example23": _run_translation_example,
    "diag-rotation": _run_rotation,
    "delta-vs-companion": _run_delta_vs_companion,
}


def run(cfg: dict) -> ScenarioOutput:
    """Run a resolved configuration (see :func:`resolve_config`)."""
    return _RUNNERS[cfg["scenario"]](cfg)


