"""Job configuration and result records (JSON).

Numbers may be given either as JSON numbers or as decimal strings; records
written by the tool always use strings produced by ``repr`` so that every
float survives a write/read cycle bit for bit.
"""

import hashlib
import json
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from . import __version__
from .errors import ConfigError, MatrixDomainError
from .residual import GRID_CAP, GridSpec
from .solver import FREE_KEYS, OPTIONAL_KEYS, PeriodicWaveSolution, WaveParams
from .theta import PeriodMatrix, Truncation

SCHEMA_VERSION = 1
MODES = ("solve", "eval", "residual", "limit", "soliton", "info")

_num = {"oneOf": [{"type": "number"}, {"type": "string", "pattern": r"^\s*[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?\s*$"}]}
_vec = {"type": "array", "items": _num, "minItems": 1, "maxItems": 3}
_axis = {"type": "array", "items": [_num, _num, {"type": "integer", "minimum": 3}], "minItems": 3, "maxItems": 3}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "mode": {"enum": list(MODES)},
        "n": {"type": "integer", "minimum": 1, "maximum": 3},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"alpha": _vec, "rho": _vec, "k": _vec, "delta": _vec, "u0": _num},
        },
        "tau": {
            "type": "object",
            "additionalProperties": False,
            "required": ["im"],
            "properties": {"im": {"type": "array", "items": {"type": "array", "items": _num}, "minItems": 1}},
        },
        "truncation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"radius": {"type": "integer", "minimum": 1, "maximum": 50}, "tail_tol": _num},
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["x", "y", "z", "t"],
            "properties": {"x": _axis, "y": _axis, "z": _axis, "t": _axis, "cap": {"type": "integer", "minimum": 1}},
        },
        "ladder": {"type": "array", "items": _num, "minItems": 3},
        "soliton": {
            "type": "object",
            "additionalProperties": False,
            "required": ["mu", "nu", "kappa"],
            "properties": {"mu": _vec, "nu": _vec, "kappa": _vec, "gamma": _vec, "order": {"enum": [1, 2, 3]}},
        },
        "solution": {"type": "string"},
        "residual": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"method": {"enum": ["analytic", "fd", "both"]}},
        },
    },
}


def _path(parts):
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def to_float(v):
    return float(v.strip()) if isinstance(v, str) else float(v)


@dataclass
class JobConfig:
    mode: str
    n: int = None
    params: dict = field(default_factory=dict)
    tau: PeriodMatrix = None
    truncation: dict = field(default_factory=dict)
    grid: GridSpec = None
    ladder: tuple = None
    soliton: dict = None
    solution: str = None
    residual_method: str = "both"
    raw: dict = field(default_factory=dict)

    @property
    def digest(self):
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def _need(mode, n, raw):
    """Top-level keys that must be present for a mode."""
    if mode == "info":
        return ["n"]
    if mode == "solve":
        return ["n", "params", "tau"]
    if mode in ("eval", "residual"):
        return ["grid"] + ([] if "solution" in raw else ["n", "params", "tau"])
    if mode == "limit":
        return ["n", "params"] if n == 1 else ["n", "soliton"]
    if mode == "soliton":
        return ["soliton", "grid"]
    return []


def validate(raw, mode=None):
    """Parse an already-loaded config mapping; every problem is reported at once."""
    problems = []
    bad = set()
    validator = jsonschema.Draft7Validator(SCHEMA)
    for err in sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path))):
        problems.append(f"{_path(err.absolute_path)}: {err.message}")
        if err.absolute_path:
            bad.add(err.absolute_path[0])
    if not isinstance(raw, dict):
        raise ConfigError(problems or ["config must be a JSON object"])
    if mode is not None and raw.get("mode", mode) != mode:
        problems.append(f"mode: config says {raw['mode']!r} but {mode!r} was requested")
    mode = mode or raw.get("mode")
    if mode not in MODES:
        problems.append("mode: missing or unknown")
        raise ConfigError(problems)
    # semantic checks only look at sections that passed the schema
    raw_ok = {k: v for k, v in raw.items() if k not in bad}
    cfg = _semantic(raw, raw_ok, mode, problems)
    if problems:
        raise ConfigError(problems)
    return cfg


def _semantic(raw, ok, mode, problems):
    n = ok.get("n")
    for key in _need(mode, n, raw):
        if key not in raw:
            problems.append(f"{key}: missing required key for mode {mode!r}")
    cfg = JobConfig(mode=mode, n=n, raw=raw)
    if "params" in ok and n is not None and mode in ("solve", "eval", "residual", "limit"):
        cfg.params = _check_params(raw["params"], n, problems)
    if "tau" in ok and n is not None:
        cfg.tau = _check_tau(raw["tau"]["im"], n, problems)
    if "truncation" in ok:
        t = raw["truncation"]
        cfg.truncation = {k: (to_float(v) if k == "tail_tol" else v) for k, v in t.items()}
        tol = cfg.truncation.get("tail_tol")
        if tol is not None and not 0 < tol < 1:
            problems.append("truncation.tail_tol: must lie in (0, 1)")
    if "grid" in ok:
        cfg.grid = _check_grid(raw["grid"], problems)
    if "ladder" in ok:
        lad = [to_float(v) for v in raw["ladder"]]
        if any(b >= a for a, b in zip(lad, lad[1:])) or lad[-1] <= 0:
            problems.append("ladder: must be strictly decreasing and positive")
        cfg.ladder = tuple(lad)
    if "soliton" in ok:
        cfg.soliton = _check_soliton(raw["soliton"], n if mode == "limit" else None, problems)
    if "solution" in ok:
        cfg.solution = raw["solution"]
    cfg.residual_method = ok.get("residual", {}).get("method", "both")
    return cfg


def _check_params(params, n, problems):
    need = set(FREE_KEYS[n])
    for key in sorted(need - set(params)):
        problems.append(f"params.{key}: missing required key for N={n}")
    for key in sorted(set(params) - need - set(OPTIONAL_KEYS)):
        problems.append(f"params.{key}: not a free parameter for N={n}")
    out = {}
    for key, val in params.items():
        if key == "u0":
            out[key] = to_float(val)
            continue
        if len(val) != n:
            problems.append(f"params.{key}: expected {n} components, got {len(val)}")
            continue
        out[key] = np.array([to_float(v) for v in val])
        if key == "rho" and np.any(out[key] == 0):
            problems.append("params.rho: every component must be nonzero")
    return out


def _check_tau(im, n, problems):
    before = len(problems)
    if len(im) != n:
        problems.append(f"tau.im: expected {n} rows, got {len(im)}")
    for i in range(n):
        row = im[i] if i < len(im) else []
        for j in range(len(row), n):
            problems.append(f"tau.im[{i}][{j}]: missing entry")
        if len(row) > n:
            problems.append(f"tau.im[{i}]: has {len(row)} entries, expected {n}")
    if len(problems) > before:
        return None
    mat = np.array([[to_float(v) for v in row] for row in im])
    for i in range(n):
        if not mat[i, i] > 0:
            problems.append(f"tau.im[{i}][{i}]: diagonal imaginary part must be positive, got {float(mat[i, i])!r}")
        for j in range(i + 1, n):
            if mat[i, j] != mat[j, i]:
                problems.append(f"tau.im[{j}][{i}]: must equal tau.im[{i}][{j}] (symmetry)")
    if len(problems) > before:
        return None
    try:
        return PeriodMatrix(mat)
    except MatrixDomainError as exc:
        problems.append(f"tau.im: {exc}")
        return None


def _check_grid(g, problems):
    try:
        axes = [(to_float(g[a][0]), to_float(g[a][1]), g[a][2]) for a in "xyzt"]
        return GridSpec(*axes, cap=g.get("cap", GRID_CAP))
    except ValueError as exc:
        problems.append(f"grid: {exc}")
        return None


def _check_soliton(s, n, problems):
    out = {k: np.array([to_float(v) for v in s[k]]) for k in ("mu", "nu", "kappa", "gamma") if k in s}
    sizes = {k: len(v) for k, v in out.items()}
    if len(set(sizes.values())) > 1:
        problems.append(f"soliton: component lengths differ {sizes}")
    count = len(out["mu"])
    if n is not None and count != n:
        problems.append(f"soliton: {count} soliton(s) given but n = {n}")
    if np.any(out["nu"] == 0):
        problems.append("soliton.nu: every component must be nonzero")
    order = s.get("order", count)
    if order > count:
        problems.append(f"soliton.order: {order} exceeds the {count} soliton(s) given")
    out["order"] = order
    return out


def load_json(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def parse_config(path, mode=None, overrides=None):
    raw = load_json(path)
    if overrides and isinstance(raw, dict):
        raw = apply_overrides(raw, overrides)
    return validate(raw, mode)


def apply_overrides(raw, overrides):
    raw = json.loads(json.dumps(raw))
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = raw
        *head, last = dotted.split(".")
        for key in head:
            node = node.setdefault(key, {})
        node[last] = value
    return raw


# --- serialisation -------------------------------------------------------


def fmt(v):
    """Full-precision decimal string for a real or complex scalar."""
    if v is None:
        return ""
    v = complex(v) if np.iscomplexobj(v) else v
    if isinstance(v, complex):
        return repr(v.real) if v.imag == 0 else repr(v)
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def parse_scalar(s):
    s = s.strip()
    return complex(s) if s.endswith("j") else float(s)


def _arr(values):
    return [fmt(v) for v in np.asarray(values).ravel()]


def _unarr(strings):
    vals = [parse_scalar(s) for s in strings]
    return np.array(vals, dtype=complex if any(isinstance(v, complex) for v in vals) else float)


def solution_record(sol, digest=None):
    w = sol.waves
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "solution",
        "tool": "gbkp",
        "version": __version__,
        "config_sha256": digest,
        "n": sol.dim,
        "tau": {"im": [_arr(row) for row in sol.tau.im]},
        "truncation": {
            "radius": sol.truncation.radius,
            "tail_tol": fmt(sol.truncation.tail_tol),
            "capped": sol.truncation.capped,
        },
        "waves": {
            "alpha": _arr(w.alpha),
            "rho": _arr(w.rho),
            "k": _arr(w.k),
            "omega": _arr(w.omega),
            "delta": _arr(w.delta),
            "u0": fmt(w.u0),
            "c": fmt(w.c),
        },
        "constraint_residuals": _arr(sol.constraint_residuals),
        "cond_estimate": fmt(sol.cond_estimate),
        "backward_residual": fmt(sol.backward_residual),
        "method": sol.method,
        "pins": {k: fmt(v) for k, v in sol.pins.items()},
    }


def read_solution(source):
    """Rebuild a PeriodicWaveSolution from a record mapping or a JSON file path."""
    rec = load_json(source) if isinstance(source, str) else source
    try:
        if rec.get("kind") != "solution" or rec.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError("not a solution record of a supported schema version")
        w = rec["waves"]
        waves = WaveParams(
            _unarr(w["alpha"]), _unarr(w["rho"]), _unarr(w["k"]), _unarr(w["omega"]), _unarr(w["delta"]),
            parse_scalar(w["u0"]), parse_scalar(w["c"]),
        )
        tau = PeriodMatrix(np.array([[float(v) for v in row] for row in rec["tau"]["im"]]))
        t = rec["truncation"]
        tr = Truncation(int(t["radius"]), float(t["tail_tol"]), bool(t["capped"]))
        return PeriodicWaveSolution(
            waves, tau, tr, _unarr(rec["constraint_residuals"]).real, float(rec["cond_estimate"]),
            float(rec["backward_residual"]), rec["method"], {k: parse_scalar(v) for k, v in rec["pins"].items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed solution record: {exc!r}") from exc


def dump_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
