"""Problem configs, datasets and result files.

Config (JSON)::

    {"group": {"N": 12, "d": 1},
     "lattice": [[3]],                       # generator columns, d rows
     "point_group": [[[1]], [[-1]]],
     "kappa": 1,                             # optional, CLI flag wins
     "tolerances": {"rank": 1e-12, "tie": 1e-9, "verify": 1e-9},
     "seed": 0}

Datasets are JSON ``{"N", "d", "signals": [[[re, im], ...], ...]}`` or CSV
whose first two lines are ``N,d,m`` and the values, followed by one row per
signal holding re,im pairs in row-major order.
"""
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .crystal import build_crystal
from .errors import ParseError, ValidationError
from .spectra import EPS_RANK, TAU_TIE

DEFAULT_TOLERANCES = {"rank": EPS_RANK, "tie": TAU_TIE, "verify": 1e-9}


@dataclass(frozen=True)
class ProblemConfig:
    N: int
    d: int
    lattice: list
    point_group: list
    kappa: int = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0

    def crystal(self):
        return build_crystal(self.N, self.d, self.lattice, self.point_group)

    def to_json(self):
        out = {"group": {"N": self.N, "d": self.d}, "lattice": self.lattice,
               "point_group": self.point_group, "tolerances": self.tolerances,
               "seed": self.seed}
        if self.kappa is not None:
            out["kappa"] = self.kappa
        return out


def read_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read file ({exc.strerror})", str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None


def _int(value, where, lo=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"expected an integer, got {value!r}", where)
    if lo is not None and value < lo:
        raise ValidationError(f"must be >= {lo}, got {value}", where)
    return value


def _int_matrix(value, rows, cols, where):
    if not isinstance(value, list) or len(value) != rows:
        raise ValidationError(f"expected {rows} rows", where)
    out = []
    for r, row in enumerate(value):
        if not isinstance(row, list) or (cols is not None and len(row) != cols):
            raise ValidationError(f"expected {cols} entries", f"{where}[{r}]")
        out.append([_int(v, f"{where}[{r}][{c}]") for c, v in enumerate(row)])
    return out


def config_from_dict(raw, source="config"):
    if not isinstance(raw, dict):
        raise ValidationError("top level must be an object", source)
    known = {"group", "lattice", "point_group", "kappa", "tolerances", "seed"}
    extra = sorted(set(raw) - known)
    if extra:
        raise ValidationError(f"unknown field {extra[0]!r}", source)
    for key in ("group", "lattice", "point_group"):
        if key not in raw:
            raise ValidationError("missing field", f"{source}.{key}")
    grp = raw["group"]
    if not isinstance(grp, dict) or set(grp) != {"N", "d"}:
        raise ValidationError("expected {N, d}", f"{source}.group")
    N = _int(grp["N"], f"{source}.group.N", lo=2)
    d = _int(grp["d"], f"{source}.group.d", lo=1)
    lattice = _int_matrix(raw["lattice"], d, None, f"{source}.lattice")
    ncols = {len(row) for row in lattice}
    if len(ncols) != 1 or 0 in ncols:
        raise ValidationError("rows must have equal nonzero length", f"{source}.lattice")
    pg = raw["point_group"]
    if not isinstance(pg, list) or not pg:
        raise ValidationError("expected a nonempty list of matrices", f"{source}.point_group")
    mats = [_int_matrix(m, d, d, f"{source}.point_group[{k}]") for k, m in enumerate(pg)]
    kappa = raw.get("kappa")
    if kappa is not None:
        kappa = _int(kappa, f"{source}.kappa", lo=1)
    tol = dict(DEFAULT_TOLERANCES)
    given = raw.get("tolerances", {})
    if not isinstance(given, dict):
        raise ValidationError("expected an object", f"{source}.tolerances")
    for key, value in given.items():
        if key not in tol:
            raise ValidationError("unknown tolerance", f"{source}.tolerances.{key}")
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            raise ValidationError(f"expected a positive number, got {value!r}",
                                  f"{source}.tolerances.{key}")
        tol[key] = float(value)
    seed = _int(raw.get("seed", 0), f"{source}.seed", lo=0)
    return ProblemConfig(N, d, lattice, mats, kappa, tol, seed)


def parse_config(path):
    return config_from_dict(read_json(path), str(path))


def _complex_list(values, n, where):
    if not isinstance(values, list) or len(values) != n:
        raise ValidationError(f"expected {n} entries", where)
    out = np.empty(n, dtype=complex)
    for k, v in enumerate(values):
        if (not isinstance(v, list) or len(v) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
            raise ValidationError("expected a [re, im] pair", f"{where}[{k}]")
        out[k] = complex(v[0], v[1])
    if not np.all(np.isfinite(out)):
        raise ValidationError("non-finite value", where)
    return out


def _check_shape(N, d, config, where):
    if config is not None and (N, d) != (config.N, config.d):
        raise ValidationError(f"dataset is on (Z_{N})^{d}, config on (Z_{config.N})^{config.d}",
                              where)


def load_dataset(path, config=None):
    """List of signals of shape (N,)*d."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return _load_csv(path, config)
    raw = read_json(path)
    where = str(path)
    if not isinstance(raw, dict) or "signals" not in raw:
        raise ValidationError("expected an object with N, d, signals", where)
    N = _int(raw.get("N"), f"{where}.N", lo=2)
    d = _int(raw.get("d"), f"{where}.d", lo=1)
    _check_shape(N, d, config, where)
    sigs = raw["signals"]
    if not isinstance(sigs, list) or not sigs:
        raise ValidationError("need at least one signal", f"{where}.signals")
    return [_complex_list(s, N**d, f"{where}.signals[{i}]").reshape((N,) * d)
            for i, s in enumerate(sigs)]


def _load_csv(path, config):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read file ({exc.strerror})", str(path)) from None
    if len(rows) < 2 or [c.strip() for c in rows[0]] != ["N", "d", "m"]:
        raise ParseError("first line must be the header N,d,m", f"{path}:1")
    try:
        N, d, m = (int(c) for c in rows[1])
    except ValueError:
        raise ParseError("expected three integers", f"{path}:2") from None
    _check_shape(N, d, config, str(path))
    body = [r for r in rows[2:] if r]
    if m < 1 or len(body) != m:
        raise ValidationError(f"header says m={m}, found {len(body)} signal rows", str(path))
    out = []
    for i, row in enumerate(body):
        line = f"{path}:{i + 3}"
        if len(row) != 2 * N**d:
            raise ParseError(f"expected {2 * N**d} numbers, got {len(row)}", line)
        try:
            vals = np.array([float(c) for c in row])
        except ValueError:
            raise ParseError("non-numeric entry", line) from None
        out.append((vals[0::2] + 1j * vals[1::2]).reshape((N,) * d))
    return out


def signals_to_json(signals):
    return [[[float(z.real), float(z.imag)] for z in np.asarray(s).reshape(-1)]
            for s in signals]


def save_dataset(path, signals, N, d):
    write_json(path, {"N": N, "d": d, "signals": signals_to_json(signals)})


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def load_generators(path, config):
    raw = read_json(path)
    where = str(path)
    if not isinstance(raw, dict) or "generators" not in raw:
        raise ValidationError("expected an object with a generators list", where)
    n = config.N ** config.d
    return [_complex_list(s, n, f"{where}.generators[{i}]").reshape((config.N,) * config.d)
            for i, s in enumerate(raw["generators"])], raw
