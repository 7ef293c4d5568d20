"""Line-oriented problem files.

A problem file holds ``key = value`` lines, ``#`` comments and array blocks::

    grid = 400
    K = 40
    q = cos
    M = 0.2*cos
    spectrum = [
    1.0 0.0
    4.2 0.0
    ]

Function values are either a built-in name or an array block with one
sample per line (``re`` or ``re im``). Built-ins: ``zero``, ``const:<c>``,
``cos``, ``sin``, ``pow:<a>:<p>`` for a (pi - x)^p, each optionally scaled as
``<coef>*<name>``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

import numpy as np

from .numgrid import Grid, SampledFunction

SHAPES = ("single-mode", "random-decaying")


class ProblemError(ValueError):
    """Malformed or inconsistent problem description."""


@dataclass
class ProblemFile:
    grid_panels: int = 400
    q: object = "zero"
    M: object = "zero"
    spectrum: np.ndarray | None = None
    K: int = 20
    Kv: int | None = None
    seed: int = 0
    eps: list = field(default_factory=lambda: [1e-3, 3e-3, 1e-2, 3e-2])
    shape: str = "random-decaying"
    mixed: bool = False
    mode: int = 3
    threads: int = 1

    def validate(self):
        n = self.grid_panels
        if n < 64 or n % 2:
            raise ProblemError(f"grid must be an even integer >= 64, got {n}")
        if not 1 <= self.K <= n // 4:
            raise ProblemError(f"K must lie in [1, {n // 4}] for grid {n}, got {self.K}")
        if self.Kv is not None and not 1 <= self.Kv <= n // 2:
            raise ProblemError(f"Kv must lie in [1, {n // 2}], got {self.Kv}")
        if self.shape not in SHAPES:
            raise ProblemError(f"shape must be one of {SHAPES}")
        if self.threads < 1:
            raise ProblemError("threads must be positive")
        for name in ("q", "M"):
            val = getattr(self, name)
            if isinstance(val, np.ndarray):
                if val.shape != (n + 1,):
                    raise ProblemError(f"{name} array needs {n + 1} samples, got {val.size}")
            else:
                parse_builtin(val)
        eps = list(self.eps)
        if any(e <= 0 for e in eps) or eps != sorted(eps):
            raise ProblemError("eps must be positive and ascending")
        return self

    @property
    def grid(self) -> Grid:
        return Grid(self.grid_panels)

    def function(self, name) -> SampledFunction:
        return resolve_function(getattr(self, name), self.grid)

    def config(self) -> dict:
        """JSON-ready view; arrays become lists of [re, im] pairs."""
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, np.ndarray):
                val = [[float(z.real), float(z.imag)] for z in val]
            out[f.name] = val
        return out


_KEYS = {"grid": "grid_panels", "grid_panels": "grid_panels", "q": "q", "m": "M",
         "spectrum": "spectrum", "k": "K", "kv": "Kv", "seed": "seed", "eps": "eps",
         "shape": "shape", "mixed": "mixed", "mode": "mode", "threads": "threads"}


def parse_builtin(spec: str):
    """Return ``(coef, name, args)`` for a built-in function string."""
    s = str(spec).strip()
    coef = 1.0
    if "*" in s:
        c, s = s.split("*", 1)
        try:
            coef = float(c)
        except ValueError:
            raise ProblemError(f"bad coefficient in {spec!r}") from None
    parts = s.split(":")
    name, args = parts[0].strip().lower(), parts[1:]
    arity = {"zero": 0, "cos": 0, "sin": 0, "const": 1, "pow": 2}
    if name not in arity:
        raise ProblemError(f"unknown built-in function {spec!r}")
    if len(args) != arity[name]:
        raise ProblemError(f"{name} takes {arity[name]} parameter(s): {spec!r}")
    try:
        args = [float(a) for a in args]
    except ValueError:
        raise ProblemError(f"bad parameter in {spec!r}") from None
    return coef, name, args


def resolve_function(spec, grid: Grid) -> SampledFunction:
    if isinstance(spec, np.ndarray):
        return SampledFunction(grid, spec)
    coef, name, args = parse_builtin(spec)
    if name == "zero":
        return SampledFunction.zeros(grid)
    if name == "const":
        return SampledFunction.from_callable(grid, lambda x: coef * args[0] + 0 * x)
    if name == "cos":
        return SampledFunction.from_callable(grid, lambda x: coef * np.cos(x))
    if name == "sin":
        return SampledFunction.from_callable(grid, lambda x: coef * np.sin(x))
    a, p = args
    return SampledFunction.from_callable(grid, lambda x: coef * a * (np.pi - x) ** p,
                                         singular_end=p < 0)


def _parse_row(line, lineno):
    try:
        vals = [float(t) for t in line.replace(",", " ").split()]
    except ValueError:
        raise ProblemError(f"line {lineno}: not a number row: {line!r}") from None
    if len(vals) == 1:
        return complex(vals[0])
    if len(vals) == 2:
        return complex(vals[0], vals[1])
    raise ProblemError(f"line {lineno}: expected 1 or 2 numbers")


def _convert(key, raw, lineno):
    try:
        if key in ("grid_panels", "K", "seed", "mode", "threads"):
            return int(raw)
        if key == "Kv":
            return None if raw.lower() in ("", "none", "auto") else int(raw)
        if key == "eps":
            return [float(t) for t in raw.replace(",", " ").split()]
        if key == "mixed":
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return raw.lower() in ("true", "1", "yes")
        if key == "spectrum":
            raise ProblemError(f"line {lineno}: spectrum must be an array block")
    except ValueError:
        raise ProblemError(f"line {lineno}: bad value for {key}: {raw!r}") from None
    return raw


def parse_problem(text: str) -> ProblemFile:
    pf = ProblemFile()
    lines = text.splitlines()
    i = 0
    seen = set()
    while i < len(lines):
        line = lines[i].split("#", 1)[0].strip()
        i += 1
        if not line:
            continue
        if "=" not in line:
            raise ProblemError(f"line {i}: expected key = value")
        k, raw = (s.strip() for s in line.split("=", 1))
        key = _KEYS.get(k.lower())
        if key is None:
            raise ProblemError(f"line {i}: unknown key {k!r}")
        if key in seen:
            raise ProblemError(f"line {i}: duplicate key {k!r}")
        seen.add(key)
        if raw == "[":
            rows = []
            while True:
                if i >= len(lines):
                    raise ProblemError(f"unterminated array block for {k!r}")
                row = lines[i].split("#", 1)[0].strip()
                i += 1
                if row == "]":
                    break
                if row:
                    rows.append(_parse_row(row, i))
            if key not in ("q", "M", "spectrum"):
                raise ProblemError(f"key {k!r} does not take an array")
            setattr(pf, key, np.array(rows, dtype=complex))
        else:
            setattr(pf, key, _convert(key, raw, i))
    return pf


def from_config(cfg: dict) -> ProblemFile:
    """Rebuild a problem from the ``config`` section of a run manifest."""
    pf = ProblemFile()
    names = {f.name for f in fields(pf)}
    for k, v in cfg.items():
        if k not in names:
            raise ProblemError(f"unknown configuration key {k!r}")
        if k in ("q", "M", "spectrum") and isinstance(v, list):
            v = np.array([complex(a, b) for a, b in v])
        setattr(pf, k, v)
    return pf


def load_problem(path) -> ProblemFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ProblemError(f"cannot read problem file: {e}") from None
    if str(path).endswith(".json"):
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as e:
            raise ProblemError(f"bad manifest: {e}") from None
        return from_config(cfg.get("config", cfg))
    return parse_problem(text)


def _fmt_array(key, arr):
    rows = [f"{float(z.real)!r} {float(z.imag)!r}" for z in arr]
    return [f"{key} = ["] + rows + ["]"]


def dump_problem(pf: ProblemFile) -> str:
    """Text that parses back to an identical problem."""
    out = [f"grid = {pf.grid_panels}", f"K = {pf.K}",
           f"Kv = {'auto' if pf.Kv is None else pf.Kv}", f"seed = {pf.seed}",
           "eps = " + ", ".join(repr(float(e)) for e in pf.eps),
           f"shape = {pf.shape}", f"mixed = {str(pf.mixed).lower()}",
           f"mode = {pf.mode}", f"threads = {pf.threads}"]
    for key in ("q", "M"):
        val = getattr(pf, key)
        if isinstance(val, np.ndarray):
            out += _fmt_array(key, val)
        else:
            out.append(f"{key} = {val}")
    if pf.spectrum is not None:
        out += _fmt_array("spectrum", pf.spectrum)
    return "\n".join(out) + "\n"
