"""Run configuration files.

Line-oriented, INI-like and strict::

    # comment
    [model]
    drift = -b*sin(x)          # bare expression text
    diffusion = "sqrt(2)"      # or a quoted string
    parameter = b
    range = 0, 2

Unknown sections or keys, duplicate keys and malformed lines are errors that
name the offending line.  ``[constants]`` accepts any identifier as a key and
binds it in every expression.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .. import expr as _expr
from ..csvio import read_density_csv, read_time_csv
from ..density import Grid1D
from ..errors import ConfigError, ExprError, GridError, InputError

__all__ = ["RunConfig", "ModelSection", "ObservationSection", "FitSection",
           "SolverSection", "OutputSection", "parse_config", "parse_number_list"]

_SECTION = re.compile(r"^\[\s*([A-Za-z_][A-Za-z0-9_]*)\s*\]$")
_ENTRY = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

KEYS = {
    "model": {"drift", "diffusion", "parameter", "range", "value"},
    "grid": {"lo", "hi", "n"},
    "observation": {"expression", "csv", "kind", "times"},
    "fit": {"scan_step", "mode"},
    "solver": {"x0", "dt", "dt_late", "t_switch", "times"},
    "output": {"directory", "emit_plots"},
    "constants": None,  # free-form
}
REQUIRED = {"model": {"drift", "diffusion"}}


class _Value(str):
    """Raw value text carrying its source line."""

    line: int
    quoted: bool


@dataclass
class ModelSection:
    drift: _expr.Expr
    diffusion: _expr.Expr
    parameter: str | None = None
    range: tuple[float, float] | None = None
    value: float | None = None


@dataclass
class ObservationSection:
    kind: str
    expression: _expr.Expr | None = None
    csv: Path | None = None
    times: list[float] | None = None
    data: object = None  # parsed CSV content


@dataclass
class FitSection:
    scan_step: float = 0.1
    mode: str | None = None


@dataclass
class SolverSection:
    x0: float = 0.0
    dt: float = 1e-3
    dt_late: float | None = 1e-2
    t_switch: float = 1.0
    times: list[float] | None = None


@dataclass
class OutputSection:
    directory: Path = Path(".")
    emit_plots: bool = False


@dataclass
class RunConfig:
    path: Path
    model: ModelSection
    grid: Grid1D
    observation: ObservationSection | None = None
    fit: FitSection = field(default_factory=FitSection)
    solver: SolverSection = field(default_factory=SolverSection)
    output: OutputSection = field(default_factory=OutputSection)
    constants: dict[str, float] = field(default_factory=dict)
    lines: dict[tuple[str, str], int] = field(default_factory=dict)

    def where(self, section: str, key: str | None = None) -> str:
        """Human-readable config location for error messages."""
        if key is None:
            lines = [v for (s, _), v in self.lines.items() if s == section]
            line = min(lines) if lines else None
            label = f"[{section}]"
        else:
            line = self.lines.get((section, key))
            label = f"[{section}] {key}"
        return f"{self.path}:{line} {label}" if line else f"{self.path} {label}"


def _strip_comment(text):
    quote = None
    for i, ch in enumerate(text):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return text[:i]
    return text


def _unquote(raw, line):
    raw = raw.strip()
    if raw[:1] in ("'", '"'):
        if len(raw) < 2 or raw[-1] != raw[0]:
            raise ConfigError("unterminated string", line)
        value = _Value(raw[1:-1])
        value.quoted = True
    else:
        value = _Value(raw)
        value.quoted = False
    value.line = line
    return value


def _read_sections(text):
    sections: dict[str, dict[str, _Value]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            current = m.group(1)
            if current not in KEYS:
                raise ConfigError(f"unknown section [{current}]", lineno)
            if current in sections:
                raise ConfigError(f"duplicate section [{current}]", lineno)
            sections[current] = {}
            continue
        m = _ENTRY.match(line)
        if not m:
            raise ConfigError(f"cannot parse {line!r}; expected 'key = value'", lineno)
        if current is None:
            raise ConfigError("entry outside of any [section]", lineno)
        key, value = m.group(1), m.group(2)
        allowed = KEYS[current]
        if allowed is not None and key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{current}]", lineno)
        if key in sections[current]:
            first = sections[current][key].line
            raise ConfigError(f"duplicate key {key!r} in [{current}] (first on line {first})",
                              lineno)
        if not value.strip():
            raise ConfigError(f"empty value for {key!r}", lineno)
        sections[current][key] = _unquote(value, lineno)
    return sections


def _number(v: _Value, what="number") -> float:
    try:
        return float(v)
    except ValueError:
        raise ConfigError(f"expected a {what}, got {str(v)!r}", v.line) from None


def _integer(v: _Value) -> int:
    f = _number(v, "integer")
    if f != int(f):
        raise ConfigError(f"expected an integer, got {str(v)!r}", v.line)
    return int(f)


def _bool(v: _Value) -> bool:
    low = v.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected true/false, got {str(v)!r}", v.line)


def _expression(v: _Value, allowed: set[str], what: str) -> _expr.Expr:
    try:
        e = _expr.parse(str(v))
    except ExprError as exc:
        raise ConfigError(f"{what}: {exc}", v.line) from None
    extra = e.params - allowed
    if extra:
        raise ConfigError(f"{what} uses unbound names {sorted(extra)}; "
                          "bind them in [constants]", v.line)
    return e


def parse_number_list(text: str) -> list[float]:
    """Comma-separated numbers; ``a:b:step`` expands to ``a, a+step, ..., b``."""
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            raise ValueError("empty list item")
        if ":" in item:
            parts = [float(p) for p in item.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError(f"bad range {item!r}; use start:stop:step")
            start, stop, step = parts
            count = int((stop - start) / step + 1e-9)
            out.extend(round(start + i * step, 12) for i in range(count + 1))
        else:
            out.append(float(item))
    return out


def _list(v: _Value) -> list[float]:
    try:
        return parse_number_list(str(v))
    except ValueError as exc:
        raise ConfigError(str(exc), v.line) from None


def parse_config(path) -> RunConfig:
    """Read and validate a run configuration."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ConfigError(f"{path} is not UTF-8 text") from None
    sec = _read_sections(text)
    lines = {(s, k): v.line for s, entries in sec.items() for k, v in entries.items()}

    for name, keys in REQUIRED.items():
        if name not in sec:
            raise ConfigError(f"missing required section [{name}]")
        for key in sorted(keys - set(sec[name])):
            raise ConfigError(f"missing required key {key!r} in [{name}]")

    constants = {}
    for key, v in sec.get("constants", {}).items():
        constants[key] = _number(v)

    m = sec["model"]
    param = None
    if "parameter" in m:
        param = m["parameter"].strip()
        if not _IDENT.match(param) or param == "x":
            raise ConfigError(f"invalid parameter name {param!r}", m["parameter"].line)
        if param in constants:
            raise ConfigError(f"parameter {param!r} is also a constant", m["parameter"].line)
    names = set(constants) | ({param} if param else set())
    model = ModelSection(
        drift=_expression(m["drift"], names, "drift"),
        diffusion=_expression(m["diffusion"], names, "diffusion"),
        parameter=param,
    )
    if "range" in m:
        rng = _list(m["range"])
        if len(rng) != 2 or not rng[0] <= rng[1]:
            raise ConfigError("range must be 'lo, hi' with lo <= hi", m["range"].line)
        model.range = (rng[0], rng[1])
    if "value" in m:
        model.value = _number(m["value"])
    if (model.range or model.value is not None) and param is None:
        raise ConfigError("range/value given without a parameter name", m.get("range", m.get("value")).line)

    if "grid" in sec:
        g = sec["grid"]
        lo = _number(g["lo"]) if "lo" in g else -40.0
        hi = _number(g["hi"]) if "hi" in g else 40.0
        n = _integer(g["n"]) if "n" in g else 4001
        try:
            grid = Grid1D(lo, hi, n)
        except GridError as exc:
            raise ConfigError(str(exc), min(v.line for v in g.values()) if g else None) from None
    else:
        warnings.warn(f"{path}: no [grid] section; using lo=-40, hi=40, n=4001", stacklevel=2)
        grid = Grid1D(-40.0, 40.0, 4001)

    observation = None
    if "observation" in sec:
        observation = _observation(sec["observation"], constants, path)

    fit = FitSection()
    if "fit" in sec:
        f = sec["fit"]
        if "scan_step" in f:
            fit.scan_step = _number(f["scan_step"])
            if fit.scan_step <= 0:
                raise ConfigError("scan_step must be positive", f["scan_step"].line)
        if "mode" in f:
            mode = f["mode"].strip()
            if mode not in ("stationary", "time"):
                raise ConfigError("mode must be 'stationary' or 'time'", f["mode"].line)
            fit.mode = mode

    solver = SolverSection()
    if "solver" in sec:
        s = sec["solver"]
        for key in ("x0", "dt", "t_switch"):
            if key in s:
                setattr(solver, key, _number(s[key]))
        if "dt_late" in s:
            solver.dt_late = None if s["dt_late"].strip().lower() == "none" else _number(s["dt_late"])
        if "times" in s:
            solver.times = _list(s["times"])

    output = OutputSection()
    if "output" in sec:
        o = sec["output"]
        if "directory" in o:
            output.directory = (path.parent / str(o["directory"])).resolve()
        if "emit_plots" in o:
            output.emit_plots = _bool(o["emit_plots"])
    else:
        output.directory = path.parent.resolve()

    return RunConfig(path=path, model=model, grid=grid, observation=observation, fit=fit,
                     solver=solver, output=output, constants=constants, lines=lines)


def _observation(o, constants, path) -> ObservationSection:
    sources = [k for k in ("expression", "csv") if k in o]
    if len(sources) != 1:
        line = min((v.line for v in o.values()), default=None)
        raise ConfigError("[observation] needs exactly one of 'expression' or 'csv'", line)
    times = _list(o["times"]) if "times" in o else None
    kind = o["kind"].strip() if "kind" in o else None
    if kind is not None and kind not in ("stationary", "time_dependent"):
        raise ConfigError("kind must be 'stationary' or 'time_dependent'", o["kind"].line)

    if "expression" in o:
        if kind is None:
            kind = "time_dependent" if times else "stationary"
        allowed = set(constants) | ({"t"} if kind == "time_dependent" else set())
        e = _expression(o["expression"], allowed, "observation")
        if kind == "time_dependent" and not times:
            raise ConfigError("time-dependent observation needs 'times'", o["expression"].line)
        return ObservationSection(kind=kind, expression=e, times=times)

    csv_path = (path.parent / str(o["csv"])).resolve()
    line = o["csv"].line
    if not csv_path.exists():
        raise ConfigError(f"observation file {csv_path} does not exist", line)
    with open(csv_path, encoding="utf-8", errors="replace") as fh:
        header = fh.readline().strip().replace(" ", "")
    if kind is None:
        kind = "time_dependent" if header == "t,x,value" else "stationary"
    try:
        data = read_time_csv(csv_path) if kind == "time_dependent" else read_density_csv(csv_path)
    except InputError as exc:
        raise ConfigError(str(exc), line) from None
    if kind == "time_dependent" and times is None:
        times = data[0]
    return ObservationSection(kind=kind, csv=csv_path, times=times, data=data)
