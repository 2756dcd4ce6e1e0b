"""Scalar SDE models ``dX = b(X) dt + sigma(X) dB_t`` and one-parameter families."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

import numpy as np

from . import expr as _expr
from .density import Grid1D
from .errors import ExprError, ModelError

__all__ = ["ScalarFunctionSpec", "SdeModel", "SdeFamily", "instantiate"]

SIGMA_MIN = 1e-8


class ScalarFunctionSpec:
    """A function of ``x``: a parsed expression with bound parameters, or a callback.

    Callbacks may be numpy-aware (array in, array out) or plain ``float -> float``;
    the latter are evaluated node by node.
    """

    def __init__(self, source: Union[str, _expr.Expr, Callable[[float], float], float],
                 bindings: Mapping[str, float] | None = None):
        self.bindings = dict(bindings or {})
        self.callback = None
        self.expression = None
        if isinstance(source, (int, float)):
            source = str(float(source))
        if isinstance(source, str):
            source = _expr.parse(source)
        if isinstance(source, _expr.Expr):
            self.expression = source
            missing = sorted(source.params - set(self.bindings))
            if missing:
                raise _expr.UnboundParameterError(missing[0])
        elif callable(source):
            self.callback = source
        else:
            raise TypeError(f"cannot build a function from {source!r}")

    def __repr__(self):
        if self.expression is not None:
            return f"ScalarFunctionSpec({str(self.expression)!r}, {self.bindings})"
        return f"ScalarFunctionSpec({self.callback!r})"

    def __call__(self, x):
        if self.expression is not None:
            return _expr.evaluate(self.expression, x, self.bindings)
        if np.ndim(x) == 0:
            return float(self.callback(float(x)))
        x = np.asarray(x, dtype=np.float64)
        try:
            with np.errstate(all="ignore"):
                out = np.asarray(self.callback(x), dtype=np.float64)
            if out.shape == ():
                return np.full(x.shape, float(out))
            if out.shape == x.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([float(self.callback(float(v))) for v in x])

    def on_grid(self, grid: Grid1D, label: str = "function") -> np.ndarray:
        """Values at every node; raises ModelError if any is non-finite."""
        v = self(grid.nodes)
        bad = ~np.isfinite(v)
        if bad.any():
            k = int(np.argmax(bad))
            raise ModelError(f"{label} is not finite at x = {grid.nodes[k]:g}")
        return v


@dataclass(frozen=True)
class SdeModel:
    drift: ScalarFunctionSpec
    diffusion: ScalarFunctionSpec

    def __post_init__(self):
        for name in ("drift", "diffusion"):
            value = getattr(self, name)
            if not isinstance(value, ScalarFunctionSpec):
                object.__setattr__(self, name, ScalarFunctionSpec(value))

    def coefficients(self, grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
        """Drift ``b`` and diffusion ``sigma`` at the grid nodes, validated."""
        b = self.drift.on_grid(grid, "drift")
        sigma = self.diffusion.on_grid(grid, "diffusion")
        small = np.abs(sigma) < SIGMA_MIN
        if small.any():
            k = int(np.argmax(small))
            raise ModelError(f"diffusion vanishes at x = {grid.nodes[k]:g}")
        if np.any(sigma < 0):
            warnings.warn("diffusion is negative somewhere; only sigma^2 is used",
                          stacklevel=2)
        return b, sigma

    def check(self, grid: Grid1D) -> "SdeModel":
        self.coefficients(grid)
        return self


@dataclass(frozen=True)
class SdeFamily:
    """``theta -> SdeModel``: drift and diffusion sharing one free parameter.

    ``drift``/``diffusion`` are expression strings (or parsed expressions) whose
    free parameters are ``param`` plus names bound in ``constants``, or callables
    ``f(x, theta)``.
    """

    drift: Union[str, _expr.Expr, Callable]
    diffusion: Union[str, _expr.Expr, Callable]
    param: str
    range: tuple[float, float]
    constants: Mapping[str, float] = field(default_factory=dict)
    grid: Grid1D | None = None

    def __post_init__(self):
        lo, hi = (float(v) for v in self.range)
        if not lo <= hi:
            raise ModelError(f"empty parameter range [{lo}, {hi}]")
        object.__setattr__(self, "range", (lo, hi))
        object.__setattr__(self, "constants", dict(self.constants))
        for name in ("drift", "diffusion"):
            value = getattr(self, name)
            if isinstance(value, (int, float)):
                value = str(float(value))
            if isinstance(value, str):
                value = _expr.parse(value)
                object.__setattr__(self, name, value)
            if isinstance(value, _expr.Expr):
                extra = value.params - {self.param} - set(self.constants)
                if extra:
                    raise ExprError(f"{name} has unbound parameters {sorted(extra)}")

    def _spec(self, source, theta):
        if isinstance(source, _expr.Expr):
            return ScalarFunctionSpec(source, {**self.constants, self.param: theta})
        return ScalarFunctionSpec(lambda x: source(x, theta))

    def instantiate(self, theta: float, grid: Grid1D | None = None) -> SdeModel:
        return instantiate(self, theta, grid)


def instantiate(family: SdeFamily, theta: float, grid: Grid1D | None = None) -> SdeModel:
    """Bind the family parameter to ``theta`` and validate on the working grid."""
    lo, hi = family.range
    if not lo <= theta <= hi:
        raise ModelError(f"{family.param} = {theta} outside [{lo}, {hi}]")
    theta = float(theta)
    model = SdeModel(family._spec(family.drift, theta), family._spec(family.diffusion, theta))
    grid = grid if grid is not None else family.grid
    if grid is not None:
        model.check(grid)
    return model
