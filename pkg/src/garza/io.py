"""JSON loading and dumping for designs and models.

Model files are JSON objects with a ``type`` key (see :data:`garza.models.CATALOG`)
and a ``domain`` given as ``[A, B]`` or ``{"A": .., "B": ..}``.  Expression
models compile a restricted arithmetic language in ``x`` into functions that
work on arrays and on Taylor jets alike.
"""

from __future__ import annotations

import ast
import json
import math
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import taylor
from .core import Design, DesignError, IntervalDomain, PsiSystem
from .models import (ModelError, ModelSpec, exp_x2, inverse_power, jacobi, polynomial_model,
                     q_from_roots, rational_model, weighted_polynomial_model)


class ConfigError(ValueError):
    """Malformed input file; the message names the file and the field."""


def _read_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _field(obj: dict, key: str, where: str, kind=None, default=...):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    if key not in obj:
        if default is ...:
            raise ConfigError(f"{where}: missing field '{key}'")
        return default
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"{where}: field '{key}' has the wrong type ({type(val).__name__})")
    return val


def _numbers(val, where: str) -> list:
    if not isinstance(val, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                            for v in val):
        raise ConfigError(f"{where}: expected a list of numbers")
    return [float(v) for v in val]


# -- designs -----------------------------------------------------------------------


def design_from_json(obj, where: str = "design", domain: IntervalDomain | None = None) -> Design:
    support = _numbers(_field(obj, "support", where), f"{where}.support")
    weights = obj.get("weights")
    if weights is not None:
        weights = _numbers(weights, f"{where}.weights")
    try:
        try:
            # keep a valid design bit-for-bit, so load -> dump round-trips
            d = Design(support, weights) if weights is not None else None
        except DesignError:
            d = None
        if d is None or (domain is not None and not np.all(domain.contains(d.support))):
            d = Design.create(support, weights, domain)
        elif domain is not None:
            d.check_domain(domain)
        return d
    except DesignError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_design(path, domain: IntervalDomain | None = None) -> Design:
    return design_from_json(_read_json(path), str(path), domain)


def dump_design(design: Design) -> str:
    return json.dumps(design.to_json())


# -- domains and models ------------------------------------------------------------


def domain_from_json(val, where: str = "domain") -> IntervalDomain:
    if isinstance(val, dict):
        A, B = _field(val, "A", where), _field(val, "B", where)
    elif isinstance(val, list) and len(val) == 2:
        A, B = val
    else:
        raise ConfigError(f"{where}: expected [A, B] or {{\"A\": .., \"B\": ..}}")
    try:
        return IntervalDomain(float(A), float(B))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _efficiency(val, where: str):
    if isinstance(val, str):
        val = {"name": val}
    name = str(_field(val, "name", where, str)).lower()
    if name == "exp_x2":
        return exp_x2()
    if name == "jacobi":
        return jacobi(float(_field(val, "alpha", where)), float(_field(val, "beta", where)))
    if name == "inverse_power":
        return inverse_power(float(_field(val, "n", where)))
    raise ConfigError(f"{where}: unknown efficiency '{name}'")


def model_from_json(obj, where: str = "model") -> ModelSpec:
    kind = _field(obj, "type", where, str)
    if isinstance(obj.get("params"), dict):
        obj = {**obj["params"], **{k: v for k, v in obj.items() if k != "params"}}
    domain = domain_from_json(_field(obj, "domain", where), f"{where}.domain")
    try:
        if kind == "polynomial":
            return polynomial_model(int(_field(obj, "degree", where, int)), domain)
        if kind == "weighted":
            eff = _efficiency(_field(obj, "efficiency", where), f"{where}.efficiency")
            return weighted_polynomial_model(int(_field(obj, "p", where, int)), eff, domain)
        if kind == "rational":
            return _rational(obj, where, domain)
        if kind == "expression":
            return _expression_model(obj, where, domain)
    except ModelError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: unknown model type '{kind}'")


def _rational(obj, where, domain) -> ModelSpec:
    l = int(_field(obj, "l", where, int))
    s = int(_field(obj, "s", where, int))
    num = _numbers(_field(obj, "numerator", where, default=[1.0] + [0.0] * (l - 1)), f"{where}.numerator")
    if "denominator_roots" in obj:
        den = list(q_from_roots(_numbers(obj["denominator_roots"], f"{where}.denominator_roots"))[1:])
    else:
        den = _numbers(_field(obj, "denominator", where), f"{where}.denominator")
    if len(num) != l or len(den) != s:
        raise ConfigError(f"{where}: need {l} numerator and {s} denominator coefficients")
    return rational_model(l, s, num + den, domain)


def _expression_model(obj, where, domain) -> ModelSpec:
    exprs = _field(obj, "psi", where, list)
    funcs = tuple(compile_expression(e, f"{where}.psi[{i}]") for i, e in enumerate(exprs))
    psi = PsiSystem(funcs, tuple(str(e) for e in exprs))
    layout = obj.get("layout")
    if layout is not None:
        try:
            layout = np.array(layout, dtype=int)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}.layout: {exc}") from exc
    return ModelSpec(str(obj.get("name", "expression")), psi, domain, layout)


def load_model(path) -> ModelSpec:
    return model_from_json(_read_json(path), str(path))


# -- expressions -------------------------------------------------------------------

_FUNCS = {"sin": taylor.sin, "cos": taylor.cos, "exp": taylor.exp, "log": taylor.log,
          "sqrt": taylor.sqrt}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b, ast.Mult: lambda a, b: a * b,
           ast.Div: lambda a, b: a / b, ast.Pow: lambda a, b: a**b}


def compile_expression(text: str, where: str = "expression") -> Callable:
    """Compile arithmetic in ``x`` (+ - * / **, sin cos exp log sqrt, pi, e).

    Nothing is passed to ``eval``: the syntax tree is checked node by node
    and interpreted directly, so only the listed operations can run.
    """
    if not isinstance(text, str):
        raise ConfigError(f"{where}: expected a string")
    try:
        tree = ast.parse(text, mode="eval").body
    except SyntaxError as exc:
        raise ConfigError(f"{where}: syntax error at column {exc.offset}: {text!r}") from exc
    _validate(tree, where)

    def run(node, x):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return x if node.id == "x" else _CONSTS[node.id]
        if isinstance(node, ast.UnaryOp):
            v = run(node.operand, x)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](run(node.left, x), run(node.right, x))
        return _FUNCS[node.func.id](run(node.args[0], x))

    def f(x):
        out = run(tree, x)
        if isinstance(out, float):
            return out + 0.0 * x
        return out

    f.__name__ = f"expr[{text}]"
    return f


def _validate(node, where):
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ConfigError(f"{where}: only numeric constants are allowed")
    elif isinstance(node, ast.Name):
        if node.id != "x" and node.id not in _CONSTS:
            raise ConfigError(f"{where}: unknown name '{node.id}'")
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        _validate(node.operand, where)
    elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _validate(node.left, where)
        _validate(node.right, where)
    elif (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
          and len(node.args) == 1 and not node.keywords):
        _validate(node.args[0], where)
    else:
        raise ConfigError(f"{where}: unsupported syntax '{ast.dump(node)[:40]}'")
