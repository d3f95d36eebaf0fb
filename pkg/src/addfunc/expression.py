"""Safe compilation of user expressions in the variable ``t``.

Grammar: numbers, ``t``, ``+ - * / ^`` (``**`` also accepted), unary minus,
and the calls ``abs``, ``log``, ``exp``.  Anything else is rejected before
evaluation, so config files cannot execute arbitrary code.
"""

import ast
import operator

import numpy as np

from addfunc.errors import PreconditionError

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_CALLS = {"abs": np.abs, "log": np.log, "exp": np.exp}


def _build(node):
    if isinstance(node, ast.Expression):
        return _build(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        value = float(node.value)
        return lambda t: value
    if isinstance(node, ast.Name):
        if node.id != "t":
            raise PreconditionError(f"unknown variable {node.id!r}; only 't' is allowed")
        return lambda t: t
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _build(node.left), _build(node.right)
        return lambda t: op(left(t), right(t))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        op = _UNARY[type(node.op)]
        inner = _build(node.operand)
        return lambda t: op(inner(t))
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _CALLS:
            raise PreconditionError("only abs, log and exp may be called")
        if len(node.args) != 1 or node.keywords:
            raise PreconditionError(f"{node.func.id} takes exactly one argument")
        fn = _CALLS[node.func.id]
        arg = _build(node.args[0])
        return lambda t: fn(arg(t))
    raise PreconditionError(f"unsupported syntax in expression: {ast.dump(node)[:60]}")


def compile_expression(text):
    """Return a vectorised callable ``t -> value`` for ``text``."""
    source = text.replace("^", "**").strip()
    if not source:
        raise PreconditionError("empty expression")
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise PreconditionError(f"cannot parse expression {text!r}: {exc.msg}") from None
    body = _build(tree)

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = body(t)
        return np.broadcast_to(np.asarray(out, dtype=float), t.shape).copy()

    return evaluate
