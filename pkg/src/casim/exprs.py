"""Tiny integer expression language used by role bodies and acceptance tests.

Expressions are parsed with the stdlib ast module and restricted to
arithmetic, comparisons and boolean connectives over object names and
integer literals.  No calls, attributes, or subscripts.
"""

import ast

from .errors import ValidationError

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.FloorDiv: lambda a, b: a // b,
    ast.Mod: lambda a, b: a % b,
}

_CMPOPS = {
    ast.Eq: lambda a, b: a == b,
    ast.NotEq: lambda a, b: a != b,
    ast.Lt: lambda a, b: a < b,
    ast.LtE: lambda a, b: a <= b,
    ast.Gt: lambda a, b: a > b,
    ast.GtE: lambda a, b: a >= b,
}


class Expr:
    def __init__(self, text: str):
        self.text = text
        try:
            tree = ast.parse(text, mode="eval")
        except SyntaxError as e:
            raise ValidationError("bad expression %r: %s" % (text, e))
        self._root = tree.body
        self.names: tuple[str, ...] = tuple(sorted(self._collect(self._root)))

    def _collect(self, node) -> set:
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, bool)):
                raise ValidationError("non-integer literal in %r" % self.text)
            return set()
        if isinstance(node, ast.Name):
            return {node.id}
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return self._collect(node.left) | self._collect(node.right)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.Not)):
            return self._collect(node.operand)
        if isinstance(node, ast.Compare):
            out = self._collect(node.left)
            for op, cmp in zip(node.ops, node.comparators):
                if type(op) not in _CMPOPS:
                    raise ValidationError("operator not allowed in %r" % self.text)
                out |= self._collect(cmp)
            return out
        if isinstance(node, ast.BoolOp):
            out = set()
            for v in node.values:
                out |= self._collect(v)
            return out
        raise ValidationError("construct not allowed in expression %r" % self.text)

    def eval(self, env: dict):
        return self._eval(self._root, env)

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Name):
            return env[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env),
                                          self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else not v
        if isinstance(node, ast.Compare):
            left = self._eval(node.left, env)
            for op, cmp in zip(node.ops, node.comparators):
                right = self._eval(cmp, env)
                if not _CMPOPS[type(op)](left, right):
                    return False
                left = right
            return True
        if isinstance(node, ast.BoolOp):
            if isinstance(node.op, ast.And):
                return all(self._eval(v, env) for v in node.values)
            return any(self._eval(v, env) for v in node.values)
        raise AssertionError(node)

    def __repr__(self):
        return "Expr(%r)" % self.text
