"""
Behavioral expression parsing, formatting and evaluation with analytic derivatives
"""

import math
import re
import logging
from typing import Callable, Dict, List, Mapping, Optional, Tuple

from models.netlist import (
    Expression, Number, ParamRef, NodeVoltage, BranchCurrent, UnaryOp, BinaryOp, Call,
)
from services.exceptions import ExpressionError, EvaluationError
from services.units import parse_number

logger = logging.getLogger(__name__)

# name -> arity
FUNCTIONS = {
    'pow': 2,
    'sqrt': 1,
    'exp': 1,
    'log': 1,
    'abs': 1,
}

# Derivative keys: ('v', node) or ('i', element)
Ref = Tuple[str, str]
Gradient = Dict[Ref, float]

_TOKEN_RE = re.compile(r"""
    (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?[a-zA-Z]*)
  | (?P<ident>[a-zA-Z_][a-zA-Z0-9_.#]*)
  | (?P<op>\*\*|[-+*/^(),])
  | (?P<space>\s+)
""", re.VERBOSE)


def _tokenize(text: str, line: Optional[int]) -> List[Tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ExpressionError(f"unexpected character '{text[pos]}' in expression", line, pos + 1)
        kind = match.lastgroup
        if kind != 'space':
            tokens.append((kind, match.group(kind), pos + 1))
        pos = match.end()
    return tokens


class _ExpressionParser:
    """Recursive descent: unary -, then pow/call, then * /, then + -"""

    def __init__(self, text: str, line: Optional[int]):
        self.text = text
        self.line = line
        self.tokens = _tokenize(text, line)
        self.pos = 0

    def _peek(self) -> Optional[Tuple[str, str, int]]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self) -> Tuple[str, str, int]:
        token = self._peek()
        if token is None:
            raise ExpressionError(f"unexpected end of expression '{self.text}'", self.line)
        self.pos += 1
        return token

    def _expect(self, value: str):
        kind, text, col = self._next()
        if text != value:
            raise ExpressionError(f"expected '{value}' but found '{text}'", self.line, col)

    def parse(self) -> Expression:
        if not self.tokens:
            raise ExpressionError("empty expression", self.line)
        expr = self._sum()
        token = self._peek()
        if token is not None:
            raise ExpressionError(f"unexpected '{token[1]}' in expression", self.line, token[2])
        return expr

    def _sum(self) -> Expression:
        left = self._product()
        while self._peek() is not None and self._peek()[1] in ('+', '-'):
            op = self._next()[1]
            left = BinaryOp(op, left, self._product())
        return left

    def _product(self) -> Expression:
        left = self._power()
        while self._peek() is not None and self._peek()[1] in ('*', '/'):
            op = self._next()[1]
            left = BinaryOp(op, left, self._power())
        return left

    def _power(self) -> Expression:
        base = self._unary()
        token = self._peek()
        if token is not None and token[1] in ('**', '^'):
            self._next()
            return Call('pow', (base, self._power()))
        return base

    def _unary(self) -> Expression:
        token = self._peek()
        if token is not None and token[1] in ('-', '+'):
            self._next()
            operand = self._unary()
            return UnaryOp('-', operand) if token[1] == '-' else operand
        return self._primary()

    def _primary(self) -> Expression:
        kind, text, col = self._next()
        if kind == 'number':
            return Number(parse_number(text, self.line, col))
        if text == '(':
            inner = self._sum()
            self._expect(')')
            return inner
        if kind != 'ident':
            raise ExpressionError(f"unexpected '{text}' in expression", self.line, col)

        name = text.lower()
        token = self._peek()
        if token is None or token[1] != '(':
            return ParamRef(name)
        self._next()
        if name in ('v', 'i'):
            return self._probe_ref(name, col)
        if name not in FUNCTIONS:
            raise ExpressionError(f"unknown function '{name}'", self.line, col)
        args = [self._sum()]
        while self._peek() is not None and self._peek()[1] == ',':
            self._next()
            args.append(self._sum())
        self._expect(')')
        if len(args) != FUNCTIONS[name]:
            raise ExpressionError(
                f"function '{name}' takes {FUNCTIONS[name]} argument(s), got {len(args)}",
                self.line, col,
            )
        return Call(name, tuple(args))

    def _probe_ref(self, kind: str, col: int) -> Expression:
        names = [self._ref_name()]
        while self._peek() is not None and self._peek()[1] == ',':
            self._next()
            names.append(self._ref_name())
        self._expect(')')
        if kind == 'i':
            if len(names) != 1:
                raise ExpressionError("I() takes exactly one element name", self.line, col)
            return BranchCurrent(names[0])
        if len(names) == 1:
            return NodeVoltage(names[0])
        if len(names) == 2:
            return BinaryOp('-', NodeVoltage(names[0]), NodeVoltage(names[1]))
        raise ExpressionError("V() takes one or two node names", self.line, col)

    def _ref_name(self) -> str:
        kind, text, col = self._next()
        if kind not in ('ident', 'number'):
            raise ExpressionError(f"expected a node or element name, found '{text}'", self.line, col)
        return text.lower()


def parse_expression(text: str, line: Optional[int] = None) -> Expression:
    """Parse an expression body (surrounding quotes optional)"""
    body = text.strip()
    if len(body) >= 2 and body[0] == "'" and body[-1] == "'":
        body = body[1:-1]
    return _ExpressionParser(body, line).parse()


def format_expression(expr: Expression) -> str:
    """Fully parenthesised text that parses back to the same tree"""
    if isinstance(expr, Number):
        return repr(float(expr.value))
    if isinstance(expr, ParamRef):
        return expr.name
    if isinstance(expr, NodeVoltage):
        return f"v({expr.node})"
    if isinstance(expr, BranchCurrent):
        return f"i({expr.element})"
    if isinstance(expr, UnaryOp):
        return f"(-{format_expression(expr.operand)})"
    if isinstance(expr, BinaryOp):
        return f"({format_expression(expr.left)}{expr.op}{format_expression(expr.right)})"
    if isinstance(expr, Call):
        args = ','.join(format_expression(arg) for arg in expr.args)
        return f"{expr.func}({args})"
    raise TypeError(f"not an expression: {expr!r}")


def references(expr: Expression) -> List[Expression]:
    """All NodeVoltage / BranchCurrent / ParamRef leaves"""
    if isinstance(expr, (NodeVoltage, BranchCurrent, ParamRef)):
        return [expr]
    if isinstance(expr, UnaryOp):
        return references(expr.operand)
    if isinstance(expr, BinaryOp):
        return references(expr.left) + references(expr.right)
    if isinstance(expr, Call):
        found = []
        for arg in expr.args:
            found.extend(references(arg))
        return found
    return []


def transform(expr: Expression,
              params: Mapping[str, float],
              node_map: Callable[[str], str] = None,
              element_map: Callable[[str], str] = None) -> Expression:
    """
    Substitute parameters, rename V()/I() references and fold constant subtrees

    Unknown parameters raise EvaluationError.
    """
    if isinstance(expr, Number):
        return expr
    if isinstance(expr, ParamRef):
        if expr.name not in params:
            raise EvaluationError(f"unresolved parameter '{expr.name}'")
        return Number(float(params[expr.name]))
    if isinstance(expr, NodeVoltage):
        return NodeVoltage(node_map(expr.node)) if node_map else expr
    if isinstance(expr, BranchCurrent):
        return BranchCurrent(element_map(expr.element)) if element_map else expr
    if isinstance(expr, UnaryOp):
        operand = transform(expr.operand, params, node_map, element_map)
        if isinstance(operand, Number):
            return Number(-operand.value)
        return UnaryOp(expr.op, operand)
    if isinstance(expr, BinaryOp):
        left = transform(expr.left, params, node_map, element_map)
        right = transform(expr.right, params, node_map, element_map)
        if isinstance(left, Number) and isinstance(right, Number):
            return Number(_binary(expr.op, left.value, right.value))
        return BinaryOp(expr.op, left, right)
    if isinstance(expr, Call):
        args = tuple(transform(arg, params, node_map, element_map) for arg in expr.args)
        if all(isinstance(arg, Number) for arg in args):
            return Number(_call(expr.func, [arg.value for arg in args]))
        return Call(expr.func, args)
    raise TypeError(f"not an expression: {expr!r}")


def evaluate_constant(expr: Expression, params: Mapping[str, float]) -> float:
    """Evaluate a parameter-only expression"""
    folded = transform(expr, params)
    if not isinstance(folded, Number):
        raise EvaluationError("expression depends on circuit voltages or currents")
    return folded.value


def _binary(op: str, a: float, b: float) -> float:
    if op == '+':
        return a + b
    if op == '-':
        return a - b
    if op == '*':
        return a * b
    if op == '/':
        if b == 0.0:
            raise EvaluationError("division by zero")
        return a / b
    raise EvaluationError(f"unknown operator '{op}'")


def _call(func: str, args: List[float]) -> float:
    try:
        if func == 'pow':
            return math.pow(args[0], args[1])
        if func == 'sqrt':
            return math.sqrt(args[0])
        if func == 'exp':
            return math.exp(args[0])
        if func == 'log':
            return math.log(args[0])
        if func == 'abs':
            return abs(args[0])
    except (ValueError, OverflowError) as e:
        raise EvaluationError(f"{func}({', '.join(map(str, args))}): {e}")
    raise EvaluationError(f"unknown function '{func}'")


def _scaled(grad: Gradient, factor: float) -> Gradient:
    return {ref: factor * value for ref, value in grad.items()}


def _combine(a: Gradient, fa: float, b: Gradient, fb: float) -> Gradient:
    out = {ref: fa * value for ref, value in a.items()}
    for ref, value in b.items():
        out[ref] = out.get(ref, 0.0) + fb * value
    return out


def evaluate_expression(expr: Expression, solution, params: Optional[Mapping[str, float]] = None
                        ) -> Tuple[float, Gradient]:
    """
    Value and exact first derivatives w.r.t. every V()/I() reference

    `solution` provides voltage(node) and current(element).
    """
    if isinstance(expr, Number):
        return expr.value, {}
    if isinstance(expr, ParamRef):
        if params is None or expr.name not in params:
            raise EvaluationError(f"unresolved parameter '{expr.name}'")
        return float(params[expr.name]), {}
    if isinstance(expr, NodeVoltage):
        return solution.voltage(expr.node), {('v', expr.node): 1.0}
    if isinstance(expr, BranchCurrent):
        return solution.current(expr.element), {('i', expr.element): 1.0}
    if isinstance(expr, UnaryOp):
        value, grad = evaluate_expression(expr.operand, solution, params)
        return -value, _scaled(grad, -1.0)
    if isinstance(expr, BinaryOp):
        a, da = evaluate_expression(expr.left, solution, params)
        b, db = evaluate_expression(expr.right, solution, params)
        if expr.op == '+':
            return a + b, _combine(da, 1.0, db, 1.0)
        if expr.op == '-':
            return a - b, _combine(da, 1.0, db, -1.0)
        if expr.op == '*':
            return a * b, _combine(da, b, db, a)
        if expr.op == '/':
            if b == 0.0:
                raise EvaluationError("division by zero")
            return a / b, _combine(da, 1.0 / b, db, -a / (b * b))
        raise EvaluationError(f"unknown operator '{expr.op}'")
    if isinstance(expr, Call):
        evaluated = [evaluate_expression(arg, solution, params) for arg in expr.args]
        values = [value for value, _ in evaluated]
        result = _call(expr.func, values)
        if expr.func == 'pow':
            (a, da), (b, db) = evaluated
            if not da or b == 0.0 or (a == 0.0 and b < 1.0):
                grad = {}
            else:
                grad = _scaled(da, b * _call('pow', [a, b - 1.0]))
            if db:
                if a <= 0.0:
                    raise EvaluationError("pow with a variable exponent needs a positive base")
                grad = _combine(grad, 1.0, db, result * math.log(a))
            return result, grad
        (a, da), = evaluated
        if expr.func == 'sqrt':
            factor = 0.5 / result if result > 0.0 else 0.0
        elif expr.func == 'exp':
            factor = result
        elif expr.func == 'log':
            factor = 1.0 / a
        else:
            factor = 1.0 if a >= 0.0 else -1.0
        return result, _scaled(da, factor)
    raise TypeError(f"not an expression: {expr!r}")
