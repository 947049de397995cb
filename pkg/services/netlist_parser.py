"""
SPICE/HSPICE subset parser: logical lines, cards, subcircuits, directives and flattening
"""

import re
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Set, Tuple, Union

from config.settings import GROUND_NAMES, OPAMP_SUBCKT, MEMRISTOR_SUBCKT, RESERVED_SUBCKTS
from models.circuit import (
    GROUND, Circuit, Element, ResistorElement, CapacitorElement, VoltageSourceElement,
    VcvsElement, VccsElement, OpAmpElement, MemristorElement, MemristorProbe,
    BRANCH_ELEMENTS,
)
from models.devices import MemristorParams, OpAmpModel
from models.netlist import (
    Expression, Number, NodeVoltage, BranchCurrent, BinaryOp, Card, Resistor, Capacitor,
    VSourceDC, VCVS, VCCS, OpAmp, Memristor, SubcktInstance, SubcktDef, AnalysisDirective,
    NetlistDocument,
)
from services.exceptions import (
    NetlistParseError, FlattenError, EvaluationError, DeviceError, ExpressionError,
)
from services.expression_service import (
    parse_expression, format_expression, evaluate_expression, evaluate_constant,
    transform, references,
)
from services.units import parse_number

logger = logging.getLogger(__name__)

__all__ = [
    'LogicalLine', 'fold_continuations', 'parse_number', 'parse_expression',
    'parse_netlist', 'read_netlist', 'format_netlist', 'flatten', 'evaluate_expression',
]

_INLINE_COMMENT_RE = re.compile(r"\s\$.*$")
_ASSIGN_RE = re.compile(r"\s*=\s*")
_INCLUDE_RE = re.compile(r"^\s*\.inc(?:lude)?\s+['\"]?([^'\"]+?)['\"]?\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class LogicalLine:
    text: str
    line: int


def fold_continuations(raw_text: str) -> List[LogicalLine]:
    """
    Join '+' continuation lines onto the previous logical line

    Comment lines ('*') and blank lines are dropped, '$' inline comments are
    stripped and the text is lowercased.
    """
    lines: List[LogicalLine] = []
    for number, raw in enumerate(raw_text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith('*'):
            continue
        stripped = _INLINE_COMMENT_RE.sub('', stripped).lower()
        if stripped.startswith('+'):
            if not lines:
                raise NetlistParseError("continuation line has no line to continue", number, 1)
            previous = lines[-1]
            lines[-1] = LogicalLine(f"{previous.text} {stripped[1:].strip()}".strip(), previous.line)
        else:
            lines.append(LogicalLine(stripped, number))
    return lines


def _title_of(raw_text: str) -> str:
    for raw in raw_text.splitlines():
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith('*'):
            return stripped.strip('*').strip()
        return ''
    return ''


def _split_tokens(text: str, line: int) -> List[str]:
    """Whitespace split that keeps quoted expressions whole"""
    tokens = []
    buffer = ''
    quoted = False
    normalized = _ASSIGN_RE.sub('=', text)
    for ch in normalized:
        if ch == "'":
            quoted = not quoted
            buffer += ch
        elif ch.isspace() and not quoted:
            if buffer:
                tokens.append(buffer)
                buffer = ''
        else:
            buffer += ch
    if quoted:
        raise NetlistParseError("unbalanced quote", line)
    if buffer:
        tokens.append(buffer)
    return tokens


def _column(text: str, token: str) -> int:
    index = text.find(token)
    return index + 1 if index >= 0 else 1


def _value(token: str, line: int, column: int = None) -> Expression:
    if token.startswith("'") or token.startswith('{'):
        body = token.strip("'{}")
        return parse_expression(body, line)
    try:
        return Number(parse_number(token, line, column))
    except NetlistParseError:
        raise NetlistParseError(f"malformed value '{token}'", line, column)


def _assignments(tokens: List[str], line: int, text: str) -> Tuple[Tuple[str, Expression], ...]:
    pairs = []
    seen = set()
    for token in tokens:
        if token == 'params:':
            continue
        if '=' not in token:
            raise NetlistParseError(f"expected name=value, found '{token}'", line, _column(text, token))
        key, raw = token.split('=', 1)
        if not key or not raw:
            raise NetlistParseError(f"malformed assignment '{token}'", line, _column(text, token))
        if key in seen:
            raise NetlistParseError(f"parameter '{key}' given twice", line, _column(text, token))
        seen.add(key)
        pairs.append((key, _value(raw, line, _column(text, token))))
    return tuple(pairs)


def _need(tokens: List[str], count: int, what: str, line: int):
    if len(tokens) < count:
        raise NetlistParseError(f"{what} card needs at least {count - 1} fields after its name", line)


def _controlled_expr(tokens: List[str], keyword: str, line: int, text: str) -> Expression:
    """Behavioral KEY='expr' form, or the linear nc+ nc- gain form"""
    rest = tokens[3:]
    if len(rest) == 1 and rest[0].startswith(keyword + '='):
        return parse_expression(rest[0].split('=', 1)[1], line)
    if len(rest) == 3 and '=' not in ''.join(rest):
        gain = _value(rest[2], line, _column(text, rest[2]))
        return BinaryOp('*', gain, BinaryOp('-', NodeVoltage(rest[0]), NodeVoltage(rest[1])))
    raise NetlistParseError(f"expected {keyword.upper()}='expr' or nc+ nc- gain", line)


def _parse_card(logical: LogicalLine) -> Card:
    text, line = logical.text, logical.line
    tokens = _split_tokens(text, line)
    name = tokens[0]
    letter = name[0]

    if letter == 'r':
        _need(tokens, 4, 'R', line)
        if len(tokens) > 4:
            raise NetlistParseError(f"unexpected field '{tokens[4]}'", line, _column(text, tokens[4]))
        return Resistor(name, tokens[1], tokens[2], _value(tokens[3], line, _column(text, tokens[3])), line)

    if letter == 'c':
        _need(tokens, 4, 'C', line)
        ic = None
        for token in tokens[4:]:
            if token.startswith('ic='):
                ic = _value(token[3:], line, _column(text, token))
            else:
                raise NetlistParseError(f"unexpected field '{token}'", line, _column(text, token))
        return Capacitor(name, tokens[1], tokens[2], _value(tokens[3], line, _column(text, tokens[3])), ic, line)

    if letter == 'v':
        _need(tokens, 4, 'V', line)
        rest = tokens[3:]
        if rest[0] == 'dc':
            rest = rest[1:]
        if len(rest) != 1:
            raise NetlistParseError("only DC voltage sources are supported", line)
        return VSourceDC(name, tokens[1], tokens[2], _value(rest[0], line, _column(text, rest[0])), line)

    if letter == 'e':
        _need(tokens, 4, 'E', line)
        return VCVS(name, tokens[1], tokens[2], _controlled_expr(tokens, 'vol', line, text), line)

    if letter == 'g':
        _need(tokens, 4, 'G', line)
        return VCCS(name, tokens[1], tokens[2], _controlled_expr(tokens, 'cur', line, text), line)

    if letter == 'x':
        split = next((i for i, token in enumerate(tokens) if '=' in token or token == 'params:'), len(tokens))
        positional, assignments = tokens[1:split], tokens[split:]
        if len(positional) < 2:
            raise NetlistParseError("X card needs nodes and a subcircuit name", line)
        nodes, subckt = tuple(positional[:-1]), positional[-1]
        params = _assignments(assignments, line, text)
        if subckt == OPAMP_SUBCKT:
            if len(nodes) != 3:
                raise NetlistParseError("opamp instance needs nodes: out in+ in-", line)
            return OpAmp(name, nodes[0], nodes[1], nodes[2], params, line)
        if subckt == MEMRISTOR_SUBCKT:
            if len(nodes) != 2:
                raise NetlistParseError("hpmem instance needs nodes: plus minus", line)
            return Memristor(name, nodes[0], nodes[1], params, line)
        return SubcktInstance(name, nodes, subckt, params, line)

    raise NetlistParseError(f"unknown card type '{name[0].upper()}' in '{name}'", line, 1)


def _parse_tran(tokens: List[str], line: int, text: str) -> AnalysisDirective:
    if len(tokens) < 3:
        raise NetlistParseError(".tran needs tstep and tstop", line)
    tstep = parse_number(tokens[1], line, _column(text, tokens[1]))
    tstop = parse_number(tokens[2], line, _column(text, tokens[2]))
    if tstep <= 0 or tstop <= 0:
        raise NetlistParseError(".tran values must be positive", line)
    return AnalysisDirective('tran', (('tstep', tstep), ('tstop', tstop)), line)


def _parse_ic(tokens: List[str], line: int, text: str) -> AnalysisDirective:
    values = []
    for token in tokens[1:]:
        match = re.match(r"^v\(([^)]+)\)=(.+)$", token)
        if match is None:
            raise NetlistParseError(f"expected v(node)=value, found '{token}'", line, _column(text, token))
        values.append((match.group(1), parse_number(match.group(2), line, _column(text, token))))
    return AnalysisDirective('ic', tuple(values), line)


class _DocumentBuilder:

    def __init__(self, title: str):
        self.document = NetlistDocument(title=title)
        self.open_subckt: Optional[Dict] = None

    def _scope_cards(self) -> List[Card]:
        return self.open_subckt['cards'] if self.open_subckt else self.document.statements

    def add_card(self, card: Card):
        cards = self._scope_cards()
        if any(existing.name == card.name for existing in cards):
            scope = f"subcircuit '{self.open_subckt['name']}'" if self.open_subckt else 'top level'
            raise NetlistParseError(f"duplicate element name '{card.name}' in {scope}", card.line)
        cards.append(card)

    def directive(self, logical: LogicalLine) -> bool:
        """Handle a dot-directive; returns False on .end"""
        text, line = logical.text, logical.line
        tokens = _split_tokens(text, line)
        keyword = tokens[0]

        if keyword == '.subckt':
            if self.open_subckt is not None:
                raise NetlistParseError("nested .subckt definitions are not supported", line)
            if len(tokens) < 2:
                raise NetlistParseError(".subckt needs a name", line)
            name = tokens[1]
            if name in RESERVED_SUBCKTS:
                raise NetlistParseError(f"'{name}' is a reserved built-in subcircuit name", line)
            if name in self.document.subckt_defs:
                raise NetlistParseError(f"subcircuit '{name}' defined twice", line)
            split = next((i for i, token in enumerate(tokens) if '=' in token or token == 'params:'), len(tokens))
            self.open_subckt = {
                'name': name,
                'ports': tuple(tokens[2:split]),
                'params': list(_assignments(tokens[split:], line, text)),
                'cards': [],
                'line': line,
            }
        elif keyword == '.ends':
            if self.open_subckt is None:
                raise NetlistParseError(".ends without .subckt", line)
            if len(tokens) > 1 and tokens[1] != self.open_subckt['name']:
                raise NetlistParseError(
                    f".ends {tokens[1]} closes subcircuit '{self.open_subckt['name']}'", line
                )
            sub = self.open_subckt
            self.document.subckt_defs[sub['name']] = SubcktDef(
                sub['name'], sub['ports'], tuple(sub['params']), tuple(sub['cards']), sub['line']
            )
            self.open_subckt = None
        elif keyword == '.tran':
            self.document.analyses.append(_parse_tran(tokens, line, text))
        elif keyword == '.ic':
            self.document.analyses.append(_parse_ic(tokens, line, text))
        elif keyword == '.param':
            for key, expr in _assignments(tokens[1:], line, text):
                if self.open_subckt is not None:
                    self.open_subckt['params'].append((key, expr))
                else:
                    self.document.params[key] = expr
        elif keyword == '.title':
            self.document.title = ' '.join(tokens[1:])
        elif keyword == '.end':
            return False
        elif keyword in ('.include', '.inc'):
            raise NetlistParseError(".include is only supported when reading a netlist file", line)
        else:
            logger.warning(f"Ignoring unsupported directive '{keyword}' on line {line}")
        return True

    def finish(self) -> NetlistDocument:
        if self.open_subckt is not None:
            raise NetlistParseError(
                f"missing .ends for subcircuit '{self.open_subckt['name']}'", self.open_subckt['line']
            )
        defs = self.document.subckt_defs
        scopes = [self.document.statements] + [list(sub.cards) for sub in defs.values()]
        for cards in scopes:
            for card in cards:
                if not isinstance(card, SubcktInstance):
                    continue
                if card.subckt not in defs:
                    raise NetlistParseError(f"undefined subcircuit '{card.subckt}'", card.line)
                ports = defs[card.subckt].ports
                if len(card.nodes) != len(ports):
                    raise NetlistParseError(
                        f"'{card.name}' connects {len(card.nodes)} nodes but subcircuit "
                        f"'{card.subckt}' has {len(ports)} ports", card.line,
                    )
        return self.document


def parse_netlist(text: str) -> NetlistDocument:
    """Parse netlist text into a NetlistDocument"""
    builder = _DocumentBuilder(_title_of(text))
    for logical in fold_continuations(text):
        try:
            if logical.text.startswith('.'):
                if not builder.directive(logical):
                    break
            else:
                builder.add_card(_parse_card(logical))
        except ExpressionError as e:
            raise NetlistParseError(e.message, e.line or logical.line, e.column)
    return builder.finish()


def _inline_includes(path: Path, depth: int = 0) -> str:
    if depth > 16:
        raise NetlistParseError(f".include nesting too deep at {path}")
    lines = []
    for raw in path.read_text(encoding='utf-8').splitlines():
        match = _INCLUDE_RE.match(raw)
        if match:
            target = (path.parent / match.group(1)).resolve()
            if not target.exists():
                raise NetlistParseError(f"included file not found: {target}")
            lines.append(_inline_includes(target, depth + 1))
        else:
            lines.append(raw)
    return '\n'.join(lines)


def read_netlist(path: Union[str, Path]) -> NetlistDocument:
    """Read a netlist file, inlining .include files relative to it"""
    path = Path(path)
    logger.info(f"Reading netlist {path}")
    return parse_netlist(_inline_includes(path))


def _format_value(expr: Expression) -> str:
    if isinstance(expr, Number):
        return repr(float(expr.value))
    return f"'{format_expression(expr)}'"


def _format_params(params) -> str:
    return ''.join(f" {key}={_format_value(value)}" for key, value in params)


def _format_card(card: Card) -> str:
    if isinstance(card, Resistor):
        return f"{card.name} {card.n1} {card.n2} {_format_value(card.value)}"
    if isinstance(card, Capacitor):
        ic = f" ic={_format_value(card.ic)}" if card.ic is not None else ''
        return f"{card.name} {card.n1} {card.n2} {_format_value(card.value)}{ic}"
    if isinstance(card, VSourceDC):
        return f"{card.name} {card.n_plus} {card.n_minus} dc {_format_value(card.value)}"
    if isinstance(card, VCVS):
        return f"{card.name} {card.n_plus} {card.n_minus} vol='{format_expression(card.expr)}'"
    if isinstance(card, VCCS):
        return f"{card.name} {card.n_plus} {card.n_minus} cur='{format_expression(card.expr)}'"
    if isinstance(card, OpAmp):
        return f"{card.name} {card.out} {card.in_plus} {card.in_minus} {OPAMP_SUBCKT}{_format_params(card.params)}"
    if isinstance(card, Memristor):
        return f"{card.name} {card.plus} {card.minus} {MEMRISTOR_SUBCKT}{_format_params(card.params)}"
    if isinstance(card, SubcktInstance):
        return f"{card.name} {' '.join(card.nodes)} {card.subckt}{_format_params(card.overrides)}"
    raise TypeError(f"not a card: {card!r}")


def format_netlist(document: NetlistDocument) -> str:
    """Pretty-print a document in the accepted grammar"""
    lines = []
    if document.title:
        lines.append(f"* {document.title}")
    if document.params:
        lines.append('.param' + _format_params(document.params.items()))
    for sub in document.subckt_defs.values():
        lines.append(f".subckt {sub.name} {' '.join(sub.ports)}{_format_params(sub.params)}")
        lines.extend(_format_card(card) for card in sub.cards)
        lines.append(f".ends {sub.name}")
    lines.extend(_format_card(card) for card in document.statements)
    for directive in document.analyses:
        if directive.kind == 'tran':
            values = directive.value_dict
            lines.append(f".tran {values['tstep']!r} {values['tstop']!r}")
        elif directive.kind == 'ic':
            lines.append('.ic' + ''.join(f" v({node})={value!r}" for node, value in directive.values))
    lines.append('.end')
    return '\n'.join(lines) + '\n'


class _Flattener:
    """Expands subcircuit instances into a flat, instance-qualified element list"""

    def __init__(self, document: NetlistDocument, overrides: Mapping[str, Union[float, str]]):
        self.document = document
        self.overrides = {key.lower(): self._override_value(value) for key, value in overrides.items()}
        self.nodes: List[str] = [GROUND]
        self.node_set: Set[str] = {GROUND}
        self.elements: List[Element] = []
        self.element_lines: Dict[str, int] = {}
        self.memristors: List[MemristorProbe] = []
        self.warnings: List[str] = []

    @staticmethod
    def _override_value(value) -> float:
        return parse_number(value) if isinstance(value, str) else float(value)

    def run(self) -> Circuit:
        scope: Dict[str, float] = {}
        for key, expr in self.document.params.items():
            scope[key] = self._constant(expr, scope, 0)
        for key, value in self.overrides.items():
            if '.' not in key:
                scope[key] = value

        self._expand(self.document.statements, '', {}, scope, ())
        self._validate_references()
        self._check_connectivity()

        initial_conditions = []
        ic = self.document.analysis('ic')
        if ic is not None:
            for node, value in ic.values:
                node = GROUND if node in GROUND_NAMES else node
                if node not in self.node_set:
                    raise FlattenError(f".ic references unknown node '{node}'", ic.line)
                initial_conditions.append((node, value))

        tran = self.document.analysis('tran')
        return Circuit(
            nodes=tuple(self.nodes),
            elements=tuple(self.elements),
            memristors=tuple(self.memristors),
            initial_conditions=tuple(initial_conditions),
            tran=(tran.value_dict['tstep'], tran.value_dict['tstop']) if tran else None,
            warnings=tuple(self.warnings),
        )

    def _constant(self, expr: Expression, scope: Mapping[str, float], line: int) -> float:
        try:
            return evaluate_constant(expr, scope)
        except EvaluationError as e:
            raise FlattenError(str(e), line)

    def _register(self, *nodes: str):
        for node in nodes:
            if node not in self.node_set:
                self.node_set.add(node)
                self.nodes.append(node)

    def _add(self, element: Element, line: int, *nodes: str):
        if element.name in self.element_lines:
            raise FlattenError(f"duplicate flattened element name '{element.name}'", line)
        self._register(*nodes)
        self.elements.append(element)
        self.element_lines[element.name] = line

    def _expand(self, cards, prefix: str, port_map: Dict[str, str],
                scope: Dict[str, float], stack: Tuple[str, ...]):
        local_names = {card.name for card in cards}
        top_names = {card.name for card in self.document.statements}

        def node(name: str) -> str:
            if name in GROUND_NAMES:
                return GROUND
            if name in port_map:
                return port_map[name]
            return prefix + name

        def element(name: str) -> str:
            if name in local_names:
                return prefix + name
            if name in top_names:
                return name
            return prefix + name

        for card in cards:
            name = prefix + card.name
            line = card.line
            try:
                if isinstance(card, Resistor):
                    resistance = self._constant(card.value, scope, line)
                    if resistance == 0:
                        raise FlattenError(f"resistor '{name}' has zero resistance", line)
                    n1, n2 = node(card.n1), node(card.n2)
                    self._add(ResistorElement(name, n1, n2, resistance), line, n1, n2)
                elif isinstance(card, Capacitor):
                    capacitance = self._constant(card.value, scope, line)
                    if capacitance <= 0:
                        raise FlattenError(f"capacitor '{name}' must have positive capacitance", line)
                    ic = self._constant(card.ic, scope, line) if card.ic is not None else None
                    n1, n2 = node(card.n1), node(card.n2)
                    self._add(CapacitorElement(name, n1, n2, capacitance, ic), line, n1, n2)
                elif isinstance(card, VSourceDC):
                    np_, nm = node(card.n_plus), node(card.n_minus)
                    self._add(VoltageSourceElement(name, np_, nm, self._constant(card.value, scope, line)),
                              line, np_, nm)
                elif isinstance(card, (VCVS, VCCS)):
                    expr = transform(card.expr, scope, node, element)
                    np_, nm = node(card.n_plus), node(card.n_minus)
                    kind = VcvsElement if isinstance(card, VCVS) else VccsElement
                    self._add(kind(name, np_, nm, expr), line, np_, nm)
                elif isinstance(card, OpAmp):
                    params = {key: self._constant(expr, scope, line) for key, expr in card.params}
                    model = OpAmpModel.from_netlist_params(params)
                    out, inp, inm = node(card.out), node(card.in_plus), node(card.in_minus)
                    self._add(OpAmpElement(name, out, inp, inm, model), line, out, inp, inm)
                elif isinstance(card, Memristor):
                    params = {key: self._constant(expr, scope, line) for key, expr in card.params}
                    for key, value in self.overrides.items():
                        if key.startswith(name + '.') and '.' not in key[len(name) + 1:]:
                            params[key[len(name) + 1:]] = value
                    mem_params = MemristorParams.from_netlist_params(params)
                    plus, minus = node(card.plus), node(card.minus)
                    self._add(MemristorElement(name, plus, minus, mem_params), line, plus, minus)
                    self.memristors.append(MemristorProbe(name, mem_params, plus, minus, 'x', name, name))
                elif isinstance(card, SubcktInstance):
                    self._instantiate(card, name, node, scope, stack)
            except EvaluationError as e:
                raise FlattenError(str(e), line)
            except DeviceError as e:
                raise FlattenError(f"{name}: {e}", line)

    def _instantiate(self, card: SubcktInstance, name: str, node, scope: Dict[str, float],
                     stack: Tuple[str, ...]):
        sub = self.document.subckt_defs.get(card.subckt)
        if sub is None:
            raise FlattenError(f"undefined subcircuit '{card.subckt}'", card.line)
        if len(card.nodes) != len(sub.ports):
            raise FlattenError(
                f"'{name}' connects {len(card.nodes)} nodes but '{sub.name}' has {len(sub.ports)} ports",
                card.line,
            )
        if sub.name in stack:
            chain = ' -> '.join(stack + (sub.name,))
            raise FlattenError(f"recursive subcircuit instantiation: {chain}", card.line)

        sub_scope = dict(scope)
        for key, expr in sub.params:
            sub_scope[key] = self._constant(expr, sub_scope, sub.line)
        for key, expr in card.overrides:
            if key not in sub.param_dict:
                logger.warning(f"{name}: '{key}' is not a parameter of subcircuit '{sub.name}'")
            sub_scope[key] = self._constant(expr, scope, card.line)
        for key, value in self.overrides.items():
            if key.startswith(name + '.') and '.' not in key[len(name) + 1:]:
                sub_scope[key[len(name) + 1:]] = value

        port_map = {port: node(outer) for port, outer in zip(sub.ports, card.nodes)}
        self._register(*port_map.values())
        self._expand(sub.cards, name + '.', port_map, sub_scope, stack + (sub.name,))
        self._record_memristor(sub, name, port_map, sub_scope, card.line)

    def _record_memristor(self, sub: SubcktDef, name: str, port_map: Dict[str, str],
                          scope: Dict[str, float], line: int):
        """Subcircuits with ron/roff parameters and an interior node x are memristors"""
        params = sub.param_dict
        state_node = f"{name}.x"
        if 'ron' not in params or 'roff' not in params or state_node not in self.node_set:
            return
        if len(sub.ports) < 2:
            return
        try:
            mem_params = MemristorParams.from_netlist_params(scope)
        except DeviceError as e:
            raise FlattenError(f"{name}: {e}", line)
        current_ref = None
        for card in sub.cards:
            if isinstance(card, (VSourceDC, VCVS)) and card.n_plus == sub.ports[0]:
                current_ref = f"{name}.{card.name}"
                break
        self.memristors.append(MemristorProbe(
            name, mem_params, port_map[sub.ports[0]], port_map[sub.ports[1]], 'v', state_node, current_ref,
        ))

    def _validate_references(self):
        current_capable = BRANCH_ELEMENTS + (ResistorElement, MemristorElement)
        by_name = {el.name: el for el in self.elements}
        for el in self.elements:
            if not isinstance(el, (VcvsElement, VccsElement)):
                continue
            line = self.element_lines[el.name]
            for ref in references(el.expr):
                if isinstance(ref, NodeVoltage) and ref.node not in self.node_set:
                    raise FlattenError(f"{el.name}: unresolved node reference V({ref.node})", line)
                if isinstance(ref, BranchCurrent):
                    target = by_name.get(ref.element)
                    if target is None:
                        raise FlattenError(f"{el.name}: unresolved current reference I({ref.element})", line)
                    if not isinstance(target, current_capable):
                        raise FlattenError(f"{el.name}: I({ref.element}) is not a supported current", line)

    def _check_connectivity(self):
        parent = {node: node for node in self.nodes}

        def find(node):
            while parent[node] != node:
                parent[node] = parent[parent[node]]
                node = parent[node]
            return node

        def union(a, b):
            parent[find(a)] = find(b)

        for el in self.elements:
            if isinstance(el, OpAmpElement):
                union(el.out, GROUND)
                continue
            terminals = _terminals(el)
            for other in terminals[1:]:
                union(terminals[0], other)
        root = find(GROUND)
        for node in self.nodes:
            if find(node) != root:
                message = f"node '{node}' has no path to ground"
                logger.warning(message)
                self.warnings.append(message)


def _terminals(element: Element) -> Tuple[str, ...]:
    if isinstance(element, (ResistorElement, CapacitorElement)):
        return element.n1, element.n2
    if isinstance(element, (VoltageSourceElement, VcvsElement, VccsElement)):
        return element.n_plus, element.n_minus
    if isinstance(element, OpAmpElement):
        return element.out, element.in_plus, element.in_minus
    if isinstance(element, MemristorElement):
        return element.plus, element.minus
    raise TypeError(f"not an element: {element!r}")


def flatten(document: NetlistDocument, param_overrides: Optional[Mapping[str, Union[float, str]]] = None
            ) -> Circuit:
    """
    Expand subcircuits into a flat Circuit

    Interior names are qualified as '<instance>.<name>'. Override keys are either
    global parameter names or '<instance>.<param>'.
    """
    circuit = _Flattener(document, param_overrides or {}).run()
    logger.debug(f"Flattened circuit: {len(circuit.nodes)} nodes, {len(circuit.elements)} elements")
    return circuit
