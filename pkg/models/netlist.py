"""
Netlist document model: expression tree, element cards and directives
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union


# Expression tree

@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class ParamRef:
    name: str


@dataclass(frozen=True)
class NodeVoltage:
    node: str


@dataclass(frozen=True)
class BranchCurrent:
    element: str


@dataclass(frozen=True)
class UnaryOp:
    op: str
    operand: 'Expression'


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: 'Expression'
    right: 'Expression'


@dataclass(frozen=True)
class Call:
    func: str
    args: Tuple['Expression', ...]


Expression = Union[Number, ParamRef, NodeVoltage, BranchCurrent, UnaryOp, BinaryOp, Call]


# Element cards; `line` is excluded from equality so re-parsed documents compare equal

@dataclass(frozen=True)
class Resistor:
    name: str
    n1: str
    n2: str
    value: Expression
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Capacitor:
    name: str
    n1: str
    n2: str
    value: Expression
    ic: Optional[Expression] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class VSourceDC:
    name: str
    n_plus: str
    n_minus: str
    value: Expression
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class VCVS:
    name: str
    n_plus: str
    n_minus: str
    expr: Expression
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class VCCS:
    name: str
    n_plus: str
    n_minus: str
    expr: Expression
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class OpAmp:
    name: str
    out: str
    in_plus: str
    in_minus: str
    params: Tuple[Tuple[str, Expression], ...] = ()
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Memristor:
    """Built-in HP memristor (X card on the reserved 'hpmem' name)"""
    name: str
    plus: str
    minus: str
    params: Tuple[Tuple[str, Expression], ...] = ()
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SubcktInstance:
    name: str
    nodes: Tuple[str, ...]
    subckt: str
    overrides: Tuple[Tuple[str, Expression], ...] = ()
    line: int = field(default=0, compare=False)


Card = Union[Resistor, Capacitor, VSourceDC, VCVS, VCCS, OpAmp, Memristor, SubcktInstance]


@dataclass(frozen=True)
class SubcktDef:
    name: str
    ports: Tuple[str, ...]
    params: Tuple[Tuple[str, Expression], ...]
    cards: Tuple[Card, ...]
    line: int = field(default=0, compare=False)

    @property
    def param_dict(self) -> Dict[str, Expression]:
        return dict(self.params)


@dataclass(frozen=True)
class AnalysisDirective:
    """.tran (values: tstep, tstop) or .ic (values: node -> volts)"""
    kind: str
    values: Tuple[Tuple[str, float], ...]
    line: int = field(default=0, compare=False)

    @property
    def value_dict(self) -> Dict[str, float]:
        return dict(self.values)


@dataclass
class NetlistDocument:
    title: str = ''
    statements: List[Card] = field(default_factory=list)
    subckt_defs: Dict[str, SubcktDef] = field(default_factory=dict)
    analyses: List[AnalysisDirective] = field(default_factory=list)
    params: Dict[str, Expression] = field(default_factory=dict)

    def analysis(self, kind: str) -> Optional[AnalysisDirective]:
        for directive in self.analyses:
            if directive.kind == kind:
                return directive
        return None

    @property
    def is_empty(self) -> bool:
        return not self.statements and not self.subckt_defs
