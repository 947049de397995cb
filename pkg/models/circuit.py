"""
Flattened circuit: indexed node set plus resolved device instances
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from models.devices import MemristorParams, OpAmpModel
from models.netlist import Expression

GROUND = '0'


@dataclass(frozen=True)
class ResistorElement:
    name: str
    n1: str
    n2: str
    resistance: float


@dataclass(frozen=True)
class CapacitorElement:
    name: str
    n1: str
    n2: str
    capacitance: float
    ic: Optional[float] = None


@dataclass(frozen=True)
class VoltageSourceElement:
    name: str
    n_plus: str
    n_minus: str
    voltage: float


@dataclass(frozen=True)
class VcvsElement:
    name: str
    n_plus: str
    n_minus: str
    expr: Expression


@dataclass(frozen=True)
class VccsElement:
    name: str
    n_plus: str
    n_minus: str
    expr: Expression


@dataclass(frozen=True)
class OpAmpElement:
    name: str
    out: str
    in_plus: str
    in_minus: str
    model: OpAmpModel


@dataclass(frozen=True)
class MemristorElement:
    name: str
    plus: str
    minus: str
    params: MemristorParams


Element = Union[ResistorElement, CapacitorElement, VoltageSourceElement, VcvsElement,
                VccsElement, OpAmpElement, MemristorElement]

# Elements that own a branch-current unknown
BRANCH_ELEMENTS = (CapacitorElement, VoltageSourceElement, VcvsElement, OpAmpElement)


@dataclass(frozen=True)
class MemristorProbe:
    """
    Where a memristor's state and current live in the solved circuit

    state_kind is 'x' for the native device (state unknown of `name`) or 'v' for
    a subcircuit realization (state is the voltage of `state_ref`).
    """
    name: str
    params: MemristorParams
    plus: str
    minus: str
    state_kind: str
    state_ref: str
    current_ref: Optional[str] = None


@dataclass(frozen=True)
class Circuit:
    nodes: Tuple[str, ...]
    elements: Tuple[Element, ...]
    memristors: Tuple[MemristorProbe, ...] = ()
    initial_conditions: Tuple[Tuple[str, float], ...] = ()
    tran: Optional[Tuple[float, float]] = None
    warnings: Tuple[str, ...] = ()
    _element_index: Dict[str, Element] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, '_element_index', {el.name: el for el in self.elements})

    def element(self, name: str) -> Element:
        return self._element_index[name]

    def has_element(self, name: str) -> bool:
        return name in self._element_index

    def memristor(self, name: str) -> Optional[MemristorProbe]:
        for probe in self.memristors:
            if probe.name == name:
                return probe
        return None

    @property
    def element_names(self) -> List[str]:
        return [el.name for el in self.elements]

    def elements_of(self, kind) -> List[Element]:
        return [el for el in self.elements if isinstance(el, kind)]
