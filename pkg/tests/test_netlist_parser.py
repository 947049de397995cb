"""
Tests for netlist parsing, pretty-printing and subcircuit flattening
"""

import pytest

from config.settings import FIXTURES_DIR, HP_MEMRISTOR_NETLIST
from models.circuit import CapacitorElement, MemristorElement, OpAmpElement, ResistorElement, VcvsElement
from models.netlist import Number, ParamRef, Resistor, SubcktInstance, OpAmp, Memristor, VCVS, VCCS
from services.exceptions import NetlistParseError, FlattenError
from services.netlist_parser import (
    fold_continuations, parse_netlist, read_netlist, format_netlist, flatten,
)

HP_NETLIST = HP_MEMRISTOR_NETLIST.read_text(encoding='utf-8')


def hp_netlist_with(*cards):
    return HP_NETLIST + '\n'.join(cards) + '\n'


def test_fold_continuations_joins_subcircuit_card():
    continued = (FIXTURES_DIR / 'hp_memristor_continued.sp').read_text(encoding='utf-8')
    lines = fold_continuations(continued)
    gx = [logical for logical in lines if logical.text.startswith('gx')]
    assert len(gx) == 1
    assert gx[0].text.startswith("gx 0 x cur='(i(emem)")
    assert gx[0].line == 4
    # the subckt header keeps its parameter continuation
    assert lines[0].text == '.subckt memristor plus minus ron=100 roff=16k rinit=1k d=10n uv=10f p=10'


def test_fold_continuations_edge_cases():
    assert [logical.text for logical in fold_continuations('r1 1 0 1k\nc1 1 0 1u\n')] == ['r1 1 0 1k', 'c1 1 0 1u']
    assert fold_continuations('* only\n* comments\n\n') == []
    assert fold_continuations('R1 1 0 1k $ load\n')[0].text == 'r1 1 0 1k'
    with pytest.raises(NetlistParseError) as excinfo:
        fold_continuations('+ r1 1 0 1k\n')
    assert excinfo.value.line == 1


def test_hp_subcircuit_structure():
    document = parse_netlist(HP_NETLIST)
    assert document.title == 'HP memristor model'
    assert list(document.subckt_defs) == ['memristor']
    sub = document.subckt_defs['memristor']
    assert sub.ports == ('plus', 'minus')
    assert [key for key, _ in sub.params] == ['ron', 'roff', 'rinit', 'd', 'uv', 'p']
    assert sub.param_dict['roff'] == Number(16000.0)
    assert sub.param_dict['uv'].value == pytest.approx(1e-14)
    assert [card.name for card in sub.cards] == ['gx', 'cx', 'raux', 'emem', 'roff']
    assert isinstance(sub.cards[0], VCCS)
    assert isinstance(sub.cards[3], VCVS)
    # card names and parameter names live in separate namespaces
    assert sub.cards[4] == Resistor('roff', 'aux', 'minus', ParamRef('roff'))
    assert document.statements == []


def test_continued_fixture_parses_identically():
    continued = (FIXTURES_DIR / 'hp_memristor_continued.sp').read_text(encoding='utf-8')
    assert parse_netlist(continued) == parse_netlist(HP_NETLIST)


def test_parse_small_documents():
    empty = parse_netlist('')
    assert empty.is_empty
    assert empty.subckt_defs == {}
    document = parse_netlist('R1 1 0 1K')
    assert document.statements == [Resistor('r1', '1', '0', Number(1000.0))]


def test_parse_builtin_cards_and_directives():
    document = parse_netlist(
        "* bench\n"
        ".param gain=1e5\n"
        "Xop out inp inm opamp gain='gain' vsat=5 fp=0\n"
        "Xm inp 0 hpmem rinit=2k\n"
        "E1 a 0 inp 0 2\n"
        ".options reltol=1e-3\n"
        ".tran 1u 2m\n"
        ".ic v(out)=5\n"
        ".end\n"
        "R1 this is ignored\n"
    )
    op, mem, vcvs = document.statements
    assert isinstance(op, OpAmp)
    assert (op.out, op.in_plus, op.in_minus) == ('out', 'inp', 'inm')
    assert isinstance(mem, Memristor)
    assert dict(mem.params)['rinit'] == Number(2000.0)
    assert format_netlist(parse_netlist('E1 a 0 inp 0 2')).count("vol='(2.0*(v(inp)-v(0)))'") == 1
    assert document.analysis('tran').value_dict == {'tstep': 1e-6, 'tstop': 2e-3}
    assert document.analysis('ic').value_dict == {'out': 5.0}
    assert document.params['gain'] == Number(1e5)


@pytest.mark.parametrize('text, message', [
    ('Q1 1 2 3 npn\n', 'unknown card type'),
    ('.subckt foo a b\nR1 a b 1k\n', 'missing .ends'),
    ('R1 1 0 1k\nR1 2 0 1k\n', 'duplicate element name'),
    ('R1 1 0 1k 2k\n', 'unexpected field'),
    ('R1 1 0 1x.5\n', 'malformed value'),
    ('.subckt opamp a b\n.ends\n', 'reserved'),
    ('X1 1 2 nothere\n', 'undefined subcircuit'),
    ('E1 1 0 VOL=\'V(1\'\n', 'expected'),
    ('V1 1 0 sin(0 1 1k)\n', 'only DC'),
])
def test_parse_errors(text, message):
    with pytest.raises(NetlistParseError) as excinfo:
        parse_netlist(text)
    assert message in str(excinfo.value)
    assert excinfo.value.line is not None


def test_port_arity_mismatch_is_reported():
    with pytest.raises(NetlistParseError) as excinfo:
        parse_netlist(hp_netlist_with('X1 1 memristor'))
    assert 'has 2 ports' in str(excinfo.value)
    assert excinfo.value.line == 10


def test_round_trip_through_pretty_printer():
    texts = [
        HP_NETLIST,
        hp_netlist_with('Xmem 1 2 memristor Rinit=2K', 'Vdd 1 0 DC 5', 'R2 2 0 2k', '.tran 1u 15m'),
        "* op-amp bench\n.param rl=2k\nXop o p n opamp gain=2e5 vsat=5\nR1 o n 1k\nR2 n 0 'rl'\n"
        "Xm o p hpmem rinit=1k wexp=1\nC1 p 0 1u ic=0.5\nG1 0 p CUR='1m*V(o,n)'\n.ic v(o)=-5\n",
    ]
    for text in texts:
        document = parse_netlist(text)
        assert parse_netlist(format_netlist(document)) == document


def test_read_netlist_inlines_includes():
    document = read_netlist(FIXTURES_DIR / 'constant_current_bench.sp')
    assert 'memristor' in document.subckt_defs
    assert [card.name for card in document.statements] == ['gdrive', 'xmem']
    assert isinstance(document.statements[1], SubcktInstance)


def test_flatten_hp_instance():
    circuit = flatten(parse_netlist(hp_netlist_with('Xmem 1 2 memristor Rinit=2K')))
    cx = circuit.element('xmem.cx')
    assert isinstance(cx, CapacitorElement)
    assert cx.ic == pytest.approx(14000 / 15900)
    assert cx.ic == pytest.approx(0.8805, abs=1e-4)
    assert circuit.element('xmem.roff').resistance == 16000
    assert circuit.element('xmem.raux').resistance == 1e12
    assert isinstance(circuit.element('xmem.emem'), VcvsElement)
    assert set(circuit.nodes) == {'0', '1', '2', 'xmem.x', 'xmem.aux'}

    probe = circuit.memristor('xmem')
    assert probe.state_kind == 'v'
    assert probe.state_ref == 'xmem.x'
    assert probe.current_ref == 'xmem.emem'
    assert probe.params.r_init == 2000
    assert (probe.plus, probe.minus) == ('1', '2')


def test_flatten_without_instances_is_identity():
    circuit = flatten(parse_netlist('V1 1 0 5\nR1 1 2 1k\nR2 2 0 1k\n'))
    assert circuit.nodes == ('0', '1', '2')
    assert circuit.element_names == ['v1', 'r1', 'r2']
    assert circuit.memristors == ()
    assert circuit.warnings == ()


def test_two_instances_have_disjoint_interiors():
    circuit = flatten(parse_netlist(hp_netlist_with('X1 a 0 memristor', 'X2 b 0 memristor Rinit=4k')))
    first = {node for node in circuit.nodes if node.startswith('x1.')}
    second = {node for node in circuit.nodes if node.startswith('x2.')}
    assert first == {'x1.x', 'x1.aux'}
    assert second == {'x2.x', 'x2.aux'}
    assert first.isdisjoint(second)
    # I(Emem) inside each instance resolves to its own source
    gx1 = circuit.element('x1.gx').expr
    assert 'x1.emem' in repr(gx1)
    assert 'x2.emem' not in repr(gx1)


def test_flatten_overrides():
    document = parse_netlist(hp_netlist_with('.param load=1k', 'Xmem 1 0 memristor', 'R1 1 0 \'load\''))
    circuit = flatten(document, {'load': '2k', 'xmem.rinit': 4000})
    assert circuit.element('r1').resistance == 2000
    assert circuit.element('xmem.cx').ic == pytest.approx(12000 / 15900)


def test_flatten_native_devices():
    circuit = flatten(parse_netlist(
        'Xop out p n opamp gain=1e5 vsat=3 fp=0\nXm p 0 hpmem rinit=2k wexp=1\nR1 out n 1k\nR2 n 0 1k\nR3 out p 1k\n'
    ))
    op = circuit.element('xop')
    assert isinstance(op, OpAmpElement)
    assert op.model.v_sat == 3
    assert op.model.pole_freq is None
    mem = circuit.element('xm')
    assert isinstance(mem, MemristorElement)
    assert mem.params.r_init == 2000
    assert mem.params.window_exponent == 10
    assert circuit.memristor('xm').state_kind == 'x'


def test_flatten_errors():
    recursive = ".subckt a p q\nX1 p q b\n.ends\n.subckt b p q\nX1 p q a\n.ends\nX0 1 0 a\n"
    with pytest.raises(FlattenError, match='recursive'):
        flatten(parse_netlist(recursive))
    with pytest.raises(FlattenError, match='unresolved parameter'):
        flatten(parse_netlist("R1 1 0 'foo'\n"))
    with pytest.raises(FlattenError, match='V\\(zz\\)'):
        flatten(parse_netlist("V1 1 0 1\nE1 2 0 VOL='V(zz)'\nR1 2 0 1k\n"))
    with pytest.raises(FlattenError, match='I\\(r9\\)'):
        flatten(parse_netlist("V1 1 0 1\nE1 2 0 VOL='I(r9)'\nR1 2 0 1k\n"))
    with pytest.raises(FlattenError, match='zero resistance'):
        flatten(parse_netlist('V1 1 0 1\nR1 1 0 0\n'))
    with pytest.raises(FlattenError):
        flatten(parse_netlist('Xm 1 0 hpmem rinit=50\nV1 1 0 1\n'))


def test_unreachable_nodes_warn():
    circuit = flatten(parse_netlist('V1 1 0 1\nR1 1 0 1k\nR2 5 6 1k\n'))
    assert any("'5'" in warning for warning in circuit.warnings)
    assert any("'6'" in warning for warning in circuit.warnings)
    assert isinstance(circuit.element('r2'), ResistorElement)
