"""Query compilation: multilinear lowering, networks, hard-pulse echoes."""

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nmrfetch import (
    CompileError,
    Delay,
    QueryPattern,
    SelectivePulse,
    VirtualZ,
    ZZEvolution,
    build_query_network,
    compile_multilinear_z_phase,
    controlled_phase_direct,
    crotonic_default,
    distance_up_to_global_phase,
    expand_to_hard_pulses,
    format_sequence,
    sequence_report,
    sequence_unitary,
)
from nmrfetch.cli import direct_oracle_unitary
from nmrfetch.compiler import GateSequence

from conftest import make_system, random_full_system


# ---------------------------------------------------------------------------
# multilinear compilation vs direct construction
# ---------------------------------------------------------------------------


def test_zero_controls_single_virtual_z():
    seq = compile_multilinear_z_phase(2, target=1, controls=[], angle=0.9)
    assert len(seq.gates) == 1
    gate = seq.gates[0]
    assert isinstance(gate, VirtualZ) and gate.qubit == 1 and gate.angle == 0.9


def test_one_control_matches_direct():
    seq = compile_multilinear_z_phase(2, target=0, controls=[(1, 1)], angle=math.pi)
    direct = controlled_phase_direct(2, 0, [(1, 1)], math.pi)
    assert distance_up_to_global_phase(sequence_unitary(seq), direct) < 1e-10


def test_three_control_gate_counts():
    # subset expansion: empty set -> 1 virtual z; 3 singletons -> ZZ;
    # 3 pairs -> 6 pulses + 3 ZZ each; 1 triple -> 12 pulses + 5 ZZ
    seq = compile_multilinear_z_phase(4, 0, [(1, 1), (2, 0), (3, 0)], math.pi)
    rep = sequence_report(seq)
    assert rep.n_pulses == 30
    assert rep.n_zz == 17
    assert rep.n_virtual_z == 1


def test_three_control_embedded_in_seven_qubits():
    controls = [(1, 1), (2, 0), (3, 0)]
    seq = compile_multilinear_z_phase(7, 0, controls, math.pi)
    direct = controlled_phase_direct(7, 0, controls, math.pi)
    assert distance_up_to_global_phase(sequence_unitary(seq), direct) < 1e-9


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_compile_matches_direct_random(data):
    k = data.draw(st.integers(1, 4))
    n = k + 1
    controls = [(q, data.draw(st.integers(0, 1))) for q in range(1, k + 1)]
    signs = [data.draw(st.sampled_from([1, -1])) for _ in range(k)]
    angle = data.draw(st.floats(min_value=-2 * math.pi, max_value=2 * math.pi))
    seq = compile_multilinear_z_phase(n, 0, controls, angle, signs=signs)
    direct = controlled_phase_direct(n, 0, controls, angle, signs=signs)
    assert distance_up_to_global_phase(sequence_unitary(seq), direct) < 1e-9


def test_term_order_does_not_matter():
    # the expansion terms all commute, so any emission order compiles the
    # same unitary
    controls = [(1, 1), (2, 1), (3, 0)]
    base = compile_multilinear_z_phase(4, 0, controls, 1.1)
    n_terms = 2 ** len(controls)
    rng = random.Random(7)
    for _ in range(4):
        order = list(range(n_terms))
        rng.shuffle(order)
        shuffled = compile_multilinear_z_phase(4, 0, controls, 1.1, term_order=order)
        assert (
            distance_up_to_global_phase(sequence_unitary(base), sequence_unitary(shuffled))
            < 1e-10
        )


def test_compile_rejects_target_in_controls():
    with pytest.raises(CompileError):
        compile_multilinear_z_phase(3, 0, [(0, 1)], 1.0)


# ---------------------------------------------------------------------------
# query networks
# ---------------------------------------------------------------------------


def flip_semantics(system, pattern):
    """Population truth table of the compiled network on basis states."""
    u = sequence_unitary(build_query_network(system, pattern), system)
    probs = np.abs(u) ** 2
    n = system.n_database
    half = 2**n
    moved = []
    for item in range(half):
        out = int(np.argmax(probs[:, item]))
        moved.append(out)
    return moved


def test_network_flips_only_matching_items(three_spin):
    pat = QueryPattern.from_string("1x")
    moved = flip_semantics(three_spin, pat)
    # items 2,3 match -> ancilla flips (index + half); others stay
    assert moved == [0, 1, 6, 7]


def test_network_flips_only_matching_items_explicit(three_spin):
    pat = QueryPattern.from_string("1x")
    u = sequence_unitary(build_query_network(three_spin, pat), three_spin)
    probs = np.abs(u) ** 2
    for item in range(4):
        col_in = item  # ancilla |0>
        expect = item + 4 if pat.matches(item) else item
        assert probs[expect, col_in] == pytest.approx(1.0, abs=1e-12)


def test_network_matches_first_principles_oracle():
    sys = crotonic_default()
    for pattern in ("100xxx", "xxx1xx", "010101", "xxxxxx", "1xxxx0"):
        pat = QueryPattern.from_string(pattern)
        u = sequence_unitary(build_query_network(sys, pat), sys)
        ref = direct_oracle_unitary(sys, pat)
        assert distance_up_to_global_phase(u, ref) < 1e-9


def test_single_constraint_two_qubit_flip():
    sys = make_system([10.0])
    u = sequence_unitary(build_query_network(sys, QueryPattern.from_string("1")), sys)
    probs = np.abs(u) ** 2
    assert probs[3, 1] == pytest.approx(1.0, abs=1e-12)  # |0,1> -> |1,1>
    assert probs[0, 0] == pytest.approx(1.0, abs=1e-12)  # |0,0> untouched


def test_all_wild_flips_every_item(three_spin):
    u = sequence_unitary(build_query_network(three_spin, QueryPattern.from_string("xx")), three_spin)
    probs = np.abs(u) ** 2
    for item in range(4):
        assert probs[item + 4, item] == pytest.approx(1.0, abs=1e-12)


def test_negative_sign_qubits_translate_polarity():
    # constraining a negatively-coupled qubit must still mark the right items
    sys = crotonic_default()
    pat = QueryPattern.from_string("xxx1xx")
    u = sequence_unitary(build_query_network(sys, pat), sys)
    probs = np.abs(u) ** 2
    for item in range(64):
        expect = item + 64 if pat.matches(item) else item
        assert probs[expect, item] == pytest.approx(1.0, abs=1e-12)


def test_network_pattern_length_mismatch():
    with pytest.raises(CompileError):
        build_query_network(crotonic_default(), QueryPattern.from_string("10x"))


# ---------------------------------------------------------------------------
# gate sequence invariants
# ---------------------------------------------------------------------------


def test_mode_gate_mixing_rejected():
    with pytest.raises(CompileError):
        GateSequence(2, (Delay(0.1),), mode="ideal")
    with pytest.raises(CompileError):
        GateSequence(2, (ZZEvolution(0, 1, 0.5),), mode="hard_pulse")


def test_pulse_angles_canonicalized_nonnegative():
    seq = compile_multilinear_z_phase(3, 0, [(1, 1), (2, 0)], 0.8)
    for g in seq.gates:
        if isinstance(g, SelectivePulse):
            assert g.angle >= 0
            assert g.axis in ("x", "y", "-x", "-y")


def test_empty_sequence_report():
    rep = sequence_report(GateSequence(2, ()))
    assert rep.n_pulses == 0 and rep.n_zz == 0 and rep.n_delays == 0
    assert rep.total_duration_s == 0.0


# ---------------------------------------------------------------------------
# hard-pulse expansion
# ---------------------------------------------------------------------------


def test_bare_coupling_needs_no_refocusing():
    # lone spin pair: the gate is pure free evolution, split symmetrically
    sys = make_system([156.0])
    seq = GateSequence(2, (ZZEvolution(0, 1, math.pi / 2),))
    hard = expand_to_hard_pulses(seq, sys)
    delays = [g for g in hard.gates if isinstance(g, Delay)]
    pulses = [g for g in hard.gates if isinstance(g, SelectivePulse)]
    assert pulses == []
    assert len(delays) == 2
    assert sum(d.seconds for d in delays) == pytest.approx(1.0 / 312.0)


def test_spectator_couplings_get_refocused():
    # embed the same gate among spectators with couplings: echo pulses appear
    j = np.array(
        [
            [0.0, 50.0, 9.0, 4.0],
            [50.0, 0.0, 6.0, 3.0],
            [9.0, 6.0, 0.0, 2.0],
            [4.0, 3.0, 2.0, 0.0],
        ]
    )
    sys = make_system([50.0, 9.0, 4.0], full_j=j)
    seq = GateSequence(4, (ZZEvolution(0, 1, math.pi / 2),))
    hard = expand_to_hard_pulses(seq, sys)
    pulses = [g for g in hard.gates if isinstance(g, SelectivePulse)]
    assert pulses, "spectators must be actively refocused"
    ideal = sequence_unitary(seq, sys)
    got = sequence_unitary(hard, sys)
    assert distance_up_to_global_phase(got, ideal) < 1e-9


def test_negative_angle_embeds_correctly():
    j = np.array(
        [
            [0.0, 30.0, 7.0],
            [30.0, 0.0, 5.0],
            [7.0, 5.0, 0.0],
        ]
    )
    sys = make_system([30.0, 7.0], full_j=j)
    seq = GateSequence(3, (ZZEvolution(0, 1, -math.pi / 2),))
    hard = expand_to_hard_pulses(seq, sys)
    assert distance_up_to_global_phase(
        sequence_unitary(hard, sys), sequence_unitary(seq, sys)
    ) < 1e-9
    for d in (g for g in hard.gates if isinstance(g, Delay)):
        assert d.seconds >= 0


def test_chemical_shifts_are_compensated():
    # offsets on every spin, including ones with no couplings in the gate
    j = np.array(
        [
            [0.0, 20.0, 0.0],
            [20.0, 0.0, 0.0],
            [0.0, 0.0, 0.0],
        ]
    )
    sys = make_system([20.0, 0.0], offsets=[11.0, -17.0, 23.0], full_j=j)
    seq = GateSequence(3, (ZZEvolution(0, 1, 1.3),))
    hard = expand_to_hard_pulses(seq, sys)
    assert distance_up_to_global_phase(
        sequence_unitary(hard, sys), sequence_unitary(seq, sys)
    ) < 1e-9


def test_zero_coupling_pair_rejected():
    sys = make_system([10.0, 0.0])
    seq = GateSequence(3, (ZZEvolution(1, 2, 0.5),))
    with pytest.raises(CompileError):
        expand_to_hard_pulses(seq, sys)


def test_sequence_without_couplings_passes_through():
    sys = make_system([10.0])
    seq = GateSequence(
        2, (SelectivePulse(0, "y", math.pi / 2), VirtualZ(1, 0.3), VirtualZ(1, 0.4))
    )
    hard = expand_to_hard_pulses(seq, sys)
    assert hard.mode == "hard_pulse"
    assert not any(isinstance(g, Delay) for g in hard.gates)
    # adjacent virtual-z on one qubit folds into a single frame rotation
    vz = [g for g in hard.gates if isinstance(g, VirtualZ)]
    assert len(vz) == 1 and vz[0].angle == pytest.approx(0.7)


@settings(max_examples=20, deadline=None)
@given(data=st.data())
def test_random_sequences_expand_exactly(data):
    rng = random.Random(data.draw(st.integers(0, 10**6)))
    n_db = data.draw(st.integers(2, 3))
    sys = random_full_system(rng, n_db)
    gates = []
    for _ in range(data.draw(st.integers(1, 5))):
        kind = rng.choice(["pulse", "zz", "vz"])
        if kind == "pulse":
            gates.append(
                SelectivePulse(
                    rng.randrange(n_db + 1),
                    rng.choice(["x", "y", "-x", "-y"]),
                    rng.uniform(0, 2 * math.pi),
                )
            )
        elif kind == "zz":
            a = rng.randrange(n_db + 1)
            b = (a + 1 + rng.randrange(n_db)) % (n_db + 1)
            gates.append(ZZEvolution(a, b, rng.uniform(-math.pi, math.pi)))
        else:
            gates.append(VirtualZ(rng.randrange(n_db + 1), rng.uniform(-3, 3)))
    seq = GateSequence(n_db + 1, tuple(gates))
    hard = expand_to_hard_pulses(seq, sys)
    gap = distance_up_to_global_phase(
        sequence_unitary(hard, sys), sequence_unitary(seq, sys)
    )
    assert gap < 1e-6


def test_full_query_expansion_on_builtin():
    sys = crotonic_default()
    net = build_query_network(sys, QueryPattern.from_string("100xxx"))
    hard = expand_to_hard_pulses(net, sys)
    gap = distance_up_to_global_phase(
        sequence_unitary(hard, sys), sequence_unitary(net, sys)
    )
    assert gap < 1e-6
    rep = sequence_report(hard)
    # timed free evolution dominated by the weakest constrained coupling
    assert rep.total_duration_s > 0.05
    assert rep.n_delays > 0


def test_pulse_durations_add_to_total():
    seq = GateSequence(
        2,
        (SelectivePulse(0, "x", math.pi), Delay(0.01), SelectivePulse(1, "y", math.pi)),
        mode="hard_pulse",
        pulse_duration_s=0.001,
    )
    rep = sequence_report(seq)
    assert rep.total_duration_s == pytest.approx(0.012)


# ---------------------------------------------------------------------------
# listing format
# ---------------------------------------------------------------------------


def test_listing_line_grammar():
    sys = make_system([25.0])
    net = build_query_network(sys, QueryPattern.from_string("1"))
    text = format_sequence(net)
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    import re

    grammar = re.compile(
        r"^(PULSE q=\d+ axis=-?[xy] deg=-?[\d.]+"
        r"|ZZ q=\d+,\d+ rad=-?[\d.]+"
        r"|VZ q=\d+ rad=-?[\d.]+"
        r"|DELAY s=-?[\d.e-]+)$"
    )
    assert body
    for ln in body:
        assert grammar.match(ln), ln


def test_listing_has_report_block():
    sys = make_system([25.0])
    net = build_query_network(sys, QueryPattern.from_string("1"))
    text = format_sequence(net)
    assert "# ---- report ----" in text
    hard_text = format_sequence(expand_to_hard_pulses(net, sys))
    assert "DELAY s=" in hard_text
