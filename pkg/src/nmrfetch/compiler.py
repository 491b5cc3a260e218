"""Pulse-level compiler for multi-controlled z phases and query networks.

The query that inverts the readout spin on matching database items is a
z phase on the ancilla conditioned on up to n database qubits, sandwiched
between basis-toggling pulse pairs.  The conditioned phase

    exp(-i * theta * I_z^t * prod_c (1 + eps_c 2 I_z^c) / 2)

is compiled by expanding the product: each subset S of controls yields one
commuting diagonal factor exp(-i lambda_S 2^|S| I_z..I_z) over |S|+1 spins.
Factors on 0 or 1 control map directly to a software z rotation or a ZZ
coupling period; higher factors are lowered one spin at a time with the
conjugation identity

    exp(-i lam 2^k I_{c1 z}..I_{ck z} I_{t z})
        = V exp(-i lam 2^{k-1} I_{c1 z}..I_{c(k-1) z} I_{t z}) V^dagger,
    V = exp(-i pi/2 I_x^t) exp(-i pi I_z^ck I_z^t)
        exp(+i pi/2 I_x^t) exp(-i pi/2 I_y^t)

whose middle factor is half a ZZ turn, so each lowering step costs two
ZZ periods and eight selective pulses.  The ideal gate list can further be
expanded into a hard-pulse schedule (delays under the always-on coupling
Hamiltonian plus refocusing pi pulses) in which every unwanted coupling
and chemical shift integrates to zero over the block.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .operators import (
    MAX_DENSE_QUBITS,
    rotation_block,
    z_eigenvalues,
    zz_hamiltonian_diagonal,
)
from .spin_system import QueryPattern, SpinSystem

__all__ = [
    "SelectivePulse",
    "ZZEvolution",
    "VirtualZ",
    "Delay",
    "Gate",
    "GateSequence",
    "SequenceReport",
    "CompileError",
    "compile_multilinear_z_phase",
    "build_query_network",
    "expand_to_hard_pulses",
    "sequence_unitary",
    "sequence_report",
    "format_sequence",
    "free_hamiltonian_diagonal",
]

_FLIP_AXIS = {"x": "-x", "-x": "x", "y": "-y", "-y": "y"}


class CompileError(ValueError):
    """Raised when a gate sequence cannot be produced for a register."""


@dataclass(frozen=True)
class SelectivePulse:
    """Ideal instantaneous rotation exp(-i angle I_axis) on one spin."""

    qubit: int
    axis: str  # x, y, -x or -y
    angle: float  # radians, canonically >= 0 (sign lives in the axis)


@dataclass(frozen=True)
class ZZEvolution:
    """Coupling phase exp(-i angle 2 I_z I_z) between two spins."""

    q1: int
    q2: int
    angle: float


@dataclass(frozen=True)
class VirtualZ:
    """Software frame rotation exp(-i angle I_z); takes no real time."""

    qubit: int
    angle: float


@dataclass(frozen=True)
class Delay:
    """Free evolution under the register's coupling Hamiltonian."""

    seconds: float


Gate = SelectivePulse | ZZEvolution | VirtualZ | Delay


@dataclass(frozen=True)
class GateSequence:
    """Time-ordered gate list (first gate acts first) on a register.

    ``mode`` is "ideal" (rotations, ZZ periods and virtual z only) or
    "hard_pulse" (rotations, delays and virtual z only).  ``pulse_duration_s``
    is only used for duration accounting; pulses are simulated as
    instantaneous either way.
    """

    n_qubits: int
    gates: tuple[Gate, ...]
    mode: str = "ideal"
    pulse_duration_s: float = 0.0

    def __post_init__(self):
        if self.mode not in ("ideal", "hard_pulse"):
            raise CompileError(f"unknown sequence mode {self.mode!r}")
        if self.n_qubits < 1:
            raise CompileError("sequence needs at least one qubit")
        for gate in self.gates:
            if isinstance(gate, ZZEvolution):
                if self.mode != "ideal":
                    raise CompileError("ZZ periods only appear in ideal sequences")
                if gate.q1 == gate.q2:
                    raise CompileError("ZZ period needs two distinct qubits")
                self._check_qubit(gate.q1)
                self._check_qubit(gate.q2)
            elif isinstance(gate, Delay):
                if self.mode != "hard_pulse":
                    raise CompileError("delays only appear in hard-pulse sequences")
                if gate.seconds < 0:
                    raise CompileError("delay cannot be negative")
            elif isinstance(gate, SelectivePulse):
                if gate.axis not in _FLIP_AXIS:
                    raise CompileError(f"bad pulse axis {gate.axis!r}")
                self._check_qubit(gate.qubit)
            elif isinstance(gate, VirtualZ):
                self._check_qubit(gate.qubit)
            else:
                raise CompileError(f"unknown gate {gate!r}")

    def _check_qubit(self, q: int) -> None:
        if not 0 <= q < self.n_qubits:
            raise CompileError(
                f"gate qubit {q} out of range for {self.n_qubits}-qubit register"
            )

    def __len__(self) -> int:
        return len(self.gates)


def _pulse(qubit: int, axis: str, angle: float) -> SelectivePulse:
    if angle < 0:
        axis, angle = _FLIP_AXIS[axis], -angle
    return SelectivePulse(qubit, axis, angle)


def _lower_chain(chain: list[int], angle: float) -> list[Gate]:
    """Gates for exp(-i angle 2^k I_z..I_z) over chain (target last)."""
    if len(chain) == 2:
        return [ZZEvolution(chain[0], chain[1], angle)]
    ctrl, tgt = chain[-2], chain[-1]
    v = [
        _pulse(tgt, "y", np.pi / 2),
        _pulse(tgt, "-x", np.pi / 2),
        ZZEvolution(ctrl, tgt, np.pi / 2),
        _pulse(tgt, "x", np.pi / 2),
    ]
    v_dag = [
        _pulse(tgt, "-x", np.pi / 2),
        ZZEvolution(ctrl, tgt, -np.pi / 2),
        _pulse(tgt, "x", np.pi / 2),
        _pulse(tgt, "-y", np.pi / 2),
    ]
    inner = _lower_chain(chain[:-2] + [tgt], angle)
    return v_dag + inner + v


def compile_multilinear_z_phase(
    n_qubits: int,
    target: int,
    controls: list[tuple[int, int]],
    angle: float,
    signs: list[int] | None = None,
    term_order: list[int] | None = None,
) -> GateSequence:
    """Compile the conditioned z phase into pulses, ZZ periods and frame z.

    ``controls`` holds (qubit, polarity) pairs and ``signs`` the per-control
    sign convention (see controlled_phase_direct); only the products
    eps_c = s_c * (-1)^{p_c} enter the expansion.  ``term_order`` permutes
    the emitted subset blocks (they commute; exposed for testing).
    """
    if signs is None:
        signs = [1] * len(controls)
    if len(signs) != len(controls):
        raise CompileError("need one sign per control")
    seen = {target}
    eps: dict[int, float] = {}
    for (qubit, polarity), sign in zip(controls, signs):
        if qubit in seen:
            raise CompileError(f"qubit {qubit} used twice")
        seen.add(qubit)
        if polarity not in (0, 1) or sign not in (-1, 1):
            raise CompileError("polarity must be 0/1 and sign +-1")
        eps[qubit] = sign * (-1.0) ** polarity
    ctrl_qubits = sorted(eps)
    k = len(ctrl_qubits)
    base = angle / 2.0**k

    subsets = sorted(range(2**k), key=lambda m: (bin(m).count("1"), m))
    if term_order is not None:
        if sorted(term_order) != list(range(2**k)):
            raise CompileError("term_order must permute the control subsets")
        subsets = [subsets[i] for i in term_order]

    gates: list[Gate] = []
    for mask in subsets:
        members = [q for b, q in enumerate(ctrl_qubits) if (mask >> b) & 1]
        lam = base * math.prod(eps[q] for q in members)
        if not members:
            gates.append(VirtualZ(target, lam))
        else:
            gates.extend(_lower_chain(members + [target], lam))
    return GateSequence(n_qubits=n_qubits, gates=tuple(gates), mode="ideal")


def build_query_network(system: SpinSystem, pattern: QueryPattern) -> GateSequence:
    """Ideal gate network that inverts the ancilla on matching items.

    Layout: basis-toggling pulse pair on the ancilla, conditioned pi phase
    on the constrained qubits, closing pulse pair.  Conjugating a diagonal
    ensemble state by the result swaps the two ancilla populations exactly
    on the database items that match the pattern and leaves every other
    population untouched.

    Negative-sign qubits store logical 0 in the flipped spin state, so each
    stated polarity is translated to the spin frame before being handed to
    the phase compiler together with the register's bit_signs; the engine's
    logical basis therefore sees the match condition exactly as written.
    """
    if len(pattern) != system.n_database:
        raise CompileError(
            f"pattern length {len(pattern)} != database size {system.n_database}"
        )
    controls = []
    signs = []
    for qubit, bit in pattern.constrained_qubits():
        sign = system.sign_of(qubit)
        controls.append((qubit, bit ^ (sign < 0)))
        signs.append(sign)
    core = compile_multilinear_z_phase(
        system.n_spins, system.ancilla, controls, np.pi, signs
    )
    toggle = (
        _pulse(system.ancilla, "y", np.pi / 2),
        _pulse(system.ancilla, "x", np.pi),
    )
    return GateSequence(
        n_qubits=system.n_spins,
        gates=toggle + core.gates + toggle,
        mode="ideal",
    )


# ---------------------------------------------------------------------------
# hard-pulse expansion
# ---------------------------------------------------------------------------


def free_hamiltonian_diagonal(system: SpinSystem) -> np.ndarray:
    """Always-on Hamiltonian diagonal (rad/s) in the logical frame."""
    m = system.n_spins
    j = np.zeros((m, m))
    for a in range(m):
        for b in range(a + 1, m):
            j[a, b] = j[b, a] = system.logical_coupling(a, b)
    return zz_hamiltonian_diagonal(system.offsets_hz(), j)


def _walsh_pattern(sequency: int, n_segments: int) -> np.ndarray:
    """+-1 sign pattern with the given number of sign changes.

    Sequency-ordered Walsh function on 2**k equal segments, realized as the
    Paley function of the bit-reversed Gray code.  Distinct sequencies are
    orthogonal and every sequency >= 1 integrates to zero.
    """
    bits = n_segments.bit_length() - 1
    paley = sequency ^ (sequency >> 1)
    paley = int(bin(paley)[2:].zfill(bits)[::-1], 2)  # bit reversal
    segs = np.arange(n_segments)
    parity = np.zeros(n_segments, dtype=int)
    for b in range(bits):
        if (paley >> b) & 1:
            parity ^= (segs >> b) & 1
    return 1 - 2 * parity


def _echo_block(gate: ZZEvolution, system: SpinSystem) -> list[Gate]:
    """Delays plus refocusing pi pulses realizing one ZZ period.

    The wanted coupling accrues for the whole block; every spectator spin
    follows its own orthogonal sign pattern (toggled by pi-y pulses) so all
    spectator couplings and shifts integrate to zero, and the pair's own
    chemical-shift phases are cancelled by trailing frame rotations.  A
    target phase whose sign disagrees with the coupling is obtained by
    holding one partner inverted for the whole block.
    """
    q1, q2 = gate.q1, gate.q2
    coupling = system.logical_coupling(q1, q2)
    if coupling == 0.0:
        raise CompileError(
            f"qubits {q1} and {q2} are uncoupled; ZZ period not realizable"
        )
    # shortest representative of the angle modulo a full turn (2 pi is a
    # global phase for the 2 I_z I_z generator)
    theta = math.remainder(gate.angle, 2.0 * math.pi)
    if theta == 0.0:
        return []
    flip_q1 = (theta > 0) != (coupling > 0)
    tau = abs(theta) / (math.pi * abs(coupling))

    spectators = [
        s
        for s in range(system.n_spins)
        if s not in (q1, q2) and np.any(system.j_hz[s] != 0.0)
    ]
    n_segments = 2
    while n_segments < len(spectators) + 1:
        n_segments *= 2

    patterns: dict[int, np.ndarray] = {}
    for rank, spin in enumerate(spectators, start=1):
        patterns[spin] = _walsh_pattern(rank, n_segments)
    if flip_q1:
        patterns[q1] = -np.ones(n_segments, dtype=int)

    gates: list[Gate] = []
    for boundary in range(n_segments + 1):
        for spin in sorted(patterns):
            before = 1 if boundary == 0 else patterns[spin][boundary - 1]
            after = 1 if boundary == n_segments else patterns[spin][boundary]
            if before != after:
                gates.append(_pulse(spin, "y", np.pi))
        if boundary < n_segments:
            gates.append(Delay(tau / n_segments))

    # spins on a Walsh pattern see zero net shift; everyone else accrued a
    # frame phase over the block that a software z rotation undoes
    for spin in range(system.n_spins):
        if spin in spectators:
            continue
        offset = system.spins[spin].offset_hz
        if offset == 0.0:
            continue
        w_integral = -tau if (spin == q1 and flip_q1) else tau
        gates.append(VirtualZ(spin, -2.0 * math.pi * offset * w_integral))
    return gates


def _fold_virtual_z(gates: list[Gate]) -> list[Gate]:
    folded: list[Gate] = []
    for gate in gates:
        if (
            isinstance(gate, VirtualZ)
            and folded
            and isinstance(folded[-1], VirtualZ)
            and folded[-1].qubit == gate.qubit
        ):
            merged = VirtualZ(gate.qubit, folded[-1].angle + gate.angle)
            folded[-1] = merged
            if merged.angle == 0.0:
                folded.pop()
        else:
            folded.append(gate)
    return folded


def expand_to_hard_pulses(seq: GateSequence, system: SpinSystem) -> GateSequence:
    """Replace every ZZ period by a refocused delay block.

    Selective pulses pass through unchanged and virtual z rotations stay
    virtual (adjacent ones on the same spin are folded together).  The
    result reproduces the ideal sequence's unitary up to a global phase.
    """
    if seq.mode != "ideal":
        raise CompileError("only ideal sequences can be expanded")
    if seq.n_qubits != system.n_spins:
        raise CompileError("sequence register size does not match the system")
    gates: list[Gate] = []
    for gate in seq.gates:
        if isinstance(gate, ZZEvolution):
            gates.extend(_echo_block(gate, system))
        else:
            gates.append(gate)
    return GateSequence(
        n_qubits=seq.n_qubits,
        gates=tuple(_fold_virtual_z(gates)),
        mode="hard_pulse",
        pulse_duration_s=seq.pulse_duration_s,
    )


# ---------------------------------------------------------------------------
# simulation and reporting
# ---------------------------------------------------------------------------


def _apply_single(block: np.ndarray, qubit: int, acc: np.ndarray, n: int) -> np.ndarray:
    view = acc.reshape(2**qubit, 2, -1)
    return np.einsum("ab,qbr->qar", block, view).reshape(acc.shape)


def sequence_unitary(seq: GateSequence, system: SpinSystem | None = None) -> np.ndarray:
    """Dense unitary of a gate sequence (time order -> right-to-left product).

    Hard-pulse sequences need the register to evaluate delays under the
    always-on Hamiltonian.
    """
    n = seq.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise CompileError(f"dense simulation limited to {MAX_DENSE_QUBITS} qubits")
    dim = 2**n
    ham = None
    if seq.mode == "hard_pulse":
        if system is None:
            raise CompileError("hard-pulse simulation needs the spin system")
        if system.n_spins != n:
            raise CompileError("sequence register size does not match the system")
        ham = free_hamiltonian_diagonal(system)
    acc = np.eye(dim, dtype=complex)
    for gate in seq.gates:
        if isinstance(gate, SelectivePulse):
            acc = _apply_single(rotation_block(gate.axis, gate.angle), gate.qubit, acc, n)
        elif isinstance(gate, ZZEvolution):
            zz = z_eigenvalues(n, gate.q1) * z_eigenvalues(n, gate.q2)
            acc = np.exp(-2.0j * gate.angle * zz)[:, None] * acc
        elif isinstance(gate, VirtualZ):
            acc = np.exp(-1.0j * gate.angle * z_eigenvalues(n, gate.qubit))[:, None] * acc
        elif isinstance(gate, Delay):
            acc = np.exp(-1.0j * ham * gate.seconds)[:, None] * acc
    return acc


@dataclass(frozen=True)
class SequenceReport:
    """Inventory of a gate sequence: counts by kind and total duration."""

    n_pulses: int
    pulse_counts: dict[tuple[str, float], int] = field(hash=False)
    n_zz: int = 0
    n_virtual_z: int = 0
    n_delays: int = 0
    total_duration_s: float = 0.0


def sequence_report(seq: GateSequence) -> SequenceReport:
    pulse_counts: Counter = Counter()
    n_zz = n_vz = n_delay = 0
    duration = 0.0
    for gate in seq.gates:
        if isinstance(gate, SelectivePulse):
            pulse_counts[(gate.axis, round(math.degrees(gate.angle), 6))] += 1
            duration += seq.pulse_duration_s
        elif isinstance(gate, ZZEvolution):
            n_zz += 1
        elif isinstance(gate, VirtualZ):
            n_vz += 1
        elif isinstance(gate, Delay):
            n_delay += 1
            duration += gate.seconds
    return SequenceReport(
        n_pulses=sum(pulse_counts.values()),
        pulse_counts=dict(sorted(pulse_counts.items())),
        n_zz=n_zz,
        n_virtual_z=n_vz,
        n_delays=n_delay,
        total_duration_s=duration,
    )


def format_sequence(seq: GateSequence) -> str:
    """Plain-text listing: one line per gate plus a trailing report block."""
    lines = []
    for gate in seq.gates:
        if isinstance(gate, SelectivePulse):
            lines.append(
                f"PULSE q={gate.qubit} axis={gate.axis} deg={math.degrees(gate.angle):.6g}"
            )
        elif isinstance(gate, ZZEvolution):
            lines.append(f"ZZ q={gate.q1},{gate.q2} rad={gate.angle:.12g}")
        elif isinstance(gate, VirtualZ):
            lines.append(f"VZ q={gate.qubit} rad={gate.angle:.12g}")
        elif isinstance(gate, Delay):
            lines.append(f"DELAY s={gate.seconds:.12g}")
    report = sequence_report(seq)
    lines.append("# ---- report ----")
    lines.append(f"# mode: {seq.mode}  qubits: {seq.n_qubits}  gates: {len(seq)}")
    for (axis, deg), count in report.pulse_counts.items():
        lines.append(f"# pulses {deg:g} deg along {axis}: {count}")
    lines.append(
        f"# pulses: {report.n_pulses}  zz: {report.n_zz}"
        f"  virtual-z: {report.n_virtual_z}  delays: {report.n_delays}"
    )
    lines.append(f"# duration: {report.total_duration_s:.6g} s")
    return "\n".join(lines) + "\n"
