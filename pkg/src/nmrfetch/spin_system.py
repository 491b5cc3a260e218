"""Spin register descriptions for the ensemble fetch simulator.

A register is one readout (ancilla) spin plus ``n`` database spins.  Every
database spin is scalar-coupled to the ancilla; the magnitudes of those
couplings encode database items as resolvable lines in the ancilla
multiplet.  Database items are labelled by the logical bits ``b1..bn``
(qubit 1 is the most significant bit), and the logical peak frequency of
item ``b`` is

    freq(b) = sum_i (1 - 2*b_i) * |J_0i| / 2        [Hz]

so bit 0 shifts a line up by half the coupling and bit 1 shifts it down.
A negatively signed coupling simply swaps which physical spin state plays
"logical 0" for that qubit; the per-qubit sign bookkeeping (``bit_signs``)
is confined to the readout/decode layer and never leaks into the state
engine, which always works in the logical basis.

Items are decodable from peak positions alone when the ancilla-coupling
magnitudes form a superincreasing sequence, which the builtin seven-spin
register (crotonic acid) satisfies.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Spin",
    "SpinSystem",
    "QueryPattern",
    "DecodabilityReport",
    "SpinSystemError",
    "ConfigError",
    "crotonic_default",
    "load_spin_system",
    "load_spin_system_file",
    "item_frequency",
    "all_item_frequencies",
    "check_decodability",
]

#: relative gyromagnetic ratios used when a config file omits gamma_rel
SPECIES_GAMMA = {"carbon": 1.0, "proton": 3.977}

_PATTERN_CHARS = {"0": "0", "1": "1", "x": "x", "X": "x", "*": "x"}

_SPIN_KEYS = {"species", "gamma_rel", "offset_hz", "multiplicity", "bit_sign"}


class SpinSystemError(ValueError):
    """Raised when a spin register fails validation."""


class ConfigError(ValueError):
    """Raised when a spin-system config file cannot be parsed."""


@dataclass(frozen=True)
class Spin:
    """One spin (or group of equivalent spins) in the register.

    ``multiplicity`` counts magnetically equivalent physical spins folded
    into one logical qubit (3 for a methyl group).  ``offset_hz`` is the
    rotating-frame chemical-shift offset relative to the ancilla carrier.
    """

    label: str
    species: str = "other"
    gamma_rel: float = 1.0
    offset_hz: float = 0.0
    multiplicity: int = 1


@dataclass(frozen=True, eq=False)
class SpinSystem:
    """Immutable register: spins, coupling matrix and decode signs.

    Qubit 0 is always the ancilla.  ``j_hz`` is the symmetric scalar
    coupling matrix in Hz (zero diagonal).  ``bit_signs[i]`` carries the
    sign of ``j_hz[0][i+1]`` for database qubit ``i+1`` (+1 when the
    coupling is zero): it records which physical spin state represents
    logical 0 on that qubit and is consumed only by the spectrometer.
    """

    spins: tuple[Spin, ...]
    j_hz: np.ndarray
    bit_signs: tuple[int, ...] = field(default=())

    def __post_init__(self):
        j = np.asarray(self.j_hz, dtype=float)
        object.__setattr__(self, "j_hz", j)
        m = len(self.spins)
        if m < 1:
            raise SpinSystemError("register needs at least the ancilla spin")
        if j.shape != (m, m):
            raise SpinSystemError(f"coupling matrix shape {j.shape} != ({m}, {m})")
        if not np.allclose(j, j.T, atol=0.0):
            raise SpinSystemError("coupling matrix must be symmetric")
        if np.any(np.diag(j) != 0.0):
            raise SpinSystemError("coupling matrix must have a zero diagonal")
        labels = [s.label for s in self.spins]
        if len(set(labels)) != len(labels):
            raise SpinSystemError("spin labels must be unique")
        for s in self.spins:
            if not s.label or any(c in s.label for c in "-.[]= \t"):
                raise SpinSystemError(f"bad spin label {s.label!r}")
            if s.gamma_rel <= 0:
                raise SpinSystemError(f"{s.label}: gamma_rel must be positive")
            if s.multiplicity < 1 or s.multiplicity % 2 == 0:
                raise SpinSystemError(
                    f"{s.label}: multiplicity must be an odd positive integer"
                )
        if self.spins[0].multiplicity != 1:
            raise SpinSystemError("the ancilla cannot be a composite spin")
        if not self.bit_signs:
            object.__setattr__(self, "bit_signs", self._default_signs())
        if len(self.bit_signs) != m - 1:
            raise SpinSystemError("bit_signs must have one entry per database qubit")
        for i, s in enumerate(self.bit_signs):
            if s not in (-1, 1):
                raise SpinSystemError("bit_signs entries must be +1 or -1")
            jj = j[0, i + 1]
            if jj != 0.0 and s != (1 if jj > 0 else -1):
                raise SpinSystemError(
                    f"bit_signs[{i + 1}] must match the sign of the ancilla coupling"
                )
        j.flags.writeable = False

    def _default_signs(self) -> tuple[int, ...]:
        return tuple(
            1 if self.j_hz[0, i] >= 0 else -1 for i in range(1, len(self.spins))
        )

    # -- basic geometry -------------------------------------------------
    @property
    def n_spins(self) -> int:
        return len(self.spins)

    @property
    def n_database(self) -> int:
        return len(self.spins) - 1

    @property
    def ancilla(self) -> int:
        return 0

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.spins)

    def sign_of(self, qubit: int) -> int:
        """Decode sign of a database qubit (1-based qubit index)."""
        if not 1 <= qubit <= self.n_database:
            raise IndexError(f"no database qubit {qubit}")
        return self.bit_signs[qubit - 1]

    def ancilla_coupling(self, qubit: int) -> float:
        return float(self.j_hz[0, qubit])

    def ancilla_couplings_abs(self) -> np.ndarray:
        """|J_0i| for database qubits, in qubit order."""
        return np.abs(self.j_hz[0, 1:])

    def logical_coupling(self, i: int, j: int) -> float:
        """Coupling between qubits i, j expressed in the logical frame.

        Relabelling a negative-sign qubit (swapping its basis states) flips
        the sign of every coupling involving it, so the logical-frame
        coupling is s_i * s_j * J_ij with s_0 = +1 for the ancilla.  All
        ancilla couplings become |J_0i| in this frame.
        """
        si = 1 if i == 0 else self.sign_of(i)
        sj = 1 if j == 0 else self.sign_of(j)
        return si * sj * float(self.j_hz[i, j])

    def offsets_hz(self) -> np.ndarray:
        return np.array([s.offset_hz for s in self.spins], dtype=float)

    def gammas(self) -> np.ndarray:
        return np.array([s.gamma_rel for s in self.spins], dtype=float)


@dataclass(frozen=True)
class QueryPattern:
    """Per-qubit constraints: '0', '1' or 'x' (wildcard), qubit 1 first."""

    constraints: tuple[str, ...]

    def __post_init__(self):
        for c in self.constraints:
            if c not in ("0", "1", "x"):
                raise SpinSystemError(f"bad pattern symbol {c!r}")

    @classmethod
    def from_string(cls, text: str) -> "QueryPattern":
        try:
            return cls(tuple(_PATTERN_CHARS[c] for c in text))
        except KeyError as exc:
            raise SpinSystemError(
                f"pattern may only contain 0, 1 or x: {text!r}"
            ) from exc

    def __len__(self) -> int:
        return len(self.constraints)

    def __str__(self) -> str:
        return "".join(self.constraints)

    @property
    def is_unconstrained(self) -> bool:
        """True when every position is a wildcard (query marks everything)."""
        return all(c == "x" for c in self.constraints)

    def constrained_qubits(self) -> list[tuple[int, int]]:
        """(qubit index, required bit) for every non-wild position."""
        return [
            (i + 1, int(c)) for i, c in enumerate(self.constraints) if c != "x"
        ]

    def matches(self, item: int) -> bool:
        n = len(self.constraints)
        if not 0 <= item < 2**n:
            raise IndexError(f"item {item} out of range for {n} bits")
        for qubit, bit in self.constrained_qubits():
            if (item >> (n - qubit)) & 1 != bit:
                return False
        return True

    def match_mask(self, n_database: int) -> np.ndarray:
        """Boolean match flags for all 2**n items."""
        if len(self) != n_database:
            raise SpinSystemError(
                f"pattern length {len(self)} != database size {n_database}"
            )
        items = np.arange(2**n_database)
        mask = np.ones(2**n_database, dtype=bool)
        for qubit, bit in self.constrained_qubits():
            mask &= ((items >> (n_database - qubit)) & 1) == bit
        return mask


def crotonic_default() -> SpinSystem:
    """Builtin seven-spin register (crotonic acid).

    The ancilla is the C2 carbon; database qubits are ordered by
    decreasing coupling magnitude.  Qubit 4 is the methyl group: three
    equivalent protons folded into one logical qubit.  Couplings among
    database spins default to zero (override via a config file if they
    matter for an experiment).
    """
    spins = (
        Spin("C2", "carbon", SPECIES_GAMMA["carbon"]),
        Spin("H1", "proton", SPECIES_GAMMA["proton"]),
        Spin("C3", "carbon", SPECIES_GAMMA["carbon"]),
        Spin("C1", "carbon", SPECIES_GAMMA["carbon"]),
        Spin("H3", "proton", SPECIES_GAMMA["proton"], multiplicity=3),
        Spin("C4", "carbon", SPECIES_GAMMA["carbon"]),
        Spin("H2", "proton", SPECIES_GAMMA["proton"]),
    )
    j = np.zeros((7, 7))
    for qubit, coupling in enumerate((156.0, 69.7, 41.6, -7.1, 1.4, -0.7), start=1):
        j[0, qubit] = j[qubit, 0] = coupling
    return SpinSystem(spins=spins, j_hz=j)


# ---------------------------------------------------------------------------
# config-file loading
#
# Grammar (line oriented, '#'/';' comments, configparser syntax):
#
#   ancilla = <label>            # before any section (or in [system])
#   [spin.<label>]
#   species = carbon|proton|<name>
#   gamma_rel = <float>          # optional when species is carbon/proton
#   offset_hz = <float>          # optional, default 0
#   multiplicity = <odd int>     # optional, default 1
#   bit_sign = +1|-1             # optional, default sign of J_0i
#   [couplings]
#   <labelA>-<labelB> = <Hz>     # symmetric, one line per pair
#
# Spin section order fixes the qubit numbering (ancilla is moved to 0).
# Unknown keys or sections are rejected.
# ---------------------------------------------------------------------------


def load_spin_system(text: str) -> SpinSystem:
    """Parse a spin-system description (see module grammar notes)."""
    parser = configparser.ConfigParser(
        strict=True, interpolation=None, delimiters=("=",)
    )
    parser.optionxform = str
    try:
        parser.read_file(io.StringIO("[system]\n" + text))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse spin-system config: {exc}") from exc

    system_keys = dict(parser.items("system")) if parser.has_section("system") else {}
    unknown = set(system_keys) - {"ancilla"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    ancilla_label = system_keys.get("ancilla")
    if not ancilla_label:
        raise ConfigError("missing 'ancilla = <label>' line")

    spin_order: list[str] = []
    spin_defs: dict[str, dict[str, str]] = {}
    coupling_items: list[tuple[str, str]] = []
    for section in parser.sections():
        if section == "system":
            continue
        if section == "couplings":
            coupling_items = list(parser.items(section))
        elif section.startswith("spin."):
            label = section[len("spin."):]
            keys = dict(parser.items(section))
            unknown = set(keys) - _SPIN_KEYS
            if unknown:
                raise ConfigError(f"[{section}] unknown keys: {sorted(unknown)}")
            spin_order.append(label)
            spin_defs[label] = keys
        else:
            raise ConfigError(f"unknown section [{section}]")

    if ancilla_label not in spin_defs:
        raise ConfigError(f"ancilla label {ancilla_label!r} has no [spin.*] section")
    order = [ancilla_label] + [lb for lb in spin_order if lb != ancilla_label]

    def build_spin(label: str) -> Spin:
        keys = spin_defs[label]
        species = keys.get("species", "other")
        try:
            gamma = float(keys["gamma_rel"]) if "gamma_rel" in keys else SPECIES_GAMMA[species]
        except KeyError as exc:
            raise ConfigError(
                f"[spin.{label}] needs gamma_rel (species {species!r} has no default)"
            ) from exc
        try:
            return Spin(
                label=label,
                species=species,
                gamma_rel=gamma,
                offset_hz=float(keys.get("offset_hz", 0.0)),
                multiplicity=int(keys.get("multiplicity", 1)),
            )
        except ValueError as exc:
            raise ConfigError(f"[spin.{label}] bad value: {exc}") from exc

    spins = tuple(build_spin(label) for label in order)
    index = {label: i for i, label in enumerate(order)}

    m = len(spins)
    j = np.zeros((m, m))
    seen: set[frozenset[str]] = set()
    for key, value in coupling_items:
        parts = key.split("-")
        if len(parts) != 2 or not all(p in index for p in parts):
            raise ConfigError(f"[couplings] bad pair key {key!r}")
        a, b = parts
        if a == b:
            raise ConfigError(f"[couplings] self coupling {key!r}")
        pair = frozenset((a, b))
        if pair in seen:
            raise ConfigError(f"[couplings] pair {key!r} given more than once")
        seen.add(pair)
        try:
            val = float(value)
        except ValueError as exc:
            raise ConfigError(f"[couplings] {key}: bad value {value!r}") from exc
        j[index[a], index[b]] = j[index[b], index[a]] = val

    signs = []
    for qubit, label in enumerate(order[1:], start=1):
        declared = spin_defs[label].get("bit_sign")
        default = 1 if j[0, qubit] >= 0 else -1
        if declared is None:
            signs.append(default)
            continue
        if declared not in ("+1", "-1", "1"):
            raise ConfigError(f"[spin.{label}] bit_sign must be +1 or -1")
        signs.append(1 if declared in ("+1", "1") else -1)

    try:
        return SpinSystem(spins=spins, j_hz=j, bit_signs=tuple(signs))
    except SpinSystemError as exc:
        raise ConfigError(str(exc)) from exc


def load_spin_system_file(path) -> SpinSystem:
    with open(path, "r", encoding="utf-8") as fh:
        return load_spin_system(fh.read())


# ---------------------------------------------------------------------------
# decodability
# ---------------------------------------------------------------------------


def item_frequency(system: SpinSystem, item: int) -> float:
    """Logical peak frequency of one database item (Hz, carrier-relative).

    Uses the half-coupling convention: bit 0 contributes +|J_0i|/2, bit 1
    contributes -|J_0i|/2.  For composite qubits this is the inner-manifold
    line.
    """
    n = system.n_database
    if not 0 <= item < 2**n:
        raise IndexError(f"item {item} out of range")
    absj = system.ancilla_couplings_abs()
    bits = (item >> np.arange(n - 1, -1, -1)) & 1
    return float(np.sum((1 - 2 * bits) * absj) / 2.0)


def all_item_frequencies(system: SpinSystem) -> np.ndarray:
    """Logical peak frequencies for items 0..2**n-1 (item order)."""
    n = system.n_database
    if n > 22:
        raise SpinSystemError("frequency enumeration capped at n = 22")
    absj = system.ancilla_couplings_abs()
    items = np.arange(2**n)[:, None]
    bits = (items >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return (1 - 2 * bits) @ absj / 2.0


@dataclass(frozen=True)
class DecodabilityReport:
    ok: bool
    superincreasing: bool
    min_gap_hz: float
    collisions: tuple[tuple[int, int], ...]


def check_decodability(system: SpinSystem, resolution_hz: float) -> DecodabilityReport:
    """Check that every item maps to a resolvable, unambiguous line.

    Enumerates all 2**n logical frequencies and reports item pairs closer
    than ``resolution_hz``.  Also reports whether the coupling magnitudes
    are superincreasing in qubit order (|J_0i| > sum of later |J_0j|),
    which guarantees the item -> frequency map is strictly monotonic.
    """
    if resolution_hz <= 0:
        raise ValueError("resolution_hz must be positive")
    absj = system.ancilla_couplings_abs()
    tails = np.concatenate([np.cumsum(absj[::-1])[::-1][1:], [0.0]])
    superincreasing = bool(np.all(absj > tails))

    freqs = all_item_frequencies(system)
    order = np.argsort(freqs, kind="stable")
    sorted_freqs = freqs[order]
    gaps = np.diff(sorted_freqs)
    min_gap = float(np.min(gaps)) if gaps.size else float("inf")
    collisions = [
        (int(min(order[k], order[k + 1])), int(max(order[k], order[k + 1])))
        for k in np.nonzero(gaps < resolution_hz)[0]
    ]
    return DecodabilityReport(
        ok=not collisions,
        superincreasing=superincreasing,
        min_gap_hz=min_gap,
        collisions=tuple(sorted(collisions)),
    )
