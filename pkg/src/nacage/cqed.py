"""Parametric-circuit realization of the chain: frequency plan, pump tones,
tiered time-dependent models, and a crosstalk audit.

Mode frequencies are expressed in units of 2*pi*GHz and pump/coupling
strengths in 2*pi*MHz.  Each lattice site carries two circuit modes whose
frequencies are exact harmonics (the second mode sits at twice the first), so
every wanted beam-splitter process can be activated by pumping a coupler at
the difference frequency of the two modes it connects.

Tier ladder for the resulting time-dependent model (in units of J):

- tier 0: only the engineered static blocks — bit-identical to the chain
  Hamiltonian assembled by :func:`nacage.lattice.build_real_space`.
- tier 1: every beam-splitter process each pump drives, including the
  counter-rotating partner of each wanted term and all detuned cross terms
  on the same coupler.
- tier 2: additionally the pair-creation (two-mode-squeezing) sidebands of
  every pump, which couple amplitudes to their conjugates; the state space
  doubles to (alpha, conj(alpha)).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .gauge import LinkSet
from .lattice import LatticeModel, LatticeSpec, ModeIndex, build_real_space

__all__ = [
    "CqedError",
    "FrequencyPlan",
    "Tone",
    "ModulatedModel",
    "AuditReport",
    "DEFAULT_OMEGA0_GHZ",
    "DEFAULT_DELTA_GHZ",
    "DEFAULT_J_MHZ",
    "OMEGA0_RANGE_GHZ",
    "DELTA_RANGE_GHZ",
    "make_plan",
    "synthesize_tones",
    "effective_hamiltonian",
    "build_time_dependent",
    "crosstalk_audit",
]

DEFAULT_OMEGA0_GHZ = 6.0
DEFAULT_DELTA_GHZ = 1.0
DEFAULT_J_MHZ = 10.0
OMEGA0_RANGE_GHZ = (5.0, 6.0)
DELTA_RANGE_GHZ = (1.0, 2.0)
UNIMODULAR_TOL = 1e-9

# (row_site, col_site) of the Hamiltonian block each link occupies under the
# "standard" bond orientation, matching nacage.lattice.build_real_space.
_BOND_SIDES = {"u1": ("A", "B"), "u2": ("B", "A"), "u3": ("A", "C"), "u4": ("C", "A")}


class CqedError(ValueError):
    """Raised for unrealizable frequency plans or link matrices."""


@dataclass(frozen=True)
class FrequencyPlan:
    """Circuit mode frequencies: first modes at (omega0 - delta, omega0,
    omega0 + delta) on (A, B, C), second modes at exactly twice the first."""

    omega0_ghz: float
    delta_ghz: float

    _BASE_SHIFT = {"A": -1.0, "B": 0.0, "C": 1.0}

    def mode_frequency_ghz(self, site: str, mode: int) -> float:
        if site not in self._BASE_SHIFT:
            raise CqedError(f"site must be one of A/B/C, got {site!r}")
        if mode not in (1, 2):
            raise CqedError(f"the circuit carries modes 1 and 2, got {mode}")
        return (self.omega0_ghz + self._BASE_SHIFT[site] * self.delta_ghz) * mode

    def frequency_table(self) -> dict:
        return {
            (site, mode): self.mode_frequency_ghz(site, mode)
            for site in "ABC"
            for mode in (1, 2)
        }

    def branch_frequencies(self) -> dict:
        """Difference frequencies |w(site1, m1) - w(site2, m2)| for every
        mode pair of every site pair (including the unused B-C pair)."""
        out = {}
        for pair in ("AB", "AC", "BC"):
            s1, s2 = pair
            out[pair] = {
                (m1, m2): abs(
                    self.mode_frequency_ghz(s1, m1) - self.mode_frequency_ghz(s2, m2)
                )
                for m1 in (1, 2)
                for m2 in (1, 2)
            }
        return out

    def to_dict(self) -> dict:
        return {
            "omega0_ghz": self.omega0_ghz,
            "delta_ghz": self.delta_ghz,
            "modes": {f"{site}{mode}": freq for (site, mode), freq in self.frequency_table().items()},
        }


def make_plan(
    omega0_ghz: float = DEFAULT_OMEGA0_GHZ,
    delta_ghz: float = DEFAULT_DELTA_GHZ,
    allow_out_of_range: bool = False,
) -> FrequencyPlan:
    """Build and validate a frequency plan.

    The defaults maximize the smallest unintended-process detuning over the
    supported frequency windows.  Out-of-window values are rejected unless
    ``allow_out_of_range`` is set; collisions (two circuit modes at the same
    frequency, or two branches of one coupler at the same pump frequency)
    are always rejected.
    """
    if not allow_out_of_range:
        if not OMEGA0_RANGE_GHZ[0] <= omega0_ghz <= OMEGA0_RANGE_GHZ[1]:
            raise CqedError(
                f"omega0 {omega0_ghz} GHz outside supported window {OMEGA0_RANGE_GHZ}; "
                "pass allow_out_of_range=True to override"
            )
        if not DELTA_RANGE_GHZ[0] <= delta_ghz <= DELTA_RANGE_GHZ[1]:
            raise CqedError(
                f"delta {delta_ghz} GHz outside supported window {DELTA_RANGE_GHZ}; "
                "pass allow_out_of_range=True to override"
            )
    if delta_ghz <= 0 or omega0_ghz <= delta_ghz:
        raise CqedError("need 0 < delta < omega0 for positive mode frequencies")
    plan = FrequencyPlan(omega0_ghz=float(omega0_ghz), delta_ghz=float(delta_ghz))
    freqs = sorted(plan.frequency_table().values())
    if min(np.diff(freqs)) < 1e-9:
        raise CqedError("frequency collision: two circuit modes coincide")
    for pair, branches in plan.branch_frequencies().items():
        values = sorted(branches.values())
        if min(np.diff(values)) < 1e-9:
            raise CqedError(
                f"pump collision on the {pair} coupler: two branches share a frequency"
            )
    return plan


@dataclass(frozen=True)
class Tone:
    """One pump applied to the coupler of a link, activating one link entry.

    ``row_mode``/``col_mode`` are the 1-based mode labels on the block's row
    and column side.  Amplitude 2J yields conversion strength J; the phase is
    chosen so the activated static term equals -J times the link entry.
    """

    link_name: str
    row_mode: int
    col_mode: int
    frequency_ghz: float
    amplitude_2pi_mhz: float
    phase_rad: float

    def to_dict(self) -> dict:
        return asdict(self)


def synthesize_tones(
    plan: FrequencyPlan, links: LinkSet, j_mhz: float = DEFAULT_J_MHZ
) -> tuple:
    """Pump tones that realize the given links on the two-mode circuit.

    Each link matrix may carry at most two nonzero entries, and every
    nonzero entry must be unimodular — one pump per entry, full strength.
    """
    if links.n_components != 2:
        raise CqedError(
            f"the circuit carries 2 modes per site; links have {links.n_components}"
        )
    if not j_mhz > 0:
        raise CqedError(f"j_mhz must be positive, got {j_mhz}")
    tones = []
    for name, matrix in zip(("u1", "u2", "u3", "u4"), links.links()):
        row_site, col_site = _BOND_SIDES[name]
        entries = [
            (r, c, matrix[r, c])
            for r in range(2)
            for c in range(2)
            if abs(matrix[r, c]) > UNIMODULAR_TOL
        ]
        if len(entries) > 2:
            raise CqedError(
                f"link {name} has {len(entries)} nonzero entries; the coupler "
                "supports at most two pumps"
            )
        for r, c, value in entries:
            if abs(abs(value) - 1.0) > UNIMODULAR_TOL:
                raise CqedError(
                    f"link {name} entry ({r + 1},{c + 1}) has magnitude "
                    f"{abs(value):.6f}; pumps realize unimodular entries only"
                )
            f_row = plan.mode_frequency_ghz(row_site, r + 1)
            f_col = plan.mode_frequency_ghz(col_site, c + 1)
            phase = -np.angle(value) if f_row > f_col else np.angle(value)
            tones.append(
                Tone(
                    link_name=name,
                    row_mode=r + 1,
                    col_mode=c + 1,
                    frequency_ghz=abs(f_row - f_col),
                    amplitude_2pi_mhz=2.0 * j_mhz,
                    phase_rad=float(phase),
                )
            )
    return tuple(tones)


def effective_hamiltonian(
    spec: LatticeSpec, links: LinkSet, orientation: str = "standard"
) -> LatticeModel:
    """The static model the pump scheme engineers, i.e. exactly the chain
    Hamiltonian of :func:`nacage.lattice.build_real_space` (same code path)."""
    return build_real_space(spec, links, orientation)


@dataclass(frozen=True)
class ModulatedModel:
    """Sparse frequency-resolved Hamiltonian H(t) = sum_k v_k e^{i f_k t}
    |r_k><c_k| in units of J (times in 1/J).

    For ``doubled`` models the basis is (alpha, conj(alpha)) and the stored
    terms give the full (non-Hermitian) generator of i d/dt (alpha, conj a).
    """

    spec: LatticeSpec
    plan: FrequencyPlan
    tier: int
    doubled: bool
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)
    vals: np.ndarray = field(repr=False)
    freq_index: np.ndarray = field(repr=False)
    frequencies: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.spec.dim * (2 if self.doubled else 1)

    @property
    def max_frequency(self) -> float:
        return float(np.max(np.abs(self.frequencies))) if self.frequencies.size else 0.0

    def dense(self, t: float) -> np.ndarray:
        """Assemble H(t) (or the doubled generator) as a dense matrix."""
        h = np.zeros((self.dim, self.dim), dtype=np.complex128)
        weights = self.vals * np.exp(1j * self.frequencies[self.freq_index] * t)
        np.add.at(h, (self.rows, self.cols), weights)
        return h

    def static_part(self) -> np.ndarray:
        h = np.zeros((self.dim, self.dim), dtype=np.complex128)
        static = self.frequencies[self.freq_index] == 0.0
        np.add.at(
            h, (self.rows[static], self.cols[static]), self.vals[static]
        )
        return h


def _compile_terms(spec, plan, tier, doubled, terms):
    """Merge duplicate (row, col, freq) entries and index distinct freqs."""
    merged = {}
    for row, col, val, freq in terms:
        key = (row, col, round(freq, 9))
        merged[key] = merged.get(key, 0.0) + val
    rows, cols, vals, freqs = [], [], [], []
    for (row, col, freq), val in merged.items():
        if abs(val) <= 1e-15:
            continue
        rows.append(row)
        cols.append(col)
        vals.append(val)
        freqs.append(freq)
    distinct = np.unique(np.array(freqs, dtype=float))
    index = {f: i for i, f in enumerate(distinct)}
    return ModulatedModel(
        spec=spec,
        plan=plan,
        tier=tier,
        doubled=doubled,
        rows=np.array(rows, dtype=np.int64),
        cols=np.array(cols, dtype=np.int64),
        vals=np.array(vals, dtype=np.complex128),
        freq_index=np.array([index[f] for f in freqs], dtype=np.int64),
        frequencies=distinct,
    )


def _bond_instances(spec: LatticeSpec):
    """All (link_name, row_cell, col_cell) bonds of the chain, with wrap."""
    bonds = []
    for cell in range(spec.n_cells):
        nxt = cell + 1
        if nxt >= spec.n_cells:
            nxt = 0 if spec.boundary == "periodic" else None
        bonds.append(("u1", cell, cell))
        bonds.append(("u3", cell, cell))
        if nxt is not None:
            bonds.append(("u2", cell, nxt))
            bonds.append(("u4", cell, nxt))
    return bonds


def build_time_dependent(
    spec: LatticeSpec,
    links: LinkSet,
    tier: int,
    plan: FrequencyPlan | None = None,
    j_mhz: float = DEFAULT_J_MHZ,
    orientation: str = "standard",
) -> ModulatedModel:
    """Time-dependent model of the pumped circuit at the requested tier.

    The model is expressed in units of J, so ``spec.hopping_j`` must be 1;
    ``j_mhz`` only sets the ratio between pump frequencies and J.  Tier 0
    reuses the static chain assembly verbatim; tiers 1 and 2 expand each
    pump into its beam-splitter (and pair-creation) sidebands.
    """
    if tier not in (0, 1, 2):
        raise CqedError(f"tier must be 0, 1, or 2, got {tier}")
    if abs(spec.hopping_j - 1.0) > 1e-12:
        raise CqedError("time-dependent models are built in units of J; use hopping_j=1")
    if plan is None:
        plan = make_plan()
    if tier == 0:
        h = effective_hamiltonian(spec, links, orientation).h_real
        rows, cols = np.nonzero(h)
        terms = [
            (int(r), int(c), complex(h[r, c]), 0.0) for r, c in zip(rows, cols)
        ]
        return _compile_terms(spec, plan, tier, False, terms)
    if orientation != "standard":
        raise CqedError(
            "pump synthesis is defined for the standard orientation; reversed "
            "chains are their spatial mirror"
        )

    tones_by_link = {}
    for tone in synthesize_tones(plan, links, j_mhz):
        tones_by_link.setdefault(tone.link_name, []).append(tone)

    ghz_to_j = 1000.0 / j_mhz
    n = spec.n_components
    dim = spec.dim
    doubled = tier == 2
    terms = []

    def add_pair(row, col, val, freq):
        terms.append((row, col, val, freq))
        terms.append((col, row, np.conj(val), -freq))

    def add_anomalous(row, col, val, freq):
        # i d(alpha_row)/dt gains val e^{ift} conj(alpha_col) and symmetrically.
        terms.append((row, col + dim, val, freq))
        terms.append((col, row + dim, val, freq))

    for name, row_cell, col_cell in _bond_instances(spec):
        row_site, col_site = _BOND_SIDES[name]
        for tone in tones_by_link.get(name, []):
            omega_d = tone.frequency_ghz
            phase = tone.phase_rad
            for rm in (1, 2):
                f_row = plan.mode_frequency_ghz(row_site, rm)
                row = ModeIndex(row_cell, row_site, rm).flatten(spec)
                for cm in (1, 2):
                    f_col = plan.mode_frequency_ghz(col_site, cm)
                    col = ModeIndex(col_cell, col_site, cm).flatten(spec)
                    delta = (f_row - f_col) * ghz_to_j
                    wd = omega_d * ghz_to_j
                    add_pair(row, col, -np.exp(-1j * phase), delta - wd)
                    add_pair(row, col, -np.exp(1j * phase), delta + wd)
                    if doubled:
                        total = (f_row + f_col) * ghz_to_j
                        add_anomalous(row, col, -np.exp(1j * phase), total + wd)
                        add_anomalous(row, col, -np.exp(-1j * phase), total - wd)

    if doubled:
        # Lower blocks of the doubled generator: i d(conj a)/dt = -conj(...).
        lower = []
        for row, col, val, freq in terms:
            if col < dim:  # diagonal-block term (row < dim too)
                lower.append((row + dim, col + dim, -np.conj(val), -freq))
            else:  # anomalous term
                lower.append((row + dim, col - dim, -np.conj(val), -freq))
        terms.extend(lower)
    return _compile_terms(spec, plan, tier, doubled, terms)


@dataclass(frozen=True)
class AuditReport:
    """Unintended-process inventory of the pump scheme on one unit cell.

    Stark sums are second-order frequency pulls in 2*pi*MHz; ``counts`` is
    the number of unintended beam-splitter processes touching each mode.
    The guaranteed per-mode bound is (J^2 / smallest detuning) per process.
    """

    plan: FrequencyPlan
    j_mhz: float
    min_bs_detuning_ghz: float
    min_pair_detuning_ghz: float
    counts: dict
    stark_signed_mhz: dict
    stark_abs_mhz: dict
    stark_bound_mhz: dict
    bound_ok: bool
    compensation_mhz: dict

    def to_dict(self) -> dict:
        def keyed(mapping):
            return {f"{site}{mode}": value for (site, mode), value in mapping.items()}

        return {
            "plan": self.plan.to_dict(),
            "j_mhz": self.j_mhz,
            "min_bs_detuning_ghz": self.min_bs_detuning_ghz,
            "min_pair_detuning_ghz": self.min_pair_detuning_ghz,
            "counts": keyed(self.counts),
            "stark_signed_mhz": keyed(self.stark_signed_mhz),
            "stark_abs_mhz": keyed(self.stark_abs_mhz),
            "stark_bound_mhz": keyed(self.stark_bound_mhz),
            "bound_ok": self.bound_ok,
            "compensation_mhz": keyed(self.compensation_mhz),
        }


def crosstalk_audit(
    links: LinkSet,
    plan: FrequencyPlan | None = None,
    j_mhz: float = DEFAULT_J_MHZ,
) -> AuditReport:
    """Enumerate every unintended process each pump drives on its coupler.

    For each tone and each mode pair of the pumped coupler, the two
    beam-splitter sidebands oscillate at (delta -/+ omega_pump); the zero-
    frequency one is the engineered term, everything else contributes a
    second-order Stark pull J^2/detuning to both modes it touches (opposite
    signs on the two modes, handled with signed detunings).  Pair-creation
    sidebands at (sum -/+ omega_pump) are tallied separately.
    """
    if plan is None:
        plan = make_plan()
    tones = synthesize_tones(plan, links, j_mhz)
    modes = [(site, mode) for site in "ABC" for mode in (1, 2)]
    counts = {m: 0 for m in modes}
    signed = {m: 0.0 for m in modes}
    absolute = {m: 0.0 for m in modes}
    min_bs = np.inf
    min_pair = np.inf
    for tone in tones:
        row_site, col_site = _BOND_SIDES[tone.link_name]
        for rm in (1, 2):
            f_row = plan.mode_frequency_ghz(row_site, rm)
            for cm in (1, 2):
                f_col = plan.mode_frequency_ghz(col_site, cm)
                delta = f_row - f_col
                total = f_row + f_col
                min_pair = min(
                    min_pair,
                    abs(total - tone.frequency_ghz),
                    abs(total + tone.frequency_ghz),
                )
                for sideband in (-tone.frequency_ghz, tone.frequency_ghz):
                    f_osc = delta + sideband
                    if abs(f_osc) < 1e-12:
                        continue  # the engineered static term
                    min_bs = min(min_bs, abs(f_osc))
                    f_osc_mhz = f_osc * 1000.0
                    pull = j_mhz**2 / f_osc_mhz
                    counts[(row_site, rm)] += 1
                    counts[(col_site, cm)] += 1
                    signed[(row_site, rm)] += pull
                    signed[(col_site, cm)] -= pull
                    absolute[(row_site, rm)] += abs(pull)
                    absolute[(col_site, cm)] += abs(pull)
    per_process = j_mhz**2 / (plan.delta_ghz * 1000.0)
    bounds = {m: per_process * counts[m] for m in modes}
    bound_ok = all(absolute[m] <= bounds[m] + 1e-12 for m in modes)
    compensation = {m: -signed[m] for m in modes}
    return AuditReport(
        plan=plan,
        j_mhz=j_mhz,
        min_bs_detuning_ghz=float(min_bs),
        min_pair_detuning_ghz=float(min_pair),
        counts=counts,
        stark_signed_mhz=signed,
        stark_abs_mhz=absolute,
        stark_bound_mhz=bounds,
        bound_ok=bound_ok,
        compensation_mhz=compensation,
    )
