"""Real-space and Bloch Hamiltonians for the multi-component rhombic chain.

Geometry: unit cell n holds one spinal site A and two apical sites B, C, each
carrying N internal modes.  Rightward bonds are A_n--B_n (link U1),
B_n--A_{n+1} (U2), A_n--C_n (U3), C_n--A_{n+1} (U4); every hopping block has
magnitude J.

Two bond-orientation conventions are supported, because the two possible ways
of attaching a link matrix to its bond produce mirror-image walks:

- ``"standard"`` (default): the link matrix multiplies leftward hops, i.e.
  <A_n|H|B_n> = -J U1 and <B_n|H|A_{n+1}> = -J U2.  A walker starting in mode 1
  of the two-component reference model then spreads RIGHTWARD, which is the
  convention the driven/steady-state layers assume.
- ``"reversed"``: the link matrix multiplies rightward hops
  (<B_n|H|A_n> = -J U1, <A_{n+1}|H|B_n> = -J U2); all cages are the spatial
  mirror of the standard ones.

Flattened basis index: ((cell * 3 + site_ordinal) * N + mode - 1) with site
ordinals A=0, B=1, C=2 and 1-based mode labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gauge import LinkSet

__all__ = [
    "HERMITICITY_TOL",
    "SYMMETRY_TOL",
    "RESIDUAL_TOL",
    "SITES",
    "ORIENTATIONS",
    "LatticeError",
    "LatticeSpec",
    "ModeIndex",
    "LatticeModel",
    "BandStructure",
    "CompactState",
    "build_real_space",
    "bloch_hamiltonian",
    "band_structure",
    "flatness_metric",
    "symmetry_checks",
    "chiral_signs",
    "extract_compact_states",
]

HERMITICITY_TOL = 1e-12
SYMMETRY_TOL = 1e-12
RESIDUAL_TOL = 1e-10

SITES = ("A", "B", "C")
_SITE_ORDINAL = {"A": 0, "B": 1, "C": 2}
ORIENTATIONS = ("standard", "reversed")


class LatticeError(ValueError):
    """Raised for invalid lattice specifications or extraction failures."""


@dataclass(frozen=True)
class LatticeSpec:
    """Chain geometry: N modes per site, L cells, boundary, hopping energy J.

    ``hopping_j`` is an energy in units of 2*pi*MHz and must be positive;
    dimensionless quantities elsewhere are reported in units of J.
    """

    n_components: int
    n_cells: int
    boundary: str = "open"
    hopping_j: float = 1.0

    def __post_init__(self):
        if self.n_components < 1:
            raise LatticeError(f"n_components must be >= 1, got {self.n_components}")
        if self.n_cells < 3:
            raise LatticeError(f"n_cells must be >= 3, got {self.n_cells}")
        if self.boundary not in ("open", "periodic"):
            raise LatticeError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")
        if not self.hopping_j > 0:
            raise LatticeError(f"hopping_j must be positive, got {self.hopping_j}")

    @property
    def dim(self) -> int:
        """Total number of modes, 3 * N * L."""
        return 3 * self.n_components * self.n_cells


@dataclass(frozen=True)
class ModeIndex:
    """One mode of the chain: (cell, site, mode) with a 1-based mode label."""

    cell: int
    site: str
    mode: int

    def flatten(self, spec: LatticeSpec) -> int:
        if self.site not in _SITE_ORDINAL:
            raise LatticeError(f"site must be one of {SITES}, got {self.site!r}")
        if not 1 <= self.mode <= spec.n_components:
            raise LatticeError(
                f"mode must be in [1, {spec.n_components}], got {self.mode}"
            )
        if not 0 <= self.cell < spec.n_cells:
            raise LatticeError(f"cell must be in [0, {spec.n_cells}), got {self.cell}")
        return (self.cell * 3 + _SITE_ORDINAL[self.site]) * spec.n_components + self.mode - 1

    @classmethod
    def unflatten(cls, index: int, spec: LatticeSpec) -> "ModeIndex":
        if not 0 <= index < spec.dim:
            raise LatticeError(f"flat index {index} outside [0, {spec.dim})")
        mode = index % spec.n_components + 1
        block = index // spec.n_components
        return cls(cell=block // 3, site=SITES[block % 3], mode=mode)


def _block_slice(spec: LatticeSpec, cell: int, site: str) -> slice:
    start = (cell * 3 + _SITE_ORDINAL[site]) * spec.n_components
    return slice(start, start + spec.n_components)


@dataclass(frozen=True)
class LatticeModel:
    """A concrete chain Hamiltonian: spec, links, orientation, dense matrix."""

    spec: LatticeSpec
    links: LinkSet
    orientation: str
    h_real: np.ndarray = field(repr=False)

    def site_indices(self, site: str) -> np.ndarray:
        """Flat indices of every mode on sites of the given type, cell-major."""
        n = self.spec.n_components
        cells = np.arange(self.spec.n_cells)
        starts = (cells * 3 + _SITE_ORDINAL[site]) * n
        return (starts[:, None] + np.arange(n)[None, :]).ravel()


def build_real_space(
    spec: LatticeSpec, links: LinkSet, orientation: str = "standard"
) -> LatticeModel:
    """Assemble the dense real-space Hamiltonian for the given chain.

    Every bond contributes one -J * (link) block plus its Hermitian conjugate;
    the ``orientation`` flag decides whether the link matrix sits on the
    leftward ("standard") or rightward ("reversed") hop of its bond.  Periodic
    boundaries wrap the inter-cell bonds.
    """
    if orientation not in ORIENTATIONS:
        raise LatticeError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
    if links.n_components != spec.n_components:
        raise LatticeError(
            f"links have {links.n_components} components but spec expects {spec.n_components}"
        )
    n, cells = spec.n_components, spec.n_cells
    h = np.zeros((spec.dim, spec.dim), dtype=np.complex128)
    j = spec.hopping_j

    def add_bond(row_cell, row_site, col_cell, col_site, matrix):
        rows = _block_slice(spec, row_cell, row_site)
        cols = _block_slice(spec, col_cell, col_site)
        h[rows, cols] += -j * matrix
        h[cols, rows] += -j * matrix.conj().T

    for cell in range(cells):
        nxt = cell + 1
        if nxt >= cells:
            if spec.boundary == "open":
                nxt = None
            else:
                nxt = 0
        if orientation == "standard":
            add_bond(cell, "A", cell, "B", links.u1)
            add_bond(cell, "A", cell, "C", links.u3)
            if nxt is not None:
                add_bond(cell, "B", nxt, "A", links.u2)
                add_bond(cell, "C", nxt, "A", links.u4)
        else:
            add_bond(cell, "B", cell, "A", links.u1)
            add_bond(cell, "C", cell, "A", links.u3)
            if nxt is not None:
                add_bond(nxt, "A", cell, "B", links.u2)
                add_bond(nxt, "A", cell, "C", links.u4)

    assert np.max(np.abs(h - h.conj().T)) <= HERMITICITY_TOL * max(j, 1.0), (
        "real-space Hamiltonian lost Hermiticity"
    )
    return LatticeModel(spec=spec, links=links, orientation=orientation, h_real=h)


def bloch_hamiltonian(links: LinkSet, k: float, orientation: str = "standard") -> np.ndarray:
    """3N x 3N Bloch matrix at crystal momentum ``k`` in units of J.

    Generated from the links under the requested orientation (basis order A,
    B, C).  For "standard" the A-B block is -(U1 + e^{-ik} U2†) and the A-C
    block -(U3 + e^{-ik} U4†); "reversed" gives -(U1† + e^{ik} U2) and
    -(U3† + e^{ik} U4).
    """
    if orientation not in ORIENTATIONS:
        raise LatticeError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
    n = links.n_components
    phase = np.exp(-1j * k) if orientation == "standard" else np.exp(1j * k)
    if orientation == "standard":
        ab = -(links.u1 + phase * links.u2.conj().T)
        ac = -(links.u3 + phase * links.u4.conj().T)
    else:
        ab = -(links.u1.conj().T + phase * links.u2)
        ac = -(links.u3.conj().T + phase * links.u4)
    h = np.zeros((3 * n, 3 * n), dtype=np.complex128)
    h[:n, n : 2 * n] = ab
    h[:n, 2 * n :] = ac
    h[n : 2 * n, :n] = ab.conj().T
    h[2 * n :, :n] = ac.conj().T
    return h


@dataclass(frozen=True)
class BandStructure:
    """Sorted band energies over a uniform k-grid, in units of J."""

    k_values: np.ndarray
    energies: np.ndarray  # shape (n_k, 3N), ascending along axis 1

    @property
    def n_bands(self) -> int:
        return self.energies.shape[1]


def band_structure(links: LinkSet, n_k: int, orientation: str = "standard") -> BandStructure:
    """Diagonalize the Bloch matrix on ``n_k`` uniform points over [-pi, pi)."""
    if n_k < 1:
        raise LatticeError(f"n_k must be >= 1, got {n_k}")
    k_values = -np.pi + 2 * np.pi * np.arange(n_k) / n_k
    energies = np.empty((n_k, 3 * links.n_components))
    for i, k in enumerate(k_values):
        energies[i] = np.linalg.eigvalsh(bloch_hamiltonian(links, k, orientation))
    return BandStructure(k_values=k_values, energies=energies)


def flatness_metric(bands: BandStructure) -> np.ndarray:
    """Per-band maximum deviation from the band's mean energy (units of J)."""
    mean = bands.energies.mean(axis=0)
    return np.max(np.abs(bands.energies - mean[None, :]), axis=0)


def chiral_signs(n_components: int) -> np.ndarray:
    """Diagonal of the chiral operator in the Bloch basis: +1 on A, -1 on B/C."""
    n = n_components
    signs = -np.ones(3 * n)
    signs[:n] = 1.0
    return signs


def symmetry_checks(links: LinkSet, n_k: int = 17, orientation: str = "standard") -> dict:
    """Chiral / pseudospin-time-reversal / particle-hole booleans over a k-grid.

    chiral:  C H_k + H_k C = 0 with C = diag(+1 on A modes, -1 on B/C modes);
    trs_pseudospin:  H_{-k} = conj(H_k);  ph: both at once.  Tolerance
    :data:`SYMMETRY_TOL` in operator norm.
    """
    signs = chiral_signs(links.n_components)
    chiral = True
    trs = True
    k_values = -np.pi + 2 * np.pi * np.arange(n_k) / n_k
    for k in k_values:
        h_k = bloch_hamiltonian(links, k, orientation)
        anti = signs[:, None] * h_k + h_k * signs[None, :]
        if np.linalg.norm(anti, ord=2) > SYMMETRY_TOL:
            chiral = False
        h_mk = bloch_hamiltonian(links, -k, orientation)
        if np.linalg.norm(h_mk - h_k.conj(), ord=2) > SYMMETRY_TOL:
            trs = False
    return {"chiral": chiral, "trs_pseudospin": trs, "ph": chiral and trs}


@dataclass(frozen=True)
class CompactState:
    """A compact localized eigenstate on a window of consecutive cells.

    ``amplitudes`` maps (cell_offset, site, mode) -> complex amplitude for the
    entries above 1e-12 in magnitude; ``vector`` is the same state over the
    full window block (cell-major A,B,C ordering), L2-normalized with the
    largest-magnitude entry made real positive.  ``energy`` is in units of J.
    """

    energy: float
    window_cells: int
    n_components: int
    vector: np.ndarray = field(repr=False)
    amplitudes: dict = field(repr=False)
    support_cells: int = 0

    def embed(self, spec: LatticeSpec, anchor_cell: int) -> np.ndarray:
        """Place the window into a chain, window offset 0 at ``anchor_cell``.

        Periodic chains wrap; open chains require the window to fit.
        """
        full = np.zeros(spec.dim, dtype=np.complex128)
        n = spec.n_components
        if spec.n_components != self.n_components:
            raise LatticeError("component count mismatch between state and spec")
        for offset in range(self.window_cells):
            cell = anchor_cell + offset
            if spec.boundary == "periodic":
                cell %= spec.n_cells
            elif not 0 <= cell < spec.n_cells:
                raise LatticeError(
                    f"window cell {cell} outside open chain of {spec.n_cells} cells"
                )
            for s_ord, site in enumerate(SITES):
                block = self.vector[(offset * 3 + s_ord) * n : (offset * 3 + s_ord + 1) * n]
                full[_block_slice(spec, cell, site)] = block
        return full


def _normalize_compact(vec: np.ndarray) -> np.ndarray:
    vec = vec / np.linalg.norm(vec)
    peak = int(np.argmax(np.abs(vec)))
    phase = vec[peak] / abs(vec[peak])
    return vec / phase


def extract_compact_states(
    links: LinkSet,
    energy: float,
    window_cells: int,
    orientation: str = "standard",
) -> list[CompactState]:
    """Compact eigenstates at ``energy`` (units of J) on a window of cells.

    Builds an embedding chain of 7 (or more) open cells with unit J, restricts
    (H - E) to the columns of a centered window of ``window_cells`` cells, and
    returns an orthonormal basis of its null space: exactly the states that
    stay eigenstates when surrounded by more lattice.  Each state is checked
    to residual norm <= 1e-10 on the embedding.  ``window_cells`` must lie in
    [1, 3].  Returns [] when no compact state exists at that energy/window.
    """
    if not 1 <= window_cells <= 3:
        raise LatticeError(f"window_cells must be in [1, 3], got {window_cells}")
    bands = band_structure(links, n_k=32, orientation=orientation)
    if np.min(np.abs(bands.energies - energy)) > 1e-8:
        raise LatticeError(
            f"energy {energy} is not within 1e-8 of any band energy of this model"
        )
    embed_cells = max(7, window_cells + 4)
    spec = LatticeSpec(
        n_components=links.n_components,
        n_cells=embed_cells,
        boundary="open",
        hopping_j=1.0,
    )
    model = build_real_space(spec, links, orientation)
    start = (embed_cells - window_cells) // 2
    n = spec.n_components
    cols = np.concatenate(
        [
            np.arange((cell * 3) * n, (cell * 3 + 3) * n)
            for cell in range(start, start + window_cells)
        ]
    )
    shifted = model.h_real - energy * np.eye(spec.dim)
    restricted = shifted[:, cols]  # tall: embedding dim > window width
    _, sing, vh = np.linalg.svd(restricted, full_matrices=True)
    scale = sing[0] if sing[0] > 0 else 1.0
    width = cols.size
    null_dim = int(np.sum(sing <= RESIDUAL_TOL * scale))
    if null_dim == 0:
        return []
    basis = vh.conj().T[:, width - null_dim :]
    states = []
    for idx in range(basis.shape[1]):
        vec = _normalize_compact(basis[:, idx])
        full = np.zeros(spec.dim, dtype=np.complex128)
        full[cols] = vec
        residual = np.linalg.norm(shifted @ full)
        assert residual <= RESIDUAL_TOL, f"embedding residual {residual:.2e} too large"
        amplitudes = {}
        occupied = set()
        for local, value in enumerate(vec):
            if abs(value) <= 1e-12:
                continue
            block = local // n
            offset, s_ord = divmod(block, 3)
            amplitudes[(offset, SITES[s_ord], local % n + 1)] = complex(value)
            occupied.add(offset)
        support = (max(occupied) - min(occupied) + 1) if occupied else 0
        states.append(
            CompactState(
                energy=float(energy),
                window_cells=window_cells,
                n_components=n,
                vector=vec,
                amplitudes=amplitudes,
                support_cells=support,
            )
        )
    return states
