"""Unitary link variables and interference algebra for multi-component rhombic chains.

A rhombic (diamond) chain couples each spinal site A to two apical sites B and C.
With N internal components per site, every bond carries an N x N unitary link
matrix, and the two-step paths A -> B -> A' and A -> C -> A' compose to the path
unitaries ``path_up = U2 @ U1`` and ``path_down = U4 @ U3``.  Their average

    I = (path_up + path_down) / 2

is the interference matrix: a particle hopping one cell over picks up I, so the
walk is caged whenever I is nilpotent, and the nilpotency index sets the cage
size.  This module provides the validated container for the four links, the
interference/nilpotency computations, the three constructor families used
throughout the package, and a JSON wire format for link sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "UNITARITY_TOL",
    "NILPOTENCY_TOL",
    "GaugeError",
    "LinkSet",
    "InterferenceReport",
    "assert_unitary",
    "interference_matrix",
    "nilpotent_power",
    "shift_family",
    "stride_family",
    "u2_family",
    "links_to_json",
    "links_from_json",
]

#: Maximum operator-norm deviation from unitarity accepted for a link matrix.
UNITARITY_TOL = 1e-12

#: Entrywise magnitude below which a matrix power counts as zero.
NILPOTENCY_TOL = 1e-12


class GaugeError(ValueError):
    """Raised when a link matrix or link-set document violates its contract."""


def assert_unitary(matrix, tol: float = UNITARITY_TOL, name: str = "matrix") -> np.ndarray:
    """Validate that ``matrix`` is square and unitary within ``tol``.

    Returns the matrix as a C-contiguous complex128 array.  The deviation is
    measured in operator (spectral) norm of ``U† U - 1``.
    """
    arr = np.ascontiguousarray(matrix, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise GaugeError(f"{name} must be square, got shape {arr.shape}")
    defect = arr.conj().T @ arr - np.eye(arr.shape[0])
    deviation = np.linalg.norm(defect, ord=2)
    if deviation > tol:
        raise GaugeError(
            f"{name} is not unitary: operator-norm deviation {deviation:.3e} > {tol:.1e}"
        )
    return arr


@dataclass(frozen=True)
class LinkSet:
    """The four rightward-bond link unitaries of one rhombic unit cell.

    ``u1``: A_n -- B_n bond, ``u2``: B_n -- A_{n+1} bond, ``u3``: A_n -- C_n
    bond, ``u4``: C_n -- A_{n+1} bond.  All four must share one dimension N and
    be unitary to within :data:`UNITARITY_TOL`.
    """

    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray
    u4: np.ndarray

    def __post_init__(self):
        mats = {}
        for label in ("u1", "u2", "u3", "u4"):
            mats[label] = assert_unitary(getattr(self, label), name=label)
        sizes = {m.shape[0] for m in mats.values()}
        if len(sizes) != 1:
            raise GaugeError(f"link matrices must share one dimension, got {sorted(sizes)}")
        for label, arr in mats.items():
            object.__setattr__(self, label, arr)

    @property
    def n_components(self) -> int:
        """Number of internal components N carried by every site."""
        return self.u1.shape[0]

    def links(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (self.u1, self.u2, self.u3, self.u4)


@dataclass(frozen=True)
class InterferenceReport:
    """Interference matrix of a link set together with its path unitaries.

    ``nilpotent_power`` is the smallest m with ``matrix**m == 0`` (entrywise
    below :data:`NILPOTENCY_TOL`), or None if no power up to N vanishes.
    """

    matrix: np.ndarray
    path_up: np.ndarray
    path_down: np.ndarray
    nilpotent_power: int | None = field(default=None)


def interference_matrix(links: LinkSet) -> InterferenceReport:
    """Average of the two path unitaries, with its nilpotency index.

    The path compositions are ``path_up = U2 @ U1`` and ``path_down = U4 @ U3``
    (first leg applied first), and the interference matrix is their mean.
    """
    path_up = links.u2 @ links.u1
    path_down = links.u4 @ links.u3
    matrix = 0.5 * (path_up + path_down)
    power = nilpotent_power(matrix)
    return InterferenceReport(
        matrix=matrix, path_up=path_up, path_down=path_down, nilpotent_power=power
    )


def nilpotent_power(
    matrix, max_power: int | None = None, tol: float = NILPOTENCY_TOL
) -> int | None:
    """Smallest m >= 1 with ``matrix**m`` entrywise below ``tol``, else None.

    The scan caps at ``max_power`` (default: the matrix dimension N, since an
    N x N nilpotent matrix has index at most N).  The m-1 power is nonzero by
    minimality of the scan, so a returned m is the exact nilpotency index.
    """
    arr = np.asarray(matrix, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise GaugeError(f"nilpotent_power needs a square matrix, got shape {arr.shape}")
    n = arr.shape[0]
    if max_power is None:
        max_power = n
    if max_power < 1:
        raise GaugeError(f"max_power must be >= 1, got {max_power}")
    power = arr.copy()
    for m in range(1, max_power + 1):
        if np.max(np.abs(power)) < tol:
            return m
        power = power @ arr
    return None


def shift_family(n: int) -> LinkSet:
    """Link set whose interference matrix is the one-step shift of index N.

    ``U1 = U3 = identity``; ``U2`` is the cyclic shift permutation
    (superdiagonal ones plus a wrap in the lower-left corner) and ``U4`` is the
    same shift with the wrap entry negated, so the wrap cancels in the average:

        I = sum_{k=1}^{N-1} |k><k+1|,

    which is nilpotent with index exactly N.  ``n = 1`` degenerates to the
    single-component pi-flux chain (I = 0).
    """
    if n < 1:
        raise GaugeError(f"shift_family needs n >= 1, got {n}")
    eye = np.eye(n, dtype=np.complex128)
    up = np.zeros((n, n), dtype=np.complex128)
    for k in range(n - 1):
        up[k, k + 1] = 1.0
    down = up.copy()
    up[n - 1, 0] = 1.0
    down[n - 1, 0] = -1.0
    return LinkSet(u1=eye, u2=up, u3=eye, u4=down)


def stride_family(n: int, power: int) -> LinkSet:
    """Link set whose interference matrix is a partial stride-shift.

    Targets ``I = sum_{k=1}^{power-1} |k><k + n - power + 1|``: the first
    ``power-1`` components are fed from the top ``power-1`` columns with stride
    ``n - power + 1``.  The partial permutation (column k+n-power+1 -> row k) is
    extended to a full permutation P by assigning the remaining rows
    ``power..n`` to the remaining columns ``1..n-power+1`` in ascending order;
    then ``U2 = P`` and ``U4 = P @ D`` with D diagonal, +1 on the columns the
    target uses and -1 elsewhere, so the average wipes the filler entries.
    ``U1 = U3 = identity``.  Requires ``1 < power < n``.
    """
    if not 1 < power < n:
        raise GaugeError(f"stride_family needs 1 < power < n, got n={n}, power={power}")
    stride = n - power + 1
    perm = np.zeros((n, n), dtype=np.complex128)
    for k in range(power - 1):  # target entries: row k, column k + stride
        perm[k, k + stride] = 1.0
    for j in range(n - power + 1):  # filler rows power..n onto columns 1..n-power+1
        perm[power - 1 + j, j] = 1.0
    sign = -np.ones(n)
    sign[stride:] = 1.0  # +1 exactly on the target columns {n-power+2..n} (1-based)
    eye = np.eye(n, dtype=np.complex128)
    return LinkSet(u1=eye, u2=perm, u3=eye, u4=perm * sign[np.newaxis, :])


def u2_family(gamma: float, theta: float = 0.0, psi: float = 0.0) -> LinkSet:
    """Two-component link family with tunable interference weight ``gamma``.

    ``U1 = U4 = identity``; the off-diagonal unitaries

        U2 = [[0, e^{i theta} z], [e^{i psi}, 0]],
        U3 = [[0, e^{i theta} conj(z)], [-e^{i psi}, 0]],  z = gamma + i sqrt(1-gamma^2)

    average to ``I = [[0, gamma e^{i theta}], [0, 0]]`` with |upper entry| =
    gamma, nilpotent with index 2 for any ``0 < gamma <= 1``.  At
    ``(1, 0, 0)`` this is the reference two-component model
    (U2 = [[0,1],[1,0]], U3 = [[0,1],[-1,0]]).
    """
    if not 0.0 < gamma <= 1.0:
        raise GaugeError(f"u2_family needs 0 < gamma <= 1, got {gamma}")
    z = complex(gamma, math.sqrt(max(0.0, 1.0 - gamma * gamma)))
    ph_t = complex(math.cos(theta), math.sin(theta))
    ph_p = complex(math.cos(psi), math.sin(psi))
    u2 = np.array([[0.0, ph_t * z], [ph_p, 0.0]], dtype=np.complex128)
    u3 = np.array([[0.0, ph_t * z.conjugate()], [-ph_p, 0.0]], dtype=np.complex128)
    eye = np.eye(2, dtype=np.complex128)
    return LinkSet(u1=eye, u2=u2, u3=u3, u4=eye)


def _matrix_to_json(arr: np.ndarray) -> list[list[dict[str, float]]]:
    return [[{"re": float(v.real), "im": float(v.imag)} for v in row] for row in arr]


def _matrix_from_json(rows, name: str) -> np.ndarray:
    try:
        data = [[complex(cell["re"], cell["im"]) for cell in row] for row in rows]
    except (TypeError, KeyError) as exc:
        raise GaugeError(f"{name}: each cell must be an object with 're' and 'im'") from exc
    return np.asarray(data, dtype=np.complex128)


def links_to_json(links: LinkSet) -> dict:
    """Serialize a link set to the JSON wire format (row-major re/im cells)."""
    doc = {"n": links.n_components}
    for label in ("u1", "u2", "u3", "u4"):
        doc[label] = _matrix_to_json(getattr(links, label))
    return doc


def links_from_json(doc: dict) -> LinkSet:
    """Rebuild a link set from its JSON document; validates shape and unitarity."""
    if not isinstance(doc, dict):
        raise GaugeError("link-set document must be a JSON object")
    missing = [k for k in ("n", "u1", "u2", "u3", "u4") if k not in doc]
    if missing:
        raise GaugeError(f"link-set document missing keys: {missing}")
    n = doc["n"]
    mats = {label: _matrix_from_json(doc[label], label) for label in ("u1", "u2", "u3", "u4")}
    for label, arr in mats.items():
        if arr.shape != (n, n):
            raise GaugeError(f"{label} has shape {arr.shape}, expected ({n}, {n})")
    return LinkSet(**mats)
