"""Block-partitioned complex linear algebra.

Block indices are 0-based throughout the package: block ``a`` of a
partition ``(p_0, ..., p_{s-1})`` covers rows ``offsets[a]:offsets[a+1]``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from isolab.errors import SpectrumError, StratumError

Matrix = npt.NDArray[np.complex128]


def as_matrix(M: npt.ArrayLike, n: int | None = None) -> Matrix:
    """Return ``M`` as a finite square complex128 array.

    Args:
        M: Anything numpy can turn into a 2-D array.
        n: Required dimension, if known.

    Returns:
        Matrix: A fresh complex copy.
    """
    out = np.array(M, dtype=np.complex128)
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {out.shape}")
    if n is not None and out.shape[0] != n:
        raise ValueError(f"expected a {n}x{n} matrix, got {out.shape[0]}x{out.shape[1]}")
    if not np.all(np.isfinite(out)):
        raise ValueError("matrix has non-finite entries")
    return out


def frozen(M: npt.ArrayLike) -> Matrix:
    """Complex read-only copy, used for fields of immutable value types."""
    out = np.array(M, dtype=np.complex128)
    out.setflags(write=False)
    return out


def max_norm(M: npt.ArrayLike) -> float:
    """Entrywise max-norm; 0.0 for empty input."""
    arr = np.asarray(M)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


@dataclass(frozen=True)
class BlockPartition:
    """The block sizes (p_0, ..., p_{s-1}) that fix a stratum."""

    sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        sizes = tuple(int(p) for p in self.sizes)
        if not sizes:
            raise ValueError("a partition needs at least one block")
        if any(p < 1 for p in sizes):
            raise ValueError(f"block sizes must be positive, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @property
    def s(self) -> int:
        return len(self.sizes)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(x) for x in np.concatenate(([0], np.cumsum(self.sizes))))

    def span(self, a: int) -> slice:
        """Row/column range of block ``a``."""
        if not 0 <= a < self.s:
            raise IndexError(f"block index {a} out of range for {self.s} blocks")
        off = self.offsets
        return slice(off[a], off[a + 1])

    def block_of(self) -> npt.NDArray[np.int_]:
        """Block index of every row, as an array of length n."""
        return np.repeat(np.arange(self.s), self.sizes)


def get_block(M: npt.ArrayLike, part: BlockPartition, a: int, b: int) -> Matrix:
    """Return a copy of the (a, b) block of ``M``."""
    arr = np.asarray(M)
    if arr.shape != (part.n, part.n):
        raise ValueError(f"expected a {part.n}x{part.n} matrix, got {arr.shape}")
    return np.array(arr[part.span(a), part.span(b)], dtype=np.complex128)


def set_block(M: npt.ArrayLike, part: BlockPartition, a: int, b: int, block: npt.ArrayLike) -> Matrix:
    """Return a copy of ``M`` with its (a, b) block replaced."""
    out = np.array(M, dtype=np.complex128)
    if out.shape != (part.n, part.n):
        raise ValueError(f"expected a {part.n}x{part.n} matrix, got {out.shape}")
    rows, cols = part.span(a), part.span(b)
    blk = np.asarray(block, dtype=np.complex128)
    expected = (part.sizes[a], part.sizes[b])
    if blk.shape != expected:
        raise ValueError(f"block ({a}, {b}) must have shape {expected}, got {blk.shape}")
    out[rows, cols] = blk
    return out


def block_mask(part: BlockPartition) -> npt.NDArray[np.bool_]:
    """Boolean n×n mask of the diagonal blocks."""
    idx = part.block_of()
    return idx[:, None] == idx[None, :]


def block_diagonal_part(M: npt.ArrayLike, part: BlockPartition) -> Matrix:
    """A_D = A_{[0,0]} ⊕ ... ⊕ A_{[s-1,s-1]}."""
    return np.where(block_mask(part), np.asarray(M, dtype=np.complex128), 0.0)


def off_diagonal_part(M: npt.ArrayLike, part: BlockPartition) -> Matrix:
    return np.where(block_mask(part), 0.0, np.asarray(M, dtype=np.complex128))


def projector(part: BlockPartition, j: int) -> Matrix:
    """E_{p_j}: the identity on block j, zero elsewhere."""
    diag = np.zeros(part.n, dtype=np.complex128)
    diag[part.span(j)] = 1.0
    return np.diag(diag)


def block_inverse(T: npt.ArrayLike, part: BlockPartition) -> Matrix:
    """Inverse of a block-diagonal matrix, computed block by block."""
    out = np.zeros((part.n, part.n), dtype=np.complex128)
    for a in range(part.s):
        sl = part.span(a)
        out[sl, sl] = np.linalg.inv(np.asarray(T)[sl, sl])
    return out


@dataclass(frozen=True)
class Lambda:
    """The distinct eigenvalues λ_0, ..., λ_{s-1} of Λ with their partition."""

    values: tuple[complex, ...]
    partition: BlockPartition

    def __post_init__(self) -> None:
        values = tuple(complex(v) for v in self.values)
        if len(values) != self.partition.s:
            raise ValueError(f"expected {self.partition.s} eigenvalues, got {len(values)}")
        if not all(np.isfinite(v) for v in values):
            raise ValueError("λ must be finite")
        object.__setattr__(self, "values", values)

    @property
    def array(self) -> npt.NDArray[np.complex128]:
        return np.array(self.values, dtype=np.complex128)

    @property
    def margin(self) -> float:
        """Smallest |λ_a - λ_b|; infinite when s = 1."""
        lam = self.array
        if lam.size < 2:
            return float("inf")
        gaps = np.abs(lam[:, None] - lam[None, :])
        return float(np.min(gaps[~np.eye(lam.size, dtype=bool)]))

    @property
    def max_gap(self) -> float:
        lam = self.array
        if lam.size < 2:
            return 0.0
        return float(np.max(np.abs(lam[:, None] - lam[None, :])))

    def matrix(self) -> Matrix:
        """Λ = λ_0 I_{p_0} ⊕ ... ⊕ λ_{s-1} I_{p_{s-1}}."""
        return np.diag(np.repeat(self.array, self.partition.sizes))

    def require_separated(self, tol: float) -> None:
        if self.margin < tol:
            raise StratumError(f"eigenvalues of Λ closer than {tol:g}: margin {self.margin:.3e}")

    def shifted(self, values: npt.ArrayLike) -> Lambda:
        return Lambda(tuple(np.asarray(values, dtype=np.complex128)), self.partition)


def _cluster(values: npt.NDArray[np.complex128], tol: float) -> list[list[int]]:
    """Single-linkage clusters of indices whose values lie within ``tol``."""
    parent = list(range(values.size))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(values.size):
        for j in range(i + 1, values.size):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(values.size):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _eigvals(M: Matrix) -> npt.NDArray[np.complex128]:
    if not np.all(np.isfinite(M)):
        raise SpectrumError("matrix has non-finite entries")
    try:
        return scipy.linalg.eigvals(M)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SpectrumError(f"eigen-solver failed: {exc}") from exc


def _sorted_spectrum(M: Matrix) -> tuple[complex, ...]:
    return tuple(sorted((complex(v) for v in _eigvals(M)), key=lambda v: (v.real, v.imag)))


def spectrum(M: npt.ArrayLike, cluster_tol: float | None = None) -> list[tuple[complex, int]]:
    """Eigenvalues with multiplicities, clustered and sorted lexicographically.

    Args:
        M: Square matrix.
        cluster_tol: Eigenvalues closer than this merge into one cluster.
            Defaults to 1e-8·‖M‖.

    Returns:
        list[tuple[complex, int]]: (cluster mean, multiplicity) pairs sorted
        by real part, then imaginary part.
    """
    arr = np.asarray(M, dtype=np.complex128)
    values = _eigvals(arr)
    tol = 1e-8 * max_norm(arr) if cluster_tol is None else cluster_tol
    clusters = [(complex(np.mean(values[g])), len(g)) for g in _cluster(values, tol)]
    return sorted(clusters, key=lambda c: (c[0].real, c[0].imag))


class ResonantPair(NamedTuple):
    """Indices i, j with μ_j - μ_i = ell ≥ 1.

    Partial pairs (``block`` set) index the diagonal of J; global pairs
    (``block`` None) index ``JordanizationResult.spectrum_A``.
    """

    block: int | None
    i: int
    j: int
    ell: int


def integer_gaps(mu: Sequence[complex], int_tol: float) -> list[tuple[int, int, int]]:
    """All (i, j, ell) with μ_j - μ_i within int_tol of a positive integer ell."""
    out = []
    for i, mi in enumerate(mu):
        for j, mj in enumerate(mu):
            d = complex(mj) - complex(mi)
            ell = round(d.real)
            if ell >= 1 and abs(d - ell) <= int_tol:
                out.append((i, j, ell))
    return out


@dataclass(frozen=True)
class JordanizationResult:
    """T with T⁻¹ A_D T = J, both block-diagonal for ``partition``.

    ``spectrum_A`` holds the eigenvalues of the full matrix A, sorted by real
    then imaginary part.
    """

    partition: BlockPartition
    T: Matrix
    J: Matrix
    eigenvalues: tuple[tuple[tuple[complex, int], ...], ...]
    jordan_block_sizes: tuple[tuple[int, ...], ...]
    resonant_pairs: tuple[ResonantPair, ...]
    residual: float
    condition: float
    warnings: tuple[str, ...] = field(default=())
    spectrum_A: tuple[complex, ...] = field(default=())

    @property
    def mu(self) -> npt.NDArray[np.complex128]:
        """Diagonal of J."""
        return np.diag(self.J).copy()

    @property
    def diagonalizable(self) -> bool:
        return all(size == 1 for sizes in self.jordan_block_sizes for size in sizes)

    @property
    def T_inv(self) -> Matrix:
        return block_inverse(self.T, self.partition)


def _normalize_phase(V: Matrix) -> complex:
    """Scalar making the first significant entry of V's first column real positive."""
    col = V[:, 0]
    big = np.max(np.abs(col))
    k = int(np.argmax(np.abs(col) > 1e-12 * big))
    return complex(np.conj(col[k]) / abs(col[k]))


def _null_basis(M: Matrix, tol: float) -> Matrix:
    _, s, vh = np.linalg.svd(M)
    rank = int(np.sum(s > tol))
    return vh[rank:].conj().T


def _jordan_chains(B: Matrix, mu: complex, mult: int, tol: float) -> tuple[Matrix, list[int]]:
    """Generalized eigenvectors of one eigenvalue cluster, as Jordan chains."""
    p = B.shape[0]
    N = B - mu * np.eye(p)
    scale = max(1.0, max_norm(N))
    kernels: list[Matrix] = [np.zeros((p, 0), dtype=np.complex128)]
    power = np.eye(p, dtype=np.complex128)
    while kernels[-1].shape[1] < mult:
        power = power @ N
        kernel = _null_basis(power, tol * scale ** len(kernels))
        if kernel.shape[1] <= kernels[-1].shape[1] or len(kernels) > mult:
            raise SpectrumError(f"could not resolve the Jordan structure of eigenvalue {mu:.6g}")
        kernels.append(kernel)
    dims = [k.shape[1] for k in kernels]
    top = len(kernels) - 1
    at_least = [dims[k] - dims[k - 1] for k in range(1, top + 1)] + [0]

    chains: list[list[npt.NDArray[np.complex128]]] = []
    for k in range(top, 0, -1):
        count = at_least[k - 1] - at_least[k]
        if count <= 0:
            continue
        excluded = [kernels[k - 1]] + [
            np.linalg.matrix_power(N, len(c) - k) @ c[-1][:, None] for c in chains if len(c) > k
        ]
        E = np.hstack(excluded)
        K = kernels[k]
        if E.shape[1]:
            Q, _ = np.linalg.qr(E)
            P = K - Q @ (Q.conj().T @ K)
        else:
            P = K
        _, _, vh = np.linalg.svd(P)
        for c in vh[:count].conj():
            v = K @ c
            chain = [np.linalg.matrix_power(N, k - 1 - i) @ v for i in range(k)]
            size = np.linalg.norm(chain[0])
            chains.append([w / size for w in chain])
    columns = [w for chain in chains for w in chain]
    return np.column_stack(columns), [len(c) for c in chains]


def _order_key(descending: bool):
    sign = -1.0 if descending else 1.0
    return lambda z: (sign * round(complex(z).real, 12), sign * round(complex(z).imag, 12))


def _jordanize_block(
    B: Matrix, cluster_tol: float, descending: bool
) -> tuple[Matrix, Matrix, list[tuple[complex, int]], list[int]]:
    p = B.shape[0]
    if p == 1:
        return np.eye(1, dtype=np.complex128), B.copy(), [(complex(B[0, 0]), 1)], [1]
    clusters = spectrum(B, cluster_tol)
    key = _order_key(descending)
    if all(mult == 1 for _, mult in clusters):
        try:
            w, V = scipy.linalg.eig(B)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SpectrumError(f"eigen-solver failed: {exc}") from exc
        order = sorted(range(p), key=lambda i: key(w[i]))
        w, V = w[order], V[:, order]
        for c in range(p):
            V[:, c] = V[:, c] / np.linalg.norm(V[:, c])
            V[:, c] = V[:, c] * _normalize_phase(V[:, c : c + 1])
        return V, np.diag(w), sorted(clusters, key=lambda c: key(c[0])), [1] * p

    columns, diag, sizes = [], [], []
    for mu, mult in sorted(clusters, key=lambda c: key(c[0])):
        V, chain_sizes = _jordan_chains(B, mu, mult, cluster_tol)
        start = 0
        for size in chain_sizes:
            chain = V[:, start : start + size]
            columns.append(chain * _normalize_phase(chain))
            diag.extend([mu] * size)
            sizes.append(size)
            start += size
    T = np.hstack(columns)
    J = np.diag(np.array(diag, dtype=np.complex128))
    pos = 0
    for size in sizes:
        for i in range(size - 1):
            J[pos + i, pos + i + 1] = 1.0
        pos += size
    return T, J, sorted(clusters, key=lambda c: key(c[0])), sizes


def jordanize_diag_blocks(
    A: npt.ArrayLike,
    part: BlockPartition,
    tol: float = 1e-9,
    cluster_tol: float | None = None,
    cond_max: float = 1e8,
    int_tol: float = 1e-7,
    descending: bool = True,
) -> JordanizationResult:
    """Bring every diagonal block A_{[k,k]} to Jordan form.

    Each block with only simple eigenvalues gets its eigenvector matrix; any
    cluster of multiplicity > 1 is resolved through the kernels of
    (A_{[k,k]} - μI)^m. Columns have unit 2-norm with the first significant
    entry real positive; eigenvalues are ordered by decreasing real part,
    then imaginary part (increasing with ``descending=False``).

    Args:
        A: The n×n matrix; only its diagonal blocks are used.
        part: The block partition.
        tol: Relative reconstruction tolerance; a larger residual is a warning.
        cluster_tol: Clustering and rank tolerance; defaults to 1e-6·max(‖A_D‖, 1).
            Rounding splits a defective eigenvalue of a k×k Jordan block by
            about ε^(1/k)·‖A_D‖, so the default sits above the √ε split of
            2×2 blocks; eigenvalues closer than it are merged.
        cond_max: Condition number of T above which a warning is attached.
        int_tol: Tolerance for detecting integer eigenvalue gaps.
        descending: Eigenvalue order inside each block.

    Returns:
        JordanizationResult: T, J and the per-block structure.
    """
    A = as_matrix(A, part.n)
    AD = block_diagonal_part(A, part)
    ctol = 1e-6 * max(max_norm(AD), 1.0) if cluster_tol is None else cluster_tol
    T = np.zeros_like(A)
    J = np.zeros_like(A)
    eigenvalues, sizes, resonant = [], [], []
    for k in range(part.s):
        sl = part.span(k)
        Tk, Jk, clusters, block_sizes = _jordanize_block(AD[sl, sl], ctol, descending)
        T[sl, sl], J[sl, sl] = Tk, Jk
        eigenvalues.append(tuple(clusters))
        sizes.append(tuple(block_sizes))
        mu = np.diag(Jk)
        for i, j, ell in integer_gaps(mu, int_tol):
            resonant.append(ResonantPair(k, sl.start + i, sl.start + j, ell))

    warnings = []
    condition = float(np.linalg.cond(T))
    if condition > cond_max:
        warnings.append(f"ill-conditioned Jordan basis: cond(T) = {condition:.3e}")
    residual = max_norm(block_inverse(T, part) @ AD @ T - J)
    if residual > tol * max(max_norm(AD), 1.0):
        warnings.append(f"Jordan reconstruction residual {residual:.3e} above tolerance")
    return JordanizationResult(
        partition=part,
        T=frozen(T),
        J=frozen(J),
        eigenvalues=tuple(eigenvalues),
        jordan_block_sizes=tuple(sizes),
        resonant_pairs=tuple(resonant),
        residual=residual,
        condition=condition,
        warnings=tuple(warnings),
        spectrum_A=_sorted_spectrum(A),
    )


def jordanization_from(
    A: npt.ArrayLike, part: BlockPartition, T: npt.ArrayLike, J: npt.ArrayLike, tol: float = 1e-9, int_tol: float = 1e-7
) -> JordanizationResult:
    """Wrap an explicitly supplied (T, J) pair after checking it.

    Raises:
        ValueError: If T or J is not block-diagonal or T⁻¹ A_D T ≠ J.
    """
    A = as_matrix(A, part.n)
    T = as_matrix(T, part.n)
    J = as_matrix(J, part.n)
    if max_norm(off_diagonal_part(T, part)) or max_norm(off_diagonal_part(J, part)):
        raise ValueError("supplied T and J must be block-diagonal")
    AD = block_diagonal_part(A, part)
    residual = max_norm(block_inverse(T, part) @ AD @ T - J)
    if residual > tol * max(max_norm(AD), 1.0):
        raise ValueError(f"supplied T does not reduce A_D to J (residual {residual:.3e})")
    if max_norm(np.tril(J, -1)) or max_norm(np.triu(J, 2)):
        raise ValueError("supplied J is not in Jordan form")
    eigenvalues, sizes, resonant = [], [], []
    for k in range(part.s):
        sl = part.span(k)
        Jk = J[sl, sl]
        mu = np.diag(Jk)
        chains, length = [], 1
        for i in range(Jk.shape[0] - 1):
            if Jk[i, i + 1] != 0:
                length += 1
            else:
                chains.append(length)
                length = 1
        chains.append(length)
        sizes.append(tuple(chains))
        eigenvalues.append(tuple(spectrum(Jk, 0.0)))
        for i, j, ell in integer_gaps(mu, int_tol):
            resonant.append(ResonantPair(k, sl.start + i, sl.start + j, ell))
    return JordanizationResult(
        partition=part,
        T=frozen(T),
        J=frozen(J),
        eigenvalues=tuple(eigenvalues),
        jordan_block_sizes=tuple(sizes),
        resonant_pairs=tuple(resonant),
        residual=residual,
        condition=float(np.linalg.cond(T)),
        spectrum_A=_sorted_spectrum(A),
    )


@dataclass(frozen=True)
class ResonanceReport:
    """Partial (inside one block) and global (whole spectrum) integer gaps."""

    partial: tuple[ResonantPair, ...]
    global_: tuple[ResonantPair, ...]

    @property
    def resonant(self) -> bool:
        return bool(self.partial or self.global_)


def detect_resonances(
    jr: JordanizationResult, int_tol: float = 1e-7, spectrum0: Sequence[complex] | None = None
) -> ResonanceReport:
    """List eigenvalue pairs differing by a nonzero integer.

    Args:
        jr: Jordanization of the diagonal blocks.
        int_tol: Distance to an integer still counted as resonant.
        spectrum0: Eigenvalues of the full matrix for the z = 0 resonances;
            ``jr.spectrum_A`` is used when omitted.

    Returns:
        ResonanceReport: Partial pairs carry their block, global pairs do not.
    """
    mu = np.asarray(jr.spectrum_A if spectrum0 is None else spectrum0, dtype=np.complex128)
    global_ = tuple(ResonantPair(None, i, j, ell) for i, j, ell in integer_gaps(mu, int_tol))
    return ResonanceReport(partial=jr.resonant_pairs, global_=global_)


def check_jordan_consistency(results: Sequence[JordanizationResult]) -> float:
    """Largest deviation of J across λ-samples.

    A pointwise Jordanization cannot certify holomorphic reducibility; a
    J that stays put across samples is the observable substitute.
    """
    if not results:
        return 0.0
    ref = results[0].J
    return max(max_norm(r.J - ref) for r in results)
