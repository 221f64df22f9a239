"""Finite-dimensional *-algebra engine on complex matrices.

Algebras are always concrete: a unital self-adjoint subspace of n x n
matrices closed under products, carried by a Hilbert-Schmidt orthonormal
basis. Ultraweak closure questions degenerate to exact span equalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .groups import Lattice, PhasePoint

# singular values / residuals below RANK_RTOL x scale count as zero
RANK_RTOL = 1e-10
SPAN_ATOL = 1e-10


class SpanError(ValueError):
    """A span-level invariant failed (missing identity, wrong closure...)."""


class InclusionError(ValueError):
    """An expected subalgebra containment does not hold."""


class FaithfulnessError(ValueError):
    """A functional or action that must be faithful is degenerate."""


class SpectralSplitError(RuntimeError):
    """Random central elements kept producing unresolvable eigenvalue clusters."""


def _vec(mats: np.ndarray) -> np.ndarray:
    mats = np.asarray(mats, dtype=complex)
    return mats.reshape(mats.shape[:-2] + (mats.shape[-1] * mats.shape[-2],))


def orthonormal_extension(
    basis_flat: np.ndarray | None,
    candidates_flat: np.ndarray,
    rtol: float = RANK_RTOL,
) -> np.ndarray:
    """Rows to append to an orthonormal row basis to cover the candidates.

    Batched pre-filter followed by modified Gram-Schmidt with a
    re-orthogonalization pass; deterministic given input order.
    """
    cands = np.asarray(candidates_flat, dtype=complex)
    if cands.size == 0:
        return np.zeros((0, 0 if basis_flat is None else basis_flat.shape[1]), dtype=complex)
    scales = np.maximum(np.linalg.norm(cands, axis=1), 1.0)
    if basis_flat is not None and basis_flat.shape[0]:
        resid = cands - (cands @ basis_flat.conj().T) @ basis_flat
    else:
        resid = cands.copy()
    keep = np.linalg.norm(resid, axis=1) > (rtol / 4.0) * scales
    rows: list[np.ndarray] = []
    for v, scale in zip(cands[keep], scales[keep]):
        w = v
        for _ in range(2):
            if basis_flat is not None and basis_flat.shape[0]:
                w = w - basis_flat.T @ (basis_flat.conj() @ w)
            if rows:
                new = np.array(rows)
                w = w - new.T @ (new.conj() @ w)
        nrm = np.linalg.norm(w)
        if nrm > rtol * scale:
            rows.append(w / nrm)
    if not rows:
        return np.zeros((0, cands.shape[1]), dtype=complex)
    return np.array(rows)


class StarAlgebra:
    """A unital self-adjoint matrix algebra with an HS-orthonormal basis."""

    def __init__(
        self,
        basis: np.ndarray,
        generators: Sequence[np.ndarray] | None = None,
        check: bool = True,
    ):
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise SpanError(f"basis must be a stack of square matrices, got {basis.shape}")
        self.basis = basis
        self.ambient_dim = int(basis.shape[1])
        self.basis_flat = _vec(basis)
        self.generators = None if generators is None else tuple(
            np.asarray(g, dtype=complex) for g in generators
        )
        if check:
            gram = self.basis_flat.conj() @ self.basis_flat.T
            if not np.allclose(gram, np.eye(self.dimension), atol=1e-8):
                raise SpanError("basis is not Hilbert-Schmidt orthonormal")
            eye = np.eye(self.ambient_dim, dtype=complex)
            if not self.contains(eye):
                raise SpanError("identity is not in the span")

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[0])

    def coeffs(self, mat: np.ndarray) -> np.ndarray:
        return self.basis_flat.conj() @ np.asarray(mat, dtype=complex).reshape(-1)

    def reconstruct(self, coeffs: np.ndarray) -> np.ndarray:
        n = self.ambient_dim
        return (np.asarray(coeffs, dtype=complex) @ self.basis_flat).reshape(n, n)

    def project(self, mat: np.ndarray) -> np.ndarray:
        return self.reconstruct(self.coeffs(mat))

    def residual(self, mat: np.ndarray) -> float:
        mat = np.asarray(mat, dtype=complex)
        return float(np.linalg.norm(mat - self.project(mat)))

    def contains(self, mat: np.ndarray, atol: float = SPAN_ATOL) -> bool:
        scale = max(1.0, float(np.linalg.norm(mat)))
        return self.residual(mat) <= atol * scale

    def identity(self) -> np.ndarray:
        return np.eye(self.ambient_dim, dtype=complex)

    def gen_matrices(self) -> tuple[np.ndarray, ...]:
        """Generators if recorded, else the whole basis."""
        if self.generators is not None and len(self.generators):
            return self.generators
        return tuple(self.basis)

    def closure_defect(self) -> float:
        """Max residual of basis products and adjoints against the span (slow)."""
        worst = 0.0
        for a in self.basis:
            worst = max(worst, self.residual(a.conj().T))
            for b in self.basis:
                worst = max(worst, self.residual(a @ b))
        return worst

    def to_dict(self) -> dict:
        return {
            "ambient_dim": self.ambient_dim,
            "basis": [
                [[float(v.real), float(v.imag)] for v in row]
                for mat in self.basis
                for row in mat
            ],
        }


def generate_algebra(gens: Iterable[np.ndarray], ambient_dim: int | None = None) -> StarAlgebra:
    """Smallest unital self-adjoint algebra containing the generators."""
    gens = [np.asarray(g, dtype=complex) for g in gens]
    if gens:
        n = gens[0].shape[0]
        if any(g.shape != (n, n) for g in gens):
            raise SpanError("generators must be square matrices of equal size")
    elif ambient_dim is not None:
        n = int(ambient_dim)
    else:
        raise SpanError("need at least one generator or an explicit ambient dimension")
    closed_gens = []
    for g in gens:
        closed_gens.append(g)
        closed_gens.append(g.conj().T)
    seeds = [np.eye(n, dtype=complex)] + closed_gens
    basis_flat = orthonormal_extension(None, _vec(np.array(seeds)))
    if closed_gens:
        gen_arr = np.array(closed_gens)
        while True:
            cur = basis_flat.reshape(-1, n, n)
            # one-sided products reach every word since the identity is present
            prods = np.einsum("dab,gbc->dgac", cur, gen_arr).reshape(-1, n, n)
            added = orthonormal_extension(basis_flat, _vec(prods))
            if added.shape[0] == 0:
                break
            basis_flat = np.vstack([basis_flat, added])
    return StarAlgebra(basis_flat.reshape(-1, n, n), generators=tuple(gens))


def _nullspace(
    rows: np.ndarray, width: int, rtol: float = RANK_RTOL, scale: float = 0.0
) -> np.ndarray:
    """Orthonormal basis (as rows) of the null space of the stacked map.

    scale carries the magnitude of the inputs the rows were built from, so
    that singular values below rtol*scale count as zero even when every row
    is pure rounding noise (an all-commuting constraint set).
    """
    if rows.shape[0] < width:
        rows = np.vstack([rows, np.zeros((width - rows.shape[0], width), dtype=complex)])
    svals, vh = np.linalg.svd(rows, full_matrices=False)[1:]
    top = float(svals[0]) if svals.size else 0.0
    floor = max(top, float(scale))
    rank = int(np.sum(svals > rtol * floor)) if floor > 0 else 0
    return vh[rank:].conj()


def commutant(alg: StarAlgebra) -> StarAlgebra:
    """Everything commuting with the algebra, via stacked commutator maps."""
    n = alg.ambient_dim
    eye = np.eye(n, dtype=complex)
    blocks = []
    scale = 0.0
    for g in alg.gen_matrices():
        for h in (g, g.conj().T):
            blocks.append(np.kron(eye, h.T) - np.kron(h, eye))
            scale = max(scale, float(np.linalg.norm(h)))
    rows = np.vstack(blocks) if blocks else np.zeros((0, n * n), dtype=complex)
    null_rows = _nullspace(rows, n * n, scale=scale)
    return StarAlgebra(null_rows.reshape(-1, n, n))


def center(alg: StarAlgebra) -> StarAlgebra:
    """The center, solved inside the algebra's own coefficient space."""
    n = alg.ambient_dim
    d = alg.dimension
    blocks = []
    scale = 0.0
    for g in alg.gen_matrices():
        for h in (g, g.conj().T):
            comm = alg.basis @ h - h @ alg.basis
            blocks.append(_vec(comm).T)
            scale = max(scale, float(np.linalg.norm(h)))
    rows = np.vstack(blocks) if blocks else np.zeros((0, d), dtype=complex)
    null_coeffs = _nullspace(rows, d, scale=scale)
    mats = np.einsum("ci,iab->cab", null_coeffs, alg.basis)
    return StarAlgebra(mats)


def span_equal(a: StarAlgebra, b: StarAlgebra, atol: float = SPAN_ATOL) -> tuple[bool, float]:
    """Mutual containment of two spans; returns (equal, worst residual)."""
    worst = 0.0
    for mat in a.basis:
        worst = max(worst, b.residual(mat))
    for mat in b.basis:
        worst = max(worst, a.residual(mat))
    return (a.dimension == b.dimension and worst <= atol, worst)


def minimal_central_projections(
    alg: StarAlgebra, rng: np.random.Generator | None = None
) -> list[np.ndarray]:
    """Mutually orthogonal central projections summing to 1, one per block.

    Spectral grouping of a random self-adjoint central element; retries with
    fresh coefficients when eigenvalue clusters fail to separate.
    """
    zc = center(alg)
    want = zc.dimension
    if rng is None:
        rng = np.random.default_rng(0x5EED)
    herm = (zc.basis + zc.basis.conj().transpose(0, 2, 1)) / 2.0
    skew = (zc.basis - zc.basis.conj().transpose(0, 2, 1)) / 2j
    for _ in range(5):
        re = rng.standard_normal(want)
        im = rng.standard_normal(want)
        elem = np.einsum("i,iab->ab", re, herm) + np.einsum("i,iab->ab", im, skew)
        evals, evecs = np.linalg.eigh(elem)
        spread = max(float(evals[-1] - evals[0]), 1.0)
        cuts = [0]
        for j in range(1, evals.size):
            if evals[j] - evals[j - 1] > 1e-6 * spread:
                cuts.append(j)
        cuts.append(evals.size)
        if len(cuts) - 1 != want:
            continue
        projs = []
        ok = True
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            block = evecs[:, lo:hi]
            proj = block @ block.conj().T
            if zc.residual(proj) > 1e-8 * max(1.0, float(np.linalg.norm(proj))):
                ok = False
                break
            projs.append(proj)
        if not ok:
            continue
        projs.sort(
            key=lambda p: (
                int(round(float(np.trace(p).real))),
                _first_support_index(p),
                np.round(p, 9).tobytes(),
            )
        )
        return projs
    raise SpectralSplitError(
        f"could not isolate {want} central blocks after 5 random splits"
    )


def _first_support_index(proj: np.ndarray) -> int:
    diag = np.abs(np.diag(proj))
    hits = np.nonzero(diag > 1e-6)[0]
    return int(hits[0]) if hits.size else proj.shape[0]


class TraceFunctional:
    """A positive faithful trace, stored by its values on the algebra basis."""

    def __init__(
        self,
        algebra: StarAlgebra,
        values: np.ndarray,
        atol: float = 1e-10,
        check: bool = True,
    ):
        self.algebra = algebra
        self.values = np.asarray(values, dtype=complex).reshape(-1)
        if self.values.shape[0] != algebra.dimension:
            raise SpanError("trace needs one value per basis element")
        # Riesz matrix: trace(X) = Tr(riesz @ X) for X in the span
        self.riesz = np.einsum("i,iab->ba", self.values, algebra.basis.conj())
        self.gram = self._gram()
        if check:
            dev = self.traciality_defect()
            if dev > atol:
                raise SpanError(f"functional is not tracial on the algebra ({dev:.2e})")
            evals = np.linalg.eigvalsh((self.gram + self.gram.conj().T) / 2.0)
            if evals[0] <= 1e-10 * max(float(evals[-1]), 1e-300):
                raise FaithfulnessError(
                    f"trace Gram matrix is not positive definite (min eig {evals[0]:.2e})"
                )

    def _gram(self) -> np.ndarray:
        basis = self.algebra.basis
        bstar = basis.conj().transpose(0, 2, 1)
        left = np.matmul(self.riesz, bstar)          # T b_i^*
        lflat = _vec(left)
        rflat = _vec(basis.transpose(0, 2, 1))       # trace pairing needs b_j^T
        return lflat @ rflat.T                        # K[i, j] = trace(T b_i^* b_j)

    def traciality_defect(self) -> float:
        basis = self.algebra.basis
        comm = np.matmul(self.riesz, basis) - np.matmul(basis, self.riesz)
        pair = _vec(comm) @ _vec(basis.transpose(0, 2, 1)).T
        return float(np.max(np.abs(pair)))

    def __call__(self, mat: np.ndarray) -> complex:
        return complex(np.tensordot(self.riesz, np.asarray(mat, dtype=complex), axes=([0, 1], [1, 0])))

    def on_coeffs(self, coeffs: np.ndarray) -> complex:
        return complex(self.values @ np.asarray(coeffs, dtype=complex))

    def scaled(self, factor: float) -> "TraceFunctional":
        return TraceFunctional(self.algebra, self.values * factor, check=False)

    @classmethod
    def from_matrix_trace(cls, algebra: StarAlgebra) -> "TraceFunctional":
        vals = np.trace(algebra.basis, axis1=1, axis2=2)
        return cls(algebra, vals)

    @classmethod
    def from_function(cls, algebra: StarAlgebra, fn: Callable[[np.ndarray], complex]) -> "TraceFunctional":
        vals = np.array([fn(b) for b in algebra.basis], dtype=complex)
        return cls(algebra, vals)


@dataclass
class GnsSpace:
    """Coordinates for L2(N, trace) with left/right actions and conjugation."""

    algebra: StarAlgebra
    trace: TraceFunctional
    chol_upper: np.ndarray       # K = L L^H stored as upper factor L^H
    chol_upper_inv: np.ndarray
    jmat: np.ndarray

    @property
    def dim(self) -> int:
        return self.algebra.dimension

    def hat(self, mat: np.ndarray) -> np.ndarray:
        return self.chol_upper @ self.algebra.coeffs(mat)

    def unhat(self, vec: np.ndarray) -> np.ndarray:
        return self.algebra.reconstruct(self.chol_upper_inv @ np.asarray(vec, dtype=complex))

    def hat_identity(self) -> np.ndarray:
        return self.hat(self.algebra.identity())

    def _mult_matrix(self, prods: np.ndarray) -> np.ndarray:
        coeff_cols = self.algebra.basis_flat.conj() @ _vec(prods).T
        return self.chol_upper @ coeff_cols @ self.chol_upper_inv

    def left(self, mat: np.ndarray) -> np.ndarray:
        """Matrix of left multiplication by mat in hat coordinates."""
        return self._mult_matrix(np.matmul(np.asarray(mat, dtype=complex), self.algebra.basis))

    def right(self, mat: np.ndarray) -> np.ndarray:
        """Matrix of right multiplication by mat in hat coordinates."""
        return self._mult_matrix(np.matmul(self.algebra.basis, np.asarray(mat, dtype=complex)))

    def apply_j(self, vec: np.ndarray) -> np.ndarray:
        return self.jmat @ np.conj(np.asarray(vec, dtype=complex))


def gns(algebra: StarAlgebra, trace: TraceFunctional) -> GnsSpace:
    """GNS coordinates via Cholesky of the trace Gram matrix."""
    if trace.algebra is not algebra:
        trace = TraceFunctional(algebra, trace.values, check=False)
    gram = (trace.gram + trace.gram.conj().T) / 2.0
    try:
        lower = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise FaithfulnessError("trace Gram matrix is not positive definite") from exc
    upper = lower.conj().T
    upper_inv = np.linalg.inv(upper)
    basis = algebra.basis
    adj_coeffs = algebra.basis_flat.conj() @ _vec(basis.conj().transpose(0, 2, 1)).T
    jmat = upper @ adj_coeffs @ np.conj(upper_inv)
    return GnsSpace(algebra, trace, upper, upper_inv, jmat)


class ConditionalExpectation:
    """Trace-preserving projection of an algebra onto a subalgebra."""

    def __init__(self, big: StarAlgebra, sub: StarAlgebra, trace: TraceFunctional):
        for mat in sub.basis:
            if not big.contains(mat):
                raise InclusionError("subalgebra is not contained in the big algebra")
        self.big = big
        self.sub = sub
        self.trace = trace
        gram = np.array(
            [[trace(bi.conj().T @ bj) for bj in sub.basis] for bi in sub.basis]
        )
        gram = (gram + gram.conj().T) / 2.0
        try:
            lower = np.linalg.cholesky(gram)
        except np.linalg.LinAlgError as exc:
            raise FaithfulnessError("trace is degenerate on the subalgebra") from exc
        transform = np.linalg.inv(lower.conj().T)
        self.onb = np.einsum("ik,iab->kab", transform, sub.basis)
        # pairing tensors: value_k(X) = sum_ab weight_k[a,b] X[b,a]
        self._weights = np.matmul(self.trace.riesz, self.onb.conj().transpose(0, 2, 1))

    def __call__(self, mat: np.ndarray) -> np.ndarray:
        mat = np.asarray(mat, dtype=complex)
        coeffs = np.tensordot(self._weights, mat, axes=([1, 2], [1, 0]))
        return np.einsum("k,kab->ab", coeffs, self.onb)


def conditional_expectation(
    big: StarAlgebra, sub: StarAlgebra, trace: TraceFunctional
) -> ConditionalExpectation:
    """The unique trace-preserving conditional expectation onto the subalgebra."""
    return ConditionalExpectation(big, sub, trace)


def center_valued_trace(
    alg: StarAlgebra, trace: TraceFunctional | None = None
) -> ConditionalExpectation:
    """Trace-preserving expectation onto the center.

    Independent of which faithful trace seeds it; the ambient matrix trace is
    always available and is the default.
    """
    if trace is None:
        trace = TraceFunctional.from_matrix_trace(alg)
    return conditional_expectation(alg, center(alg), trace)


def twisted_group_algebra(
    lat: Lattice, flavor: str = "plain"
) -> tuple[StarAlgebra, TraceFunctional]:
    """The projective regular representation algebra of a lattice on l2(lat).

    flavor "plain" twists by the phase-space cocycle c, "opposite" by the
    reversed cocycle. Returns the algebra together with its canonical
    tracial state (value 1 at the identity shift, 0 elsewhere).
    """
    if flavor not in ("plain", "opposite"):
        raise ValueError(f"flavor must be 'plain' or 'opposite', got {flavor!r}")
    group = lat.group
    m = lat.size
    k = len(group.orders)
    # integer phase bookkeeping: all phases are L-th roots of unity
    lcm = 1
    for n in group.orders:
        lcm = lcm * n // math.gcd(lcm, n)
    coords = np.array([z.x + z.w for z in lat.elements], dtype=np.int64)
    xs, ws = coords[:, :k], coords[:, k:]
    wt = np.array([lcm // n for n in group.orders], dtype=np.int64)
    pairing = ((xs * wt) @ ws.T) % lcm          # pairing[a, b] = <w_b, x_a> in units of 1/L
    table = np.exp(-2j * np.pi * np.arange(lcm) / lcm)
    phases = table[pairing] if flavor == "plain" else table[pairing.T]
    # index table for sums of lattice elements
    moduli = np.array(group.orders * 2, dtype=np.int64)
    radix = np.ones(2 * k, dtype=np.int64)
    for j in range(2 * k - 2, -1, -1):
        radix[j] = radix[j + 1] * moduli[j + 1]
    codes = coords @ radix
    lookup = np.full(int(np.prod(moduli)), -1, dtype=np.int64)
    lookup[codes] = np.arange(m)
    sum_codes = ((coords[:, None, :] + coords[None, :, :]) % moduli) @ radix
    sum_idx = lookup[sum_codes]
    mats = np.zeros((m, m, m), dtype=complex)
    mats[np.arange(m)[:, None], sum_idx, np.arange(m)[None, :]] = phases
    basis = mats / np.sqrt(m)
    gens = tuple(mats[lat.index(g)] for g in lat.generators)
    alg = StarAlgebra(basis, generators=gens)
    values = np.zeros(m, dtype=complex)
    values[lat.index(PhasePoint(group.zero, group.zero))] = 1.0 / np.sqrt(m)
    return alg, TraceFunctional(alg, values)


def block_matrix_algebra(sizes: Sequence[int]) -> StarAlgebra:
    """Direct sum of full matrix blocks, with a two-per-block generating set."""
    sizes = [int(s) for s in sizes]
    if not sizes or any(s < 1 for s in sizes):
        raise SpanError("block sizes must be positive")
    total = sum(sizes)
    units = []
    gens = []
    offset = 0
    for s in sizes:
        for a in range(s):
            for b in range(s):
                mat = np.zeros((total, total), dtype=complex)
                mat[offset + a, offset + b] = 1.0
                units.append(mat)
        diag = np.zeros((total, total), dtype=complex)
        shift = np.zeros((total, total), dtype=complex)
        for a in range(s):
            diag[offset + a, offset + a] = a + 1
            shift[offset + (a + 1) % s, offset + a] = 1.0
        gens.extend([diag, shift])
        offset += s
    return StarAlgebra(np.stack(units), generators=tuple(gens))


def full_matrix_algebra(n: int) -> StarAlgebra:
    return block_matrix_algebra([n])


def ampliated_matrix_algebra(block: int, copies: int) -> StarAlgebra:
    """Copies of a full matrix algebra along the diagonal: a |-> a (x) identity."""
    if block < 1 or copies < 1:
        raise SpanError("block size and multiplicity must be positive")
    eye = np.eye(copies, dtype=complex)
    basis = []
    for a in range(block):
        for b in range(block):
            unit = np.zeros((block, block), dtype=complex)
            unit[a, b] = 1.0
            basis.append(np.kron(unit, eye) / np.sqrt(copies))
    diag = np.kron(np.diag(np.arange(1, block + 1).astype(complex)), eye)
    shift = np.kron(np.roll(np.eye(block, dtype=complex), 1, axis=0), eye)
    return StarAlgebra(np.stack(basis), generators=(diag, shift))
