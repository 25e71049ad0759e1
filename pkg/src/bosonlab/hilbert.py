"""Occupation-number basis with a hard-core cap and the operator algebra.

States are labelled by per-site occupations in [0, nmax] and ordered
lexicographically in site-major digits (site 0 is the most significant
digit), so the position of a state is its base-(nmax+1) value.  That makes
the ordering stable across runs and index arithmetic O(1).
"""

import numpy as np
import scipy.sparse as sparse

from .errors import InvalidArgumentError, UnsupportedSizeError

BASIS_STATE_LIMIT = 2 ** 24
DENSE_LIMIT = 64  # matrices smaller than this are stored dense
NORM_DENSE_LIMIT = 4096


class FockBasis:
    """Complete product basis over a box with per-site cap nmax."""

    def __init__(self, box, nmax):
        if nmax < 1:
            raise InvalidArgumentError("nmax must be >= 1")
        n = box.nsites
        size = (nmax + 1) ** n
        if size > BASIS_STATE_LIMIT:
            raise UnsupportedSizeError(
                f"basis of {size} states exceeds limit {BASIS_STATE_LIMIT}"
            )
        self.box = box
        self.nmax = int(nmax)
        self.size = int(size)
        # digit weights: site-major, last site is the fastest digit
        self._weights = (nmax + 1) ** np.arange(n - 1, -1, -1, dtype=np.int64)

    @property
    def nsites(self):
        return self.box.nsites

    def state(self, index):
        """Occupation array of the state at `index`."""
        if not 0 <= index < self.size:
            raise InvalidArgumentError(f"state index {index} out of range")
        return (index // self._weights) % (self.nmax + 1)

    def states(self):
        """(size, nsites) array of all occupations, in basis order."""
        idx = np.arange(self.size, dtype=np.int64)
        return (idx[:, None] // self._weights[None, :]) % (self.nmax + 1)

    def index_of(self, occupations):
        """Position of an occupation vector in the basis."""
        occ = np.asarray(occupations, dtype=np.int64)
        if occ.shape != (self.nsites,) or occ.min() < 0 or occ.max() > self.nmax:
            raise InvalidArgumentError(f"not a valid occupation state: {occupations}")
        return int(occ @ self._weights)

    def occupation_column(self, site_index):
        """n_x for every basis state at one site, as a vector."""
        idx = np.arange(self.size, dtype=np.int64)
        return (idx // self._weights[site_index]) % (self.nmax + 1)

    def total_numbers(self):
        """Total particle number of every basis state."""
        return self.states().sum(axis=1)


def enumerate_basis(box, nmax):
    return FockBasis(box, nmax)


class OperatorMatrix:
    """Square complex matrix over basis indices; sparse above DENSE_LIMIT."""

    def __init__(self, matrix, hermitian=False):
        if sparse.issparse(matrix):
            if matrix.shape[0] < DENSE_LIMIT:
                matrix = np.asarray(matrix.todense(), dtype=complex)
            else:
                matrix = matrix.tocsr().astype(complex)
        else:
            matrix = np.asarray(matrix, dtype=complex)
            if matrix.shape[0] >= DENSE_LIMIT:
                matrix = sparse.csr_matrix(matrix)
        if matrix.shape[0] != matrix.shape[1]:
            raise InvalidArgumentError("operator matrices must be square")
        self.matrix = matrix
        self.hermitian = bool(hermitian)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def is_sparse(self):
        return sparse.issparse(self.matrix)

    def toarray(self):
        if self.is_sparse:
            return np.asarray(self.matrix.todense())
        return np.array(self.matrix)

    def adjoint(self):
        return OperatorMatrix(self.matrix.conj().T, hermitian=self.hermitian)

    def hermiticity_defect(self):
        """Max |M - M^dagger| entry; 0 for a genuinely hermitian matrix."""
        d = self.matrix - self.matrix.conj().T
        if sparse.issparse(d):
            return float(np.abs(d.todense()).max()) if d.nnz else 0.0
        return float(np.abs(d).max()) if d.size else 0.0

    def __add__(self, other):
        herm = self.hermitian and getattr(other, "hermitian", False)
        return OperatorMatrix(self.matrix + _raw(other), hermitian=herm)

    def __sub__(self, other):
        herm = self.hermitian and getattr(other, "hermitian", False)
        return OperatorMatrix(self.matrix - _raw(other), hermitian=herm)

    def __mul__(self, scalar):
        herm = self.hermitian and np.isrealobj(np.asarray(scalar))
        return OperatorMatrix(self.matrix * scalar, hermitian=herm)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return OperatorMatrix(self.matrix @ _raw(other))

    def __neg__(self):
        return OperatorMatrix(-self.matrix, hermitian=self.hermitian)


def _raw(op):
    return op.matrix if isinstance(op, OperatorMatrix) else op


def zero_operator(dim):
    if dim < DENSE_LIMIT:
        return OperatorMatrix(np.zeros((dim, dim), dtype=complex), hermitian=True)
    return OperatorMatrix(sparse.csr_matrix((dim, dim), dtype=complex), hermitian=True)


def identity_operator(dim):
    if dim < DENSE_LIMIT:
        return OperatorMatrix(np.eye(dim, dtype=complex), hermitian=True)
    return OperatorMatrix(sparse.identity(dim, dtype=complex, format="csr"), hermitian=True)


def site_operator(basis, kind, x):
    """Creation/annihilation/number operator at site x on the full basis.

    Creation on a state with n_x = nmax yields the zero column (hard-core
    rule); annihilation is its adjoint; number is diagonal.
    """
    pos = basis.box.site_index(x)
    nvals = basis.occupation_column(pos)
    size = basis.size
    if kind == "number":
        mat = sparse.diags(nvals.astype(complex), format="csr")
        return OperatorMatrix(mat, hermitian=True)
    if kind not in ("create", "annihilate"):
        raise InvalidArgumentError(f"unknown operator kind {kind!r}")
    step = int(basis._weights[pos])
    cols = np.nonzero(nvals < basis.nmax)[0]
    rows = cols + step                      # one more particle at site x
    vals = np.sqrt(nvals[cols] + 1.0).astype(complex)
    mat = sparse.coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()
    if kind == "annihilate":
        mat = mat.conj().T.tocsr()
    return OperatorMatrix(mat, hermitian=False)


def occupation_projector(basis, x, value):
    """Projector onto basis states with n_x = value."""
    pos = basis.box.site_index(x)
    diag = (basis.occupation_column(pos) == value).astype(complex)
    return OperatorMatrix(sparse.diags(diag, format="csr"), hermitian=True)


def operator_norm(op):
    """Spectral norm: largest |eigenvalue| for hermitian input, else sigma_max."""
    mat = _raw(op)
    if sparse.issparse(mat):
        if mat.shape[0] <= NORM_DENSE_LIMIT:
            mat = np.asarray(mat.todense())
        else:
            from scipy.sparse.linalg import svds

            if mat.nnz == 0:
                return 0.0
            return float(svds(mat, k=1, return_singular_vectors=False)[0])
    if not np.all(np.isfinite(mat)):
        raise InvalidArgumentError("operator has non-finite entries")
    if mat.size == 0:
        return 0.0
    if isinstance(op, OperatorMatrix) and op.hermitian:
        return float(np.max(np.abs(np.linalg.eigvalsh(mat))))
    return float(np.linalg.norm(mat, 2))


def embed_positions(nmax, nsites, positions, block):
    """Dense embedding of a block into chosen digit positions of a register.

    The register has `nsites` digits in [0, nmax], site-major; `positions`
    are the digit slots the block acts on, in ascending order.
    """
    positions = list(positions)
    k = len(positions)
    dim = (nmax + 1) ** nsites
    nloc = (nmax + 1) ** k
    block = np.asarray(block, dtype=complex)
    if block.shape != (nloc, nloc):
        raise InvalidArgumentError("block shape does not match positions")
    idx = np.arange(dim, dtype=np.int64)
    weights = (nmax + 1) ** np.arange(nsites - 1, -1, -1, dtype=np.int64)
    digits = (idx[:, None] // weights[None, :]) % (nmax + 1)
    locw = (nmax + 1) ** np.arange(k - 1, -1, -1, dtype=np.int64)
    loc = digits[:, positions] @ locw
    rest_pos = [p for p in range(nsites) if p not in positions]
    if rest_pos:
        restw = (nmax + 1) ** np.arange(len(rest_pos) - 1, -1, -1, dtype=np.int64)
        rest = digits[:, rest_pos] @ restw
    else:
        rest = np.zeros(dim, dtype=np.int64)
    out = np.zeros((dim, dim), dtype=complex)
    pos = np.empty((dim // nloc, nloc), dtype=np.int64)
    pos[np.unique(rest, return_inverse=True)[1], loc] = idx
    for a in range(nloc):
        for b in range(nloc):
            if block[a, b] != 0:
                out[pos[:, a], pos[:, b]] = block[a, b]
    return out


def embed_local(basis, support, local_block, hermitian=False):
    """Lift a block acting on the sites in `support` to the full basis.

    `local_block` is indexed by the occupation digits of the support sites in
    ascending site-index order, with the same site-major digit convention as
    the full basis.
    """
    support_pos = sorted(basis.box.site_index(s) for s in support)
    k = len(support_pos)
    nloc = (basis.nmax + 1) ** k
    block = np.asarray(local_block, dtype=complex)
    if block.shape != (nloc, nloc):
        raise InvalidArgumentError(
            f"local block shape {block.shape} does not match support of {k} sites"
        )
    digits = basis.states()
    locw = (basis.nmax + 1) ** np.arange(k - 1, -1, -1, dtype=np.int64)
    loc_codes = digits[:, support_pos] @ locw
    rest_pos = [p for p in range(basis.nsites) if p not in support_pos]
    if rest_pos:
        restw = (basis.nmax + 1) ** np.arange(len(rest_pos) - 1, -1, -1, dtype=np.int64)
        rest_codes = digits[:, rest_pos] @ restw
    else:
        rest_codes = np.zeros(basis.size, dtype=np.int64)
    nrest = basis.size // nloc
    pos = np.empty((nrest, nloc), dtype=np.int64)
    rest_rank = np.unique(rest_codes, return_inverse=True)[1]
    pos[rest_rank, loc_codes] = np.arange(basis.size, dtype=np.int64)

    a_idx, b_idx = np.nonzero(block)
    rows = pos[:, a_idx].ravel()
    cols = pos[:, b_idx].ravel()
    vals = np.broadcast_to(block[a_idx, b_idx], (nrest, len(a_idx))).ravel()
    mat = sparse.coo_matrix((vals, (rows, cols)), shape=(basis.size, basis.size)).tocsr()
    return OperatorMatrix(mat, hermitian=hermitian)


def translation_unitary(basis, axis=0, step=1):
    """Unitary permutation implementing a lattice translation on the basis.

    Requires the translated axis to be periodic.
    """
    box = basis.box
    if not box.periodic[axis]:
        raise InvalidArgumentError("translation unitary needs a periodic axis")
    n = box.nsites
    # site mapping: site at x goes to x + step*e_axis
    target = np.empty(n, dtype=np.int64)
    for i in range(n):
        c = list(box.site_coord(i))
        c[axis] = (c[axis] + step) % box.dims[axis]
        target[i] = box.site_index(tuple(c))
    digits = basis.states()
    moved = np.empty_like(digits)
    moved[:, target] = digits
    rows = moved @ basis._weights
    mat = sparse.coo_matrix(
        (np.ones(basis.size, dtype=complex), (rows, np.arange(basis.size))),
        shape=(basis.size, basis.size),
    ).tocsr()
    return OperatorMatrix(mat)


def gauge_unitary(basis, alpha):
    """exp(i * alpha * total particle number), diagonal in the basis."""
    phases = np.exp(1j * alpha * basis.total_numbers())
    return OperatorMatrix(sparse.diags(phases, format="csr"))


def dump_operator(op, fh):
    """Write one nonzero per line as ``row col re im`` (text format)."""
    mat = _raw(op)
    if sparse.issparse(mat):
        coo = mat.tocoo()
        entries = zip(coo.row, coo.col, coo.data)
    else:
        rr, cc = np.nonzero(mat)
        entries = zip(rr, cc, mat[rr, cc])
    own = isinstance(fh, (str, bytes))
    f = open(fh, "w") if own else fh
    try:
        for r, c, v in sorted(entries, key=lambda e: (e[0], e[1])):
            f.write(f"{int(r)} {int(c)} {v.real:.17g} {v.imag:.17g}\n")
    finally:
        if own:
            f.close()
