"""Binary linear block codes over GF(2).

Provides random linear codes in systematic form, regular LDPC code
construction, CRC attachment/validation, alist parsing for sparse
parity-check matrices, syndrome-based membership tests, and a brute-force
maximum-likelihood decoder used as an oracle for small codes.

Packing contract: dense bit matrices are row-major ``uint8`` arrays with
entries in {0, 1}.  For throughput-critical paths rows are packed into
``uint64`` words, LSB first: bit ``j`` of a row lives in word ``j // 64``
at bit position ``j % 64``.  Column masks used by the guessing decoders
pack column ``j`` of H into a single Python integer whose bit ``r`` is
``H[r, j]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CrcSpec",
    "SparseParityCheck",
    "CodeSpec",
    "encode",
    "syndrome",
    "sample_rlc",
    "sample_regular_ldpc",
    "crc_encode",
    "crc_check",
    "parse_alist",
    "serialize_alist",
    "ml_decode_bruteforce",
    "gf2_rank",
    "gf2_row_reduce",
    "gf2_nullspace",
]


# ---------------------------------------------------------------------------
# dense GF(2) linear algebra
# ---------------------------------------------------------------------------

def _as_bits(v, length: int | None = None) -> np.ndarray:
    out = np.asarray(v, dtype=np.uint8) & 1
    if length is not None and out.shape[-1] != length:
        raise ValueError(f"expected bit vector of length {length}, got {out.shape[-1]}")
    return out


def gf2_row_reduce(mat: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row-echelon form over GF(2); returns (rref, pivot columns)."""
    a = _as_bits(mat).copy()
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.nonzero(a[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        others = np.nonzero(a[:, c])[0]
        others = others[others != r]
        a[others] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def gf2_rank(mat: np.ndarray) -> int:
    if mat.size == 0:
        return 0
    _, pivots = gf2_row_reduce(mat)
    return len(pivots)


def gf2_nullspace(mat: np.ndarray) -> np.ndarray:
    """Basis of the right nullspace of ``mat`` over GF(2), as rows."""
    a, pivots = gf2_row_reduce(mat)
    _, cols = a.shape
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, p in enumerate(pivots):
            basis[i, p] = a[row, f]
    return basis


def _gf2_inv(mat: np.ndarray) -> np.ndarray:
    """Inverse of a square GF(2) matrix (raises if singular)."""
    k = mat.shape[0]
    aug = np.concatenate([_as_bits(mat), np.eye(k, dtype=np.uint8)], axis=1)
    red, pivots = gf2_row_reduce(aug)
    if pivots[:k] != list(range(k)):
        raise ValueError("matrix is singular over GF(2)")
    return red[:, k:]


def pack_rows(mat: np.ndarray) -> np.ndarray:
    """Pack bit-matrix rows into uint64 words (LSB-first within each word)."""
    bits = _as_bits(np.atleast_2d(mat))
    rows, n = bits.shape
    words = (n + 63) // 64
    padded = np.zeros((rows, words * 64), dtype=np.uint8)
    padded[:, :n] = bits
    packed_bytes = np.packbits(padded, axis=1, bitorder="little")
    return packed_bytes.view(np.uint64).reshape(rows, words)


def unpack_words(words: np.ndarray, n: int) -> np.ndarray:
    flat = np.unpackbits(words.view(np.uint8), bitorder="little")
    return flat[:n].astype(np.uint8)


def pack_columns(mat: np.ndarray) -> list[int]:
    """Each column of a bit matrix as one Python int (bit r = row r)."""
    bits = _as_bits(np.atleast_2d(mat))
    masks = []
    for col in bits.T:
        m = 0
        for r in np.nonzero(col)[0]:
            m |= 1 << int(r)
        masks.append(m)
    return masks


# ---------------------------------------------------------------------------
# CRC
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CrcSpec:
    """Cyclic redundancy check defined by a binary polynomial.

    ``polynomial`` is a bit string of length ``degree + 1``, highest power
    first (e.g. ``"1011"`` is x^3 + x + 1).
    """

    degree: int
    polynomial: str

    def __post_init__(self) -> None:
        if self.degree < 1:
            raise ValueError("CRC degree must be >= 1")
        if len(self.polynomial) != self.degree + 1:
            raise ValueError("polynomial length must be degree + 1")
        if set(self.polynomial) - {"0", "1"}:
            raise ValueError("polynomial must be a bit string")
        if self.polynomial[0] != "1":
            raise ValueError("leading polynomial coefficient must be 1")

    @property
    def taps(self) -> np.ndarray:
        return np.frombuffer(self.polynomial.encode(), dtype=np.uint8) - ord("0")


def _crc_remainder(bits: np.ndarray, crc: CrcSpec) -> np.ndarray:
    work = bits.astype(np.uint8).copy()
    taps = crc.taps
    deg = crc.degree
    for i in range(len(work) - deg):
        if work[i]:
            work[i : i + deg + 1] ^= taps
    return work[-deg:]


# The remainder is GF(2)-linear in the dividend, so per (polynomial, length)
# it is one matrix multiply; rows are the remainders of the unit vectors.
_CRC_MATRIX_CACHE: dict[tuple[str, int], np.ndarray] = {}


def _remainder_matrix(crc: CrcSpec, length: int) -> np.ndarray:
    key = (crc.polynomial, length)
    mat = _CRC_MATRIX_CACHE.get(key)
    if mat is None:
        mat = np.zeros((length, crc.degree), dtype=np.uint8)
        for i in range(length):
            unit = np.zeros(length, dtype=np.uint8)
            unit[i] = 1
            mat[i] = _crc_remainder(unit, crc)
        _CRC_MATRIX_CACHE[key] = mat
    return mat


def crc_encode(crc: CrcSpec, message) -> np.ndarray:
    """Append the CRC remainder: returns ``message || remainder``."""
    msg = _as_bits(message)
    if msg.size == 0:
        raise ValueError("empty message")
    rem = (msg @ _remainder_matrix(crc, msg.size + crc.degree)[: msg.size]) % 2
    return np.concatenate([msg, rem.astype(np.uint8)])


def crc_check(crc: CrcSpec, word) -> bool:
    """True iff the polynomial remainder of ``word`` is zero."""
    bits = _as_bits(word)
    if bits.size <= crc.degree:
        raise ValueError("word too short for CRC check")
    return not ((bits @ _remainder_matrix(crc, bits.size)) % 2).any()


# ---------------------------------------------------------------------------
# sparse parity-check matrices and the alist format
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SparseParityCheck:
    """Sparse H held as mutually consistent row and column adjacency lists."""

    n: int
    m_rows: int
    col_rows: tuple[tuple[int, ...], ...]  # per column: sorted row indices
    row_cols: tuple[tuple[int, ...], ...]  # per row: sorted column indices

    def __post_init__(self) -> None:
        if len(self.col_rows) != self.n or len(self.row_cols) != self.m_rows:
            raise ValueError("adjacency list lengths disagree with dimensions")
        from_cols = {(r, c) for c, rows in enumerate(self.col_rows) for r in rows}
        from_rows = {(r, c) for r, cols in enumerate(self.row_cols) for c in cols}
        if from_cols != from_rows:
            raise ValueError("row and column adjacency views are inconsistent")

    @classmethod
    def from_dense(cls, h: np.ndarray) -> "SparseParityCheck":
        bits = _as_bits(np.atleast_2d(h))
        m_rows, n = bits.shape
        col_rows = tuple(tuple(int(r) for r in np.nonzero(bits[:, c])[0]) for c in range(n))
        row_cols = tuple(tuple(int(c) for c in np.nonzero(bits[r])[0]) for r in range(m_rows))
        return cls(n=n, m_rows=m_rows, col_rows=col_rows, row_cols=row_cols)

    def to_dense(self) -> np.ndarray:
        h = np.zeros((self.m_rows, self.n), dtype=np.uint8)
        for r, cols in enumerate(self.row_cols):
            h[r, list(cols)] = 1
        return h


class AlistError(ValueError):
    """Malformed alist text; message names the offending line."""


def parse_alist(text: str) -> SparseParityCheck:
    """Parse the alist sparse-matrix convention.

    Layout: line 1 is ``n m``, line 2 the max column/row degrees, lines 3-4
    the per-column and per-row degrees, then ``n`` column lists and ``m``
    row lists of 1-indexed positions (zero entries are padding and ignored).
    """
    lines = text.splitlines()

    def ints(idx: int) -> list[int]:
        if idx >= len(lines):
            raise AlistError(f"line {idx + 1}: unexpected end of file")
        try:
            return [int(tok) for tok in lines[idx].split()]
        except ValueError as exc:
            raise AlistError(f"line {idx + 1}: {exc}") from None

    header = ints(0)
    if len(header) != 2 or header[0] <= 0 or header[1] <= 0:
        raise AlistError("line 1: header must be two positive integers 'n m'")
    n, m_rows = header
    col_deg = ints(2)
    row_deg = ints(3)
    if len(col_deg) != n:
        raise AlistError(f"line 3: expected {n} column degrees, got {len(col_deg)}")
    if len(row_deg) != m_rows:
        raise AlistError(f"line 4: expected {m_rows} row degrees, got {len(row_deg)}")

    col_rows = []
    for c in range(n):
        entries = [e for e in ints(4 + c) if e != 0]
        if len(entries) != col_deg[c]:
            raise AlistError(f"line {5 + c}: column {c + 1} lists {len(entries)} entries, "
                             f"degree says {col_deg[c]}")
        for e in entries:
            if not 1 <= e <= m_rows:
                raise AlistError(f"line {5 + c}: row index {e} out of range 1..{m_rows}")
        col_rows.append(tuple(sorted(e - 1 for e in entries)))

    row_cols = []
    for r in range(m_rows):
        entries = [e for e in ints(4 + n + r) if e != 0]
        if len(entries) != row_deg[r]:
            raise AlistError(f"line {5 + n + r}: row {r + 1} lists {len(entries)} entries, "
                             f"degree says {row_deg[r]}")
        for e in entries:
            if not 1 <= e <= n:
                raise AlistError(f"line {5 + n + r}: column index {e} out of range 1..{n}")
        row_cols.append(tuple(sorted(e - 1 for e in entries)))

    try:
        return SparseParityCheck(n=n, m_rows=m_rows, col_rows=tuple(col_rows),
                                 row_cols=tuple(row_cols))
    except ValueError as exc:
        raise AlistError(f"line 5..{4 + n + m_rows}: {exc}") from None


def serialize_alist(h: SparseParityCheck) -> str:
    """Emit alist text (inverse of :func:`parse_alist`)."""
    col_deg = [len(rows) for rows in h.col_rows]
    row_deg = [len(cols) for cols in h.row_cols]
    out = [
        f"{h.n} {h.m_rows}",
        f"{max(col_deg, default=0)} {max(row_deg, default=0)}",
        " ".join(str(d) for d in col_deg),
        " ".join(str(d) for d in row_deg),
    ]
    for rows in h.col_rows:
        out.append(" ".join(str(r + 1) for r in rows))
    for cols in h.row_cols:
        out.append(" ".join(str(c + 1) for c in cols))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# code specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CodeSpec:
    """A binary [n, k] linear block code.

    ``generator`` is k x n with full row rank, ``parity_check`` is
    (n - k) x n, and G @ H.T = 0 over GF(2).  ``sparse`` optionally carries
    a redundant sparse parity-check view for message-passing decoders.
    When ``crc`` is set, the last ``crc.degree`` bits of every valid message
    are the CRC of the leading payload bits.
    """

    n: int
    k: int
    generator: np.ndarray
    parity_check: np.ndarray
    crc: CrcSpec | None = None
    label: str = ""
    sparse: SparseParityCheck | None = None
    # caches, derived in __post_init__
    _packed_g: np.ndarray = field(init=False, repr=False, compare=False)
    _pivot_cols: tuple[int, ...] = field(init=False, repr=False, compare=False)
    _unmix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        g = _as_bits(self.generator)
        h = _as_bits(self.parity_check)
        if not 0 < self.k <= self.n:
            raise ValueError("need 0 < k <= n")
        if g.shape != (self.k, self.n):
            raise ValueError("generator must be k x n")
        if h.shape != (self.n - self.k, self.n):
            raise ValueError("parity_check must be (n - k) x n")
        if ((g @ h.T) % 2).any():
            raise ValueError("G . H^T != 0")
        red, pivots = gf2_row_reduce(g)
        if len(pivots) != self.k:
            raise ValueError("generator rows are linearly dependent")
        if self.crc is not None and self.k <= self.crc.degree:
            raise ValueError("k must exceed the CRC degree")
        object.__setattr__(self, "generator", g)
        object.__setattr__(self, "parity_check", h)
        object.__setattr__(self, "_packed_g", pack_rows(g))
        object.__setattr__(self, "_pivot_cols", tuple(pivots))
        # c[pivots] = u @ G[:, pivots]; invert to recover u from a codeword
        object.__setattr__(self, "_unmix", _gf2_inv(g[:, pivots]))

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def payload_bits(self) -> int:
        """Message bits carried before CRC attachment (= k without CRC)."""
        return self.k - (self.crc.degree if self.crc else 0)

    def message_from_codeword(self, codeword) -> np.ndarray:
        c = _as_bits(codeword, self.n)
        return (c[list(self._pivot_cols)] @ self._unmix) % 2

    def valid_message(self, message) -> bool:
        """CRC validation of a k-bit message (always true without CRC)."""
        if self.crc is None:
            return True
        return crc_check(self.crc, message)


def encode(code: CodeSpec, message) -> np.ndarray:
    """u |-> u G over GF(2)."""
    msg = _as_bits(message, code.k)
    sel = np.nonzero(msg)[0]
    if sel.size == 0:
        return np.zeros(code.n, dtype=np.uint8)
    words = np.bitwise_xor.reduce(code._packed_g[sel], axis=0)
    return unpack_words(words, code.n)


def syndrome(code: CodeSpec, word) -> np.ndarray:
    """w |-> w H^T; zero iff ``word`` is a codeword."""
    w = _as_bits(word, code.n)
    if code.parity_check.shape[0] == 0:
        return np.zeros(0, dtype=np.uint8)
    return (code.parity_check @ w) % 2


def sample_rlc(n: int, k: int, seed: int, crc: CrcSpec | None = None,
               label: str = "") -> CodeSpec:
    """Systematic random linear code: G = [I_k | A], H = [A^T | I_{n-k}]."""
    if not 0 < k <= n:
        raise ValueError("need 0 < k <= n")
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 2, size=(k, n - k), dtype=np.uint8)
    g = np.concatenate([np.eye(k, dtype=np.uint8), a], axis=1)
    h = np.concatenate([a.T, np.eye(n - k, dtype=np.uint8)], axis=1)
    return CodeSpec(n=n, k=k, generator=g, parity_check=h, crc=crc,
                    label=label or f"rlc[{n},{k}]s{seed}")


def _reduce_four_cycles(col_rows: list[set[int]], rng: np.random.Generator,
                        n: int, passes: int = 4) -> None:
    """Best-effort removal of length-4 cycles by swapping row assignments."""
    for _ in range(passes):
        swapped = False
        for c1 in range(n):
            for c2 in range(c1 + 1, n):
                shared = col_rows[c1] & col_rows[c2]
                if len(shared) < 2:
                    continue
                r = rng.choice(sorted(shared))
                # move r from c2 to some column that lacks it
                candidates = [c for c in range(n) if r not in col_rows[c] and c != c2]
                rng.shuffle(candidates)
                for c3 in candidates:
                    give = [x for x in col_rows[c3] if x not in col_rows[c2]]
                    if not give:
                        continue
                    r3 = give[0]
                    col_rows[c2].remove(r)
                    col_rows[c2].add(r3)
                    col_rows[c3].remove(r3)
                    col_rows[c3].add(r)
                    swapped = True
                    break
        if not swapped:
            return


def sample_regular_ldpc(n: int, col_weight: int, row_weight: int, seed: int,
                        label: str = "", max_attempts: int = 200) -> CodeSpec:
    """(col_weight, row_weight)-regular LDPC code via random edge permutation.

    Repeated edges are resolved by retrying the permutation (bounded), then a
    few passes of 4-cycle reduction are attempted.  The generator is the
    GF(2) nullspace of H, so k = n - rank(H) (H may carry redundant rows).
    """
    if (n * col_weight) % row_weight != 0:
        raise ValueError("n * col_weight must be divisible by row_weight")
    m_rows = n * col_weight // row_weight
    rng = np.random.default_rng(seed)
    col_sockets = np.repeat(np.arange(n), col_weight).tolist()

    row_sockets = np.repeat(np.arange(m_rows), row_weight)
    rng.shuffle(row_sockets)
    row_sockets = row_sockets.tolist()
    # repair repeated edges by swapping row sockets (degrees are preserved)
    for _ in range(max_attempts):
        seen: set[tuple[int, int]] = set()
        dups = []
        for idx, pair in enumerate(zip(col_sockets, row_sockets)):
            if pair in seen:
                dups.append(idx)
            else:
                seen.add(pair)
        if not dups:
            break
        for idx in dups:
            other = int(rng.integers(len(row_sockets)))
            row_sockets[idx], row_sockets[other] = row_sockets[other], row_sockets[idx]
    else:
        raise ValueError("could not draw a simple regular graph within retry budget")

    col_rows = [set() for _ in range(n)]
    for c, r in zip(col_sockets, row_sockets):
        col_rows[c].add(r)
    _reduce_four_cycles(col_rows, rng, n)

    h = np.zeros((m_rows, n), dtype=np.uint8)
    for c, rows in enumerate(col_rows):
        h[sorted(rows), c] = 1

    g = gf2_nullspace(h)
    k = g.shape[0]
    basis, _ = gf2_row_reduce(h)
    h_basis = basis[: n - k]
    return CodeSpec(n=n, k=k, generator=g, parity_check=h_basis,
                    label=label or f"ldpc({col_weight},{row_weight})[{n},{k}]s{seed}",
                    sparse=SparseParityCheck.from_dense(h))


def codebook(code: CodeSpec) -> np.ndarray:
    """All 2^k codewords, row i = encode of the bits of integer i (LSB first).

    Enumeration bound k <= 16.  With a CRC, rows whose message fails the
    check are excluded.
    """
    if code.k > 16:
        raise ValueError("codebook enumeration is limited to k <= 16")
    idx = np.arange(2 ** code.k, dtype=np.uint32)
    msgs = ((idx[:, None] >> np.arange(code.k)) & 1).astype(np.uint8)
    words = (msgs @ code.generator) % 2
    if code.crc is not None:
        keep = np.array([crc_check(code.crc, m) for m in msgs], dtype=bool)
        words = words[keep]
    return words


def ml_decode_bruteforce(code: CodeSpec, soft) -> np.ndarray:
    """Maximum-likelihood decoding by exhaustive codebook scan (k <= 16).

    Returns the codeword minimizing Euclidean distance to ``soft`` under the
    0 -> +1, 1 -> -1 symbol map; ties break to the smallest message index.
    """
    y = np.asarray(soft, dtype=float)
    if y.shape != (code.n,):
        raise ValueError(f"soft vector must have length {code.n}")
    words = codebook(code)
    scores = (1.0 - 2.0 * words.astype(float)) @ y
    return words[int(np.argmax(scores))].copy()
