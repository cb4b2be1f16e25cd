"""Sparse decomposition machinery: OMP coding and K-SVD dictionary learning.

A dictionary is an (atom_dim x atom_count) matrix of unit-norm columns.
Given a dictionary, OMP greedily picks atoms to approximate each signal
with at most ``t0`` nonzero coefficients.  K-SVD alternates that coding
step with per-atom updates, each atom and its coefficient row replaced by
the dominant singular pair of the residual restricted to the columns that
use the atom.

Everything is deterministic given the seed; the dictionary doubles as the
extraction key of the sparse stego scheme, so replayability matters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateDataError, PgmFormatError
from .prng import KeyedPrng, prng_mix

_CORR_FLOOR = 1e-13  # below this the residual is orthogonal to every atom


@dataclass
class Dictionary:
    """Unit-norm atom matrix; also the stego key."""

    atoms: np.ndarray  # (atom_dim, atom_count), float64

    @property
    def atom_dim(self) -> int:
        return self.atoms.shape[0]

    @property
    def atom_count(self) -> int:
        return self.atoms.shape[1]

    def check(self) -> None:
        if self.atoms.ndim != 2 or self.atoms.shape[1] < 1:
            raise ValueError("dictionary must be a 2-D matrix with >= 1 atom")
        norms = np.linalg.norm(self.atoms, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("dictionary atoms must have unit norm (tol 1e-9)")


def _solve_support(atoms_s: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Least squares on the selected atoms via normal equations.

    Support sizes stay small (<= t0), so the SPD solve is cheap; a tiny
    diagonal jitter rescues exactly singular Grams (duplicate atoms).
    """
    gram = atoms_s.T @ atoms_s
    rhs = atoms_s.T @ x
    try:
        coef = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        coef = np.linalg.solve(gram + 1e-12 * np.eye(gram.shape[0]), rhs)
    return coef


def sparse_code_columns(atoms: np.ndarray, X: np.ndarray, t0: int, residual_tol: float = 0.0) -> np.ndarray:
    """OMP-code every column of X against the atom matrix.

    Greedy selection is argmax |<residual, atom>| with ties broken toward
    the lowest atom index; after each selection the coefficients on the
    support are re-solved by least squares.  A column stops when its
    support reaches t0, its residual norm drops to residual_tol, or no
    atom correlates with the residual any more.
    """
    n, k = atoms.shape
    if X.shape[0] != n:
        raise ValueError("signal dim %d != atom dim %d" % (X.shape[0], n))
    if t0 < 1:
        raise ValueError("t0 must be >= 1")
    if residual_tol < 0:
        raise ValueError("residual_tol must be >= 0")
    J = X.shape[1]
    coeffs = np.zeros((k, J))
    supports: list[list[int]] = [[] for _ in range(J)]
    R = X.astype(np.float64, copy=True)
    active = np.flatnonzero(np.linalg.norm(R, axis=0) > residual_tol)
    for _ in range(t0):
        if active.size == 0:
            break
        corr = atoms.T @ R[:, active]
        picks = np.argmax(np.abs(corr), axis=0)  # first max = lowest index on ties
        peak = np.abs(corr[picks, np.arange(active.size)])
        keep = []
        for pos, j in enumerate(active):
            if peak[pos] < _CORR_FLOOR:
                continue
            supp = supports[j]
            atom = int(picks[pos])
            if atom in supp:
                continue  # numerically re-picking a selected atom: no progress
            supp.append(atom)
            sub = atoms[:, supp]
            coef = _solve_support(sub, X[:, j])
            r = X[:, j] - sub @ coef
            R[:, j] = r
            coeffs[supp, j] = coef
            if len(supp) < t0 and np.linalg.norm(r) > residual_tol:
                keep.append(j)
        active = np.asarray(keep, dtype=int)
    return coeffs


def omp(dictionary: Dictionary, x: np.ndarray, t0: int, residual_tol: float = 0.0) -> np.ndarray:
    """Sparse-code a single vector; returns a length-atom_count coefficient vector."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != dictionary.atom_dim:
        raise ValueError("vector length %d != atom dim %d" % (x.shape[0], dictionary.atom_dim))
    return sparse_code_columns(dictionary.atoms, x[:, None], t0, residual_tol)[:, 0]


def rank1_svd(M: np.ndarray, iters: int = 60, seed: int = 0) -> tuple[np.ndarray, float, np.ndarray]:
    """Dominant singular triple (u, sigma, v) by power iteration.

    The start vector comes from the seeded generator, so results replay
    exactly.  Signs are canonicalized (largest-magnitude entry of u made
    positive) to keep downstream dictionaries reproducible.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError("rank1_svd expects a matrix")
    scale = np.linalg.norm(M)
    if scale == 0.0:
        raise DegenerateDataError("rank1_svd: zero matrix")
    rng = KeyedPrng(seed)
    m, n = M.shape
    if n <= m:
        v = rng.normal(n)
        v /= np.linalg.norm(v)
        for _ in range(iters):
            w = M.T @ (M @ v)
            nw = np.linalg.norm(w)
            if nw == 0.0:
                v = rng.normal(n)
                v /= np.linalg.norm(v)
                continue
            v = w / nw
        Mv = M @ v
        sigma = float(np.linalg.norm(Mv))
        if sigma == 0.0:
            raise DegenerateDataError("rank1_svd: power iteration collapsed")
        u = Mv / sigma
    else:
        u = rng.normal(m)
        u /= np.linalg.norm(u)
        for _ in range(iters):
            w = M @ (M.T @ u)
            nw = np.linalg.norm(w)
            if nw == 0.0:
                u = rng.normal(m)
                u /= np.linalg.norm(u)
                continue
            u = w / nw
        Mtu = M.T @ u
        sigma = float(np.linalg.norm(Mtu))
        if sigma == 0.0:
            raise DegenerateDataError("rank1_svd: power iteration collapsed")
        v = Mtu / sigma
    i = int(np.argmax(np.abs(u)))
    if u[i] < 0:
        u, v = -u, -v
    return u, sigma, v


def reconstruct(dictionary: Dictionary, code: np.ndarray) -> np.ndarray:
    """Plain matrix product dictionary @ code."""
    code = np.asarray(code, dtype=np.float64)
    if code.ndim != 2 or code.shape[0] != dictionary.atom_count:
        raise ValueError(
            "code shape %r incompatible with %d atoms" % (code.shape, dictionary.atom_count)
        )
    return dictionary.atoms @ code


@dataclass
class KsvdResult:
    dictionary: Dictionary
    code: np.ndarray  # (atom_count, column_count)
    objective: float  # ||Y - D @ code||_F^2 at exit
    objective_history: list  # one value per recorded stage, non-increasing


def _objective(Y: np.ndarray, atoms: np.ndarray, code: np.ndarray) -> float:
    return float(np.linalg.norm(Y - atoms @ code) ** 2)


def ksvd(Y: np.ndarray, k: int, t0: int, iters: int, seed: int,
         residual_tol: float = 0.0, power_iters: int = 60) -> KsvdResult:
    """Learn a k-atom dictionary minimizing ||Y - D X||_F^2 s.t. ||x_i||_0 <= t0.

    Initial atoms are k distinct data columns picked by the seeded
    generator and normalized.  Each sweep OMP-codes all columns, then
    updates atoms one by one (in index order) as the dominant singular
    pair of the residual restricted to the columns using the atom.  Atoms
    used by no column are replaced by the currently worst-represented
    data column.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.size == 0:
        raise ValueError("Y must be a non-empty matrix")
    J = Y.shape[1]
    if k > J:
        raise ValueError("atom count %d exceeds column count %d" % (k, J))
    if t0 > min(k, Y.shape[0]):
        raise ValueError("t0 must be <= min(atom count, signal dim)")
    if float(np.ptp(Y)) == 0.0:
        raise DegenerateDataError("ksvd: constant data has no structure to learn")

    rng = KeyedPrng(seed)
    norms = np.linalg.norm(Y, axis=0)
    usable = np.flatnonzero(norms > 1e-12)
    if usable.size < k:
        raise DegenerateDataError("ksvd: fewer than k nonzero data columns")
    chosen = usable[rng.choice_without_replacement(usable.size, k)]
    atoms = Y[:, chosen] / norms[chosen]

    mix_counter = 1
    code = sparse_code_columns(atoms, Y, t0, residual_tol)
    history = [_objective(Y, atoms, code)]

    for sweep in range(iters):
        if sweep > 0:
            fresh = sparse_code_columns(atoms, Y, t0, residual_tol)
            # greedy OMP can code a column worse than its current (SVD-refined)
            # coefficients; keep whichever residual is smaller so the
            # objective never climbs
            old_res = np.linalg.norm(Y - atoms @ code, axis=0)
            new_res = np.linalg.norm(Y - atoms @ fresh, axis=0)
            better = new_res <= old_res
            code[:, better] = fresh[:, better]
        unused = []
        for j in range(k):
            using = np.flatnonzero(code[j, :] != 0.0)
            if using.size == 0:
                unused.append(j)
                continue
            E = Y[:, using] - atoms @ code[:, using] + np.outer(atoms[:, j], code[j, using])
            if np.linalg.norm(E) < 1e-12:
                unused.append(j)
                code[j, using] = 0.0
                continue
            u, sigma, v = rank1_svd(E, iters=power_iters, seed=prng_mix(seed, mix_counter))
            mix_counter += 1
            # accept only if the new rank-1 pair fits the restricted residual
            # at least as well as the current atom/row did
            err_old = float(np.linalg.norm(E - np.outer(atoms[:, j], code[j, using])) ** 2)
            err_new = float(np.linalg.norm(E) ** 2) - sigma * sigma
            if err_new <= err_old:
                atoms[:, j] = u
                code[j, using] = sigma * v
        if unused:
            res_norms = np.linalg.norm(Y - atoms @ code, axis=0)
            order = np.argsort(-res_norms, kind="stable")
            taken = 0
            for j in unused:
                while taken < order.size and norms[order[taken]] <= 1e-12:
                    taken += 1
                if taken >= order.size:
                    break
                col = order[taken]
                taken += 1
                atoms[:, j] = Y[:, col] / norms[col]
        history.append(_objective(Y, atoms, code))

    dictionary = Dictionary(atoms=atoms)
    dictionary.check()
    return KsvdResult(dictionary=dictionary, code=code,
                      objective=history[-1], objective_history=history)


DICT_MAGIC = b"SDICT1\n"


def dump_dictionary(d: Dictionary) -> bytes:
    """Serialize as SDICT1: magic, ASCII dims, row-major little-endian doubles."""
    header = DICT_MAGIC + b"%d %d\n" % (d.atom_dim, d.atom_count)
    return header + np.ascontiguousarray(d.atoms, dtype="<f8").tobytes()


def load_dictionary(data: bytes) -> Dictionary:
    if not data.startswith(DICT_MAGIC):
        raise PgmFormatError("not an SDICT1 dictionary file")
    rest = data[len(DICT_MAGIC):]
    nl = rest.find(b"\n")
    if nl < 0:
        raise PgmFormatError("truncated SDICT1 header")
    try:
        n2, k = (int(t) for t in rest[:nl].split())
    except ValueError:
        raise PgmFormatError("bad SDICT1 dimension line") from None
    body = rest[nl + 1:]
    if len(body) != n2 * k * 8:
        raise PgmFormatError("SDICT1 payload size mismatch")
    atoms = np.frombuffer(body, dtype="<f8").reshape(n2, k).astype(np.float64)
    d = Dictionary(atoms=atoms)
    d.check()
    return d
