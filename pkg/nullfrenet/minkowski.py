"""
Minkowski-metric linear algebra in 2+1 and 3+1 dimensions.

The signature is (+, −, −, −) throughout. Vectors are numpy arrays of three or
four finite components; the dimension travels with the array's length and
mixing dimensions is an error. Antisymmetrization carries a factor ½, so that
a^[μ b^ν] = ½(a^μ b^ν − a^ν b^μ).

The Levi-Civita symbol is fixed by requiring ε(e₊, e₋, e₁, e₂) = +1 on the
standard null frame (ε(e₊, e₋, e₁) = +1 in 2+1). Since the standard frame has
negative determinant, the symbol with all indices down is minus the permutation
symbol. Contractions produce covectors, which are raised with η before they are
returned, so every function here returns contravariant components.
"""
from __future__ import annotations
from functools import cache
from itertools import permutations
from typing import Literal, NamedTuple, TypeAlias

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .error import DimensionError


__all__ = (
    'BiVector',
    'boost',
    'check_bivector',
    'check_vector',
    'Dimension',
    'dot',
    'FourVector',
    'GRAM',
    'gram',
    'gram_residual',
    'levi_civita',
    'levi_civita_contract3',
    'levi_civita_contract4',
    'levi_civita_dual3',
    'metric',
    'norm2',
    'NullFrame',
    'orientation',
    'raise_index',
    'rotation',
    'standard_frame',
    'volume',
    'wedge',
    'PLUS',
    'ONE',
    'MINUS',
    'TWO',
)


Dimension: TypeAlias = Literal[3, 4]
FourVector: TypeAlias = NDArray[np.float64]
BiVector: TypeAlias = NDArray[np.float64]


def check_vector(a: ArrayLike, dimension: None | int = None) -> FourVector:
    """Convert to a vector, insisting on 3 or 4 finite components."""
    v = np.asarray(a, dtype=np.float64)
    if v.ndim != 1 or len(v) not in (3, 4):
        raise DimensionError(f'expected 3 or 4 components, got shape {v.shape}')
    if dimension is not None and len(v) != dimension:
        raise DimensionError(f'expected {dimension} components, got {len(v)}')
    if not np.all(np.isfinite(v)):
        raise DimensionError(f'vector {v.tolist()} has non-finite components')
    return v


def check_bivector(m: ArrayLike, dimension: None | int = None) -> BiVector:
    b = np.asarray(m, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] not in (3, 4):
        raise DimensionError(f'expected a 3×3 or 4×4 bivector, got shape {b.shape}')
    if dimension is not None and b.shape[0] != dimension:
        raise DimensionError(f'expected a {dimension}×{dimension} bivector')
    if not np.all(np.isfinite(b)):
        raise DimensionError('bivector has non-finite components')
    if not np.array_equal(b, -b.T):
        raise DimensionError('bivector is not antisymmetric')
    return b


def _same(a: FourVector, b: FourVector) -> int:
    if len(a) != len(b):
        raise DimensionError(f'cannot combine {len(a)}- and {len(b)}-vectors')
    return len(a)


@cache
def metric(dimension: int) -> NDArray[np.float64]:
    eta = -np.eye(dimension)
    eta[0, 0] = 1.0
    eta.setflags(write=False)
    return eta


def dot(a: ArrayLike, b: ArrayLike) -> float:
    u, v = check_vector(a), check_vector(b)
    _same(u, v)
    return float(u[0] * v[0] - u[1:] @ v[1:])


def norm2(a: ArrayLike) -> float:
    return dot(a, a)


def wedge(a: ArrayLike, b: ArrayLike) -> BiVector:
    u, v = check_vector(a), check_vector(b)
    _same(u, v)
    return 0.5 * (np.outer(u, v) - np.outer(v, u))


def raise_index(covector: ArrayLike) -> FourVector:
    w = np.asarray(covector, dtype=np.float64)
    return metric(len(w)) @ w


# ======================================================================================
# Levi-Civita


def _parity(p: tuple[int, ...]) -> int:
    n = len(p)
    inversions = sum(1 for i in range(n) for j in range(i + 1, n) if p[i] > p[j])
    return -1 if inversions % 2 else 1


@cache
def levi_civita(dimension: int) -> NDArray[np.float64]:
    """The Levi-Civita symbol with all indices down."""
    eps = np.zeros((dimension,) * dimension)
    for p in permutations(range(dimension)):
        eps[p] = -_parity(p)
    eps.setflags(write=False)
    return eps


def levi_civita_contract3(P: ArrayLike, X: ArrayLike) -> FourVector:
    """Return ε_μρσ P^ρ X^σ with the index raised. 2+1 only."""
    p, x = check_vector(P), check_vector(X)
    if _same(p, x) != 3:
        raise DimensionError('the three-index contraction exists in 2+1 only')
    return raise_index(np.einsum('mrs,r,s->m', levi_civita(3), p, x))


def levi_civita_dual3(M: ArrayLike) -> FourVector:
    """Return ε_μρσ M^ρσ with the index raised. 2+1 only."""
    m = check_bivector(M, 3)
    return raise_index(np.einsum('mrs,rs->m', levi_civita(3), m))


def levi_civita_contract4(P: ArrayLike, M: ArrayLike) -> FourVector:
    """Return ε_μνρσ P^ν M^ρσ with the index raised. 3+1 only."""
    p = check_vector(P)
    if len(p) != 4:
        raise DimensionError('the four-index contraction exists in 3+1 only')
    m = check_bivector(M, 4)
    return raise_index(np.einsum('mnrs,n,rs->m', levi_civita(4), p, m))


def volume(*vectors: ArrayLike) -> float:
    """ε evaluated on as many vectors as there are dimensions."""
    vs = [check_vector(v) for v in vectors]
    n = len(vs)
    if any(len(v) != n for v in vs):
        raise DimensionError(f'volume needs {n} vectors with {n} components each')
    eps = levi_civita(n)
    for v in vs:
        eps = np.tensordot(v, eps, axes=(0, 0))
    return float(eps)


# ======================================================================================
# Null frames


# Frames are stored as rows in the order e₊, e₁, e₋, e₂; this is the order in
# which the Frenet-Serret equations chain the vectors.
PLUS, ONE, MINUS, TWO = 0, 1, 2, 3


@cache
def _gram_table(dimension: int) -> NDArray[np.float64]:
    g = np.zeros((dimension, dimension))
    g[PLUS, MINUS] = g[MINUS, PLUS] = 1.0
    g[ONE, ONE] = -1.0
    if dimension == 4:
        g[TWO, TWO] = -1.0
    g.setflags(write=False)
    return g


GRAM = {3: _gram_table(3), 4: _gram_table(4)}


class NullFrame(NamedTuple):
    """A null frame, stored as rows e₊, e₁, e₋[, e₂]."""

    rows: NDArray[np.float64]

    @classmethod
    def of(
        cls,
        e_plus: ArrayLike,
        e1: ArrayLike,
        e_minus: ArrayLike,
        e2: None | ArrayLike = None,
    ) -> NullFrame:
        vectors = [check_vector(e_plus), check_vector(e1), check_vector(e_minus)]
        n = len(vectors[0])
        if e2 is not None:
            vectors.append(check_vector(e2))
        if len(vectors) != n or any(len(v) != n for v in vectors):
            raise DimensionError(f'a {n}-dimensional frame needs {n} vectors')
        return cls(np.array(vectors))

    @property
    def dimension(self) -> int:
        return int(self.rows.shape[0])

    @property
    def e_plus(self) -> FourVector:
        return self.rows[PLUS]

    @property
    def e1(self) -> FourVector:
        return self.rows[ONE]

    @property
    def e_minus(self) -> FourVector:
        return self.rows[MINUS]

    @property
    def e2(self) -> None | FourVector:
        return self.rows[TWO] if self.dimension == 4 else None

    def gram(self) -> NDArray[np.float64]:
        return gram(self.rows)

    def residual(self) -> float:
        return gram_residual(self.rows)

    def transform(self, lorentz: NDArray[np.float64]) -> NullFrame:
        return NullFrame(self.rows @ lorentz.T)


def gram(rows: NDArray[np.float64]) -> NDArray[np.float64]:
    return rows @ metric(rows.shape[-1]) @ rows.T


def gram_residual(rows: NDArray[np.float64]) -> float:
    return float(np.max(np.abs(gram(rows) - _gram_table(rows.shape[0]))))


def orientation(frame: NullFrame) -> float:
    """ε(e₊, e₋, e₁[, e₂]), which is +1 for a positively oriented frame."""
    vectors = [frame.e_plus, frame.e_minus, frame.e1]
    if frame.dimension == 4:
        vectors.append(frame.rows[TWO])
    return volume(*vectors)


def standard_frame(dimension: int) -> NullFrame:
    """e₊ = (1,1,0,0)/√2, e₋ = (1,−1,0,0)/√2, e₁ = (0,0,1,0), e₂ = (0,0,0,1)."""
    if dimension not in (3, 4):
        raise DimensionError(f'dimension must be 3 or 4, not {dimension}')
    rows = np.zeros((dimension, dimension))
    rows[PLUS, :2] = (1 / np.sqrt(2), 1 / np.sqrt(2))
    rows[MINUS, :2] = (1 / np.sqrt(2), -1 / np.sqrt(2))
    rows[ONE, 2] = 1.0
    if dimension == 4:
        rows[TWO, 3] = 1.0
    return NullFrame(rows)


# ======================================================================================
# Lorentz transformations


def boost(rapidity: float, axis: int, dimension: int) -> NDArray[np.float64]:
    """A pure boost along spatial axis 1 ≤ axis < dimension."""
    if not 1 <= axis < dimension:
        raise DimensionError(f'no spatial axis {axis} in {dimension} dimensions')
    L = np.eye(dimension)
    c, s = np.cosh(rapidity), np.sinh(rapidity)
    L[0, 0] = L[axis, axis] = c
    L[0, axis] = L[axis, 0] = s
    return L


def rotation(angle: float, i: int, j: int, dimension: int) -> NDArray[np.float64]:
    """A rotation in the spatial plane spanned by axes i and j."""
    if not (1 <= i < dimension and 1 <= j < dimension and i != j):
        raise DimensionError(f'no spatial plane ({i}, {j}) in {dimension} dimensions')
    L = np.eye(dimension)
    c, s = np.cos(angle), np.sin(angle)
    L[i, i] = L[j, j] = c
    L[i, j] = -s
    L[j, i] = s
    return L
