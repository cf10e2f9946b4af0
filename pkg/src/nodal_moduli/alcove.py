"""Combinatorics of the weight simplex.

A weight vector ``alpha`` lives in

    Delta = {alpha_1 >= ... >= alpha_n >= alpha_1 - 1, sum(alpha) = 0},

which parametrizes conjugacy classes of SU(n) through ``A = exp(-2 pi i diag(alpha))``.
Faces of Delta are labelled by a :class:`MultiplicityPattern`: the sizes of the
runs of equal entries, plus a flag ``k`` recording whether the boundary
``alpha_1 = alpha_n + 1`` is attained.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from nodal_moduli.errors import InvariantViolation, PatternTooCoarse

ALCOVE_TOL = 1e-12
PATTERN_TOL = 1e-9


@dataclass(frozen=True)
class AlcovePoint:
    """A point of the weight simplex, stored as a read-only float array."""

    alpha: np.ndarray
    tol: float = field(default=ALCOVE_TOL, repr=False, compare=False)

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float).reshape(-1)
        if a.size < 1:
            raise InvariantViolation("alpha must be non-empty")
        tol = self.tol
        if np.any(np.diff(a) > tol):
            raise InvariantViolation(f"alpha not non-increasing: {a}")
        if a[0] - a[-1] > 1 + tol:
            raise InvariantViolation(f"alpha_1 - alpha_n exceeds 1: {a}")
        if abs(a.sum()) > tol * max(1, a.size):
            raise InvariantViolation(f"alpha does not sum to zero: {a.sum()!r}")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @property
    def n(self) -> int:
        return self.alpha.size

    def __eq__(self, other):
        if not isinstance(other, AlcovePoint):
            return NotImplemented
        return self.alpha.shape == other.alpha.shape and bool(np.all(self.alpha == other.alpha))

    def __hash__(self):
        return hash(self.alpha.tobytes())

    def diag(self) -> np.ndarray:
        return np.diag(self.alpha)

    def holonomy(self) -> np.ndarray:
        """The diagonal matrix ``exp(-2 pi i diag(alpha))``."""
        return np.diag(np.exp(-2j * np.pi * self.alpha))

    def tolist(self) -> list[float]:
        return [float(x) for x in self.alpha]


@dataclass(frozen=True)
class MultiplicityPattern:
    """Face label of the simplex.

    Stored by block sizes so that the reversal involution is a list reversal.
    ``I`` gives the cumulative indices ``I_1 < ... < I_l = n``.
    """

    blocks: tuple[int, ...]
    k: int = 0

    def __post_init__(self):
        blocks = tuple(int(b) for b in self.blocks)
        if not blocks or any(b <= 0 for b in blocks):
            raise InvariantViolation(f"block sizes must be positive: {self.blocks}")
        if self.k not in (0, 1):
            raise InvariantViolation(f"k must be 0 or 1, got {self.k}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_I(cls, I, k: int = 0) -> MultiplicityPattern:
        I = [int(i) for i in I]
        if any(b <= a for a, b in zip([0] + I[:-1], I)):
            raise InvariantViolation(f"I must be strictly increasing and positive: {I}")
        return cls(tuple(np.diff([0] + I).tolist()), k)

    @property
    def n(self) -> int:
        return sum(self.blocks)

    @property
    def length(self) -> int:
        return len(self.blocks)

    @property
    def I(self) -> tuple[int, ...]:
        return tuple(itertools.accumulate(self.blocks))

    def merged_blocks(self) -> tuple[int, ...]:
        """Eigenvalue multiplicities of the holonomy ``A``.

        On ``k = 1`` faces the first and last runs of ``alpha`` give the same
        eigenvalue of ``A`` and merge cyclically.
        """
        if self.k == 1 and len(self.blocks) >= 2:
            return (self.blocks[0] + self.blocks[-1],) + self.blocks[1:-1]
        return self.blocks

    def to_json(self) -> dict:
        return {"I": list(self.I), "k": self.k}

    @classmethod
    def from_json(cls, data: dict) -> MultiplicityPattern:
        return cls.from_I(data["I"], int(data.get("k", 0)))

    def __str__(self):
        return f"(I={self.I}, k={self.k})"


@dataclass(frozen=True)
class TorsionShift:
    """Degree, flag and weight bookkeeping on a ``k = 1`` face.

    Flag dimensions list the proper steps only; the full fiber is omitted.
    """

    t1: int
    t2: int
    shifted_degree: int
    flag_dims_x1: tuple[int, ...]
    flag_dims_x2: tuple[int, ...]
    weights_x1: tuple[float, ...]
    weights_x2: tuple[float, ...]

    @property
    def shifted_I1(self) -> tuple[int, ...]:
        return self.flag_dims_x1

    @property
    def shifted_I2(self) -> tuple[int, ...]:
        return self.flag_dims_x2


def stabilizer_pattern(alpha, tol: float = PATTERN_TOL) -> MultiplicityPattern:
    """Read the face of ``alpha``: runs of (numerically) equal entries and the boundary flag."""
    a = _as_alpha(alpha)
    blocks = []
    run = 1
    for prev, cur in zip(a[:-1], a[1:]):
        if prev - cur > tol:
            blocks.append(run)
            run = 1
        else:
            run += 1
    blocks.append(run)
    k = 1 if abs(a[0] - a[-1] - 1.0) <= tol else 0
    return MultiplicityPattern(tuple(blocks), k)


def enumerate_faces(n: int) -> list[MultiplicityPattern]:
    """All ``2 * 2**(n-1)`` face labels: compositions of ``n`` times ``k in {0, 1}``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    faces = []
    for cuts in itertools.product((0, 1), repeat=n - 1):
        I = [i + 1 for i, c in enumerate(cuts) if c] + [n]
        for k in (0, 1):
            faces.append(MultiplicityPattern.from_I(I, k))
    faces.sort(key=lambda p: (p.k, p.length, p.I))
    return faces


def face_is_attainable(pattern: MultiplicityPattern) -> bool:
    # a constant alpha summing to zero is 0, so alpha_1 = alpha_n + 1 needs two runs
    return not (pattern.k == 1 and pattern.length == 1)


def face_point(pattern: MultiplicityPattern) -> AlcovePoint:
    """A deterministic point in the relative interior of a face."""
    if not face_is_attainable(pattern):
        raise PatternTooCoarse(f"face {pattern} contains no points")
    ell = pattern.length
    if ell == 1:
        values = np.zeros(1)
    else:
        spread = 1.0 if pattern.k == 1 else 0.5
        values = spread * (ell - 1 - np.arange(ell)) / (ell - 1)
    a = np.repeat(values, pattern.blocks)
    a -= a.mean()
    return AlcovePoint(a)


def random_alcove_point(rng: np.random.Generator, n: int, *, face_prob: float = 0.0) -> AlcovePoint:
    """Sample ``alpha`` from the simplex through its barycentric gap coordinates.

    The gaps ``alpha_j - alpha_{j+1}`` and ``alpha_n - alpha_1 + 1`` are
    Dirichlet(1, ..., 1), i.e. uniform on Delta. With ``face_prob > 0`` each gap
    is independently zeroed, which lands samples on lower-dimensional faces.
    """
    gaps = rng.dirichlet(np.ones(n))
    if face_prob > 0:
        keep = rng.random(n) >= face_prob
        if not keep.any():
            keep[rng.integers(n)] = True
        gaps = np.where(keep, gaps, 0.0)
        gaps /= gaps.sum()
    return alcove_from_gaps(gaps)


def alcove_from_gaps(gaps) -> AlcovePoint:
    gaps = np.asarray(gaps, dtype=float)
    n = gaps.size
    # alpha_j = alpha_n + sum_{i >= j} gap_i for i < n; fix alpha_n by sum zero
    tail = np.concatenate([np.cumsum(gaps[: n - 1][::-1])[::-1], [0.0]])
    # equal partial sums stay bit-identical, so zero gaps give exactly equal entries
    a = tail - tail.mean()
    return AlcovePoint(a, tol=1e-10)


def reversal(alpha) -> AlcovePoint:
    """``alpha -> -R(alpha)``: negate and reverse; the weights of ``A^{-1}`` in alcove order."""
    a = _as_alpha(alpha)
    return AlcovePoint(-a[::-1] + 0.0)


def reversal_on_patterns(pattern: MultiplicityPattern) -> MultiplicityPattern:
    return MultiplicityPattern(pattern.blocks[::-1], pattern.k)


def symmetric_strata(n: int) -> list[MultiplicityPattern]:
    """Labels ``(I, k)`` of the symmetric strata, keyed by the first marked point."""
    return enumerate_faces(n)


def symmetric_pairs(n: int) -> list[tuple[MultiplicityPattern, MultiplicityPattern]]:
    return [(p, reversal_on_patterns(p)) for p in symmetric_strata(n)]


def merge_adjacent_blocks(pattern: MultiplicityPattern, s: int) -> MultiplicityPattern:
    """Merge blocks ``s`` and ``s + 1`` (0-based), the face reached when their gap closes."""
    b = list(pattern.blocks)
    if not 0 <= s < len(b) - 1:
        raise IndexError(f"no block pair at {s} in {pattern}")
    b[s : s + 2] = [b[s] + b[s + 1]]
    return MultiplicityPattern(tuple(b), pattern.k)


def torsion_shift(pattern: MultiplicityPattern, alpha=None, tol: float = PATTERN_TOL) -> TorsionShift:
    """Torsion lengths, shifted degree, shifted flags and shifted weights on a ``k = 1`` face.

    For ``k = 0`` the zero shift is returned (unshifted flags, no torsion).
    """
    I = pattern.I
    ell = pattern.length
    if pattern.k == 0:
        weights = ()
        if alpha is not None:
            a = _as_alpha(alpha)
            weights = tuple(float(a[i - 1]) for i in I)
        return TorsionShift(0, 0, 0, I[:-1], tuple(pattern.n - i for i in I[-2::-1]), weights, tuple(-w for w in weights[::-1]))
    if ell == 1:
        raise PatternTooCoarse("k = 1 needs at least two distinct weights")
    if alpha is None:
        alpha = face_point(pattern)
    a = _as_alpha(alpha)
    if a.size != pattern.n:
        raise ValueError("alpha and pattern have different rank")
    if stabilizer_pattern(a, tol) != pattern:
        raise ValueError(f"alpha {a} does not lie on face {pattern}")
    t1 = I[-1] - I[-2]
    t2 = I[0]
    # proper flag steps of E/torsion at x1 (I_j + t1) and x2 (I_l - I_{l-j} + t2)
    dims1 = tuple(I[j] + t1 for j in range(ell - 2))
    dims2 = tuple(I[-1] - I[ell - 1 - j] + t2 for j in range(1, ell - 1))
    weights1 = tuple(float(a[I[j] - 1]) for j in range(ell - 1))
    weights2 = tuple(float(-a[I[j] - 1]) for j in range(ell - 1, 0, -1))
    return TorsionShift(t1, t2, -t1 - t2, dims1, dims2, weights1, weights2)


def _as_alpha(alpha) -> np.ndarray:
    if isinstance(alpha, AlcovePoint):
        return alpha.alpha
    return np.asarray(alpha, dtype=float).reshape(-1)
