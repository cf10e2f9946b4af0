"""Least squares over products of matrix groups.

A problem is a list of :class:`Term` s, each an ordered word in named matrix
variables (and their inverses) minus a constant target. Variables move by
right multiplication ``U -> U exp(X)`` with ``X`` in the span of a fixed
orthonormal basis, so subgroups (tori, block subgroups) are preserved exactly.

The solver is Levenberg-Marquardt on the pulled-back residual: the damping
parameter acts as the backtracking control, growing on rejected steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nodal_moduli.lie_core import exp_skew

Letter = tuple[str, int]


@dataclass
class Term:
    word: list[Letter]
    target: np.ndarray


@dataclass
class Problem:
    terms: list[Term]
    bases: dict[str, np.ndarray]
    constants: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def names(self) -> list[str]:
        return list(self.bases)

    @property
    def dim(self) -> int:
        return sum(b.shape[0] for b in self.bases.values())

    def offsets(self) -> dict[str, int]:
        out, k = {}, 0
        for name, b in self.bases.items():
            out[name] = k
            k += b.shape[0]
        return out

    def _mat(self, values, name, power):
        m = values[name] if name in values else self.constants[name]
        return m if power == 1 else m.conj().T

    def evaluate(self, values: dict[str, np.ndarray]) -> list[np.ndarray]:
        out = []
        for term in self.terms:
            acc = None
            for name, power in term.word:
                m = self._mat(values, name, power)
                acc = m if acc is None else acc @ m
            out.append(acc - term.target)
        return out

    def residual(self, values) -> np.ndarray:
        parts = self.evaluate(values)
        z = np.concatenate([p.reshape(-1) for p in parts])
        return np.concatenate([z.real, z.imag])

    def complex_jacobian(self, values) -> np.ndarray:
        """d(term)/d(coordinates), shape ``(sum of n^2 over terms, dim)``, complex."""
        offsets = self.offsets()
        rows = []
        for term in self.terms:
            mats = [self._mat(values, name, power) for name, power in term.word]
            n = mats[0].shape[0]
            prefix = [np.eye(n, dtype=complex)]
            for m in mats[:-1]:
                prefix.append(prefix[-1] @ m)
            suffix = [np.eye(n, dtype=complex)]
            for m in mats[:0:-1]:
                suffix.append(m @ suffix[-1])
            suffix = suffix[::-1]
            block = np.zeros((n * n, self.dim), dtype=complex)
            for p, (name, power) in enumerate(term.word):
                if name not in self.bases:
                    continue
                basis = self.bases[name]
                if basis.shape[0] == 0:
                    continue
                if power == 1:
                    left, right = prefix[p] @ mats[p], suffix[p]
                else:
                    left, right = -prefix[p], mats[p] @ suffix[p]
                d = np.einsum("ij,ajk,kl->ila", left, basis, right).reshape(n * n, -1)
                k = offsets[name]
                block[:, k : k + basis.shape[0]] += d
            rows.append(block)
        return np.concatenate(rows)

    def jacobian(self, values) -> np.ndarray:
        j = self.complex_jacobian(values)
        return np.concatenate([j.real, j.imag])

    def retract(self, values, step: np.ndarray) -> dict[str, np.ndarray]:
        out = dict(values)
        for name, k in self.offsets().items():
            basis = self.bases[name]
            if basis.shape[0] == 0:
                continue
            x = np.einsum("a,aij->ij", step[k : k + basis.shape[0]], basis)
            out[name] = values[name] @ exp_skew(x)
        return out


@dataclass
class LMResult:
    values: dict[str, np.ndarray]
    residual: float
    iterations: int
    converged: bool


def levenberg_marquardt(problem: Problem, values: dict[str, np.ndarray], *, tol: float = 1e-13, max_iter: int = 300, lam: float = 1e-3) -> LMResult:
    r = problem.residual(values)
    f = float(r @ r)
    it = 0
    for it in range(1, max_iter + 1):
        if np.sqrt(f) <= tol:
            break
        j = problem.jacobian(values)
        g = j.T @ r
        h = j.T @ j
        scale = max(np.max(np.diag(h)), 1e-300)
        accepted = False
        while lam < 1e12:
            step = np.linalg.solve(h + lam * scale * np.eye(h.shape[0]), -g)
            trial = problem.retract(values, step)
            r_new = problem.residual(trial)
            f_new = float(r_new @ r_new)
            if f_new < f:
                values, r, f = trial, r_new, f_new
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                break
            lam *= 4.0
        if not accepted:
            break
    res = float(np.sqrt(f))
    return LMResult(values, res, it, res <= tol)
