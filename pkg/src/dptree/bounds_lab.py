"""Executable lower-bound constructions on complete binary trees.

Two tools:

* a packing attack: datasets that put ``D/2`` on a single leaf, and a
  randomized decoder that walks from the root toward children whose released
  estimate clears ``tau_max``.  Any mechanism that is accurate at thresholds
  ``tau_max`` lets the walk find the hidden leaf often enough to contradict
  privacy when thresholds are too small.
* a factorization-norm witness: the nuclear norm of ``W o v u^T`` for the
  binary-tree workload ``W`` with fixed weights ``v, u``, computed both from
  its closed-form eigenvalues and by brute force.

Heap numbering is used throughout: node ``h`` has children ``2h, 2h+1`` and
sits at index ``h - 1`` of :func:`~dptree.tree_core.complete_binary`.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InputError, ResourceError
from .metrics import wilson_margin
from .noise import trial_rng
from .tree_core import LeafCounts, NodeValues, complete_binary

MAX_BRUTEFORCE_DEPTH = 8


def binary_entropy(x: float) -> float:
    """Entropy in bits; ``H(0) = H(1) = 0``."""
    if not 0 <= x <= 1:
        raise InputError(f"x must lie in [0, 1], got {x!r}")
    if x in (0, 1):
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def amplification_copies(eta: float, kappa: float) -> int:
    """Number of independent releases whose entry-wise median is used: ``ceil(ln(4/kappa) / (2 (1/2 - eta)^2))``."""
    if not 0 <= eta < 0.5:
        raise InputError(f"eta must lie in [0, 1/2), got {eta!r}")
    if not 0 < kappa <= 1:
        raise InputError(f"kappa must lie in (0, 1], got {kappa!r}")
    return math.ceil(math.log(4 / kappa) / (2 * (0.5 - eta) ** 2))


def attack_floor(d: int, eta: float) -> float:
    """Guaranteed decoding probability ``2^{-(d-1) H(4 eta)} / 4``."""
    return 0.25 * 2.0 ** (-(d - 1) * binary_entropy(4 * eta))


@dataclass(frozen=True)
class AttackConfig:
    """Parameters of the packing attack on a depth-``d`` binary tree.

    ``D = 2 ceil(tau_max / (1 - alpha))`` and ``kappa = 1 - 4 eta``.
    ``n_indices`` caps how many hidden-leaf positions are tried (sampled
    without replacement); ``None`` tries them all.
    """

    d: int
    tau_max: float
    alpha: float
    eta: float
    trials: int = 100
    s: int = 1
    n_indices: Optional[int] = None

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise InputError(f"d must be a positive integer, got {self.d!r}")
        if not 0 <= self.eta <= 0.125:
            raise InputError(f"eta must lie in [0, 1/8] so that kappa >= 1/2, got {self.eta!r}")
        if not 0 <= self.alpha < 1:
            raise InputError(f"alpha must lie in [0, 1), got {self.alpha!r}")
        if not (self.tau_max > 0 and math.isfinite(self.tau_max)):
            raise InputError("tau_max must be positive")
        if self.trials < 1 or self.s < 1:
            raise InputError("trials and s must be >= 1")

    @property
    def D(self) -> int:
        return 2 * math.ceil(self.tau_max / (1 - self.alpha))

    @property
    def kappa(self) -> float:
        return 1 - 4 * self.eta

    @property
    def n_leaves(self) -> int:
        return 1 << (self.d - 1)

    @property
    def floor(self) -> float:
        return attack_floor(self.d, self.eta)


def packing_dataset(d: int, D: int, i: int) -> LeafCounts:
    """``D/2`` on leaf ``i`` (1-based, left to right) of the depth-``d`` binary tree."""
    if D % 2 or D < 2:
        raise InputError(f"D must be even and >= 2, got {D!r}")
    n = 1 << (d - 1)
    if not 1 <= i <= n:
        raise InputError(f"leaf index {i} outside [1, {n}]")
    tree = complete_binary(d)
    x = np.zeros(n, dtype=np.int64)
    x[i - 1] = D // 2
    return LeafCounts.from_array(tree, x)


def _as_matrix(estimates, d):
    n_nodes = (1 << d) - 1
    if isinstance(estimates, NodeValues):
        tree = estimates.tree
        if tree.ids != complete_binary(d).ids:
            try:
                return np.array([[estimates[str(h)] for h in range(1, n_nodes + 1)]])
            except Exception as exc:
                raise InputError(f"missing estimate: {exc}") from None
        estimates = estimates.values
    E = np.atleast_2d(np.asarray(estimates, dtype=float))
    if E.shape[1] != n_nodes:
        raise InputError(f"expected {n_nodes} estimates per release, got {E.shape[1]}")
    return E


def decode_batch(E, d, tau_max, kappa, rng) -> np.ndarray:
    """Decode every row of ``E`` (shape ``(k, 2^d - 1)``); returns 1-based leaf indices."""
    E = _as_matrix(E, d)
    k = E.shape[0]
    h = np.ones(k, dtype=np.int64)
    rows = np.arange(k)
    for _ in range(d - 1):
        left = E[rows, 2 * h - 1] >= tau_max  # heap 2h at index 2h-1
        right = E[rows, 2 * h] >= tau_max
        u = rng.random(k)
        one = left ^ right
        # exactly one heavy child: follow it w.p. kappa; otherwise a fair coin
        go_right = np.where(one, np.where(right, u < kappa, u >= kappa), u < 0.5)
        h = 2 * h + go_right
    return h - (1 << (d - 1)) + 1


def decode(estimates, d, tau_max, kappa, rng) -> int:
    return int(decode_batch(estimates, d, tau_max, kappa, rng)[0])


def median_release(mechanism, tree, counts, rng, s: int) -> np.ndarray:
    """Entry-wise median of ``s`` independent releases."""
    runs = []
    for _ in range(s):
        out = mechanism(tree, counts, rng)
        runs.append(out.values if isinstance(out, NodeValues) else np.asarray(out))
    return runs[0].astype(float) if s == 1 else np.median(np.stack(runs), axis=0)


@dataclass
class AttackReport:
    config: AttackConfig
    indices: np.ndarray
    successes: np.ndarray
    trials: int

    @property
    def rates(self):
        return self.successes / self.trials

    @property
    def margins(self):
        return wilson_margin(self.successes, self.trials)

    @property
    def mean_rate(self) -> float:
        return float(self.successes.sum() / (self.trials * len(self.indices)))

    @property
    def mean_stderr(self) -> float:
        p, n = self.mean_rate, self.trials * len(self.indices)
        return math.sqrt(max(p * (1 - p), 0.0) / n)

    @property
    def floor(self) -> float:
        return self.config.floor

    def rows(self):
        out = [("*", "attack:mean_success", self.mean_rate, self.mean_stderr),
               ("*", "attack:floor", self.floor, 0.0)]
        for i, k, m in zip(self.indices, self.successes, self.margins):
            out.append((str(int(i)), "attack:success", float(k / self.trials), float(m)))
        return out


def attack_success_rate(mechanism, config: AttackConfig, rng, indices: Optional[Sequence[int]] = None) -> AttackReport:
    """Decoding success frequency per hidden-leaf position.

    Every (position, trial) pair draws from its own stream, so results do not
    depend on how many positions are tried.
    """
    seed = int(rng.integers(0, 2**63 - 1)) if isinstance(rng, np.random.Generator) else int(rng)
    n = config.n_leaves
    if indices is None:
        if config.n_indices is None or config.n_indices >= n:
            indices = np.arange(1, n + 1)
        else:
            pick = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1 << 30,)))
            indices = np.sort(pick.choice(np.arange(1, n + 1), config.n_indices, replace=False))
    indices = np.asarray(indices, dtype=np.int64)
    tree = complete_binary(config.d)
    successes = np.zeros(len(indices), dtype=np.int64)
    for j, i in enumerate(indices):
        counts = packing_dataset(config.d, config.D, int(i))
        E = np.empty((config.trials, tree.n_nodes))
        gens = [trial_rng(seed, t, int(i)) for t in range(config.trials)]
        for t, g in enumerate(gens):
            E[t] = median_release(mechanism, tree, counts, g, config.s)
        # decoder coins come after all releases of the same trial stream
        guesses = np.array(
            [decode_batch(E[t:t + 1], config.d, config.tau_max, config.kappa, g)[0] for t, g in enumerate(gens)]
        )
        successes[j] = int(np.sum(guesses == i))
    return AttackReport(config, indices, successes, config.trials)


# ---------------------------------------------------------------- factorization-norm witness


def witness_eigenvalues(d: int):
    """Closed-form eigenvalues of ``U^T U`` as ``[(value, multiplicity), ...]``.

    With ``n = 2^{d-1}`` leaves and ``lam = 1/(n d)``: the all-ones vector has
    eigenvalue ``lam sum_{l=0}^{d-1} 2^{d-1-2l}``; each of the ``2^l``
    internal nodes at 0-based depth ``l`` contributes
    ``lam sum_{j=l+1}^{d-1} 2^{d-1-2j}``.
    """
    if int(d) != d or d < 1:
        raise InputError(f"d must be a positive integer, got {d!r}")
    d = int(d)
    n = 1 << (d - 1)
    lam = 1.0 / (n * d)

    def tail(start):
        return lam * math.fsum(2.0 ** (d - 1 - 2 * j) for j in range(start, d))

    out = [(tail(0), 1)]
    out += [(tail(lvl + 1), 1 << lvl) for lvl in range(d - 1)]
    assert sum(m for _, m in out) == n
    return out


def gamma2_witness_value(d: int) -> float:
    """Nuclear norm of the witness matrix from its closed-form spectrum."""
    return math.fsum(m * math.sqrt(v) for v, m in witness_eigenvalues(d))


def witness_matrix(d: int) -> np.ndarray:
    """``U = W o v u^T`` with ``v_i = (2^{depth_i} d)^{-1/2}`` (0-based depth) and ``u_j = n^{-1/2}``."""
    if d > MAX_BRUTEFORCE_DEPTH:
        raise ResourceError(f"brute force limited to d <= {MAX_BRUTEFORCE_DEPTH}")
    tree = complete_binary(d)
    n = tree.n_leaves
    W = np.zeros((tree.n_nodes, n))
    for j, leaf in enumerate(tree.leaves):
        W[tree.ancestors(int(leaf)), j] = 1.0
    v = 1.0 / np.sqrt(2.0 ** (tree.depth - 1) * d)
    return W * v[:, None] / math.sqrt(n)


def jacobi_eigenvalues(A, tol=1e-13, max_sweeps=100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or not np.allclose(A, A.T, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise InputError("matrix must be square and symmetric")
    scale = np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * ap - s * aq, s * ap + c * aq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :], A[q, :] = c * rp - s * rq, s * rp + c * rq
    else:
        raise ResourceError("Jacobi iteration did not converge")
    return np.sort(np.diag(A))


def nuclear_norm_bruteforce(d: int) -> float:
    """Sum of singular values of the explicit witness matrix (``d <= 8``)."""
    if int(d) != d or d < 1:
        raise InputError(f"d must be a positive integer, got {d!r}")
    U = witness_matrix(int(d))
    eig = jacobi_eigenvalues(U.T @ U)
    return math.fsum(np.sqrt(np.maximum(eig, 0.0)))
