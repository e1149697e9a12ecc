"""Sparse vector technique: above-threshold answers to a stream of queries.

Each query is a real value ``f_i`` computed by the caller from the private
data and assumed to have sensitivity 1.  The session adds Laplace noise to a
threshold and to each query, answers ``True`` (above) or ``False`` (below),
and stops answering ``True`` once ``ceil(c)`` above-answers were given.

:class:`SvtSession` is the scalar, one-query-at-a-time form.
:class:`SvtBank` runs many independent sessions in lockstep on arrays; the
hierarchy engine uses it with one session per tree of a forest.
"""

import math

import numpy as np

from .errors import InputError
from .noise import sample_laplace

TOP = True
BOTTOM = False


def svt_margin(c: float, eps: float, d: int, eta: float) -> float:
    """Accuracy margin ``8c/eps * ln(2d/eta)`` of a session answering ``d`` queries."""
    return 8.0 * c / eps * math.log(2.0 * d / eta)


def _check(eta, c, eps, d):
    if not c >= 1:
        raise InputError(f"cutoff c must be >= 1, got {c!r}")
    if not (eps > 0 and math.isfinite(eps)):
        raise InputError(f"eps must be positive, got {eps!r}")
    if int(d) != d or d < 1:
        raise InputError(f"stream length must be a positive integer, got {d!r}")
    if not 0 < eta < 1:
        raise InputError(f"eta must lie in (0, 1), got {eta!r}")


class SvtSession:
    """One eps-DP above-threshold session over at most ``d`` queries.

    Attributes
    ----------
    noisy_tau : float
        Current noisy threshold, ``tau + Lap(2c/eps)``.
    t : int
        Number of above-answers so far.
    position : int
        Number of queries answered so far.
    """

    def __init__(self, eta, c, tau, eps, d, rng):
        _check(eta, c, eps, d)
        self.eta, self.c, self.tau, self.eps, self.d = eta, float(c), float(tau), eps, int(d)
        self.cutoff = math.ceil(self.c)
        self.rng = rng
        self.t = 0
        self.position = 0
        self.noisy_tau = self.tau + sample_laplace(2 * self.c / eps, rng)

    @property
    def margin(self) -> float:
        return svt_margin(self.c, self.eps, self.d, self.eta)

    @property
    def exhausted(self) -> bool:
        return self.t >= self.cutoff

    def answer(self, f_value: float) -> bool:
        if self.position >= self.d:
            raise InputError(f"stream length {self.d} exceeded")
        self.position += 1
        if self.t >= self.cutoff:
            return BOTTOM
        noisy = f_value + sample_laplace(4 * self.c / self.eps, self.rng)
        if noisy >= self.noisy_tau:
            self.t += 1
            self.noisy_tau = self.tau + sample_laplace(2 * self.c / self.eps, self.rng)
            return TOP
        return BOTTOM


def svt_open(eta, c, tau, eps, d, rng) -> SvtSession:
    return SvtSession(eta, c, tau, eps, d, rng)


def svt_answer(session: SvtSession, f_value: float) -> bool:
    return session.answer(f_value)


class SvtBank:
    """``n`` independent sessions sharing parameters, answered in batches.

    Noise order per :meth:`answer` call: one query draw per live session in
    the order given, then one threshold redraw per above-answer.
    """

    def __init__(self, n, eta, c, tau, eps, d, rng):
        _check(eta, c, eps, d)
        self.c, self.tau, self.eps, self.d = float(c), float(tau), eps, int(d)
        self.cutoff = math.ceil(self.c)
        self.rng = rng
        self.t = np.zeros(n, dtype=np.int64)
        self.position = np.zeros(n, dtype=np.int64)
        self.noisy_tau = self.tau + sample_laplace(2 * self.c / eps, rng, n)

    def answer(self, idx, f_values):
        idx = np.asarray(idx, dtype=np.int64)
        f_values = np.asarray(f_values, dtype=float)
        if np.any(self.position[idx] >= self.d):
            raise InputError(f"stream length {self.d} exceeded")
        self.position[idx] += 1
        out = np.zeros(idx.shape, dtype=bool)
        live = self.t[idx] < self.cutoff
        if not live.any():
            return out
        sel = idx[live]
        noisy = f_values[live] + sample_laplace(4 * self.c / self.eps, self.rng, sel.size)
        hit = noisy >= self.noisy_tau[sel]
        out[live] = hit
        up = sel[hit]
        if up.size:
            self.t[up] += 1
            self.noisy_tau[up] = self.tau + sample_laplace(2 * self.c / self.eps, self.rng, up.size)
        return out


def band_violations(values, answers, tau, margin, c):
    """Flag sessions that break the accuracy band before the stopping index.

    The band requires ``f >= tau - margin`` for every above-answer and
    ``f < tau + margin`` for every below-answer, checked up to and including
    the ``ceil(c)``-th above-answer (or the whole stream if there are fewer).

    Parameters
    ----------
    values, answers : array_like, shape (n_sessions, d)
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    answers = np.atleast_2d(np.asarray(answers, dtype=bool))
    k = math.ceil(c)
    n_top = np.cumsum(answers, axis=1)
    # position j is inside the window iff fewer than k tops happened strictly before it
    before = n_top - answers
    window = before < k
    bad = (answers & (values < tau - margin)) | (~answers & (values >= tau + margin))
    return np.any(bad & window, axis=1)
