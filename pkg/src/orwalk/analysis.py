"""Characteristic-function route to P(X at the n-th skeleton return = 0).

The burst length xi has characteristic function
``chi(theta) = p / (1 - q exp(i theta)) = r(theta) exp(i alpha(theta))`` with
p = 2/3, q = 1/3, and the first-return time of the skeleton has generating
function ``f(s) = 1 - sqrt(1 - s**2)``.

* Alternate lattice: the signed occupation sum vanishes at every return, so
  ``E exp(i theta X_{sigma_n}) = f(r(theta))**n``.
* Half-plane lattice: a positive excursion of length tau contributes
  ``chi**tau`` and a negative one ``chi * conj(chi)**(tau - 1)``, hence
  ``g(theta) = (f(chi) + (chi / conj(chi)) f(conj(chi))) / 2`` and the n-th
  return has characteristic function ``g**n``.

Probabilities follow from ``(1/2pi) int_{-pi}^{pi} phi(theta) d theta``, folded
onto [0, pi].  All terms of a series are integrated together with
:func:`scipy.integrate.quad_vec` (max-norm error control), so every term meets
the same absolute tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import quad_vec

from .lattice import EnvironmentSpec
from .skeleton import x_at_returns
from .walk import ENV_STREAM_STRIDE, Estimate

P = 2.0 / 3.0
Q = 1.0 / 3.0
DEFAULT_TOL = 1e-10
IMAG_TOL = 1e-10
# geometric breakpoints: the integrands of large-n terms live within O(1/n) of 0
_BREAKS = tuple(math.pi * 2.0 ** -j for j in range(1, 24))


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""


class CensoringError(RuntimeError):
    """Too many Monte Carlo samples hit the computational cap."""


@dataclass(frozen=True)
class CharFunctionValue:
    theta: float
    chi: complex
    r: float
    alpha: float


def chi(theta: float) -> CharFunctionValue:
    """Characteristic function of the geometric burst length at ``theta``."""
    c = complex(chi_array(theta))
    return CharFunctionValue(theta, c, abs(c), math.atan2(c.imag, c.real))


def _one_minus_exp(theta):
    # 1 - exp(i theta) without cancellation near theta = 0
    s = np.sin(0.5 * theta)
    return 2.0 * s * s - 1j * np.sin(theta)


def chi_array(theta):
    theta = np.asarray(theta, dtype=float)
    # 1 - q e^{i theta} written as p + q (1 - e^{i theta}) so that chi(0) == 1 exactly
    return P / (P + Q * _one_minus_exp(theta))


def _one_minus_chi_sq(theta):
    """1 - chi**2 = q (1 - e^{i theta}) (1 + p - q e^{i theta}) / (1 - q e^{i theta})**2, cancellation-free."""
    u = _one_minus_exp(theta)
    den = P + Q * u
    return Q * u * (2.0 * P + Q * u) / (den * den)


def r_squared(theta):
    """|chi(theta)|**2 = p**2 / (1 + q**2 - 2 q cos theta)."""
    return P * P / (1.0 + Q * Q - 2.0 * Q * np.cos(theta))


def first_return_gf(s):
    """E s**sigma_1 = 1 - sqrt(1 - s**2) (principal branch for complex ``s``)."""
    if np.iscomplexobj(s):
        return 1.0 - np.sqrt(1.0 - s * s)
    s = np.asarray(s, dtype=float)
    if np.any((s < 0) | (s > 1)):
        raise ValueError("s must lie in [0, 1]")
    out = 1.0 - np.sqrt(1.0 - s * s)
    return float(out) if out.ndim == 0 else out


def _one_minus_f_of_r(theta):
    # sqrt(1 - r^2) written without cancellation near theta = 0
    s = np.sin(0.5 * theta)
    return np.sqrt(6.0 * s * s / (5.0 - 3.0 * np.cos(theta)))


def g_H(theta):
    """Characteristic function of X at the first skeleton return on the half-plane lattice."""
    theta = np.asarray(theta, dtype=float)
    c = chi_array(theta)
    cb = np.conj(c)
    w = _one_minus_chi_sq(theta)
    # f(chi) = 1 - sqrt(1 - chi^2), f(conj chi) = 1 - sqrt(conj(1 - chi^2))
    out = 0.5 * ((1.0 - np.sqrt(w)) + (c / cb) * (1.0 - np.sqrt(np.conj(w))))
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class QuadratureTerm:
    n: int
    value: float
    error: float


def _integrate(fun, epsabs: float) -> tuple[np.ndarray, float]:
    val, err, info = quad_vec(fun, 0.0, math.pi, epsabs=epsabs, epsrel=0.0, norm="max",
                              points=_BREAKS, limit=20000, full_output=True)
    if info.status != 0 or err > epsabs:
        raise QuadratureError(f"quadrature stopped with error estimate {err:.3e} (status {info.status})")
    return val / math.pi, err / math.pi


def _check_ns(ns) -> np.ndarray:
    ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
    if ns.size == 0 or ns.min() < 1:
        raise ValueError("n must be a positive integer")
    return ns


def terms_L(ns, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, float]:
    """P(X_{sigma_n} = 0) on the alternate lattice for every n in ``ns``, and the max error."""
    ns = _check_ns(ns).astype(float)

    def fun(t):
        return np.exp(ns * np.log1p(-_one_minus_f_of_r(t)))

    return _integrate(fun, tol)


def terms_H(ns, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, float]:
    """P(X_{sigma_n} = 0) on the half-plane lattice; the imaginary parts must integrate to 0."""
    ns = _check_ns(ns).astype(float)
    k = ns.size

    def fun(t):
        lg_pos = np.log(g_H(t))
        lg_neg = np.log(g_H(-t))
        a = np.exp(ns * lg_pos)
        b = np.exp(ns * lg_neg)
        return np.concatenate([a.real + b.real, a.imag + b.imag])

    val, err = _integrate(fun, 2 * tol)
    real, imag = 0.5 * val[:k], 0.5 * val[k:]
    worst = float(np.abs(imag).max())
    if worst > IMAG_TOL:
        raise QuadratureError(f"imaginary part integrates to {worst:.3e}, expected 0")
    return real, 0.5 * err


def prob_X_sigma_zero_L(n: int, tol: float = DEFAULT_TOL) -> QuadratureTerm:
    vals, err = terms_L([n], tol)
    return QuadratureTerm(n, float(vals[0]), err)


def prob_X_sigma_zero_H(n: int, tol: float = DEFAULT_TOL) -> QuadratureTerm:
    vals, err = terms_H([n], tol)
    return QuadratureTerm(n, float(vals[0]), err)


@dataclass
class SeriesDiagnostic:
    """Terms, partial sums and dyadic increments S_2N - S_N of a return series."""

    label: str
    n: np.ndarray
    terms: np.ndarray
    errors: np.ndarray
    partial_sums: np.ndarray = field(init=False)
    increments: dict[int, float] = field(init=False)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.partial_sums = np.cumsum(self.terms)
        n_max = int(self.n[-1])
        self.increments = {}
        m = 1
        while 2 * m <= n_max:
            self.increments[m] = float(self.partial_sum(2 * m) - self.partial_sum(m))
            m *= 2

    def partial_sum(self, N: int) -> float:
        return float(self.partial_sums[N - 1])

    def partial_sum_error(self, N: int) -> float:
        return float(np.sum(self.errors[:N]))

    def rows(self):
        for k in range(self.n.size):
            yield int(self.n[k]), float(self.terms[k]), float(self.partial_sums[k]), float(self.errors[k])

    def divergence_verdict(self, lower: float, spread: float, start: int, stop: int) -> dict:
        """Increments over [start, stop] bounded below and within ``spread`` of each other."""
        inc = [self.increments[m] for m in sorted(self.increments) if start <= m <= stop]
        ok_lower = bool(inc) and min(inc) >= lower
        ok_spread = bool(inc) and (max(inc) - min(inc)) <= spread * min(inc)
        return {"kind": "divergence", "increments": inc, "min_increment": min(inc) if inc else None,
                "relative_spread": (max(inc) - min(inc)) / min(inc) if inc else None,
                "lower": lower, "spread": spread, "passed": ok_lower and ok_spread,
                "statement": "increments bounded away from 0 over the tested dyadic range"}

    def cauchy_verdict(self, tol: float, start: int) -> dict:
        """Smallest dyadic N0 after which every computed increment is below ``tol``."""
        items = sorted(self.increments.items())
        n0 = None
        for m, _ in items:
            if all(abs(v) < tol for mm, v in items if mm >= m):
                n0 = m
                break
        tested = {m: v for m, v in items if m >= start}
        passed = bool(tested) and all(abs(v) < tol for v in tested.values())
        return {"kind": "cauchy", "tol": tol, "start": start, "n0": n0,
                "increments": list(tested.values()), "passed": passed,
                "statement": "Cauchy within tolerance"}


def _series(label: str, fn, N: int, tol: float) -> SeriesDiagnostic:
    if N < 2:
        raise ValueError("N must be at least 2")
    ns = np.arange(1, N + 1)
    vals, err = fn(ns, tol)
    return SeriesDiagnostic(label, ns, vals, np.full(N, err), extra={"tol": tol})


def partial_sum_L(N: int, tol: float = DEFAULT_TOL) -> SeriesDiagnostic:
    """Series of P(X_{sigma_n} = 0), n <= N, on the alternate lattice (divergent)."""
    return _series("alternate", terms_L, N, tol)


def partial_sum_H(N: int, tol: float = DEFAULT_TOL) -> SeriesDiagnostic:
    """Series of P(X_{sigma_n} = 0), n <= N, on the half-plane lattice (convergent)."""
    return _series("half_plane", terms_H, N, tol)


def extrapolated_limit_H(N: int, tols: Sequence[float] = (1e-8, 1e-10)) -> dict:
    """Limit of the half-plane series assuming terms ~ c/n**2: S = 2 S_N - S_{N/2}.

    Repeated at each tolerance; ``spread`` is the largest disagreement.
    """
    limits = []
    for tol in tols:
        s = partial_sum_H(N, tol)
        limits.append(2 * s.partial_sum(N) - s.partial_sum(N // 2))
    return {"N": N, "tols": list(tols), "limits": limits, "spread": max(limits) - min(limits)}


def mc_series_O(envs, N: int, samples: int, cap: int, seed: int, workers: int = 1,
                max_censored: float = 0.5) -> SeriesDiagnostic:
    """Monte Carlo terms P(X_{sigma_n} = 0), n <= N, averaged over environments.

    ``envs`` holds environment specs or integer seeds of Rademacher
    environments.  Censored samples count as misses; the censored fraction per
    term is kept in ``extra`` and more than ``max_censored`` aborts.
    """
    specs = [e if isinstance(e, EnvironmentSpec) else EnvironmentSpec.rademacher(int(e)) for e in envs]
    hits = np.zeros((len(specs), samples, N), dtype=bool)
    censored = np.zeros((len(specs), N))
    for e, env in enumerate(specs):
        xs, done = x_at_returns(env, N, samples, seed, cap, e * ENV_STREAM_STRIDE, workers)
        for j in range(N):
            ok = done > j
            hits[e, :, j] = ok & (xs[:, j] == 0)
            censored[e, j] = 1.0 - ok.mean()
    cens = censored.mean(axis=0)
    if cens.max() > max_censored:
        bad = int(np.argmax(cens > max_censored)) + 1
        raise CensoringError(f"term n={bad}: {cens[bad - 1]:.1%} of samples censored at cap {cap}")
    ests = [Estimate.from_groups(hits[:, :, j]) if len(specs) > 1 else Estimate.from_samples(hits[0, :, j])
            for j in range(N)]
    diag = SeriesDiagnostic(
        "random_rademacher" if len(specs) > 1 else specs[0].label,
        np.arange(1, N + 1), np.array([e.value for e in ests]), np.array([e.std_error for e in ests]),
        extra={"censored_fraction": cens.tolist(), "n_environments": len(specs), "samples": samples,
               "cap": cap, "estimates": ests})
    return diag
