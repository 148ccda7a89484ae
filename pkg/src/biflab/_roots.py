"""Simultaneous polynomial root finding (Aberth-Ehrlich iteration).

Coefficients are ascending (c[k] multiplies z**k). Intended range: degree <= ~60,
which covers critical-point and preimage-census work here.
"""

import numpy as np

from .errors import RootFindingFailure

MAX_ITER = 200
STEP_TOL = 1e-13


def _horner_many(coeffs, z):
    """Evaluate p and p' at each entry of z. coeffs ascending."""
    p = np.full_like(z, coeffs[-1])
    dp = np.zeros_like(z)
    for c in coeffs[-2::-1]:
        dp = dp * z + p
        p = p * z + c
    return p, dp


def aberth_roots(coeffs, max_iter=MAX_ITER, step_tol=STEP_TOL):
    """All complex roots of the polynomial with the given ascending coefficients.

    Exact zero leading coefficients are trimmed; exact zero trailing (low order)
    coefficients are factored out as roots at the origin. Raises
    RootFindingFailure if the step sizes never drop below tolerance.
    """
    c = np.asarray(coeffs, dtype=np.complex128)
    nz = np.nonzero(c)[0]
    if nz.size == 0:
        raise RootFindingFailure("zero polynomial has no well-defined roots")
    c = c[: nz[-1] + 1]
    # factor out exact roots at 0
    lead_zeros = nz[0]
    c = c[lead_zeros:]
    n = len(c) - 1
    zero_roots = np.zeros(lead_zeros, dtype=np.complex128)
    if n == 0:
        return zero_roots
    if n == 1:
        return np.concatenate([zero_roots, [-c[0] / c[1]]])

    # initial guesses on a circle sized by the geometric-mean root bound,
    # angle offset breaks symmetric stalls
    r = abs(c[0] / c[-1]) ** (1.0 / n)
    cauchy = 1.0 + np.max(np.abs(c[:-1])) / abs(c[-1])
    r = min(max(r, 1e-3), cauchy)
    k = np.arange(n)
    z = r * np.exp(1j * (2.0 * np.pi * k / n + 0.4)) * (1.0 + 0.05 * k / max(n - 1, 1))

    for _ in range(max_iter):
        p, dp = _horner_many(c, z)
        small = np.abs(dp) < 1e-300
        if np.any(small):
            z = z + small * 1e-8 * (1.0 + np.abs(z))
            p, dp = _horner_many(c, z)
        newton = p / dp
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        s = inv.sum(axis=1)
        w = newton / (1.0 - newton * s)
        z = z - w
        if not np.all(np.isfinite(z)):
            raise RootFindingFailure("iteration diverged to non-finite values")
        if np.max(np.abs(w)) <= step_tol * (1.0 + np.max(np.abs(z))):
            return np.concatenate([zero_roots, z])
    raise RootFindingFailure(
        f"no convergence after {max_iter} iterations (degree {n})"
    )
