"""Pure-numpy reference implementations of the hot kernels.

These are always importable and double as the oracle against which the
compiled versions in ``_ckernels`` are tested.
"""
import numpy as np
from scipy.special import gammaln


def _log_binom(n, k):
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def _safe_log(x):
    # log(0) -> -inf so that 0**0 == 1 survives the exp(k*log x) route
    with np.errstate(divide="ignore"):
        return np.log(x)


def attenuator_kraus(lam, dim):
    """Beam-splitter loss Kraus operators ``K[k, n-k, n]``.

    ``<n-k|K_k|n> = sqrt(C(n,k)) lam^((n-k)/2) (1-lam)^(k/2)``.
    """
    out = np.zeros((dim, dim, dim), dtype=np.complex128)
    n = np.arange(dim)
    ll, lm = _safe_log(lam), _safe_log(1.0 - lam)
    for k in range(dim):
        m = n[k:]
        a = m - k
        log_amp = 0.5 * _log_binom(m, k)
        with np.errstate(invalid="ignore"):
            t1 = np.where(a == 0, 0.0, 0.5 * a * ll)
            t2 = 0.0 if k == 0 else 0.5 * k * lm
        out[k, a, m] = np.exp(log_amp + t1 + t2)
    return out


def amplifier_kraus(mu, dim):
    """Quantum-limited amplifier Kraus operators ``K[k, n+k, n]``.

    ``<n+k|K_k|n> = sqrt(C(n+k,k)) ((mu-1)/mu)^(k/2) mu^(-(n+1)/2)``, the
    two-mode-squeezer dilation with the idler traced out.
    """
    out = np.zeros((dim, dim, dim), dtype=np.complex128)
    lx = _safe_log((mu - 1.0) / mu)
    lmu = np.log(mu)
    for k in range(dim):
        n = np.arange(dim - k)
        t2 = 0.0 if k == 0 else 0.5 * k * lx
        out[k, n + k, n] = np.exp(0.5 * _log_binom(n + k, k) + t2 - 0.5 * (n + 1) * lmu)
    return out


def kraus_apply(kraus, rho):
    """Return ``sum_k K_k rho K_k^*`` for a stack ``kraus`` of shape (r, m, n)."""
    tmp = np.matmul(kraus, rho)
    return np.einsum("kij,klj->il", tmp, kraus.conj())


def energy_project(x, energies, budget):
    """Feasible retraction of a unit amplitude matrix onto an energy budget.

    ``x`` has rows indexed by input basis states whose energies are the
    columns of ``energies`` (shape (rows, factors)).  If any factor
    exceeds its budget, every row with nonzero energy is shrunk by a
    common factor and the removed mass is moved onto row 0 (the ground
    state), keeping the phase of that row.
    """
    w = np.einsum("ij,ij->i", x, x.conj()).real
    load = w @ energies
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(load > budget, budget / load, 1.0)
    c2 = float(ratio.min()) if ratio.size else 1.0
    if c2 >= 1.0:
        return x
    y = x.copy()
    hot = energies.sum(axis=1) > 0
    y[hot] *= np.sqrt(c2)
    moved = (1.0 - c2) * w[hot].sum()
    w0 = w[0]
    if w0 > 1e-300:
        y[0] *= np.sqrt((w0 + moved) / w0)
    else:
        y[0, 0] = np.sqrt(moved)
    return y
