"""Hot statevector and table kernels.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version with identical semantics.  The numba path is used when numba imports
and ``QTSP_DISABLE_NUMBA`` is unset (or ``0``); set ``QTSP_DISABLE_NUMBA=1``
to force the numpy path.  Both variants stay importable so tests and the
benchmark can compare them directly.

Conventions: qubit ``q`` is bit ``q`` of the basis index (qubit 0 is the
least significant bit).  Kernels named ``*_inplace`` mutate their first
argument.
"""
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_DISABLED = os.environ.get("QTSP_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")
USE_NUMBA = HAVE_NUMBA and not _DISABLED


# --------------------------------------------------------------------------
# numpy implementations


def _phase_np(state, energies, theta):
    state *= np.exp(-1j * theta * energies)


def _mixer_np(state, n, theta):
    c = np.cos(theta)
    s = -1j * np.sin(theta)
    for q in range(n):
        v = state.reshape(-1, 2, 1 << q)
        a0 = v[:, 0, :].copy()
        a1 = v[:, 1, :].copy()
        v[:, 0, :] = c * a0 + s * a1
        v[:, 1, :] = s * a0 + c * a1


def _x_sum_np(state, n, out):
    out[:] = 0.0
    for q in range(n):
        v = state.reshape(-1, 2, 1 << q)
        o = out.reshape(-1, 2, 1 << q)
        o[:, 0, :] += v[:, 1, :]
        o[:, 1, :] += v[:, 0, :]


def _subset_sum_np(table, n):
    for q in range(n):
        v = table.reshape(-1, 2, 1 << q)
        v[:, 1, :] += v[:, 0, :]


def _energy_grad_np(energies, n, theta_mix, theta_obj):
    dim = energies.shape[0]
    r = theta_mix.shape[0]
    psi = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
    for layer in range(r):
        _phase_np(psi, energies, theta_obj[layer])
        _mixer_np(psi, n, theta_mix[layer])
    energy = float(np.dot(energies, np.abs(psi) ** 2))
    lam = energies * psi
    grad = np.zeros(2 * r)
    tmp = np.empty_like(psi)
    for layer in range(r - 1, -1, -1):
        _x_sum_np(psi, n, tmp)
        grad[layer] = 2.0 * np.vdot(lam, tmp).imag
        _mixer_np(psi, n, -theta_mix[layer])
        _mixer_np(lam, n, -theta_mix[layer])
        grad[r + layer] = 2.0 * np.vdot(lam, energies * psi).imag
        _phase_np(psi, energies, -theta_obj[layer])
        _phase_np(lam, energies, -theta_obj[layer])
    return energy, grad


def _final_state_np(energies, n, theta_mix, theta_obj):
    dim = energies.shape[0]
    psi = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
    for layer in range(theta_mix.shape[0]):
        _phase_np(psi, energies, theta_obj[layer])
        _mixer_np(psi, n, theta_mix[layer])
    return psi


# --------------------------------------------------------------------------
# numba implementations

if HAVE_NUMBA:

    @njit(cache=True)
    def _phase_nb(state, energies, theta):
        for b in range(state.shape[0]):
            a = -theta * energies[b]
            state[b] *= complex(np.cos(a), np.sin(a))

    @njit(cache=True)
    def _mixer_nb(state, n, theta):
        c = np.cos(theta)
        s = -1j * np.sin(theta)
        dim = state.shape[0]
        for q in range(n):
            step = 1 << q
            for base in range(0, dim, 2 * step):
                for j in range(base, base + step):
                    a0 = state[j]
                    a1 = state[j + step]
                    state[j] = c * a0 + s * a1
                    state[j + step] = s * a0 + c * a1

    @njit(cache=True)
    def _x_sum_nb(state, n, out):
        dim = state.shape[0]
        for b in range(dim):
            acc = 0j
            for q in range(n):
                acc += state[b ^ (1 << q)]
            out[b] = acc

    @njit(cache=True)
    def _subset_sum_nb(table, n):
        dim = table.shape[0]
        for q in range(n):
            step = 1 << q
            for base in range(0, dim, 2 * step):
                for j in range(base, base + step):
                    table[j + step] += table[j]

    @njit(cache=True)
    def _energy_grad_nb(energies, n, theta_mix, theta_obj):
        dim = energies.shape[0]
        r = theta_mix.shape[0]
        psi = np.empty(dim, dtype=np.complex128)
        amp = 1.0 / np.sqrt(dim)
        for b in range(dim):
            psi[b] = amp
        for layer in range(r):
            _phase_nb(psi, energies, theta_obj[layer])
            _mixer_nb(psi, n, theta_mix[layer])
        energy = 0.0
        lam = np.empty(dim, dtype=np.complex128)
        for b in range(dim):
            energy += energies[b] * (psi[b].real ** 2 + psi[b].imag ** 2)
            lam[b] = energies[b] * psi[b]
        grad = np.zeros(2 * r)
        tmp = np.empty(dim, dtype=np.complex128)
        for layer in range(r - 1, -1, -1):
            _x_sum_nb(psi, n, tmp)
            acc = 0j
            for b in range(dim):
                acc += np.conj(lam[b]) * tmp[b]
            grad[layer] = 2.0 * acc.imag
            _mixer_nb(psi, n, -theta_mix[layer])
            _mixer_nb(lam, n, -theta_mix[layer])
            acc = 0j
            for b in range(dim):
                acc += np.conj(lam[b]) * energies[b] * psi[b]
            grad[r + layer] = 2.0 * acc.imag
            _phase_nb(psi, energies, -theta_obj[layer])
            _phase_nb(lam, energies, -theta_obj[layer])
        return energy, grad

    @njit(cache=True)
    def _final_state_nb(energies, n, theta_mix, theta_obj):
        dim = energies.shape[0]
        psi = np.empty(dim, dtype=np.complex128)
        amp = 1.0 / np.sqrt(dim)
        for b in range(dim):
            psi[b] = amp
        for layer in range(theta_mix.shape[0]):
            _phase_nb(psi, energies, theta_obj[layer])
            _mixer_nb(psi, n, theta_mix[layer])
        return psi


NUMPY_KERNELS = {
    "phase": _phase_np,
    "mixer": _mixer_np,
    "x_sum": _x_sum_np,
    "subset_sum": _subset_sum_np,
    "energy_grad": _energy_grad_np,
    "final_state": _final_state_np,
}

if HAVE_NUMBA:
    NUMBA_KERNELS = {
        "phase": _phase_nb,
        "mixer": _mixer_nb,
        "x_sum": _x_sum_nb,
        "subset_sum": _subset_sum_nb,
        "energy_grad": _energy_grad_nb,
        "final_state": _final_state_nb,
    }
else:  # pragma: no cover
    NUMBA_KERNELS = NUMPY_KERNELS

_ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def phase_inplace(state, energies, theta):
    """Multiply amplitude ``b`` by ``exp(-i*theta*energies[b])``."""
    _ACTIVE["phase"](state, energies, float(theta))


def mixer_inplace(state, n, theta):
    """Apply ``exp(-i*theta*X)`` to every one of the ``n`` qubits."""
    _ACTIVE["mixer"](state, int(n), float(theta))


def x_sum(state, n):
    """Return ``sum_q X_q |state>``."""
    out = np.empty_like(state)
    _ACTIVE["x_sum"](state, int(n), out)
    return out


def subset_sum_inplace(table, n):
    """Zeta transform: ``table[b] <- sum over masks m contained in b of table[m]``."""
    _ACTIVE["subset_sum"](table, int(n))


def energy_and_gradient(energies, n, theta_mix, theta_obj):
    """QAOA expectation and its gradient ``[d/d theta_mix..., d/d theta_obj...]``."""
    e, g = _ACTIVE["energy_grad"](
        energies,
        int(n),
        np.ascontiguousarray(theta_mix, dtype=np.float64),
        np.ascontiguousarray(theta_obj, dtype=np.float64),
    )
    return float(e), g


def final_state(energies, n, theta_mix, theta_obj):
    return _ACTIVE["final_state"](
        energies,
        int(n),
        np.ascontiguousarray(theta_mix, dtype=np.float64),
        np.ascontiguousarray(theta_obj, dtype=np.float64),
    )
