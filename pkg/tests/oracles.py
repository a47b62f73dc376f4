"""Brute-force constructions built from explicit Kronecker products.

These avoid the index arithmetic used by the package, so agreement with them
is independent evidence.
"""

import itertools
import math

import numpy as np

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
VAC = np.array([[1, 0], [0, 0]], dtype=complex)
OCC = np.array([[0, 0], [0, 1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def kron_all(mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def on_cell(n, k, M):
    """M on cell k; the Kronecker factors run from cell n-1 (outermost) down to cell 0."""
    return kron_all([M if c == k else I2 for c in reversed(range(n))])


def annihilator(n, k):
    return on_cell(n, k, SIGMA_MINUS)


def e_proj(n, j):
    return kron_all([VAC if c >= j else I2 for c in reversed(range(n))])


def exp_vec(n, f, dt):
    out = np.ones(1, dtype=complex)
    for k in reversed(range(n)):
        out = np.kron(out, np.array([1, f[k] * math.sqrt(dt)]))
    return out


def pi_id(Z, n, j):
    """<vacuum of cells >= j| Z |vacuum of cells >= j>, tensored with the identity on cells >= j."""
    past = 1 << j
    block = Z.reshape(1 << (n - j), past, 1 << (n - j), past)[0, :, 0, :]
    return np.kron(np.eye(1 << (n - j)), block)


def time_projection(atoms, n):
    out = np.zeros((1 << n, 1 << n), dtype=complex)
    for t, P in atoms.items():
        out += P @ (np.eye(1 << n) if t == math.inf else e_proj(n, t))
    return out


def outcomes(n):
    """Outcome tuples in mask order: bit k of the index is coordinate k."""
    return [tuple((m >> k) & 1 for k in range(n)) for m in range(1 << n)]


def conditional_expectation(values, probs, tau, n):
    """E[X | F_tau] by grouping outcomes that share the coordinates seen before tau."""
    out = np.zeros(len(values))
    outs = outcomes(n)
    for i, w in enumerate(outs):
        j = n if tau[i] == math.inf else tau[i]
        same = [v for v, u in enumerate(outs) if u[:j] == w[:j]]
        mass = sum(probs[v] for v in same)
        out[i] = sum(probs[v] * values[v] for v in same) / mass
    return out


def jump_time_law_enumerated(m, n, dt):
    """P(tau_m = t_j), j = 1..n, by enumerating all 2^n outcomes."""
    law = np.zeros(n + 1)
    for w in itertools.product((0, 1), repeat=n):
        p = math.prod(dt if b else 1 - dt for b in w)
        count = 0
        for j, b in enumerate(w):
            count += b
            if count >= m:
                law[j + 1] += p
                break
    return law[1:]
