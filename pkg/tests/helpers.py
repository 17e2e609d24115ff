"""Shared configs and independent oracles for the test-suite."""

from __future__ import annotations

import numpy as np

from bpfprice.config import parse_config

# Off-centre bump for h, imbalance u = -0.9 tanh(4 (x - centre)) h.
GENERAL_H = """\
model = {model}
n_cells = {n}
{physics}
T = {T}
dt_out = {dt_out}
{extra}
init.f.kind = tanh_profile
init.f.offset = 0.5
init.f.amplitude = -{amp}
init.f.steepness = {steep}
init.f.center = -0.1
init.f.envelope_offset = 0.3
init.f.envelope_amplitude = 0.7
init.f.envelope_center = 0.3
init.f.envelope_width = 0.4
init.g.kind = tanh_profile
init.g.offset = 0.5
init.g.amplitude = {amp}
init.g.steepness = {steep}
init.g.center = -0.1
init.g.envelope_offset = 0.3
init.g.envelope_amplitude = 0.7
init.g.envelope_center = 0.3
init.g.envelope_width = 0.4
"""

BPF_GAUSS = """\
model = bpf
n_cells = {n}
sigma = 0.2
{rate}
a = {a}
T = {T}
dt_out = {dt_out}
init.f.kind = gaussian_bump
init.f.amplitude = 1
init.f.center = -0.15
init.f.width = 0.15
init.g.kind = gaussian_bump
init.g.amplitude = 1
init.g.center = 0.15
init.g.width = 0.15
"""


def general_h(model="hu", n=200, physics="epsilon = 0.05\ndiffusion = 1", T=1.0, dt_out=0.01,
              extra="", amp=0.45, steep=4):
    return parse_config(GENERAL_H.format(model=model, n=n, physics=physics, T=T, dt_out=dt_out,
                                         extra=extra, amp=amp, steep=steep))


def bpf_gauss(n=400, rate="c = 1", a=0.04, T=0.5, dt_out=0.05):
    return parse_config(BPF_GAUSS.format(n=n, rate=rate, a=a, T=T, dt_out=dt_out))


def mirror_laplacian_matrix(n_nodes: int, dx: float) -> np.ndarray:
    """Dense second-difference matrix with reflecting ends."""
    L = np.zeros((n_nodes, n_nodes))
    for i in range(n_nodes):
        left = i - 1 if i > 0 else 1
        right = i + 1 if i < n_nodes - 1 else n_nodes - 2
        L[i, left] += 1.0
        L[i, right] += 1.0
        L[i, i] -= 2.0
    return L / dx**2


def heat_oracle(v0: np.ndarray, D: float, dx: float, t: float, weights: np.ndarray) -> np.ndarray:
    """exp(t D L) v0 through the eigen-decomposition of the symmetrised L.

    W L is symmetric for the trapezoid weights W, so W^(1/2) L W^(-1/2) is too.
    """
    L = mirror_laplacian_matrix(v0.size, dx)
    s = np.sqrt(weights)
    S = (s[:, None] * L) / s[None, :]
    S = 0.5 * (S + S.T)
    lam, Q = np.linalg.eigh(S)
    y = s * v0
    y = Q @ (np.exp(D * t * lam) * (Q.T @ y))
    return y / s
