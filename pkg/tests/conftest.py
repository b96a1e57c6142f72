"""Shared independent oracles for the test suite.

Everything here is deliberately written against different primitives than the
package (complex eigenproblems, Moore-Penrose pseudoinverses, explicit
symplectic transforms) so agreement is meaningful.
"""

from __future__ import annotations

import numpy as np
import pytest

from mmcvqkd.channel import ChannelParams, DetectorParams
from mmcvqkd.gaussian import entropy_g


def two_mode_matrix(a: float, b: float, c: float) -> np.ndarray:
    i2 = np.eye(2)
    z2 = np.diag([1.0, -1.0])
    return np.block([[a * i2, c * z2], [c * z2, b * i2]])


def complex_symplectic_eigenvalues(matrix: np.ndarray) -> np.ndarray:
    """Moduli of the eigenvalues of i*Omega*S, deduplicated: an independent
    route to the symplectic spectrum (the package pairs a real eigenproblem)."""
    n = matrix.shape[0] // 2
    omega = np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    moduli = np.sort(np.abs(np.linalg.eigvals(1j * omega @ matrix)))
    return moduli[::2]


def bs_symplectic(n_modes: int, mode_i: int, mode_j: int, t: float) -> np.ndarray:
    """Beam-splitter symplectic matrix: q_i -> sqrt(t) q_i + sqrt(1-t) q_j,
    q_j -> -sqrt(1-t) q_i + sqrt(t) q_j, acting identically on x and p."""
    s = np.eye(2 * n_modes)
    amp_t, amp_r = np.sqrt(t), np.sqrt(1.0 - t)
    for q in range(2):
        s[2 * mode_i + q, 2 * mode_i + q] = amp_t
        s[2 * mode_i + q, 2 * mode_j + q] = amp_r
        s[2 * mode_j + q, 2 * mode_i + q] = -amp_r
        s[2 * mode_j + q, 2 * mode_j + q] = amp_t
    return s


def pinv_conditional(matrix: np.ndarray, mode: int, quadrature: str = "x") -> np.ndarray:
    """Homodyne conditioning via the Moore-Penrose pseudoinverse form
    A - C (X B X)^+ C^T, independent of the package's 1/variance shortcut."""
    n = matrix.shape[0] // 2
    rows = [2 * mode, 2 * mode + 1]
    keep = [i for i in range(2 * n) if i not in rows]
    a_block = matrix[np.ix_(keep, keep)]
    c_block = matrix[np.ix_(keep, rows)]
    b_block = matrix[np.ix_(rows, rows)]
    x = np.diag([1.0, 0.0]) if quadrature == "x" else np.diag([0.0, 1.0])
    return a_block - c_block @ np.linalg.pinv(x @ b_block @ x) @ c_block.T


def entangling_cloner_chi(a: float, b: float, c: float, ch: ChannelParams, det: DetectorParams) -> float:
    """Holevo bound computed from Eve's explicit purification of the channel.

    The lossy noisy channel is realized as a beam splitter of transmissivity
    eta_e mixing the signal with one arm of Eve's EPR pair of variance
    W = 1 + eta_e * epsilon / (1 - eta_e); Eve keeps both her modes, and
    chi = S(E) - S(E | Bob's x-homodyne). Exact for pure (a, b, c) inputs.
    """
    if ch.eta_e >= 1.0:
        raise ValueError("cloner construction needs eta_e < 1")
    w = 1.0 + ch.eta_e * ch.epsilon / (1.0 - ch.eta_e)
    # modes: 0=A, 1=B, 2=E1, 3=E2, 4=C, 5=D
    full = np.zeros((12, 12))
    full[:4, :4] = two_mode_matrix(a, b, c)
    full[4:8, 4:8] = two_mode_matrix(w, w, np.sqrt(w**2 - 1.0))
    full[8:, 8:] = two_mode_matrix(det.nu, det.nu, np.sqrt(det.nu**2 - 1.0))
    full = bs_symplectic(6, 1, 2, ch.eta_e) @ full @ bs_symplectic(6, 1, 2, ch.eta_e).T
    full = bs_symplectic(6, 1, 4, det.eta_d) @ full @ bs_symplectic(6, 1, 4, det.eta_d).T
    eve = full[4:8, 4:8]
    s_eve = float(np.sum(entropy_g(complex_symplectic_eigenvalues(eve))))
    conditional = pinv_conditional(full, 1, "x")  # remaining modes (A, E1, E2, C, D)
    eve_conditional = conditional[np.ix_([2, 3, 4, 5], [2, 3, 4, 5])]
    s_eve_cond = float(np.sum(entropy_g(complex_symplectic_eigenvalues(eve_conditional))))
    return s_eve - s_eve_cond


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
