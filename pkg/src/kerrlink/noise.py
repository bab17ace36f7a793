"""Nonideality pipeline for the heralded pair-coherent protocol.

Every imperfection acts on the held modes through one of three channels:

* a coefficient-pair map multiplying c_{n1} c_{n2}* by
  e^{i eta1 (n1-n2) - eta2 (n1-n2)^2}, which collects the Kerr-stage loss,
  the storage loss and the transmission phase noise into the two numbers
  (eta1, eta2);
* a discrete-phase channel on mode a (Poisson mixture of phase rotations),
  standing in for photon losses suffered by the probe in the channel;
* an incoherent admixture of silent-detector states caused by dark counts.

The leading-order fidelity budget splits 1 - F into six named terms, and the
six-inequality feasibility system inverts that budget: given a per-term
allowance eps it bounds the channel loss, storage loss, phase noise,
Kerr-stage loss, probe intensity and nonlinearity errors.

Conventions.  Lambda denotes relative intensity loss (I0 - I)/I, so channel
attenuation in dB is 10 log10(Lambda + 1).  lambda_det is the detector
efficiency, zeta the dark-count probability per detector per window, and
eps_ac/eps_bc the relative errors of the two nonlinearity strengths.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .design import TargetCoefficients, semi_success_coeffs, solve_roots
from .entangle import pair_gram
from .fock import DensOp, TruncationSpec, min_cutoff
from .protocol import analytic_target_state, success_probability_ideal

DB_PER_KM = 0.20
SERIES_TOL = 1e-14


@dataclass(frozen=True)
class NoiseParams:
    """Dimensionless nonideality parameters of one protocol run."""

    Lambda: float = 0.0
    Lambda1: float = 0.0
    Lambda2: float = 0.0
    dphi2: float = 0.0
    lambda_det: float = 1.0
    zeta: float = 0.0
    eps_ac: float = 0.0
    eps_bc: float = 0.0

    def __post_init__(self):
        for name in ("Lambda", "Lambda1", "Lambda2", "dphi2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not 0 < self.lambda_det <= 1:
            raise ValueError(f"lambda_det must lie in (0, 1], got {self.lambda_det}")
        if not 0 <= self.zeta < 1:
            raise ValueError(f"zeta must lie in [0, 1), got {self.zeta}")


@dataclass(frozen=True)
class CoeffPairState:
    """Hermitian matrix of coefficient pairs rho[n1][n2] ~ c_{n1} c_{n2}*.

    Entry (n1, n2) weights |alpha e^{i chi n1}, beta e^{i chi n1}><pair n2|;
    the physical trace therefore carries the Gram overlaps of those labels
    (see pair_trace), not the plain matrix trace.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"coefficient-pair matrix must be square, got {m.shape}")
        scale = float(np.max(np.abs(m))) or 1.0
        if np.max(np.abs(m - m.conj().T)) > 1e-8 * scale:
            raise ValueError("coefficient-pair matrix is not Hermitian within tolerance")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_target(cls, target: TargetCoefficients) -> "CoeffPairState":
        return cls(np.outer(target.c, np.conj(target.c)))

    @property
    def K(self) -> int:
        return self.matrix.shape[0] - 1


@dataclass(frozen=True)
class FidelityBreakdown:
    """Six leading-order loss terms and the resulting fidelity F = 1 - sum."""

    t_dephase: float
    t_kerr_loss: float
    t_storage: float
    t_chi_err: float
    t_darkcount: float
    t_discrete_phase: float
    F: float

    @property
    def terms(self) -> dict:
        return {
            "dephase": self.t_dephase,
            "kerr_loss": self.t_kerr_loss,
            "storage": self.t_storage,
            "chi_err": self.t_chi_err,
            "darkcount": self.t_darkcount,
            "discrete_phase": self.t_discrete_phase,
        }


@dataclass(frozen=True)
class InequalityCheck:
    """One feasibility inequality: value must stay below bound."""

    name: str
    value: float
    bound: float
    margin: float
    passed: bool


@dataclass(frozen=True)
class FeasibilityReport:
    """All six inequality checks plus the implied channel reach."""

    checks: tuple
    all_pass: bool
    max_attenuation_db: float
    max_distance_km: float


# ---------------------------------------------------------------------------
# Gram helpers (coherent-pair representation)


def _rot_gram(z2, bra_angles, ket_angles) -> np.ndarray:
    """G[m, n] = <|z| e^{i bra[m]}  |  |z| e^{i ket[n]}> for |z|^2 = z2."""
    ph = np.asarray(ket_angles)[None, :] - np.asarray(bra_angles)[:, None]
    return np.exp(z2 * (np.exp(1j * ph) - 1))


def pair_overlap_matrix(K: int, alpha, beta, chi) -> np.ndarray:
    """Combined Gram G[m, n] = <pair_m|pair_n> of the K+1 coherent pairs."""
    g = pair_gram(K, alpha, beta, chi)
    return g.G_a * g.G_b


def pair_trace(state: CoeffPairState, alpha, beta, chi) -> float:
    """Physical trace of the pair-represented operator."""
    G = pair_overlap_matrix(state.K, alpha, beta, chi)
    return float(np.real(np.sum(state.matrix * G.T)))


def pair_fidelity(
    state: CoeffPairState, target: TargetCoefficients, alpha, beta, chi
) -> float:
    """<Psi|rho|Psi> / (Tr rho * <Psi|Psi>) for a pair-represented rho."""
    c = np.asarray(target.c, dtype=complex)
    if len(c) != state.K + 1:
        raise ValueError(
            f"target has {len(c)} coefficients but the state holds {state.K + 1}"
        )
    G = pair_overlap_matrix(state.K, alpha, beta, chi)
    u = np.conj(c) @ G  # u[n] = <Psi|pair_n>
    val = float(np.real(u @ state.matrix @ np.conj(u)))
    norm2 = float(np.real(np.conj(c) @ G @ c))
    return val / (pair_trace(state, alpha, beta, chi) * norm2)


# ---------------------------------------------------------------------------
# stage superoperators


def eta_params(noise: NoiseParams, alpha, beta, chi_ac, chi_bc):
    """Phase drift per photon (eta1) and pair-decay rate (eta2).

    eta1 = Lambda1 (|a|^2 chi_ac + |b|^2 chi_bc)/2 + |a|^2 chi_ac Lambda2
    eta2 = dphi2 + Lambda1 (|a|^2 chi_ac^2 + |b|^2 chi_bc^2)/3
                 + |a|^2 chi_ac^2 Lambda2 / 2
    """
    a2, b2 = abs(alpha) ** 2, abs(beta) ** 2
    eta1 = 0.5 * noise.Lambda1 * (a2 * chi_ac + b2 * chi_bc) + a2 * chi_ac * noise.Lambda2
    eta2 = (
        noise.dphi2
        + noise.Lambda1 * (a2 * chi_ac**2 + b2 * chi_bc**2) / 3.0
        + 0.5 * a2 * chi_ac**2 * noise.Lambda2
    )
    return float(eta1), float(eta2)


def apply_M0(state: CoeffPairState, eta1, eta2) -> CoeffPairState:
    """Multiply each pair by e^{i eta1 (n1-n2) - eta2 (n1-n2)^2}."""
    n = np.arange(state.K + 1)
    d = n[:, None] - n[None, :]  # n1 - n2
    return CoeffPairState(state.matrix * np.exp(1j * eta1 * d - eta2 * d * d))


def _poisson_weights(s: float):
    """Normalized truncated Poisson weights s^k/k!; drops terms below SERIES_TOL."""
    ws = [1.0]
    if s > 0:
        total, term, k = math.exp(s), 1.0, 0
        while True:
            k += 1
            term *= s / k
            if term < SERIES_TOL * total:
                break
            ws.append(term)
    w = np.array(ws)
    return w / w.sum()


def apply_discrete_phase_channel(rho, Lambda, gamma, chi_ac, mode=None):
    """Poisson mixture of phase rotations e^{i chi_ac k n} on one mode.

    For a DensOp the rotated copies are summed and the output is rescaled to
    the input trace (the raw series is trace-increasing by e^{Lambda|gamma|^2}).
    For a CoeffPairState the rotation shifts the coherent labels of mode a out
    of the shared basis, so the mixture cannot close in a single pair matrix;
    the components are returned as (weight, a_phase, state) triples instead.
    """
    s = Lambda * abs(gamma) ** 2
    w = _poisson_weights(s)
    if isinstance(rho, CoeffPairState):
        return [(float(wk), chi_ac * k, rho) for k, wk in enumerate(w)]
    if not isinstance(rho, DensOp):
        raise TypeError(f"expected DensOp or CoeffPairState, got {type(rho).__name__}")
    if mode is None:
        mode = rho.modes[0]
    if mode not in rho.modes:
        raise ValueError(f"mode {mode!r} not among {rho.modes}")
    axis = rho.modes.index(mode)
    dim, nmodes = rho.trunc.dim, len(rho.modes)
    idx = (np.arange(dim ** nmodes) // dim ** (nmodes - 1 - axis)) % dim
    out = np.zeros_like(rho.matrix)
    for k, wk in enumerate(w):
        u = np.exp(1j * chi_ac * k * idx)
        out += wk * (u[:, None] * rho.matrix * np.conj(u)[None, :])
    return DensOp(rho.modes, out, rho.trunc)


# ---------------------------------------------------------------------------
# leading-order infidelity terms


def chi_error_term(
    target: TargetCoefficients, alpha, beta, chi, eps_ac, eps_bc
) -> float:
    """Infidelity from nonlinearity-strength errors Delta chi = eps * chi.

    Evaluates <Psi1|g^2|Psi1> - |<Psi1|g|Psi_f>|^2 in the coherent span,
    where g = Dchi_ac n_a + Dchi_bc n_b and |Psi1> = sum n c_n |pair_n> for
    the normalized target.  Coherent matrix elements of n and n^2 reduce to
    Gram entries times powers of z1* z2.
    """
    c = np.asarray(target.c, dtype=complex)
    K = target.K
    G = pair_overlap_matrix(K, alpha, beta, chi)
    norm2 = float(np.real(np.conj(c) @ G @ c))
    cn = c / math.sqrt(norm2)
    n = np.arange(K + 1, dtype=float)
    d = n[None, :] - n[:, None]  # n - m
    Am = abs(alpha) ** 2 * np.exp(1j * chi * d)  # <pair_m|n_a|pair_n> / G[m,n]
    Bm = abs(beta) ** 2 * np.exp(1j * chi * d)
    da, db = eps_ac * chi, eps_bc * chi
    M1 = (da * Am + db * Bm) * G
    M2 = (da**2 * (Am**2 + Am) + 2 * da * db * Am * Bm + db**2 * (Bm**2 + Bm)) * G
    w1 = n * cn
    quad = float(np.real(np.conj(w1) @ M2 @ w1))
    lin = complex(np.conj(w1) @ M1 @ cn)
    return quad - abs(lin) ** 2


def _dephasing_susceptibility(c: np.ndarray, G: np.ndarray) -> float:
    """Factor multiplying eta2 in the pair-decay infidelity: 2 <Psi1|P_perp|Psi1>."""
    n = np.arange(len(c), dtype=float)
    w1 = n * c
    N = float(np.real(np.conj(c) @ G @ c))
    B1 = float(np.real(np.conj(w1) @ G @ w1))
    A1 = complex(np.conj(c) @ G @ w1)
    return 2.0 * (B1 * N - abs(A1) ** 2) / N**2


def _discrete_phase_term(x: float, s: float) -> float:
    """Probe-decoherence infidelity; closed forms in the two x = |a|^2 chi^2 regimes."""
    if s == 0:
        return 0.0
    low, high = x * (s + s * s), s
    if x <= 0.3:
        return low
    if x >= 3.0:
        return high
    warnings.warn(
        f"|alpha|^2 chi^2 = {x:.3g} sits between the small- and large-"
        "distinguishability closed forms; interpolating log-linearly",
        stacklevel=3,
    )
    w = math.log(x / 0.3) / math.log(10.0)
    return float((1 - w) * low + w * high)


def dark_count_mixture(
    target: TargetCoefficients,
    roots,
    alpha,
    beta,
    chi,
    gamma,
    lambda_det,
    zeta,
    trunc: TruncationSpec | None = None,
) -> DensOp:
    """Unnormalized mixture of the target with silent-detector states.

    A dark count lets one (or two) detectors fire without photons, so the
    heralded state is the corresponding silent-detector superposition; each
    missing detector contributes weight zeta/(lambda |gamma|^2) |c_K|^2 with
    c_K taken for the normalized target.  The series stops at two dark
    counts.
    """
    w1 = zeta / (lambda_det * abs(gamma) ** 2)
    if w1 > 0.1:
        warnings.warn(
            f"zeta/(lambda |gamma|^2) = {w1:.3g} is not small; the two-dark-"
            "count truncation is unreliable",
            stacklevel=2,
        )
    if trunc is None:
        trunc = TruncationSpec(min_cutoff([alpha, beta]))
    K = target.K
    G = pair_overlap_matrix(K, alpha, beta, chi)
    c = np.asarray(target.c, dtype=complex)
    ck2 = abs(c[-1]) ** 2 / float(np.real(np.conj(c) @ G @ c))

    def projector(t):
        v = analytic_target_state(t, alpha, beta, chi, trunc).amplitudes.ravel()
        return np.outer(v, np.conj(v))

    mat = projector(target)
    if zeta > 0:
        for j in range(1, K + 1):
            mat += w1 * ck2 * projector(semi_success_coeffs(target, roots, {j}))
        for i in range(1, K + 1):
            for j in range(i + 1, K + 1):
                mat += w1**2 * ck2 * projector(
                    semi_success_coeffs(target, roots, {i, j})
                )
    return DensOp(("a", "b"), mat, trunc)


def fidelity_leading_order(
    target: TargetCoefficients, noise: NoiseParams, alpha, beta, gamma, chi
) -> FidelityBreakdown:
    """Six-term leading-order fidelity budget for the all-click state.

    The pair-decay infidelity eta2 * 2<Psi1|P_perp|Psi1> is split over its
    three sources (phase noise, Kerr-stage loss, storage loss) so that
    removing one noise source zeroes exactly its term.  The probe-photon
    phase drift eta1 is taken as compensated by redesigned roots and does
    not appear.
    """
    c = np.asarray(target.c, dtype=complex)
    a2, b2 = abs(alpha) ** 2, abs(beta) ** 2
    G = pair_overlap_matrix(target.K, alpha, beta, chi)
    D = _dephasing_susceptibility(c, G)
    t_dephase = noise.dphi2 * D
    t_kerr = (noise.Lambda1 / 3.0) * (a2 + b2) * chi**2 * D
    t_storage = 0.5 * a2 * chi**2 * noise.Lambda2 * D
    t_chi = chi_error_term(target, alpha, beta, chi, noise.eps_ac, noise.eps_bc)

    t_dark = 0.0
    if noise.zeta > 0:
        norm2 = float(np.real(np.conj(c) @ G @ c))
        ck2 = abs(c[-1]) ** 2 / norm2
        roots = solve_roots(target, gamma)
        w1 = noise.zeta / (noise.lambda_det * abs(gamma) ** 2)
        for j in range(1, target.K + 1):
            ct = np.zeros(target.K + 1, dtype=complex)
            cj = semi_success_coeffs(target, roots, {j}).c
            ct[: len(cj)] = cj
            nt = float(np.real(np.conj(ct) @ G @ ct))
            ov2 = abs(np.conj(c) @ G @ ct) ** 2 / (norm2 * nt)
            t_dark += w1 * ck2 * (1.0 - ov2)

    t_disc = _discrete_phase_term(a2 * chi**2, noise.Lambda * abs(gamma) ** 2)

    terms = (t_dephase, t_kerr, t_storage, t_chi, t_dark, t_disc)
    names = ("dephase", "kerr_loss", "storage", "chi_err", "darkcount", "discrete_phase")
    for name, t in zip(names, terms):
        if t > 0.2:
            warnings.warn(
                f"loss term {name} = {t:.3g} > 0.2; the leading-order budget "
                "is outside its validity range",
                stacklevel=2,
            )
    return FidelityBreakdown(*terms, F=1.0 - sum(terms))


def superop_pipeline_fidelity(
    target: TargetCoefficients, noise: NoiseParams, alpha, beta, gamma, chi
) -> float:
    """Fidelity from composing the stage maps exactly in the pair representation.

    Order: nonlinearity-error relabeling (actual chi_ac/chi_bc), then the
    discrete-phase mixture on mode a, then the coefficient-pair decay map.
    The reference is the ideal target with the eta1 drift compensated,
    c_n -> c_n e^{i eta1 n}, which is exactly the state a scheme with roots
    rotated by e^{-i eta1} heralds.  All overlaps are closed-form Gram
    entries, so the only approximation left is the Poisson series cutoff.
    """
    c = np.asarray(target.c, dtype=complex)
    K = target.K
    n = np.arange(K + 1, dtype=float)
    a2, b2 = abs(alpha) ** 2, abs(beta) ** 2
    chi_ac = chi * (1.0 + noise.eps_ac)
    chi_bc = chi * (1.0 + noise.eps_bc)
    eta1, eta2 = eta_params(noise, alpha, beta, chi_ac, chi_bc)

    d = n[:, None] - n[None, :]
    rho = np.outer(c, np.conj(c)) * np.exp(1j * eta1 * d - eta2 * d * d)

    cb = c * np.exp(1j * eta1 * n)  # compensated reference, nominal labels
    G_nom = _rot_gram(a2, chi * n, chi * n) * _rot_gram(b2, chi * n, chi * n)
    norm_bra = float(np.real(np.conj(cb) @ G_nom @ cb))

    G_act = _rot_gram(a2, chi_ac * n, chi_ac * n) * _rot_gram(b2, chi_bc * n, chi_bc * n)
    tr = float(np.real(np.sum(rho * G_act.T)))

    w = _poisson_weights(noise.Lambda * abs(gamma) ** 2)
    Gb = _rot_gram(b2, chi * n, chi_bc * n)
    num = 0.0
    for k, wk in enumerate(w):
        Gk = _rot_gram(a2, chi * n, chi_ac * n + chi_ac * k) * Gb
        u = np.conj(cb) @ Gk  # u[m] = <reference|pair_m rotated by k>
        num += wk * float(np.real(u @ rho @ np.conj(u)))
    return num / (norm_bra * tr)


# ---------------------------------------------------------------------------
# success probability and feasibility


def success_probability(
    target: TargetCoefficients,
    gamma,
    lambda_det,
    K: int | None = None,
    q: float | None = None,
    norm_squared: float = 1.0,
) -> float:
    """All-click probability with detector efficiency: (q^2 lambda |gamma|^2)^K N / |c_K|^2."""
    if not 0 < lambda_det <= 1:
        raise ValueError(f"lambda_det must lie in (0, 1], got {lambda_det}")
    if K is None:
        K = target.K
    elif K != target.K:
        raise ValueError(f"K={K} does not match the target (K={target.K})")
    if q is None:
        q = 1.0 / math.sqrt(K)
    return lambda_det**K * success_probability_ideal(target, gamma, q, K, norm_squared)


def attenuation_db(Lambda: float) -> float:
    """Channel attenuation in dB for relative loss Lambda = (I0 - I)/I."""
    return 10.0 * math.log10(Lambda + 1.0)


def db_to_loss(db: float) -> float:
    """Inverse of attenuation_db."""
    return 10.0 ** (db / 10.0) - 1.0


def darkcount_loss_limit(eps: float, lambda_det: float, zeta: float) -> float:
    """Largest channel loss compatible with the dark-count budget: 2 eps^2 lambda/zeta."""
    if zeta == 0:
        return math.inf
    return 2.0 * eps**2 * lambda_det / zeta


def feasibility_check(
    noise: NoiseParams, alpha, chi, gamma, eps: float, K: int
) -> FeasibilityReport:
    """Evaluate the six parameter inequalities for a per-term budget eps.

    For K = 1 the bounds read Lambda < 2 eps^2 lambda/zeta, Lambda2 < 2 eps,
    dphi2 < |alpha|^2 chi^2 eps, Lambda1 < 3 eps/2, |gamma|^2 <
    eps/(|alpha|^2 chi^2 Lambda) and eps_ac^2, eps_bc^2 < eps/(2|alpha|^2);
    for K >= 2 conditions 2, 3, 4 and 6 tighten by a factor 1/2.
    """
    if not 0 < eps < 1.0 / 6.0:
        raise ValueError(f"eps must lie in (0, 1/6), got {eps}")
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    f = 1.0 if K == 1 else 0.5
    a2 = abs(alpha) ** 2
    x = a2 * chi**2
    lam_max = darkcount_loss_limit(eps, noise.lambda_det, noise.zeta)
    probe_bound = math.inf if noise.Lambda * x == 0 else eps / (x * noise.Lambda)
    entries = (
        ("channel_loss", noise.Lambda, lam_max),
        ("storage_loss", noise.Lambda2, 2.0 * eps * f),
        ("phase_noise", noise.dphi2, x * eps * f),
        ("kerr_loss", noise.Lambda1, 1.5 * eps * f),
        ("probe_intensity", abs(gamma) ** 2, probe_bound),
        ("nonlinearity_error", max(noise.eps_ac**2, noise.eps_bc**2), eps * f / (2 * a2)),
    )
    checks = tuple(
        InequalityCheck(name, float(v), float(b), float(b - v), bool(v < b))
        for name, v, b in entries
    )
    db = attenuation_db(lam_max) if math.isfinite(lam_max) else math.inf
    return FeasibilityReport(
        checks=checks,
        all_pass=all(ch.passed for ch in checks),
        max_attenuation_db=db,
        max_distance_km=db / DB_PER_KM,
    )


def min_distinguishability(K: int, eps: float, dphi2: float) -> float:
    """Smallest |alpha|^2 chi^2 allowed by the phase-noise inequality."""
    f = 1.0 if K == 1 else 0.5
    return dphi2 / (eps * f)


def probe_ceiling(eps: float, x: float, Lambda: float, cap: float = 0.5) -> float:
    """Largest |gamma|^2 allowed by the probe-intensity inequality, capped."""
    if Lambda <= 0 or x <= 0:
        return cap
    return min(eps / (x * Lambda), cap)


def budget_success(
    K: int,
    Lambda: float,
    eps: float,
    lambda_det: float,
    zeta: float,
    dphi2: float,
    cap: float = 0.5,
) -> float:
    """Closed-form p_K at the probe ceiling and minimum distinguishability.

    Uses q^2 = 1/K and the unit-|c_K| normalization of the design
    polynomial; a concrete target rescales this by norm_squared/|c_K|^2.
    Returns 0 beyond the dark-count loss limit.
    """
    if Lambda > darkcount_loss_limit(eps, lambda_det, zeta):
        return 0.0
    x = min_distinguishability(K, eps, dphi2)
    g2 = probe_ceiling(eps, x, Lambda, cap)
    return (lambda_det * g2 / K) ** K


def practical_cutoff_db(
    K: int, eps: float, lambda_det: float, dphi2: float, p_floor: float = 1e-6
) -> float:
    """Attenuation where the budget success probability drops to p_floor."""
    x = min_distinguishability(K, eps, dphi2)
    lam = lambda_det * eps / (K * x * p_floor ** (1.0 / K))
    return attenuation_db(lam)


def loss_sweep(
    K: int,
    db_grid,
    fidelity: float = 0.9,
    lambda_det: float = 1e-2,
    zeta: float = 1e-8,
    dphi2: float = 2.5e-5,
):
    """Rows (Lambda_dB, F, p_K) at fixed target fidelity."""
    eps = (1.0 - fidelity) / 6.0
    return [
        (float(db), fidelity, budget_success(K, db_to_loss(db), eps, lambda_det, zeta, dphi2))
        for db in db_grid
    ]


def fidelity_sweep(
    K: int,
    db: float,
    f_grid,
    lambda_det: float = 1e-2,
    zeta: float = 1e-8,
    dphi2: float = 2.5e-5,
):
    """Rows (Lambda_dB, F, p_K) at fixed channel attenuation."""
    lam = db_to_loss(db)
    return [
        (float(db), float(f), budget_success(K, lam, (1.0 - f) / 6.0, lambda_det, zeta, dphi2))
        for f in f_grid
    ]
