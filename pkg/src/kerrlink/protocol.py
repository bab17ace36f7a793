"""End-to-end protocol simulation along independent computational paths.

The interaction entangles the two held modes (a, b) with a weak coherent
probe through cross-Kerr phases, then sends the probe through the synthesized
splitter chain where each arm meets its reference beam and a non-resolving
detector.  Three routes to the heralded (a, b) state are provided:

* ``blocked`` (default): the total held-mode photon number s = n_a + n_b is
  conserved and tags the probe branch, so the linear cascade acts on exact
  coherent labels per s; projector overlaps are evaluated in closed form.
  No truncation anywhere except the (a, b) amplitude grid itself.
* ``monolithic``: literal truncated-Fock simulation of every mode through
  the gate layer; exercises the whole fock module, small instances only.
* ``displaced``: the cascade runs with vacuum reference ports and each arm
  is displaced by -i q gamma_j before detection; equivalent network, used
  as a cross-check of the displacement-based layout.

The operator path applies the per-detector polynomial operators
(q^n/sqrt(n!)) (c - gamma_j)^n branch by branch and sums photon counts up to
a cutoff; it converges to the network result as the cutoff grows.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.sparse.linalg import eigsh

from .design import (
    DetectionScheme,
    TargetCoefficients,
    build_scheme,
    probe_affine,
)
from .fock import (
    DensOp,
    FockVector,
    TruncationSpec,
    apply_beamsplitter,
    apply_cross_kerr,
    apply_displacement,
    coherent_amplitudes,
    fidelity,
    min_cutoff,
    product_state,
    project_click,
    reduce_to_density,
    trace_distance,
)

DEFAULT_N_CUT = 3


@dataclass(frozen=True)
class ProtocolParams:
    """Physical inputs plus the synthesized scheme and shared truncation."""

    alpha: complex
    beta: complex
    gamma: complex
    chi: float
    target: TargetCoefficients
    scheme: DetectionScheme
    trunc: TruncationSpec

    def __post_init__(self):
        if not 0 < self.chi <= np.pi:
            raise ValueError(f"chi must lie in (0, pi], got {self.chi}")
        if abs(self.gamma) ** 2 > 0.5:
            warnings.warn(
                f"|gamma|^2 = {abs(self.gamma) ** 2:.3g} > 0.5; the weak-probe "
                "expansions the scheme relies on degrade quickly",
                stacklevel=2,
            )


@dataclass(frozen=True)
class OutcomeRecord:
    """One click pattern with its heralded normalized state and probability."""

    pattern: tuple
    state: DensOp
    probability: float


@dataclass(frozen=True)
class EquivalenceReport:
    """Cross-validation of the network and operator paths."""

    trace_distance: float
    residual: float
    exponent: float


def make_protocol(
    alpha,
    beta,
    gamma,
    chi,
    target: TargetCoefficients,
    delta: float = 1e-3,
    tail_tol: float = 1e-12,
    n_max: int | None = None,
) -> ProtocolParams:
    """Bundle a full parameter set, synthesizing the scheme and the cutoff.

    The cutoff covers every coherent amplitude appearing in the network
    (held modes, probe, references, master), so the same ProtocolParams can
    drive any of the simulation methods.
    """
    scheme = build_scheme(target, gamma, delta=delta)
    if n_max is None:
        amps = [alpha, beta, gamma, scheme.ref_net.master, *scheme.gtilde]
        n_max = min_cutoff(amps, tail_tol)
    return ProtocolParams(
        complex(alpha),
        complex(beta),
        complex(gamma),
        float(chi),
        target,
        scheme,
        TruncationSpec(n_max, tail_tol),
    )


def analytic_target_state(
    target: TargetCoefficients, alpha, beta, chi, trunc: TruncationSpec | None = None
) -> FockVector:
    """Normalized sum_n c_n |alpha e^{i chi n}> |beta e^{i chi n}> on modes (a, b)."""
    if trunc is None:
        trunc = TruncationSpec(min_cutoff([alpha, beta]))
    amp = np.zeros((trunc.dim, trunc.dim), dtype=complex)
    for n, cn in enumerate(target.c):
        qa = coherent_amplitudes(
            alpha * np.exp(1j * chi * n), trunc.n_max, trunc.tail_tol
        )
        qb = coherent_amplitudes(
            beta * np.exp(1j * chi * n), trunc.n_max, trunc.tail_tol
        )
        amp += cn * np.outer(qa, qb)
    return FockVector(("a", "b"), amp / np.linalg.norm(amp), trunc)


# ---------------------------------------------------------------------------
# blocked network path (exact coherent-label evolution per conserved s)


def _coh_overlap(bra, ket):
    """<bra|ket> for coherent labels; broadcasts."""
    return np.exp(np.conj(bra) * ket - 0.5 * (np.abs(bra) ** 2 + np.abs(ket) ** 2))


def _branch_labels(params: ProtocolParams):
    """Per-branch arm and end-probe coherent labels for s = 0 .. 2 n_max."""
    s = np.arange(2 * params.trunc.n_max + 1)
    z = params.gamma * np.exp(1j * params.chi * s)
    gam = params.scheme.roots.expanded()
    arms = 1j * params.scheme.q * (z[None, :] - gam[:, None])  # [arm, s]
    mu, nu = probe_affine(params.scheme)
    return arms, mu * z + nu


def _pattern_kernel(arms, probe, pattern, n_cut=None):
    """W[r, c] = <out(c)| P_pattern (x) 1_probe |out(r)> over branch labels.

    n_cut=None uses the exact click complement 1 - |0><0|; a finite n_cut
    sums explicit photon-count terms 1..n_cut instead (operator path).
    """
    w = _coh_overlap(probe[None, :], probe[:, None])
    for d, clicked in zip(arms, pattern):
        bra, ket = d[None, :], d[:, None]
        vac = np.exp(-0.5 * (np.abs(bra) ** 2 + np.abs(ket) ** 2))
        if not clicked:
            w = w * vac
        elif n_cut is None:
            w = w * (_coh_overlap(bra, ket) - vac)
        else:
            x = np.conj(bra) * ket
            acc = np.zeros_like(x)
            term = np.ones_like(x)
            for n in range(1, n_cut + 1):
                term = term * x / n
                acc = acc + term
            w = w * (acc * vac)
    return w


def _assemble_rho(params: ProtocolParams, kernel) -> DensOp:
    d = params.trunc.dim
    qa = coherent_amplitudes(params.alpha, params.trunc.n_max, params.trunc.tail_tol)
    qb = coherent_amplitudes(params.beta, params.trunc.n_max, params.trunc.tail_tol)
    w = np.outer(qa, qb).ravel()
    s_of = np.add.outer(np.arange(d), np.arange(d)).ravel()
    rho = np.outer(w, np.conj(w)) * kernel[np.ix_(s_of, s_of)]
    return DensOp(("a", "b"), rho, params.trunc)


def _record(params, pattern, rho: DensOp) -> OutcomeRecord:
    p = rho.trace()
    state = rho.normalized() if p > 1e-30 else rho
    return OutcomeRecord(tuple(pattern), state, float(p))


def run_full_protocol(params: ProtocolParams, method: str = "blocked"):
    """All 2^K click-pattern outcomes with heralded states and probabilities."""
    if method == "blocked":
        arms, probe = _branch_labels(params)
        out = []
        for pattern in itertools.product((True, False), repeat=params.scheme.K):
            rho = _assemble_rho(params, _pattern_kernel(arms, probe, pattern))
            out.append(_record(params, pattern, rho))
        return out
    if method in ("monolithic", "displaced"):
        return _run_fock_pipeline(params, displaced=(method == "displaced"))
    raise ValueError(f"unknown method {method!r}")


def _run_fock_pipeline(params: ProtocolParams, displaced: bool):
    K = params.scheme.K
    trunc = params.trunc
    modes = ["a", "b", "c"] + [f"r{j}" for j in range(1, K + 1)]
    refs = np.zeros(K, dtype=complex) if displaced else params.scheme.gtilde
    amps = [
        coherent_amplitudes(params.alpha, trunc.n_max, trunc.tail_tol),
        coherent_amplitudes(params.beta, trunc.n_max, trunc.tail_tol),
        coherent_amplitudes(params.gamma, trunc.n_max, trunc.tail_tol),
    ] + [coherent_amplitudes(g, trunc.n_max, trunc.tail_tol) for g in refs]
    st = product_state(modes, amps, trunc)
    st = apply_cross_kerr(st, "a", "c", params.chi)
    st = apply_cross_kerr(st, "b", "c", params.chi)
    theta = np.arccos(np.sqrt(params.scheme.T))
    gam = params.scheme.roots.expanded()
    for j in range(1, K + 1):
        st = apply_beamsplitter(st, "c", f"r{j}", theta[j - 1])
        if displaced:
            st = apply_displacement(st, f"r{j}", -1j * params.scheme.q * gam[j - 1])
    out = []
    for pattern in itertools.product((True, False), repeat=K):
        proj = st
        for j, clicked in enumerate(pattern, start=1):
            proj = project_click(proj, f"r{j}", clicked)
        rho = reduce_to_density(proj, ("a", "b"))
        out.append(_record(params, pattern, rho))
    return out


def all_click_record(records) -> OutcomeRecord:
    for r in records:
        if all(r.pattern):
            return r
    raise ValueError("no all-click record present")


# ---------------------------------------------------------------------------
# operator path


def operator_path_final_state(params: ProtocolParams, counts) -> DensOp:
    """Heralded state for exact per-detector photon counts n_1..n_K (all >= 1).

    Branch by branch, detector j contributes the polynomial-operator amplitude
    (q^{n_j}/sqrt(n_j!)) (z_s - gamma_j)^{n_j} times the arm vacuum weight;
    the leftover probe is traced out through coherent overlaps.  Normalized.
    """
    counts = tuple(int(n) for n in counts)
    if len(counts) != params.scheme.K or any(n < 1 for n in counts):
        raise ValueError(f"need K={params.scheme.K} counts, all >= 1, got {counts}")
    arms, probe = _branch_labels(params)
    w = _coh_overlap(probe[None, :], probe[:, None])
    for d, n in zip(arms, counts):
        bra, ket = d[None, :], d[:, None]
        vac = np.exp(-0.5 * (np.abs(bra) ** 2 + np.abs(ket) ** 2))
        w = w * ((np.conj(bra) * ket) ** n / factorial(n) * vac)
    rho = _assemble_rho(params, w)
    return rho.normalized() if rho.trace() > 1e-30 else rho


def operator_path_pattern(
    params: ProtocolParams, pattern, n_cut: int = DEFAULT_N_CUT
) -> DensOp:
    """Unnormalized pattern state from count sums 1..n_cut on clicked arms."""
    arms, probe = _branch_labels(params)
    return _assemble_rho(params, _pattern_kernel(arms, probe, pattern, n_cut=n_cut))


def build_target_by_elimination(params: ProtocolParams) -> FockVector:
    """Product of (e^{i chi (n_a+n_b)} - gamma_m/gamma) factors on |alpha>|beta>.

    This is the leading-order heralded state written without reference to the
    coefficient vector; it must coincide (after normalization) with the
    analytic target, which pins down the whole elimination construction.
    """
    trunc = params.trunc
    qa = coherent_amplitudes(params.alpha, trunc.n_max, trunc.tail_tol)
    qb = coherent_amplitudes(params.beta, trunc.n_max, trunc.tail_tol)
    amp = np.outer(qa, qb)
    s = np.add.outer(np.arange(trunc.dim), np.arange(trunc.dim))
    f = np.exp(1j * params.chi * s)
    for z, l in params.scheme.roots.roots:
        amp = amp * (f - z / params.gamma) ** l
    return FockVector(("a", "b"), amp / np.linalg.norm(amp), trunc)


def oracle_equivalence(
    params: ProtocolParams, n_cut: int = DEFAULT_N_CUT
) -> EquivalenceReport:
    """Compare the network and operator paths on the all-click outcome.

    trace_distance: network vs operator-path heralded state.
    residual: infidelity of the network state against the analytic target.
    exponent: two-point |gamma| scaling of the residual (expected ~ 2).
    """
    full = tuple([True] * params.scheme.K)
    records = run_full_protocol(params)
    net = all_click_record(records).state
    op = operator_path_pattern(params, full, n_cut=n_cut)
    td = trace_distance(net, op)

    def residual_at(p):
        rec = all_click_record(run_full_protocol(p))
        tgt = analytic_target_state(p.target, p.alpha, p.beta, p.chi, p.trunc)
        return 1.0 - fidelity(rec.state, tgt)

    r1 = residual_at(params)
    half = make_protocol(
        params.alpha,
        params.beta,
        params.gamma / 2,
        params.chi,
        params.target,
        delta=params.scheme.delta,
        tail_tol=params.trunc.tail_tol,
        n_max=params.trunc.n_max,
    )
    r2 = residual_at(half)
    exponent = float(np.log2(r1 / r2)) if r2 > 0 else float("nan")
    return EquivalenceReport(float(td), float(r1), exponent)


def success_probability_ideal(
    target: TargetCoefficients, gamma, q, K: int, norm_squared: float = 1.0
) -> float:
    """Leading-order all-click probability (q^2 |gamma|^2)^K N^2 / |c_K|^2.

    norm_squared is the squared norm of the target superposition under the
    given (unnormalized) coefficients; leave it at 1 when c is already scaled
    so the state has unit norm.
    """
    return float(
        (q**2 * abs(gamma) ** 2) ** K * norm_squared / abs(target.c[-1]) ** 2
    )


def dominant_eigenstate(rho: DensOp):
    """Largest eigenvalue and its eigenvector as a FockVector over rho's modes."""
    dim = rho.matrix.shape[0]
    if dim <= 256:
        w, v = np.linalg.eigh(rho.matrix)
        lam, vec = float(w[-1]), v[:, -1]
    else:
        w, v = eigsh(rho.matrix, k=1, which="LA")
        lam, vec = float(w[0]), v[:, 0]
    shape = (rho.trunc.dim,) * len(rho.modes)
    return lam / rho.trace(), FockVector(rho.modes, vec.reshape(shape), rho.trunc)
