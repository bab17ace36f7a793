"""Synthesis of elimination-measurement networks from target coefficients.

A target two-mode superposition is encoded by a coefficient vector
(c_0, ..., c_K).  The probe amplitudes that must trigger *no* click are the
roots of f(x) = sum_n c_n (x/gamma)^n; around those roots this module builds
the complete passive network: the splitter chain that taps the probe, the
reference beams that cancel it arm by arm, and the secondary cascade that
derives every reference beam from one master coherent source.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLeadingCoefficient, NoSolution
from .fock import coherent_amplitudes

DEFAULT_DELTA = 1e-3


@dataclass(frozen=True)
class TargetCoefficients:
    """Unnormalized coefficients (c_0, ..., c_K) of the desired final state."""

    c: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=complex))
        if np.all(c == 0):
            raise ValueError("coefficient vector is identically zero")
        object.__setattr__(self, "c", c)

    @property
    def K(self) -> int:
        return len(self.c) - 1


@dataclass(frozen=True)
class EliminationRoots:
    """Roots (gamma_m, multiplicity l_m) of the elimination polynomial."""

    roots: tuple
    gamma: complex

    def __post_init__(self):
        object.__setattr__(
            self, "roots", tuple((complex(z), int(l)) for z, l in self.roots)
        )

    @property
    def K(self) -> int:
        return sum(l for _, l in self.roots)

    def expanded(self) -> np.ndarray:
        """Detector-ordered amplitudes, each root repeated by its multiplicity."""
        return np.array(
            [z for z, l in self.roots for _ in range(l)], dtype=complex
        )


@dataclass(frozen=True)
class RefNet:
    """Splitting cascade turning one master beam into the K reference beams.

    Tp and phi hold the K-1 adjustable transmittances and phase shifts; the
    final element is a mirror (full reflection, zero phase) and is implicit.
    """

    Tp: np.ndarray
    phi: np.ndarray
    master: complex


@dataclass(frozen=True)
class DetectionScheme:
    """Complete synthesized network for one target and probe amplitude."""

    roots: EliminationRoots
    T: np.ndarray
    q: float
    delta: float
    gtilde: np.ndarray
    ref_net: RefNet

    @property
    def K(self) -> int:
        return self.roots.K


def solve_roots(target: TargetCoefficients, gamma) -> EliminationRoots:
    """Roots of sum_n c_n (x/gamma)^n with multiplicity clustering.

    Computed from the companion-matrix eigenvalues; values closer than
    merge_tol = 1e-7 max|gamma_m| are merged into a single root carrying the
    summed multiplicity.  Roots come back sorted by ascending complex argument,
    then modulus, which fixes the detector indexing once and for all.
    """
    gamma = complex(gamma)
    if gamma == 0:
        raise ValueError("probe amplitude gamma must be nonzero")
    c = target.c
    if abs(c[-1]) <= 1e-12 * np.max(np.abs(c)):
        raise DegenerateLeadingCoefficient(
            f"leading coefficient c_K={c[-1]} vanishes; lower the target degree"
        )
    if target.K == 0:
        return EliminationRoots((), gamma)
    vals = gamma * np.roots(c[::-1])
    tol = 1e-7 * float(np.max(np.abs(vals)))

    parent = list(range(len(vals)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            if abs(vals[i] - vals[j]) <= tol:
                parent[find(i)] = find(j)

    clusters = {}
    for i, v in enumerate(vals):
        clusters.setdefault(find(i), []).append(v)
    merged = [(np.mean(members), len(members)) for members in clusters.values()]
    merged.sort(key=lambda zl: (np.angle(zl[0]), abs(zl[0])))
    return EliminationRoots(tuple(merged), gamma)


def transmittances(K: int, delta: float):
    """Closed-form splitter chain: equal probe tap q into each detector arm.

    T_j = ((K-j-1)(1-delta)+1)/((K-j)(1-delta)+1) for j < K, T_K = delta,
    and q = (K + delta/(1-delta))^{-1/2}.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    j = np.arange(1, K + 1)
    T = ((K - j - 1) * (1 - delta) + 1) / ((K - j) * (1 - delta) + 1)
    T[-1] = delta
    q = 1.0 / np.sqrt(K + delta / (1 - delta))
    return T, float(q)


def reference_amplitudes(roots: EliminationRoots, T, q) -> np.ndarray:
    """Reference beam amplitudes that cancel each root arm by arm.

    Each splitter j mixes the through-going probe with a fresh reference
    gtilde_j so that a probe entering at gamma_x leaves arm j carrying exactly
    i q (gamma_x - gamma_j); the recurrence tracks the reference part riding
    along the probe line.
    """
    gam = roots.expanded()
    theta = np.arccos(np.sqrt(np.asarray(T, dtype=float)))
    gt = np.empty(len(gam), dtype=complex)
    carried = 0j
    for j in range(len(gam)):
        gt[j] = (-1j * q * gam[j] - 1j * carried * np.sin(theta[j])) / np.cos(theta[j])
        carried = carried * np.cos(theta[j]) + 1j * gt[j] * np.sin(theta[j])
    return gt


def reference_network(gtilde) -> RefNet:
    """Derive all reference beams from one master via a splitting cascade.

    Beam j picks up one reflection, j-1 transmissions, and a phase shifter:
    gtilde_j = i cos(th'_1)...cos(th'_{j-1}) sin(th'_j) e^{i phi_j} master.
    Solved in closed form from the energy ladder R_j = sum_{m>=j} |gtilde_m|^2;
    arms with zero amplitude get phi_j = 0 by convention.
    """
    gt = np.asarray(gtilde, dtype=complex)
    K = len(gt)
    mag2 = np.abs(gt) ** 2
    R = np.cumsum(mag2[::-1])[::-1]
    if R[0] == 0:
        raise NoSolution("all reference amplitudes vanish; no master beam exists")
    nz = np.nonzero(np.abs(gt))[0]
    ref = gt[nz[-1]]

    Tp = np.empty(K)
    phi = np.zeros(K)
    for j in range(K):
        if R[j] == 0:
            Tp[j] = 1.0  # nothing left to split off
            continue
        sin2 = mag2[j] / R[j]
        Tp[j] = 1.0 - sin2
        if abs(gt[j]) > 0:
            phi[j] = float(np.angle(gt[j] / ref))
    master = ref * np.sqrt(R[0]) / (1j * abs(ref))
    return RefNet(Tp[: K - 1], phi[: K - 1], complex(master))


def refnet_angles(net: RefNet, K: int):
    """Full K-element (theta', phi) arrays with the implicit final mirror."""
    Tp = np.append(net.Tp, 0.0)
    phi = np.append(net.phi, 0.0)
    if len(Tp) != K:
        raise ValueError(f"ref_net holds {len(Tp) - 1} splitters, expected {K - 1}")
    return np.arccos(np.sqrt(np.clip(Tp, 0.0, 1.0))), phi


def probe_affine(scheme: DetectionScheme):
    """(mu, nu) of the end-of-chain probe map gamma_x -> mu gamma_x + nu."""
    K = scheme.K
    mu = np.sqrt(1.0 - K * scheme.q**2)
    nu = (
        np.sqrt((1.0 - scheme.delta) / scheme.delta)
        * scheme.q
        * np.sum(scheme.roots.expanded())
    )
    return float(mu), complex(nu)


def phi_vector(target: TargetCoefficients, gamma) -> "PhiVector":
    """Discrimination vector with components c_n* / Q_n*(gamma), n = 0..K."""
    gamma = complex(gamma)
    if gamma == 0:
        raise ValueError("probe amplitude gamma must be nonzero")
    q = coherent_amplitudes(gamma, target.K, tail_tol=1.0)
    return PhiVector(np.conj(target.c) / np.conj(q))


@dataclass(frozen=True)
class PhiVector:
    """Unnormalized Fock components of the probe-side discrimination vector."""

    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "components", np.asarray(self.components, dtype=complex)
        )


def coeffs_from_photon_target(s: int, K: int, chi: float) -> TargetCoefficients:
    """Coefficients whose elimination roots are gamma e^{i chi s'} for s' != s.

    The surviving joint photon numbers then satisfy n_a + n_b = s with all
    other totals from 0..K eliminated.  Vieta construction, c_K = 1.
    """
    if not 0 <= s <= K:
        raise ValueError(f"need 0 <= s <= K, got s={s}, K={K}")
    others = [np.exp(1j * chi * sp) for sp in range(K + 1) if sp != s]
    return TargetCoefficients(np.poly(others)[::-1])


def semi_success_coeffs(
    target: TargetCoefficients, roots: EliminationRoots, missing
) -> TargetCoefficients:
    """Coefficients of the state heralded when some detectors stay silent.

    missing holds 1-based detector indices (canonical root order, degenerate
    roots occupying consecutive slots).  The result is the monic polynomial
    over the still-eliminated roots, degree K - |missing|.
    """
    missing = set(missing)
    K = roots.K
    bad = [j for j in missing if not 1 <= j <= K]
    if bad:
        raise ValueError(f"detector indices {bad} outside 1..{K}")
    gam = roots.expanded()
    kept = [gam[j - 1] / roots.gamma for j in range(1, K + 1) if j not in missing]
    if not kept:
        return TargetCoefficients(np.array([1.0 + 0j]))
    return TargetCoefficients(np.poly(kept)[::-1])


def build_scheme(
    target: TargetCoefficients, gamma, delta: float = DEFAULT_DELTA
) -> DetectionScheme:
    """Full synthesis: roots, splitter chain, references, reference cascade."""
    roots = solve_roots(target, gamma)
    T, q = transmittances(roots.K, delta)
    gt = reference_amplitudes(roots, T, q)
    net = reference_network(gt)
    return DetectionScheme(roots, T, q, float(delta), gt, net)


# ---------------------------------------------------------------------------
# export / import


def _c2j(z):
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def _j2c(d):
    return complex(d["re"], d["im"])


def to_json(scheme: DetectionScheme) -> str:
    """Serialize a scheme; floats keep full double precision (17 digits)."""
    doc = {
        "K": scheme.K,
        "delta": scheme.delta,
        "gamma": _c2j(scheme.roots.gamma),
        "roots": [
            {"re": float(np.real(z)), "im": float(np.imag(z)), "mult": l}
            for z, l in scheme.roots.roots
        ],
        "T": [float(t) for t in scheme.T],
        "q": scheme.q,
        "gtilde": [_c2j(g) for g in scheme.gtilde],
        "ref_net": {
            "Tp": [float(t) for t in scheme.ref_net.Tp],
            "phi": [float(p) for p in scheme.ref_net.phi],
            "gtilde_master": _c2j(scheme.ref_net.master),
        },
    }
    return json.dumps(doc, indent=2)


def from_json(text: str) -> DetectionScheme:
    doc = json.loads(text)
    roots = EliminationRoots(
        tuple((complex(r["re"], r["im"]), r["mult"]) for r in doc["roots"]),
        _j2c(doc["gamma"]),
    )
    net = RefNet(
        np.array(doc["ref_net"]["Tp"], dtype=float),
        np.array(doc["ref_net"]["phi"], dtype=float),
        _j2c(doc["ref_net"]["gtilde_master"]),
    )
    return DetectionScheme(
        roots,
        np.array(doc["T"], dtype=float),
        float(doc["q"]),
        float(doc["delta"]),
        np.array([_j2c(g) for g in doc["gtilde"]], dtype=complex),
        net,
    )
