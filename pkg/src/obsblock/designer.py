"""Observability-blocking gain synthesis by modal replacement.

Pipeline per design: take the open-loop modal data, pick a target
eigenvalue, build a replacement eigenvector with zeroed measurement
entries from the null space of [A - lambda*I, B], restore modal
independence if the swap broke it, and recover the gain from F = Z V^-1
evaluated in a realified modal basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .config import (DEFAULT_TOLERANCES, DesignOptions, Tolerances,
                     VARIANT_DERIVATIVE, VARIANT_POSITION)
from .errors import (ControllabilityError, DefectiveSpectrumError,
                     DegenerateCandidateError, IllConditionedDesignError,
                     InsufficientActuationError, InvalidInputError,
                     NoEligibleEigenvalueError, NotAnEigenvalueError,
                     RepairFailureError)
from .model import FeedbackGain, IntegratorNetwork, assemble
from .spectrum import SpectralData, decompose, match_eigenvalue

_EPS = np.finfo(float).eps


@dataclass
class NullspaceBundle:
    """Null-space data of [A - lambda*I, B] partitioned for one design.

    n1/n2 are the state/input row blocks of the null basis; the
    measurement rows of n1 are tracked per derivative order so both the
    position variant (order 0) and the derivative variant (order N-1)
    can carve out their constraint block.
    """

    lam: complex
    full: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    n: int
    order: int
    q: int
    meas_idx: tuple

    def meas_rows(self, k: int) -> np.ndarray:
        rows = [k * self.n + (r - 1) for r in self.meas_idx]
        return self.n1[rows, :]

    def free_rows(self, k: int) -> np.ndarray:
        meas = {k * self.n + (r - 1) for r in self.meas_idx}
        rows = [k * self.n + j for j in range(self.n) if k * self.n + j not in meas]
        return self.n1[rows, :]

    # N=2 names from the construction: N3/N4 split the position block,
    # N5/N6 the top-derivative block.
    @property
    def n3(self) -> np.ndarray:
        return self.free_rows(0)

    @property
    def n4(self) -> np.ndarray:
        return self.meas_rows(0)

    @property
    def n5(self) -> np.ndarray:
        return self.free_rows(self.order - 1)

    @property
    def n6(self) -> np.ndarray:
        return self.meas_rows(self.order - 1)


@dataclass
class BlockingDesign:
    """Complete record of one synthesized blocking design."""

    lambda_p: complex
    lambda_index: int
    variant: str
    h_p: np.ndarray
    v_hat: np.ndarray
    z_p: np.ndarray
    V: np.ndarray
    Z: np.ndarray
    gain: FeedbackGain
    preserved: tuple
    repaired: tuple
    replaced: tuple
    cond_V: float
    residuals: dict
    measured_nodes: tuple
    open_loop: SpectralData
    network: IntegratorNetwork
    warnings: tuple = field(default_factory=tuple)

    @property
    def F(self) -> np.ndarray:
        return self.gain.matrix


def _rank(M: np.ndarray, rtol: float | None) -> int:
    if M.size == 0:
        return 0
    sv = la.svdvals(M)
    if sv[0] == 0.0:
        return 0
    cutoff = (max(M.shape) * _EPS if rtol is None else rtol) * sv[0]
    return int((sv > cutoff).sum())


def _null_basis(M: np.ndarray, rtol: float | None) -> np.ndarray:
    """Orthonormal null-space basis; canonical basis for a zero matrix."""
    rows, cols = M.shape
    if rows == 0 or not np.abs(M).max() > 0.0:
        return np.eye(cols, dtype=complex)
    U, sv, Vh = la.svd(M, full_matrices=True)
    cutoff = (max(M.shape) * _EPS if rtol is None else rtol) * sv[0]
    r = int((sv > cutoff).sum())
    return Vh[r:, :].conj().T


def check_controllability(A, B, eigenvalues, tol: Tolerances) -> None:
    """PBH test at every distinct eigenvalue; raises on rank deficiency."""
    d = A.shape[0]
    seen = []
    for lam in eigenvalues:
        if any(abs(lam - s) <= tol.lambda_match * max(1.0, abs(s)) for s in seen):
            continue
        seen.append(lam)
        M = np.hstack([A - lam * np.eye(d), B])
        if _rank(M, tol.rank_decision) < d:
            raise ControllabilityError(
                f"(A, B) uncontrollable at eigenvalue {lam:.6g}")


def nullspace_bundle(A, B, lam, meas_idx, n: int, order: int,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> NullspaceBundle:
    """Null space of [A - lambda*I, B] with the design row partition.

    Raises ControllabilityError when the null-space dimension differs
    from q, which is exactly the PBH rank condition at lambda.
    """
    d = A.shape[0]
    q = B.shape[1]
    if q < 1:
        raise InsufficientActuationError("need at least one actuation node")
    S = np.hstack([A - lam * np.eye(d), B]).astype(complex)
    basis = _null_basis(S, tol.independence)
    if basis.shape[1] != q:
        raise ControllabilityError(
            f"null space of [A - lambda I, B] has dimension {basis.shape[1]}, "
            f"expected q = {q}; (A, B) is not controllable at {lam:.6g}")
    return NullspaceBundle(lam=lam, full=basis, n1=basis[:d, :], n2=basis[d:, :],
                           n=n, order=order, q=q, meas_idx=tuple(meas_idx))


def select_hp(bundle: NullspaceBundle, variant: str = VARIANT_POSITION,
              tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Direction in the constraint-block null space, unit norm.

    Among null directions of N4 (or N6 for the derivative variant) the
    one maximizing ||N1 h|| is taken; exact ties fall back to the
    earliest canonical coordinate.
    """
    if variant == VARIANT_POSITION:
        block = bundle.n4
    elif variant == VARIANT_DERIVATIVE:
        block = bundle.n6
    else:
        raise InvalidInputError(f"unknown variant {variant!r}")
    K = _null_basis(block, tol.independence)
    if K.shape[1] == 0:
        raise InsufficientActuationError(
            f"constraint block has trivial null space (q = {bundle.q}, "
            f"m = {len(bundle.meas_idx)}); more actuation nodes are required")
    M = bundle.n1 @ K
    _, sv, Vh = la.svd(M)
    if sv.size == 0 or sv[0] <= max(M.shape) * _EPS:
        raise DegenerateCandidateError(
            "every admissible direction yields a zero replacement eigenvector")
    tied = np.flatnonzero(sv >= sv[0] * (1.0 - 1e-9))
    if tied.size > 1:
        W = Vh[tied, :].conj().T          # orthonormal in coefficient space
        Q = K @ W
        for j in range(bundle.q):
            proj = Q @ (Q.conj().T @ np.eye(bundle.q, dtype=complex)[:, j])
            if np.linalg.norm(proj) > 1e-12:
                h = proj / np.linalg.norm(proj)
                break
        else:  # pragma: no cover - Q has full column rank
            h = K @ Vh[0].conj()
    else:
        h = K @ Vh[0].conj()
    resid = np.abs(block @ h).max() if block.size else 0.0
    if resid > 1e-10:
        raise DegenerateCandidateError(
            f"constraint residual {resid:.3e} exceeds 1e-10")
    return h / np.linalg.norm(h)


def build_candidate(bundle: NullspaceBundle, h: np.ndarray):
    """Replacement eigenvector and input direction (v_hat, z_p) from h.

    v_hat is normalized to unit length and phase-canonicalized; z and h
    are scaled consistently so (A - lambda I) v_hat + B z stays zero.
    """
    v_hat = bundle.n1 @ h
    z = bundle.n2 @ h
    nrm = np.linalg.norm(v_hat)
    if nrm <= max(bundle.n1.shape) * _EPS:
        raise DegenerateCandidateError("candidate eigenvector is numerically zero")
    mags = np.abs(v_hat)
    idx = int(np.argmax(mags > 1e-8 * mags.max()))
    phase = np.exp(-1j * np.angle(v_hat[idx])) / nrm
    return v_hat * phase, z * phase, h * phase


def _repair_draw(rng, q: int, make_real: bool) -> np.ndarray:
    h = rng.standard_normal(q) + (0.0 if make_real else 1j * rng.standard_normal(q))
    return h


def _greedy_units(sd: SpectralData, targets):
    """Column units (singles / conjugate pairs) ordered by ascending |lambda|."""
    units = []
    seen = set(targets)
    order = sorted(range(sd.dim),
                   key=lambda i: (abs(sd.eigenvalues[i]), sd.eigenvalues[i].real,
                                  sd.eigenvalues[i].imag, i))
    for i in order:
        if i in seen:
            continue
        j = int(sd.pairing[i])
        unit = (i,) if j == i or j in seen else tuple(sorted((i, j)))
        units.append(unit)
        seen.update(unit)
    return units


def assemble_and_gain(network: IntegratorNetwork, sd: SpectralData, p: int,
                      candidate, bundle: NullspaceBundle, A, B,
                      options: DesignOptions, measured_nodes) -> BlockingDesign:
    """Modal replacement steps: swap, independence repair, gain recovery.

    `candidate` is the (v_hat, z, h) triple for column p; the conjugate
    column is handled automatically for complex targets, and a snapped
    defective pair consumes a second seeded draw.
    """
    tol = options.tolerances
    d = sd.dim
    q = B.shape[1]
    v_hat, z_p, h_p = candidate
    lam_p = sd.eigenvalues[p]
    partner = int(sd.pairing[p])

    V = sd.modal_matrix.astype(complex).copy()
    Z = np.zeros((q, d), dtype=complex)
    pairing = sd.pairing.copy()

    replaced = [p]
    V[:, p] = v_hat
    Z[:, p] = z_p
    rng = np.random.default_rng(np.random.SeedSequence([options.seed, p, 0xB10C]))
    repair_budget = 50

    if partner != p:
        replaced.append(partner)
        if lam_p.imag != 0.0:
            V[:, partner] = v_hat.conj()
            Z[:, partner] = z_p.conj()
        else:
            # snapped defective pair at a real eigenvalue: second column is a
            # fresh draw from the same null space, accepted on independence
            ok = False
            for _ in range(repair_budget):
                h2 = _repair_draw(rng, q, make_real=True)
                cand = bundle.n1 @ h2
                nn = np.linalg.norm(cand)
                if nn <= d * _EPS:
                    continue
                trial = V.copy()
                trial[:, partner] = cand / nn
                if _rank(trial, tol.independence) == d:
                    V[:, partner] = cand / nn
                    Z[:, partner] = bundle.n2 @ h2 / nn
                    pairing[p] = p
                    pairing[partner] = partner
                    ok = True
                    break
            if not ok:
                raise RepairFailureError(
                    "no independent second direction for the snapped defective "
                    f"pair at {lam_p:.6g} (structural for weight-balanced graphs "
                    "at lambda = 0)", rank_gap=d - _rank(V, tol.independence))

    preserved: list = []
    repaired: list = []
    # Step 5: does the plain swap keep a basis?
    if _rank(V, tol.independence) == d:
        preserved = [i for i in range(d) if i not in replaced]
    else:
        # Steps 7-9: greedy self-conjugate independent subset, candidates first
        kept = list(replaced)
        M = V[:, kept]
        for unit in _greedy_units(sd, replaced):
            trial = np.hstack([M, V[:, list(unit)]])
            if _rank(trial, tol.independence) == len(kept) + len(unit):
                kept.extend(unit)
                M = trial
            else:
                repaired.extend(unit)
        preserved = [i for i in kept if i not in replaced]
        bundles = {}
        for unit in _single_and_pair_units(repaired, pairing):
            k = unit[0]
            lam_k = sd.eigenvalues[k]
            bk = bundles.get(complex(lam_k))
            if bk is None:
                bk = nullspace_bundle(A, B, lam_k, measured_nodes,
                                      network.n, network.order, tol)
                bundles[complex(lam_k)] = bk
            ok = False
            for _ in range(repair_budget):
                h_k = _repair_draw(rng, q, make_real=lam_k.imag == 0.0
                                   and len(unit) == 1)
                cand = bk.n1 @ h_k
                nn = np.linalg.norm(cand)
                if nn <= d * _EPS:
                    continue
                cols = [cand / nn]
                if len(unit) == 2:
                    cols.append(cols[0].conj())
                trial = np.hstack([M] + [c[:, None] for c in cols])
                if _rank(trial, tol.independence) == len(kept) + len(unit):
                    M = trial
                    kept.extend(unit)
                    V[:, unit[0]] = cols[0]
                    Z[:, unit[0]] = bk.n2 @ h_k / nn
                    if len(unit) == 2:
                        V[:, unit[1]] = cols[0].conj()
                        Z[:, unit[1]] = (bk.n2 @ h_k / nn).conj()
                    ok = True
                    break
            if not ok:
                raise RepairFailureError(
                    f"independence repair failed at eigenvalue {lam_k:.6g}",
                    rank_gap=d - _rank(M, tol.independence))

    F_raw, cond_V = _real_gain(V, Z, pairing, tol)
    realness = float(np.abs(F_raw.imag).max()) if np.iscomplexobj(F_raw) else 0.0
    if realness >= tol.realness:
        raise IllConditionedDesignError(
            f"gain imaginary residue {realness:.3e} exceeds {tol.realness:g}")
    if cond_V > tol.cond_limit:
        raise IllConditionedDesignError(
            f"modal matrix condition number {cond_V:.3e} exceeds {tol.cond_limit:g}")
    F = np.real(F_raw)
    gain = FeedbackGain(matrix=F, realness_residual=realness)

    A_cl = A + B @ F
    scale = max(1.0, sd.matrix_norm)
    cand_res = float(np.linalg.norm(A_cl @ v_hat - lam_p * v_hat) / scale)
    pres_res = [float(np.linalg.norm(A_cl @ sd.modal_matrix[:, i]
                                     - sd.eigenvalues[i] * sd.modal_matrix[:, i]) / scale)
                for i in preserved]
    lam_cl = la.eigvals(A_cl)
    spec_err = _multiset_error(sd.raw_eigenvalues, lam_cl)
    zero_pat = _zero_pattern(v_hat, measured_nodes, network.n, network.order)

    residuals = {
        "candidate": cand_res,
        "preserved_max": max(pres_res, default=0.0),
        "preserved": pres_res,
        "spectrum_match": spec_err,
        "zero_pattern": zero_pat,
    }
    _enforce_postconditions(residuals, tol)
    return BlockingDesign(
        lambda_p=complex(lam_p), lambda_index=p, variant=options.variant,
        h_p=h_p, v_hat=v_hat, z_p=z_p, V=V, Z=Z, gain=gain,
        preserved=tuple(preserved), repaired=tuple(repaired),
        replaced=tuple(replaced), cond_V=float(cond_V), residuals=residuals,
        measured_nodes=tuple(measured_nodes), open_loop=sd, network=network)


def _enforce_postconditions(residuals, tol: Tolerances) -> None:
    """A returned design must satisfy its own invariants; a modal matrix
    that slipped past the independence check with a structural
    near-dependency shows up here as a blown-up residual."""
    checks = (
        ("candidate", tol.candidate_residual, "closed-loop eigenpair residual"),
        ("preserved_max", tol.preserved_residual, "preserved eigenvector residual"),
        ("spectrum_match", tol.spectrum_match, "eigenvalue multiset deviation"),
        ("zero_pattern", tol.zero_pattern, "measured-entry magnitude"),
    )
    for key, budget, label in checks:
        if residuals[key] > budget:
            raise IllConditionedDesignError(
                f"{label} {residuals[key]:.3e} exceeds {budget:g}")


def _single_and_pair_units(indices, pairing):
    units = []
    seen = set()
    for i in sorted(indices):
        if i in seen:
            continue
        j = int(pairing[i])
        if j != i and j in indices:
            units.append((i, j) if i < j else (j, i))
            seen.update((i, j))
        else:
            units.append((i,))
            seen.add(i)
    return units


def _real_gain(V, Z, pairing, tol: Tolerances):
    """F = Z V^-1 via the realified modal basis.

    Each exact conjugate pair (v, v_bar) is replaced by its normalized
    real and imaginary parts with Z transformed identically; column
    scaling and intra-pair mixing leave Z V^-1 unchanged, so the solve
    runs in real arithmetic and F is real by construction.
    """
    d = V.shape[0]
    Vr = np.zeros((d, d))
    Zr = np.zeros((Z.shape[0], d))
    done = set()
    for i in range(d):
        if i in done:
            continue
        j = int(pairing[i])
        col = V[:, i]
        if j == i or j in done:
            imax = np.abs(col.imag).max()
            if imax > 1e-7 * max(np.abs(col.real).max(), 1e-300):
                raise IllConditionedDesignError(
                    f"column {i} is complex ({imax:.2e}) but has no conjugate partner")
            nn = np.linalg.norm(col.real)
            Vr[:, i] = col.real / nn
            Zr[:, i] = Z[:, i].real / nn
            done.add(i)
        else:
            re, im = col.real, col.imag
            n_re, n_im = np.linalg.norm(re), np.linalg.norm(im)
            if n_re <= d * _EPS or n_im <= d * _EPS:
                raise IllConditionedDesignError(
                    "degenerate conjugate pair in the modal matrix")
            Vr[:, i] = re / n_re
            Vr[:, j] = im / n_im
            Zr[:, i] = Z[:, i].real / n_re
            Zr[:, j] = Z[:, i].imag / n_im
            done.update((i, j))
    sv = la.svdvals(Vr)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if not np.isfinite(cond) or cond > tol.cond_limit:
        return np.zeros_like(Zr), cond
    F = la.solve(Vr.T, Zr.T).T
    F -= la.solve(Vr.T, (F @ Vr - Zr).T).T       # one refinement step
    return F, cond


def _multiset_error(lam_a, lam_b) -> float:
    key = lambda z: (z.real, z.imag)
    a = np.array(sorted(np.asarray(lam_a, complex), key=key))
    b = np.array(sorted(np.asarray(lam_b, complex), key=key))
    return float(np.abs(a - b).max()) if a.size else 0.0


def _zero_pattern(v_hat, measured_nodes, n, order) -> float:
    entries = [abs(v_hat[(r - 1) + k * n]) for r in measured_nodes
               for k in range(order)]
    return float(max(entries, default=0.0))


def _zero_screen(sd: SpectralData, tol: Tolerances) -> float:
    return tol.lambda_match * max(1.0, sd.matrix_norm)


def select_lambda(sd: SpectralData, options: DesignOptions,
                  eligible=None) -> int:
    """Resolve the lambda-selection policy to a modal column index.

    Default policy: smallest-magnitude nonzero real eigenvalue whose
    cluster is non-defective (and passes `eligible` when given), then
    the smallest conjugate pair. Explicit index/value overrides skip
    the defectiveness screen; strict mode re-enables it.
    """
    tol = options.tolerances
    sel = options.lambda_selection
    screen = _zero_screen(sd, tol)

    if isinstance(sel, tuple) and len(sel) == 2 and sel[0] == "index":
        p = int(sel[1])
        if not 0 <= p < sd.dim:
            raise NotAnEigenvalueError(f"eigenvalue index {p} outside 0..{sd.dim - 1}")
    elif isinstance(sel, tuple) and len(sel) == 2 and sel[0] == "value":
        p = match_eigenvalue(sd, complex(sel[1]), tol)
        if p < 0:
            raise NotAnEigenvalueError(
                f"{complex(sel[1]):.6g} is not an open-loop eigenvalue "
                f"(match tolerance {tol.lambda_match:g} relative)")
    elif sel == "default":
        def usable(i):
            if sd.defective[i] or abs(sd.eigenvalues[i]) <= screen:
                return False
            if sd.is_vector_paired(i):
                return False
            return eligible is None or eligible(sd.eigenvalues[i], i)

        reals = [i for i in range(sd.dim) if sd.is_real(i) and usable(i)]
        if reals:
            p = min(reals, key=lambda i: (abs(sd.eigenvalues[i]), i))
        else:
            pairs = [i for i in range(sd.dim)
                     if sd.eigenvalues[i].imag > 0 and usable(i)]
            if not pairs:
                raise NoEligibleEigenvalueError(
                    "no non-defective eigenvalue satisfies the selection policy")
            p = min(pairs, key=lambda i: (abs(sd.eigenvalues[i]), i))
    else:
        raise InvalidInputError(f"bad lambda selection {sel!r}")

    if options.strict_defective and sd.defective[p]:
        raise DefectiveSpectrumError(
            f"eigenvalue {sd.eigenvalues[p]:.6g} belongs to a defective cluster")
    if options.variant == VARIANT_DERIVATIVE and abs(sd.eigenvalues[p]) <= screen:
        raise InvalidInputError(
            "the measure-derivative variant requires a nonzero eigenvalue")
    return p


def required_actuators(m: int, spectrum_all_real: bool) -> int:
    """Actuation-count hypothesis: m+2, or m+1 with an all-real spectrum."""
    return m + 1 if spectrum_all_real else m + 2


def design_blocking(network: IntegratorNetwork,
                    options: DesignOptions = DesignOptions(),
                    measured_nodes=None, eligible=None,
                    precomputed=None) -> BlockingDesign:
    """End-to-end blocking design against the network's measurement set.

    measured_nodes overrides the constraint set (the cutset pipeline
    passes the cut nodes); `eligible` filters default eigenvalue
    selection. `precomputed` may carry (A, B, sd) to avoid repeating
    the decomposition.

    Raises the specific precondition error (actuation count,
    controllability, defectiveness) or a numerical error from the
    replacement steps.
    """
    tol = options.tolerances
    measured_nodes = tuple(measured_nodes if measured_nodes is not None
                           else network.measurement)
    if not measured_nodes:
        raise InvalidInputError("no measured nodes to block")
    if precomputed is None:
        A, B, _ = assemble(network)
        sd = decompose(A, tol)
    else:
        A, B, sd = precomputed

    warnings = []
    need = required_actuators(len(measured_nodes), sd.all_real())
    if network.q < need:
        msg = (f"q = {network.q} actuators but the hypothesis needs {need} "
               f"(m = {len(measured_nodes)}, spectrum "
               f"{'all real' if sd.all_real() else 'has complex pairs'})")
        if options.q_check == "strict":
            raise InsufficientActuationError(msg)
        warnings.append(msg)

    check_controllability(A, B, sd.eigenvalues, tol)

    p = select_lambda(sd, options, eligible=eligible)
    lam_p = sd.eigenvalues[p]
    if abs(lam_p) <= _zero_screen(sd, tol):
        # permitted under the position variant only; the theorem statement
        # asks for a nonzero eigenvalue, so the record carries a flag
        warnings.append("design targets the zero eigenvalue; allowed for the "
                        "measure-position variant but outside the nonzero-"
                        "eigenvalue wording of the design guarantee")
    bundle = nullspace_bundle(A, B, lam_p, measured_nodes, network.n,
                              network.order, tol)
    h = select_hp(bundle, options.variant, tol)
    candidate = build_candidate(bundle, h)
    design = assemble_and_gain(network, sd, p, candidate, bundle, A, B,
                               options, measured_nodes)
    if warnings:
        design.warnings = tuple(warnings)
    return design
