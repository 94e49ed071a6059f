"""Sparser blocking through a separating vertex cutset.

Design against the cutset-measurement model, then certify that the
blocking transfers to the base measurement set: with the cut entries of
the replacement eigenvector at zero, the far-partition block satisfies
lambda^N v = L_g v, so the far entries vanish whenever lambda^N misses
the spectrum of L_g.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .config import DEFAULT_TOLERANCES, DesignOptions, Tolerances
from .designer import BlockingDesign, design_blocking, required_actuators
from .errors import (InsufficientActuationError, InvalidInputError,
                     LgConditionError, NoEligibleEigenvalueError)
from .graph import CutsetPlan, is_strongly_connected, min_vertex_cut
from .model import IntegratorNetwork, assemble
from .spectrum import decompose


@dataclass
class LgCondition:
    """Spectral eligibility of one eigenvalue for the cutset transfer."""

    lambda_p: complex
    lg: np.ndarray
    lg_eigenvalues: np.ndarray
    satisfied: bool
    margin: float
    tolerance: float


@dataclass
class TransferCertificate:
    """Evidence that a cutset design blocks the base measurement set."""

    plan: CutsetPlan
    condition: LgCondition
    cut_zero_pattern: float
    far_zero_pattern: float
    base_output_infnorm: float
    derivative_relation_residual: float


@dataclass
class CutsetDesign:
    design: BlockingDesign
    certificate: TransferCertificate

    def __getattr__(self, name):
        return getattr(self.design, name)


def lg_condition(network: IntegratorNetwork, plan: CutsetPlan, lambda_p,
                 tol: Tolerances = DEFAULT_TOLERANCES) -> LgCondition:
    """Check that lambda_p^N is not an eigenvalue of L_g on the far partition.

    L_g = -(sum_k lambda_p^k L^(k)_22); an empty far partition satisfies
    the condition trivially with infinite margin.
    """
    lam = complex(lambda_p)
    N = network.order
    idx = [v - 1 for v in plan.v2]
    if not idx:
        return LgCondition(lambda_p=lam, lg=np.zeros((0, 0), complex),
                           lg_eigenvalues=np.array([], complex),
                           satisfied=True, margin=np.inf, tolerance=0.0)
    Lg = np.zeros((len(idx), len(idx)), dtype=complex)
    for k, L in enumerate(network.laplacians):
        Lg -= (lam ** k) * L[np.ix_(idx, idx)]
    eig_lg = la.eigvals(Lg)
    margin = float(np.abs((lam ** N) - eig_lg).min())
    threshold = float(tol.lg_margin * (1.0 + la.norm(Lg, 2)))
    return LgCondition(lambda_p=lam, lg=Lg, lg_eigenvalues=eig_lg,
                       satisfied=bool(margin > threshold), margin=margin,
                       tolerance=threshold)


def design_via_cutset(network: IntegratorNetwork, plan: CutsetPlan | None = None,
                      options: DesignOptions = DesignOptions()) -> CutsetDesign:
    """Blocking design with the cut nodes as the measurement surrogate.

    A plan is computed with min_vertex_cut when not supplied. Explicit
    lambda overrides are screened against the L_g condition before
    anything else so ineligible requests fail fast; the default
    selection only considers eligible eigenvalues.
    """
    tol = options.tolerances
    if plan is None:
        plan = min_vertex_cut(network.graph, network.actuation,
                              network.measurement)
    else:
        plan.validate(network.graph, network.actuation, network.measurement)

    laplacian_form = network.is_laplacian_form()
    if laplacian_form and not is_strongly_connected(network.graph):
        raise InvalidInputError("cutset design requires a strongly connected graph")

    A, B, _ = assemble(network)
    sd = decompose(A, tol)
    need = required_actuators(len(plan.vcut), sd.all_real())
    if network.q < need and options.q_check == "strict":
        raise InsufficientActuationError(
            f"q = {network.q} actuators but the cutset hypothesis needs {need} "
            f"(|Vcut| = {len(plan.vcut)})")

    sel = options.lambda_selection
    if isinstance(sel, tuple) and sel[0] in ("value", "index"):
        if sel[0] == "index":
            idx = int(sel[1])
            if not 0 <= idx < sd.dim:
                raise InvalidInputError(f"eigenvalue index {idx} out of range")
            lam_req = sd.eigenvalues[idx]
        else:
            lam_req = complex(sel[1])
        cond = lg_condition(network, plan, lam_req, tol)
        if not cond.satisfied:
            alts = [
                f"{lam:.6g}" for lam in sd.eigenvalues[sd.eigenvalues.imag >= 0]
                if lg_condition(network, plan, lam, tol).satisfied
            ]
            raise LgConditionError(
                f"lambda = {lam_req:.6g} fails the L_g condition "
                f"(margin {cond.margin:.3e} <= {cond.tolerance:.3e}); "
                f"eligible alternatives: {', '.join(alts) if alts else 'none'}")
        eligible = None
    else:
        def eligible(lam, i):
            return lg_condition(network, plan, lam, tol).satisfied

    design = design_blocking(network, options, measured_nodes=plan.vcut,
                             eligible=eligible, precomputed=(A, B, sd))
    cond = lg_condition(network, plan, design.lambda_p, tol)
    if not cond.satisfied:  # pragma: no cover - selection already screened
        raise NoEligibleEigenvalueError(
            f"selected eigenvalue {design.lambda_p:.6g} fails the L_g condition")

    certificate = _certify(network, plan, design, cond)
    worst = max(certificate.cut_zero_pattern, certificate.far_zero_pattern)
    if worst > tol.zero_pattern:
        raise NoEligibleEigenvalueError(
            f"transfer failed: replacement eigenvector magnitude {worst:.3e} "
            f"on Vcut u V2 exceeds {tol.zero_pattern:g}")
    return CutsetDesign(design=design, certificate=certificate)


def _certify(network, plan, design, cond) -> TransferCertificate:
    """Zero-pattern and derivative-relation evidence for the transfer."""
    n, N = network.n, network.order
    v = design.v_hat
    lam = design.lambda_p
    cut_pat = max((abs(v[(r - 1) + k * n]) for r in plan.vcut for k in range(N)),
                  default=0.0)
    far_pat = max((abs(v[(r - 1) + k * n]) for r in plan.v2 for k in range(N)),
                  default=0.0)
    Cbase = np.kron(np.eye(N), network.output_matrix_block())
    base_out = float(np.abs(Cbase @ v).max()) if Cbase.size else 0.0
    # Lemma relation on the far partition: each derivative block is
    # lambda times the previous one
    rel = 0.0
    idx = [r - 1 for r in plan.v2]
    for k in range(1, N):
        top = v[[i + k * n for i in idx]]
        bot = v[[i + (k - 1) * n for i in idx]]
        if idx:
            rel = max(rel, float(np.abs(top - lam * bot).max()))
    return TransferCertificate(plan=plan, condition=cond,
                               cut_zero_pattern=float(cut_pat),
                               far_zero_pattern=float(far_pat),
                               base_output_infnorm=base_out,
                               derivative_relation_residual=rel)
