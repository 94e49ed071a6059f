"""Shared numerical tolerances and run configuration.

A single Tolerances instance flows through design and verification so a
design cannot pass synthesis and fail its own audit on a tolerance
mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used across the pipeline.

    Relative tolerances scale with the norm of the matrix they gate
    unless noted otherwise.

    Attributes
    ----------
    rank_decision : float
        Relative singular-value cutoff for PBH / observability verdicts.
    independence : float or None
        Relative cutoff for null-space and modal independence ranks.
        None means max_dim * machine-eps (rank-revealing default).
    snap_imag : float
        Imaginary parts below snap_imag * ||A|| are snapped to real.
    cluster : float
        Relative eigenvalue clustering width for defectiveness checks.
    spectrum_match : float
        Allowed open/closed-loop eigenvalue multiset deviation.
    realness : float
        Allowed imaginary magnitude in the gain before truncation.
    lg_margin : float
        The L_g condition demands margin > lg_margin * (1 + ||L_g||).
    zero_pattern : float
        Magnitude under which blocked eigenvector entries must fall.
    preserved_residual : float
        Relative residual allowed for preserved eigenvectors.
    candidate_residual : float
        Relative residual allowed for the replacement eigenvector.
    cond_limit : float
        Condition number above which the modal matrix is rejected.
    lambda_match : float
        Relative tolerance for matching a requested eigenvalue value.
    blocked_energy : float
        Output-energy bound factor for blocked initial states.
    """

    rank_decision: float = 1e-12
    independence: float | None = None
    snap_imag: float = 1e-8
    cluster: float = 1e-7
    spectrum_match: float = 1e-6
    realness: float = 1e-9
    lg_margin: float = 1e-6
    zero_pattern: float = 1e-8
    preserved_residual: float = 1e-6
    candidate_residual: float = 1e-7
    cond_limit: float = 1e12
    lambda_match: float = 1e-6
    blocked_energy: float = 1e-10

    def with_overrides(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT_TOLERANCES = Tolerances()

VARIANT_POSITION = "measure-position"
VARIANT_DERIVATIVE = "measure-derivative"


@dataclass(frozen=True)
class DesignOptions:
    """Knobs for a single blocking design run.

    lambda_selection accepts "default", ("index", k) or ("value", complex).
    q_check "strict" enforces the actuation-count hypothesis, "warn"
    records the shortfall and proceeds.
    """

    variant: str = VARIANT_POSITION
    lambda_selection: object = "default"
    seed: int = 0
    q_check: str = "strict"
    strict_defective: bool = False
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.variant not in (VARIANT_POSITION, VARIANT_DERIVATIVE):
            raise ValueError(f"unknown variant: {self.variant!r}")
        if self.q_check not in ("strict", "warn"):
            raise ValueError(f"q_check must be 'strict' or 'warn', got {self.q_check!r}")
