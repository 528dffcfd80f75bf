"""Certifying Bell nonlocality and EPR steering from data with bounded signalling."""
from .correction import CorrectedBound, corrected_chsh_bound, corrected_full_correlation_bound
from .errors import SigbellError, SolverFailure
from .guessing import gamma_from_assemblage, guessing_probability, helstrom
from .postselect import DetectorModel, alpha_postselected, chsh_postselected, postselected_behavior, scan_grid
from .qlinalg import Assemblage, assemblage_from, isotropic_state, standard_behavior
from .scenario import CHSH, Behavior, Scenario, SignallingBudget, bell_value, check_no_signalling, estimate_budgets
from .slhs import slhs_membership, slhs_robustness, slhs_white_noise_robustness, table1_pipeline
from .slhv import dual_visibility, enumerate_strategies, sample_slhv, visibility
from .witness import adjusted_bound, mub_witness, schmidt_bound

__version__ = "0.1.0"
