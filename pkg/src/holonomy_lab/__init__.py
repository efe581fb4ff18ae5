"""Holonomic gates with suppressed excited-state exposure in a Lambda system.

Reverse-engineered control pulses, closed and open-system propagation, target
gates (single emitter and two emitters in a cavity), fidelity and population
measures, and a config-driven runner that writes CSV tables.
"""

__version__ = "0.1.0"

from .controls import (FIXED_AMPLITUDE, FIXED_RATE, EtaProfile, HolonomicPath, PulseSchedule,
                       chi_from_gamma, closed_form_propagator, derive_controls_numerically,
                       holonomic_condition, loop_duration, synthesize_constant_chi, synthesize_general)
from .dynamics import (HamiltonianModel, LindbladChannel, PropagationResult, lambda_channels,
                       lambda_hamiltonian, propagate_lindblad, propagate_schrodinger,
                       propagate_unitary, two_nv_cavity_hamiltonian)
from .errors import (ConstraintViolation, HolonomyError, InvalidInputError, NumericalError,
                     StructureViolation)
from .gates import (NAMED_GATES, TwoQubitModel, effective_hamiltonian, single_qubit_target,
                    two_qubit_gate)
from .linalg import eig_hermitian, expm_hermitian, matmul
from .metrics import (FidelityReport, average_integrated_population, excited_bracket,
                      gate_fidelity_zeta_sweep, integrated_excited_population)

__all__ = [
    "FIXED_AMPLITUDE", "FIXED_RATE", "EtaProfile", "HolonomicPath", "PulseSchedule", "chi_from_gamma",
    "closed_form_propagator", "derive_controls_numerically", "holonomic_condition", "loop_duration",
    "synthesize_constant_chi", "synthesize_general", "HamiltonianModel", "LindbladChannel",
    "PropagationResult", "lambda_channels", "lambda_hamiltonian", "propagate_lindblad",
    "propagate_schrodinger", "propagate_unitary", "two_nv_cavity_hamiltonian", "ConstraintViolation",
    "HolonomyError", "InvalidInputError", "NumericalError", "StructureViolation", "NAMED_GATES",
    "TwoQubitModel", "effective_hamiltonian", "single_qubit_target", "two_qubit_gate", "eig_hermitian",
    "expm_hermitian", "matmul", "FidelityReport", "average_integrated_population", "excited_bracket",
    "gate_fidelity_zeta_sweep", "integrated_excited_population",
]
