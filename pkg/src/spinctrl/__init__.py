"""spinctrl: optimal control of quantum gates on interacting spin systems.

A register of m driven qubits exchange-coupled to n undriven environment
spins evolves unitarily as a whole; the package finds time-dependent
control fields that realize target gates on the qubits while undoing the
entanglement with the environment, and quantifies fidelity, entropy,
non-unitarity, and robustness of the result.
"""

__version__ = "0.1.0"

from .model import (HamiltonianTerms, SpinSystem, Topology, assemble_hamiltonian,
                    make_topology, spin_operator)
from .objective import (DistanceResult, GateTarget, adjoint_terminal,
                        closed_distance, distance_gradient, env_overlap,
                        gate_distance, gate_target)
from .optimize import (GaConfig, GradConfig, OptimizationReport, ParameterizedField,
                       field_gradient, fluence, ga_optimize, grad_optimize,
                       optimize, render_field)
from .propagation import (AdjointState, ControlField, PropagationResult, TimeGrid,
                          analytic_two_particle, field_from_csv, field_to_csv,
                          final_unitary, grid_for, propagate_backward,
                          propagate_forward, rabi_frequency, revival_time,
                          step_propagators, unitarity_defect)
from .diagnostics import (KrausSet, entropy_trajectory, fidelity_trajectory,
                          kraus_nonunitarity, kraus_operators, reduced_density,
                          reference_initial_state, von_neumann_entropy)
from .robustness import (EnsembleReport, EnsembleSpec, evaluate_ensemble,
                         sample_system)
