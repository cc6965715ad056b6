"""Lattice laboratory for massive vector fields and their field algebras."""

__version__ = "0.1.0"

from .lattice import (SpacetimeConfig, LatticeSpacetime, CauchySlice,
                      build_spacetime, cauchy_slice, LatticeError)
from .forms import (DifferentialForm, LeviCivita, wedge, hodge, ext_d, int_delta,
                    dalembert, pairing, random_form, allclose, FormError)
from .cauchy import (InitialDataPair, rho_zero, rho_n, rho_d, rho_delta,
                     extract_data, reduced_to_full, CauchyDataError)
from .solver import (EvolutionRun, evolve, fundamental_E, causal_propagator_E,
                     solve_from_data, dispersion_omega, SolverError)
from .proca import (ProcaRun, proca_apply, fundamental_G, causal_propagator_G,
                    solve_proca_constrained, solve_proca_unconstrained, kappa_map,
                    theta_map, symplectic_form, SymplecticPairing, evolve_proca,
                    ConstraintError)
from .masslimit import (MassScan, make_probe, classical_scan, limit_dynamics_check,
                        quantum_limit_check, commutator_limit, geometric_masses)
from .ccr import (Generator, TensorAlgebraElement, PairingOracle, bu_mul, bu_star,
                  ccr_normal_form, dynamics_reduce, symmetrize_decompose, gamma_shift,
                  QC, AlgebraError)
from .weyl import (PreSymplecticSpace, WeylCombination, weyl_mul, weyl_star,
                   dominating_form, exponential_state, dynamics_ideal_obstruction,
                   WeylError)
