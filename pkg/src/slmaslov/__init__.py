"""Boundary-condition eigenvalue toolkit for matrix Sturm-Liouville
systems: Lagrangian frames for self-adjoint boundary conditions, Maslov
indices of boundary-condition paths, monodromy shooting with an
independent Galerkin oracle, and drivers for the jump, range and limit
behavior of eigenvalue branches."""

from . import errors
from .lagrangian import (CanonicalForm, LagrangianFrame, SymplecticMat,
                         UnitaryRep, boundary_basis_change,
                         boundary_condition_from_json, canonical_form,
                         dirichlet, direct_sum, dist, frame_from_canonical,
                         frame_from_json, frame_to_json, graph_lagrangian,
                         intersection_basis, intersection_dim, jmat,
                         lagrangian_from_unitary, neumann, s_matrix,
                         unitary_of, validate_frame)
from .maslov import (AngleBranches, LagrangianPath, MaslovResult, e_ceil,
                     maslov_index, nu_plus, relative_angles, track_branches,
                     verify_index_axioms)
from .slp import (CoefficientFn, Monodromy, SLProblem, Spectrum, b_lambda,
                  constant, count_eigenvalues, dirichlet_spectrum,
                  eigen_multiplicity, eigenvalues_shooting, eigenvalues_up_to,
                  galerkin_spectrum, monodromy, monodromy_graph, piecewise,
                  polynomial, problem_from_json, weighted_reduction)
from .experiments import (JumpReport, LimitReport, RangeReport,
                          constant_branch_check, endpoint_witness,
                          jump_experiment, layer_of, limit_experiment,
                          make_singular_path, predicted_interval, range_scan,
                          tan_path, tan_path_family)
from .cli import bundled_examples, parse_config, run

__version__ = "0.1.0"
