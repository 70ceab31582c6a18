"""robinlab: c-Green functions, Robin constants and their variation formulas
on domains in C^n, together with the exact algebraic machinery for torus
foliations, parabolic subalgebra closures, and spanning-property ranks."""

from . import errors
from .geometry import (DefiningFunctionSlice, DimensionalConstants,
                       MetricChart, ScalarField, ball_chart, chart_from_json,
                       euclidean_chart, hodge_condition_residual, hopf_chart,
                       kahler_ball_chart, kahler_residual, laplacian_apply,
                       levi_k1, levi_k2, scalar_W)
from .green import (GreenField, GridDomain, RobinFunctionField,
                    fundamental_solution, hessian_flat_directions,
                    robin_function, solve_green)
from .variation import (DomainFamily, VariationReport, first_variation_check,
                        lambda_of_t, quartic_translation_family,
                        radial_family, second_variation_check, static_family,
                        subharmonicity_scan, translation_family)
from .torus import (AlgebraicScalar, CaseTag, FoliationData, SixTuple,
                    TorusDirection, autC_integral_curve, classify_direction,
                    direction_from_tuple, F_apply, F_inverse, foliation_data,
                    sigma_t_disjointness)
from .lie import (Composition, FlagPoint, MatrixSubspace, SquareMatrix,
                  block_parabolic, bracket, conjugated_tangent,
                  extract_composition, flag_base, flag_point_of_group_element,
                  flag_tangent, grassmann_spanning_rank, hopf_base,
                  hopf_closure_report, minimal_parabolic_oracle,
                  parabolic_closure)

__version__ = "0.1.0"
