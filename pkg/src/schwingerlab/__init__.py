"""schwingerlab: convex mixtures of Gaussian generating functionals on
finite periodic lattices, with numerical verification of the Euclidean
field-theory axioms they satisfy."""

__version__ = "0.1.0"

from .errors import (BoundsError, DomainError, IncompleteInputError,
                     ModelError, PreconditionError, ProvenanceError,
                     ResolutionError, SchemaError, SchwingerLabError)
from .lattice import (Grid, Isometry, TestFunction, apply_isometry, fourier,
                      gaussian_packet, inverse_fourier, positive_time_part,
                      positive_time_support, site_indicator, sobolev_norm)
from .partitions import (Partition, bell_number, cumulants_from_moments,
                         enumerate_capped_partitions, enumerate_partitions,
                         moments_from_cumulants, pairings)
from .propagator import (SpectralMeasure, covariance_kernel, free_two_point,
                         spectral_two_point)
from .functional import (Mixture, QuasiFree, SchwingerFunctional, cumulant,
                         cumulant_scale, envelope, gaussianize, load_model,
                         model_from_dict, model_to_dict, moment_analytic,
                         moment_growth_check, moment_numeric,
                         regularity_certificate, save_model)
from .axioms import (CheckReport, SuiteConfig, SuiteResult,
                     check_cluster_defect, check_euclidean_invariance,
                     check_normalization_neutrality,
                     check_reflection_positivity,
                     check_stochastic_positivity, run_axiom_suite,
                     summary_lines)
from .montecarlo import (FieldSample, MomentEstimate, estimate_fourth_cumulant,
                         estimate_moment, sample_free_field,
                         sample_mixture_field, sample_stream)
from .experiments import (ExperimentReport, ExperimentSpec, run_experiment,
                          run_iteration, run_refinement_study,
                          run_two_mass_fourth_cumulant, two_mass_mixture)
