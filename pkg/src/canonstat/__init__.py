"""Canonical U- and V-statistics of rho-mixing sequences: kernels, fast
statistics, explicit exponential tail bounds and verification harnesses."""

from .basis import (Marginal, OrthonormalBasis, SampleSpace, gram_schmidt_finite,
                    make_cosine_basis, make_hermite_basis, tabulated_basis)
from .bounds import (BoundParameters, bernstein_bound, best_rate, bounded_kernel_bound,
                     chebyshev_moment_bound, compute_c2, hoeffding_bound, lemma1_bound,
                     optimal_N, optimized_chebyshev_bound, theorem_bound)
from .kernels import (CanonicalKernel, CoefficientTensor, ConditionViolation, RawKernel, b_of_f,
                      check_canonicity, evaluate_kernel, hoeffding_decompose)
from .processes import (finite_markov, gaussian_ar1, generate, iid, m_dependent,
                        mixing_envelope_of, symmetric_two_state)
from .experiments import (TailExperimentConfig, exact_even_moment_vstat, exact_moment_oracle,
                          run_tail_experiment, write_report)
from .statistics import hoeffding_u, partial_sums, u_stat, v_stat_factorized, v_stat_naive

__version__ = "0.1.0"
