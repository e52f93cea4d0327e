"""Free-streaming resolvent of the linearized steady Boltzmann equation.

Weighted velocity norms, the streaming kernel and its operator-norm
profile, a Grad-bound collision model, and the blow-up family showing that
no ``L^q(R, L^inf_{2,xi}) -> L^inf(R, L^inf_{3,xi})`` bound holds for
``q < inf``.
"""

__version__ = "0.1.0"

from .velocity import (
    CollisionFrequencyModel,
    DomainError,
    Velocity,
    VelocityGrid,
    bracket,
    nu,
    weight,
    weight_triangle_check,
    weighted_sup_norm,
)
from .transport import (
    Gaussian,
    Sampled,
    SeparableField,
    TwoSidedExponential,
    apply_S,
    apply_S_exponential,
    apply_S_sampled,
    bounded_case_constant,
    kernel_S,
    l1_norm_S,
    sigma_integral_divergence,
    sigma_profile,
    transport_apply,
)
from .collision import GradKernelModel, K_opnorm_weighted, apply_K, k_eval
from .counterexample import (
    Functional,
    SweepReport,
    TestFamilyParams,
    alpha_sweep,
    finite_codim_combination,
    g_alpha_eval,
    g_alpha_lq_norm,
    ly2_gap_ratio,
    ly2_gap_sweep,
    manufactured_solution_check,
    probe_value,
)
