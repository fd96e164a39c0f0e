"""Asymptotic Fisher information of parametrized quantum channels.

The package classifies a channel by whether its Hamiltonian generator
lies in the span of products of its Kraus operators, computes the
per-use constants of the resulting linear or quadratic scaling of the
quantum Fisher information, and constructs error-correction protocols
that attain them.
"""

from .channel import (
    HnksDecision,
    ParamChannel,
    alpha_beta,
    hamiltonian_H,
    hnks,
    kraus_span,
    natural_superop,
    param_channel,
    pauli_matrices,
    tensor_power,
)
from .qfi import (
    QfiReport,
    channel_qfi_single,
    error_propagation_bound,
    hl_constant,
    max_min_qfi,
    min_h_quad,
    n_copy_qfi,
    optimal_input_single,
    purified_input_qfi,
    sql_constant,
    state_qfi,
)
from .qec import (
    GeneratorRecovery,
    LogicalDephasing,
    PerturbationCode,
    QecCode,
    SqlProtocol,
    UnitaryRecovery,
    f_value,
    generator_recovery,
    hl_code,
    hl_recovery,
    logical_channel,
    sql_find_C,
    sql_find_Ctilde,
    sql_protocol,
    sql_qfi_from_logical,
    sql_recovery,
)
from .dephasing import (
    DephasingParams,
    SqueezedSpec,
    closed_form_bounds,
    dephasing_channel,
    evolve_state,
    ghz_state,
    ghz_qfi,
    quasiprobability_grid,
    recommended_squeezing,
    squeezed_asymptote_check,
    squeezed_moments_closed_form,
    squeezed_state,
    squeezed_state_dicke,
)
from .catalog import (
    AdCodeParams,
    DepolarizingParams,
    ad_analytic_code,
    ad_channel,
    ad_closed_forms,
    depolarizing_channel,
    depolarizing_closed_forms,
    fig3_sweep,
    fig4_sweep,
    interferometer_channel,
    optimal_photon_distribution,
    pauli_channel,
    u_covariance_additivity_check,
)
from . import errors

__version__ = "0.1.0"

__all__ = [
    "HnksDecision", "ParamChannel", "alpha_beta", "hamiltonian_H", "hnks",
    "kraus_span", "natural_superop", "param_channel", "pauli_matrices",
    "tensor_power",
    "QfiReport", "channel_qfi_single", "error_propagation_bound",
    "hl_constant", "max_min_qfi", "min_h_quad", "n_copy_qfi",
    "optimal_input_single", "purified_input_qfi", "sql_constant", "state_qfi",
    "GeneratorRecovery", "LogicalDephasing", "PerturbationCode", "QecCode",
    "SqlProtocol", "UnitaryRecovery", "f_value", "generator_recovery",
    "hl_code", "hl_recovery", "logical_channel", "sql_find_C",
    "sql_find_Ctilde", "sql_protocol", "sql_qfi_from_logical", "sql_recovery",
    "DephasingParams", "SqueezedSpec", "closed_form_bounds",
    "dephasing_channel", "evolve_state", "ghz_state", "ghz_qfi",
    "quasiprobability_grid", "recommended_squeezing",
    "squeezed_asymptote_check", "squeezed_moments_closed_form",
    "squeezed_state", "squeezed_state_dicke",
    "AdCodeParams", "DepolarizingParams", "ad_analytic_code", "ad_channel",
    "ad_closed_forms", "depolarizing_channel", "depolarizing_closed_forms",
    "fig3_sweep", "fig4_sweep", "interferometer_channel",
    "optimal_photon_distribution", "pauli_channel",
    "u_covariance_additivity_check",
    "errors",
    "__version__",
]
