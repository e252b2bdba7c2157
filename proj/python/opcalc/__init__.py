"""Logarithmic representations of evolution families on finite matrices."""

from ._opcalc import (
    EvolutionFamily,
    OpcalcError,
    branch_wrap_detect,
    choose_kappa,
    closed_form_family,
    compute_a,
    default_nodes,
    eig,
    eigendecomposition_log,
    generate_ensemble,
    generator_from_logrep,
    integral_representation_check,
    matrix_exp,
    principal_log,
    product_family,
    reconstruct_u,
    rk4_family,
    run_config,
    shifted_chain_identity,
    shifted_commuting_identity,
    spectral_norm,
    sum_chain_identity,
    sum_commuting_identity,
    __version__,
)

__all__ = [
    "EvolutionFamily",
    "OpcalcError",
    "branch_wrap_detect",
    "choose_kappa",
    "closed_form_family",
    "compute_a",
    "default_nodes",
    "eig",
    "eigendecomposition_log",
    "generate_ensemble",
    "generator_from_logrep",
    "integral_representation_check",
    "matrix_exp",
    "principal_log",
    "product_family",
    "reconstruct_u",
    "rk4_family",
    "run_config",
    "shifted_chain_identity",
    "shifted_commuting_identity",
    "spectral_norm",
    "sum_chain_identity",
    "sum_commuting_identity",
    "__version__",
]
