"""Perturbation calculus for Schatten norms of Hermitian pencils A + tB.

Divided differences, discrete multiple operator integrals, derivatives of
t -> ||A + tB||_p^p, eigenvalue branch tracking, and a refutation pipeline
for isometric embeddings of two-dimensional l_q into Schatten classes.
"""
from .divdiff import FunctionSpec, divided_difference, fq_derivative, gn_polynomial, sym_second_dd
from .embed import (EmbeddingClaim, RefutationReport, check_ab_nonzero,
                    construct_rank_one_control, pl_convexity_check, reduce_to_selfadjoint,
                    refute, second_derivative_regularized, verify_iqp)
from .errors import ConvergenceError, DomainError
from .linalg import SpectralDecomposition, hermitian_eig, polar_sign, svd
from .moi import MoiResult, MoiSymbol, moi_apply, moi_trace_order2, moi_trace_truncated
from .perturb import (BranchFamily, analyticity_probe, sup_norm_kernel_test,
                      track_branches, vanishing_order)
from .schatten import (DerivativeReport, bj_orthogonal, first_derivative, rth_derivative,
                       schatten_norm, second_derivative, taylor_check)

__version__ = "0.1.0"
