#pragma once

#include <vector>

#include "ustat/instance.hpp"

namespace ustat {

/// The L₂→L₂ norm D = sup{ E Σ_{ij} h_{ij} f_i(X_i) g_j(Y_j) :
/// E Σ f_i² <= 1, E Σ g_j² <= 1 } equals the largest singular value of the
/// block matrix M[(i,a),(j,b)] = sqrt(P_i(a) P_j(b)) h_{ij}(x_a, y_b).
/// With `centered`, test functions are constrained to mean zero per
/// coordinate (projection onto the orthogonal complement of each block's
/// sqrt-probability vector); for canonical kernels both versions agree.
double op_norm_svd(const UStatInstance& inst, bool centered = false);

/// Same value by deterministic power (subspace) iteration on MᵀM: a fixed
/// start block of up to four vectors (ones, ramp, alternating signs, and a
/// hash-filled vector) is re-orthonormalized each step and the top Ritz
/// value tracked.  Iteration stops once the step change is below `tol`
/// relative *and* the geometric tail of the remaining growth is too; this
/// keeps the result within tolerance of the true top singular value even
/// when the leading singular values cluster.  Relative tolerance 1e-10,
/// iteration cap 1e4, no randomness.
double op_norm_power(const UStatInstance& inst, bool centered = false, double tol = 1e-10,
                     int max_iter = 10000);

/// Dispatch: SVD up to dimension 1024, power iteration beyond.
double op_norm(const UStatInstance& inst, bool centered = false);

/// Operator norm of a single kernel table against one pair of laws
/// (the iid ‖h‖_{L₂→L₂}).
double single_kernel_op_norm(const std::vector<double>& table, const DiscreteDistribution& lawx,
                             const DiscreteDistribution& lawy);

} // namespace ustat
