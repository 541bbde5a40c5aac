#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ustat/distribution.hpp"

namespace ustat {

/// Subset of kernel coordinates {1..m}, stored as a bitmask (bit j-1 for
/// coordinate j).
struct IndexSubset {
    std::uint32_t bits = 0;

    bool contains(int j) const { return (bits >> j) & 1u; } // j zero-based
    int count() const { return __builtin_popcount(bits); }
    IndexSubset complement(int m) const {
        return {static_cast<std::uint32_t>(~bits & ((1u << m) - 1u))};
    }
    bool operator==(const IndexSubset&) const = default;
    /// "{1,3}" (one-based, matching the usual coordinate notation)
    std::string to_string(int m) const;
};

std::vector<IndexSubset> all_subsets(int m);

enum class Mode { Decoupled, Undecoupled };

/// Laws of the independent variables: laws[j][i] is the law of X_i^{(j+1)}.
/// For undecoupled instances only j = 0 is populated (one sequence).
struct VariableGrid {
    int m = 0;
    int n = 0;
    std::vector<std::vector<DiscreteDistribution>> laws;

    const DiscreteDistribution& law(int j, int i) const { return laws[j][i]; }
    std::size_t atom_count(int j, int i) const { return laws[j][i].size(); }
};

/// Kernel values h_i for every multi-index i in [n]^m, each a dense table
/// over the atom grid of its own variables.  Multi-indices are flattened
/// with coordinate 1 most significant; tables are row-major with coordinate
/// 1 as the leading axis.
struct KernelTensor {
    int m = 0;
    int n = 0;
    std::vector<std::vector<double>> tables;

    std::size_t index_count() const { return tables.size(); }
    const std::vector<double>& table(std::size_t flat) const { return tables[flat]; }
    std::vector<double>& table(std::size_t flat) { return tables[flat]; }
};

struct InstanceFlags {
    bool nonnegative = false;
    bool canonical = false;
    bool separately_symmetric = false;
};

/// A complete generalized U-statistic description: Σ_i h_i(X^{(1)}_{i_1},
/// ..., X^{(m)}_{i_m}) (decoupled) or the symmetric one-sequence variant.
struct UStatInstance {
    std::string id;
    Mode mode = Mode::Decoupled;
    VariableGrid grid;
    KernelTensor kernel;
    InstanceFlags flags;

    int m() const { return grid.m; }
    int n() const { return grid.n; }
    /// law used for slot j, index i (collapses to the single sequence when
    /// undecoupled)
    const DiscreteDistribution& law(int j, int i) const {
        return mode == Mode::Decoupled ? grid.laws[j][i] : grid.laws[0][i];
    }
};

// ------------------------------------------------------------- indexing ---

std::size_t flatten_index(const std::vector<int>& idx, int n);
std::vector<int> unflatten_index(std::size_t flat, int m, int n);

/// Strides and total size of the kernel table for multi-index i.
std::vector<std::size_t> table_shape(const UStatInstance& inst, const std::vector<int>& idx);
std::size_t table_size(const std::vector<std::size_t>& shape);

// ------------------------------------------------------------ operations --

/// Every invariant violation, each with a path to the offending entry.
/// Empty result means the instance is well formed (declared flags are also
/// verified here).
std::vector<std::string> validate_instance(const UStatInstance& inst);

/// sup_j sup_i sup_{other atoms} |E_j h_i| <= tol ?
bool is_canonical(const UStatInstance& inst, double tol = 1e-10);
/// The largest |E_j h_i| over all one-coordinate integrations.
double max_degeneracy_defect(const UStatInstance& inst);

/// Π_j (I - E_j) applied to every kernel; idempotent, output canonical.
UStatInstance hoeffding_projection(const UStatInstance& inst);

/// Symmetric zero-diagonal decoupled instance with identical laws across
/// slots -> one-sequence instance.  Throws ApplicabilityError otherwise.
UStatInstance undecouple(const UStatInstance& inst);

/// Decoupled twin of an undecoupled instance (fresh independent copies of
/// the sequence in every slot).
UStatInstance decoupled_twin(const UStatInstance& inst);

/// h -> c·h (flags adjusted: nonnegative preserved only for c >= 0).
UStatInstance scale_kernels(const UStatInstance& inst, double c);
/// h -> h^2 (nonnegative result; canonical/symmetric flags dropped).
UStatInstance square_kernels(const UStatInstance& inst);
/// h -> |h|
UStatInstance abs_kernels(const UStatInstance& inst);

bool kernels_nonnegative(const UStatInstance& inst);
bool separately_symmetric(const UStatInstance& inst, double tol = 1e-9);

/// For m = 1 instances: the laws of ξ_i = h_i(X_i).
std::vector<FiniteDistribution> xi_laws(const UStatInstance& inst);

} // namespace ustat
