#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "isobench/operator.hpp"

namespace isobench {

/// The operator classes used by the benchmarks:
///   gaussian    i.i.d. normal entries
///   duplicated  trailing columns collapsed onto one, perturbed, then given the
///               Gaussian operator's spectrum back
///   swapped     Gaussian singular vectors with the ill-conditioned surrogate spectrum
enum class OperatorKind { Gaussian, Duplicated, Swapped };

std::string_view to_string(OperatorKind kind);
/// Throws std::invalid_argument for unknown names.
OperatorKind parse_operator_kind(std::string_view name);

struct OperatorRecipe {
  OperatorKind kind = OperatorKind::Gaussian;
  Eigen::Index m = 200;
  Eigen::Index p = 1000;
  std::uint64_t seed = 1;
  /// First duplicated column; defaults to the same relative position as column
  /// 4000 of 8192.
  std::optional<Eigen::Index> j0;
  /// Perturbation added after duplication; defaults to default_duplicate_eps.
  std::optional<double> eps;
  /// Dynamic range of the surrogate spectrum.
  double decades = 8.0;
  /// Largest singular value after normalization; 0 leaves the scale alone.
  double normalize = kUnitNormTarget;
};

/// Default first duplicated column for p columns.
Eigen::Index default_duplicate_column(Eigen::Index p);

/// Deterministic in every recipe field. The Gaussian base always comes from
/// `seed`; the duplication perturbation uses seed + 1.
Operator build_operator(const OperatorRecipe& recipe);

struct SparseData {
  Vector x_input;
  Vector y;  // K x_input + noise
};

/// x_input with `support` nonzero standard-normal entries at uniformly chosen
/// positions, y = K x_input + noise_sd * N(0, 1). x_input only shapes the data;
/// it is not a minimizer of anything.
SparseData gen_sparse_data(const Operator& k, Eigen::Index support, double noise_sd,
                           std::uint64_t seed);

}  // namespace isobench
