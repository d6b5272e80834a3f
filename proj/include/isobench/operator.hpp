#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

namespace isobench {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Counts operator applications. One application of K or K^T is one unit; this
/// is the clock every budget in the toolkit is measured against.
class CostCounter {
 public:
  void add(std::uint64_t units = 1) { units_ += units; }
  std::uint64_t units() const { return units_; }

 private:
  std::uint64_t units_ = 0;
};

enum class Apply { Forward, Adjoint };

/// Dense m x p real operator with optionally cached singular values.
///
/// Immutable after construction; operators are shared read-only between
/// benchmark workers.
class Operator {
 public:
  /// Throws std::invalid_argument on empty dimensions or non-finite entries.
  explicit Operator(Matrix entries);
  /// `singular_values` must be non-increasing, non-negative and of length
  /// min(m, p).
  Operator(Matrix entries, Vector singular_values);

  Eigen::Index rows() const { return entries_.rows(); }
  Eigen::Index cols() const { return entries_.cols(); }
  const Matrix& entries() const { return entries_; }

  bool has_spectrum() const { return spectrum_.has_value(); }
  /// Cached spectrum if present, otherwise computed (not cached) from a fresh SVD.
  Vector singular_values() const;
  const std::optional<Vector>& cached_spectrum() const { return spectrum_; }

 private:
  Matrix entries_;
  std::optional<Vector> spectrum_;
};

/// Returns Kx or K^T x and charges one unit to `cost`.
Vector apply(const Operator& op, const Eigen::Ref<const Vector>& x, Apply mode,
             CostCounter& cost);

/// Number of apply() calls made so far on the calling thread.
std::uint64_t apply_call_count();

/// Fresh singular values of a dense matrix, non-increasing.
Vector compute_singular_values(const Matrix& a);

enum class SpectrumKind { GaussianNative, SurrogateIllCond };

struct SpectrumSpec {
  SpectrumKind kind = SpectrumKind::SurrogateIllCond;
  Eigen::Index n = 1;
  double decades = 8.0;
  double top = 0.999;
};

/// Entries i.i.d. standard normal, filled in row-major order from
/// NormalSource(seed).
Operator gen_gaussian(Eigen::Index m, Eigen::Index p, std::uint64_t seed);

/// Columns j0..p-1 replaced by column j0, then eps times a fresh Gaussian
/// matrix (drawn from NormalSource(seed)) added to every entry.
Operator duplicate_columns(const Operator& k, Eigen::Index j0, double eps,
                           std::uint64_t seed);

/// Default perturbation for duplicate_columns: 1e-3 ||K||_F / sqrt(mp).
double default_duplicate_eps(const Operator& k);

/// U diag(sigma) V^T where A = U S V^T is the thin SVD of `a`.
Operator replace_spectrum(const Operator& a, const Eigen::Ref<const Vector>& sigma);

/// sigma_k = top * 10^(-decades (k-1)/(n-1)), k = 1..n.
Vector surrogate_spectrum(const SpectrumSpec& spec);

/// (target / sigma_1) K. Throws std::invalid_argument for the zero operator.
Operator normalize_spectral(const Operator& k, double target);

/// Largest singular value after normalization: standard and widened IST regime.
inline constexpr double kUnitNormTarget = 0.999;
inline constexpr double kWideNormTarget = 0.999 * 1.4142135623730951;

}  // namespace isobench
