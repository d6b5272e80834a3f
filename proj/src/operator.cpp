#include "isobench/operator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "isobench/rng.hpp"

namespace isobench {

namespace {

thread_local std::uint64_t apply_calls = 0;

void check_spectrum(const Eigen::Ref<const Vector>& sigma, const char* what) {
  for (Eigen::Index k = 0; k < sigma.size(); ++k) {
    if (!std::isfinite(sigma[k]) || sigma[k] < 0.0) {
      throw std::invalid_argument(std::string(what) + ": singular values must be finite and non-negative");
    }
    if (k > 0 && sigma[k] > sigma[k - 1]) {
      throw std::invalid_argument(std::string(what) + ": singular values must be non-increasing");
    }
  }
}

}  // namespace

Operator::Operator(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() < 1 || entries_.cols() < 1) {
    throw std::invalid_argument("operator: dimensions must be at least 1x1");
  }
  if (!entries_.allFinite()) {
    throw std::invalid_argument("operator: entries must be finite");
  }
}

Operator::Operator(Matrix entries, Vector singular_values) : Operator(std::move(entries)) {
  if (singular_values.size() != std::min(rows(), cols())) {
    throw std::invalid_argument("operator: spectrum length must be min(m, p)");
  }
  check_spectrum(singular_values, "operator");
  spectrum_ = std::move(singular_values);
}

Vector Operator::singular_values() const {
  if (spectrum_) return *spectrum_;
  return compute_singular_values(entries_);
}

std::uint64_t apply_call_count() { return apply_calls; }

Vector apply(const Operator& op, const Eigen::Ref<const Vector>& x, Apply mode, CostCounter& cost) {
  const Matrix& k = op.entries();
  if (mode == Apply::Forward) {
    if (x.size() != k.cols()) {
      throw std::invalid_argument("apply: expected vector of length " + std::to_string(k.cols()) +
                                  ", got " + std::to_string(x.size()));
    }
    cost.add();
    ++apply_calls;
    return k * x;
  }
  if (x.size() != k.rows()) {
    throw std::invalid_argument("apply: expected vector of length " + std::to_string(k.rows()) +
                                ", got " + std::to_string(x.size()));
  }
  cost.add();
  ++apply_calls;
  return k.transpose() * x;
}

Vector compute_singular_values(const Matrix& a) {
  Eigen::BDCSVD<Matrix> svd(a);
  return svd.singularValues();
}

Operator gen_gaussian(Eigen::Index m, Eigen::Index p, std::uint64_t seed) {
  if (m < 1 || p < 1) throw std::invalid_argument("gen_gaussian: dimensions must be at least 1");
  NormalSource rng(seed);
  Matrix k(m, p);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) k(i, j) = rng.normal();
  }
  return Operator(std::move(k));
}

double default_duplicate_eps(const Operator& k) {
  const double mp = static_cast<double>(k.rows()) * static_cast<double>(k.cols());
  return 1e-3 * k.entries().norm() / std::sqrt(mp);
}

Operator duplicate_columns(const Operator& k, Eigen::Index j0, double eps, std::uint64_t seed) {
  if (j0 < 0 || j0 >= k.cols()) {
    throw std::out_of_range("duplicate_columns: column index " + std::to_string(j0) +
                            " outside [0, " + std::to_string(k.cols()) + ")");
  }
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw std::invalid_argument("duplicate_columns: eps must be finite and non-negative");
  }
  Matrix a = k.entries();
  for (Eigen::Index j = j0 + 1; j < a.cols(); ++j) a.col(j) = a.col(j0);
  if (eps > 0.0) {
    NormalSource rng(seed);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) += eps * rng.normal();
    }
  }
  return Operator(std::move(a));
}

Operator replace_spectrum(const Operator& a, const Eigen::Ref<const Vector>& sigma) {
  const Eigen::Index r = std::min(a.rows(), a.cols());
  if (sigma.size() != r) {
    throw std::invalid_argument("replace_spectrum: need " + std::to_string(r) +
                                " singular values, got " + std::to_string(sigma.size()));
  }
  check_spectrum(sigma, "replace_spectrum");
  Eigen::BDCSVD<Matrix> svd(a.entries(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix out = svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();
  return Operator(std::move(out), Vector(sigma));
}

Vector surrogate_spectrum(const SpectrumSpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("surrogate_spectrum: n must be at least 1");
  if (!(spec.top > 0.0)) throw std::invalid_argument("surrogate_spectrum: top must be positive");
  if (!(spec.decades >= 0.0)) throw std::invalid_argument("surrogate_spectrum: decades must be non-negative");
  Vector sigma(spec.n);
  if (spec.n == 1) {
    sigma[0] = spec.top;
    return sigma;
  }
  const double denom = static_cast<double>(spec.n - 1);
  for (Eigen::Index k = 0; k < spec.n; ++k) {
    sigma[k] = spec.top * std::pow(10.0, -spec.decades * static_cast<double>(k) / denom);
  }
  return sigma;
}

Operator normalize_spectral(const Operator& k, double target) {
  if (!(target > 0.0) || !std::isfinite(target)) {
    throw std::invalid_argument("normalize_spectral: target must be positive");
  }
  const Vector sigma = k.singular_values();
  const double top = sigma[0];
  if (!(top > 0.0)) throw std::invalid_argument("normalize_spectral: zero operator");
  const double scale = target / top;
  return Operator(k.entries() * scale, sigma * scale);
}

}  // namespace isobench
