#include "isobench/fixtures.hpp"

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "isobench/rng.hpp"

namespace isobench {

std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Gaussian: return "gaussian";
    case OperatorKind::Duplicated: return "duplicated";
    case OperatorKind::Swapped: return "swapped";
  }
  return "?";
}

OperatorKind parse_operator_kind(std::string_view name) {
  for (auto kind : {OperatorKind::Gaussian, OperatorKind::Duplicated, OperatorKind::Swapped}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown operator kind '" + std::string(name) + "'");
}

Eigen::Index default_duplicate_column(Eigen::Index p) {
  return static_cast<Eigen::Index>((static_cast<long long>(p) * 3999) / 8192);
}

Operator build_operator(const OperatorRecipe& recipe) {
  Operator base = gen_gaussian(recipe.m, recipe.p, recipe.seed);
  Operator out = base;
  switch (recipe.kind) {
    case OperatorKind::Gaussian:
      break;
    case OperatorKind::Duplicated: {
      const Eigen::Index j0 = recipe.j0.value_or(default_duplicate_column(recipe.p));
      const double eps = recipe.eps.value_or(default_duplicate_eps(base));
      const Operator a = duplicate_columns(base, j0, eps, recipe.seed + 1);
      out = replace_spectrum(a, compute_singular_values(base.entries()));
      break;
    }
    case OperatorKind::Swapped: {
      SpectrumSpec spec;
      spec.kind = SpectrumKind::SurrogateIllCond;
      spec.n = std::min(recipe.m, recipe.p);
      spec.decades = recipe.decades;
      spec.top = recipe.normalize > 0.0 ? recipe.normalize : kUnitNormTarget;
      out = replace_spectrum(base, surrogate_spectrum(spec));
      break;
    }
  }
  if (recipe.normalize > 0.0) out = normalize_spectral(out, recipe.normalize);
  return out;
}

SparseData gen_sparse_data(const Operator& k, Eigen::Index support, double noise_sd, std::uint64_t seed) {
  const Eigen::Index p = k.cols();
  if (support < 0 || support > p) throw std::invalid_argument("gen_sparse_data: support must lie in [0, p]");
  if (!(noise_sd >= 0.0)) throw std::invalid_argument("gen_sparse_data: noise level must be non-negative");
  NormalSource rng(seed);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  // Partial Fisher-Yates: the first `support` slots become the chosen positions.
  for (Eigen::Index i = 0; i < support; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  SparseData data;
  data.x_input = Vector::Zero(p);
  for (Eigen::Index i = 0; i < support; ++i) data.x_input[idx[static_cast<std::size_t>(i)]] = rng.normal();
  data.y = k.entries() * data.x_input;
  for (Eigen::Index i = 0; i < data.y.size(); ++i) data.y[i] += noise_sd * rng.normal();
  return data;
}

}  // namespace isobench
