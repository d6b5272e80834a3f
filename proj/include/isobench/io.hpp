#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "isobench/operator.hpp"

namespace isobench {

/// Binary layouts (all integers and floats little-endian):
///
///   operator: "L1OP" | u32 version=1 | u64 m | u64 p | m*p f64 row-major
///             | u8 has_spectrum | [min(m,p) f64 singular values]
///   vector:   "L1VE" | u64 n | n f64
class FormatError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, BadVersion, Truncated, DimensionOverflow, BadPayload };

  FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

void save_operator(const Operator& op, const std::filesystem::path& path);
Operator load_operator(const std::filesystem::path& path);

void save_vector(const Vector& v, const std::filesystem::path& path);
Vector load_vector(const std::filesystem::path& path);

}  // namespace isobench
