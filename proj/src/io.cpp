#include "isobench/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

namespace isobench {

namespace {

constexpr char kOperatorMagic[4] = {'L', '1', 'O', 'P'};
constexpr char kVectorMagic[4] = {'L', '1', 'V', 'E'};
constexpr std::uint32_t kOperatorVersion = 1;

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&v, bytes, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string() + " for writing");
  }
  void bytes(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }
  template <typename T>
  void scalar(T v) {
    v = to_little(v);
    bytes(&v, sizeof(T));
  }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw FormatError(FormatError::Kind::Io, "write failed for " + path.string());
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
    in_.seekg(0, std::ios::end);
    remaining_ = static_cast<std::uint64_t>(in_.tellg());
    in_.seekg(0, std::ios::beg);
  }
  std::uint64_t remaining() const { return remaining_; }
  void bytes(void* data, std::size_t n) {
    if (n > remaining_) throw FormatError(FormatError::Kind::Truncated, "truncated");
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (!in_) throw FormatError(FormatError::Kind::Truncated, "truncated");
    remaining_ -= n;
  }
  template <typename T>
  T scalar() {
    T v;
    bytes(&v, sizeof(T));
    return to_little(v);
  }
  void doubles(double* out, std::uint64_t count) {
    if (count > remaining_ / sizeof(double)) throw FormatError(FormatError::Kind::Truncated, "truncated");
    bytes(out, static_cast<std::size_t>(count * sizeof(double)));
    if constexpr (std::endian::native == std::endian::big) {
      for (std::uint64_t i = 0; i < count; ++i) out[i] = to_little(out[i]);
    }
  }

 private:
  std::ifstream in_;
  std::uint64_t remaining_ = 0;
};

void expect_magic(Reader& in, const char (&magic)[4]) {
  char got[4];
  if (in.remaining() < 4) throw FormatError(FormatError::Kind::Truncated, "truncated");
  in.bytes(got, 4);
  if (std::memcmp(got, magic, 4) != 0) throw FormatError(FormatError::Kind::BadMagic, "bad magic");
}

// Rejects counts whose byte size does not fit in memory addressing or in the file.
std::uint64_t checked_count(std::uint64_t a, std::uint64_t b) {
  constexpr auto limit = static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max()) / sizeof(double);
  if (a == 0 || b == 0) throw FormatError(FormatError::Kind::DimensionOverflow, "dimension overflow: zero dimension");
  if (a > limit || b > limit / a) throw FormatError(FormatError::Kind::DimensionOverflow, "dimension overflow");
  return a * b;
}

}  // namespace

void save_operator(const Operator& op, const std::filesystem::path& path) {
  Writer out(path);
  out.bytes(kOperatorMagic, 4);
  out.scalar<std::uint32_t>(kOperatorVersion);
  out.scalar<std::uint64_t>(static_cast<std::uint64_t>(op.rows()));
  out.scalar<std::uint64_t>(static_cast<std::uint64_t>(op.cols()));
  const Matrix& k = op.entries();
  std::vector<double> row(static_cast<std::size_t>(k.cols()));
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    for (Eigen::Index j = 0; j < k.cols(); ++j) row[static_cast<std::size_t>(j)] = to_little(k(i, j));
    out.bytes(row.data(), row.size() * sizeof(double));
  }
  const auto& spectrum = op.cached_spectrum();
  out.scalar<std::uint8_t>(spectrum ? 1 : 0);
  if (spectrum) {
    for (Eigen::Index s = 0; s < spectrum->size(); ++s) out.scalar<double>((*spectrum)[s]);
  }
  out.finish(path);
}

Operator load_operator(const std::filesystem::path& path) {
  Reader in(path);
  expect_magic(in, kOperatorMagic);
  const auto version = in.scalar<std::uint32_t>();
  if (version != kOperatorVersion) {
    throw FormatError(FormatError::Kind::BadVersion, "unsupported operator version " + std::to_string(version));
  }
  const auto m = in.scalar<std::uint64_t>();
  const auto p = in.scalar<std::uint64_t>();
  const std::uint64_t count = checked_count(m, p);
  if (count > in.remaining() / sizeof(double)) throw FormatError(FormatError::Kind::Truncated, "truncated");

  // Payload is row-major; Eigen's default storage is column-major.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(
      static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p));
  in.doubles(rows.data(), count);
  const auto flag = in.scalar<std::uint8_t>();
  if (flag > 1) throw FormatError(FormatError::Kind::BadPayload, "bad spectrum flag");
  try {
    if (flag == 1) {
      Vector sigma(static_cast<Eigen::Index>(std::min(m, p)));
      in.doubles(sigma.data(), static_cast<std::uint64_t>(sigma.size()));
      return Operator(Matrix(rows), std::move(sigma));
    }
    return Operator(Matrix(rows));
  } catch (const std::invalid_argument& e) {
    throw FormatError(FormatError::Kind::BadPayload, e.what());
  }
}

void save_vector(const Vector& v, const std::filesystem::path& path) {
  Writer out(path);
  out.bytes(kVectorMagic, 4);
  out.scalar<std::uint64_t>(static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out.scalar<double>(v[i]);
  out.finish(path);
}

Vector load_vector(const std::filesystem::path& path) {
  Reader in(path);
  expect_magic(in, kVectorMagic);
  const auto n = in.scalar<std::uint64_t>();
  const std::uint64_t count = checked_count(n, 1);
  if (count > in.remaining() / sizeof(double)) throw FormatError(FormatError::Kind::Truncated, "truncated");
  Vector v(static_cast<Eigen::Index>(n));
  in.doubles(v.data(), count);
  return v;
}

}  // namespace isobench
