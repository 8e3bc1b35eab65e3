#include "nfas/tensor_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "nfas/error.hpp"

namespace nfas {
namespace {

constexpr std::size_t kHeaderFixed = 4 + 2 + 1;

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t offset, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[offset + i]) << (8 * i);
  return v;
}

std::uint64_t product(std::span<const std::uint64_t> dims) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void check_rank(std::size_t ndim) {
  if (ndim < 1 || ndim > kTensorMaxRank) {
    throw ValidationError("tensor rank must be between 1 and 3, got " + std::to_string(ndim));
  }
}

}  // namespace

std::uint64_t Tensor::element_count() const { return product(dims); }

std::uint64_t tensor_file_size(std::span<const std::uint64_t> dims) {
  return kHeaderFixed + 8 * dims.size() + 8 * product(dims);
}

std::vector<std::uint8_t> encode_tensor(std::span<const std::uint64_t> dims,
                                        std::span<const double> values) {
  check_rank(dims.size());
  if (product(dims) != values.size()) {
    std::ostringstream msg;
    msg << "tensor shape holds " << product(dims) << " elements but " << values.size()
        << " values were given";
    throw ValidationError(msg.str());
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError("tensor value at index " + std::to_string(i) + " is not finite");
    }
  }

  std::vector<std::uint8_t> out;
  out.reserve(tensor_file_size(dims));
  out.insert(out.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
  put_le(out, kTensorVersion, 2);
  put_le(out, dims.size(), 1);
  for (auto d : dims) put_le(out, d, 8);
  for (double v : values) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes, const TensorReadOptions& options) {
  if (bytes.size() < kHeaderFixed || std::memcmp(bytes.data(), kTensorMagic, 4) != 0) {
    throw FormatError("not an NFT1 file");
  }
  const auto version = static_cast<std::uint16_t>(get_le(bytes, 4, 2));
  if (version != kTensorVersion) {
    throw FormatError("unsupported NFT1 version " + std::to_string(version) + " (expected " +
                      std::to_string(kTensorVersion) + ")");
  }
  const std::size_t ndim = bytes[6];
  check_rank(ndim);
  const std::size_t header = kHeaderFixed + 8 * ndim;
  if (bytes.size() < header) {
    throw FormatError("NFT1 header truncated: expected " + std::to_string(header) +
                      " header bytes, got " + std::to_string(bytes.size()));
  }

  Tensor t;
  t.dims.resize(ndim);
  for (std::size_t i = 0; i < ndim; ++i) t.dims[i] = get_le(bytes, kHeaderFixed + 8 * i, 8);

  const std::uint64_t expected = 8 * t.element_count();
  const std::uint64_t actual = bytes.size() - header;
  if (expected != actual) {
    std::ostringstream msg;
    msg << "length mismatch: expected " << expected << " data bytes, got " << actual;
    throw FormatError(msg.str());
  }

  t.values.resize(t.element_count());
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    t.values[i] = std::bit_cast<double>(get_le(bytes, header + 8 * i, 8));
    if (!std::isfinite(t.values[i])) {
      if (!options.allow_nonfinite) {
        throw ValidationError("tensor value at index " + std::to_string(i) + " is not finite");
      }
      t.quarantined = true;
    }
  }
  return t;
}

void write_tensor(const std::filesystem::path& path, std::span<const std::uint64_t> dims,
                  std::span<const double> values) {
  const auto bytes = encode_tensor(dims, values);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path, const TensorReadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_tensor(bytes, options);
  } catch (const ValidationError& e) {
    // Re-raise with the offending path attached, preserving the category.
    if (dynamic_cast<const FormatError*>(&e)) throw FormatError(path.string() + ": " + e.what());
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v) {
  const std::uint64_t dims[] = {static_cast<std::uint64_t>(v.size())};
  write_tensor(path, dims, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor rm = m;
  const std::uint64_t dims[] = {static_cast<std::uint64_t>(m.rows()),
                                static_cast<std::uint64_t>(m.cols())};
  write_tensor(path, dims, std::span<const double>(rm.data(), static_cast<std::size_t>(rm.size())));
}

Eigen::VectorXd tensor_to_vector(const Tensor& t) {
  if (t.dims.size() != 1) {
    throw ValidationError("expected a 1-D tensor, got rank " + std::to_string(t.dims.size()));
  }
  return Eigen::Map<const Eigen::VectorXd>(t.values.data(), static_cast<Eigen::Index>(t.dims[0]));
}

Eigen::MatrixXd tensor_to_matrix(const Tensor& t) {
  if (t.dims.size() != 2) {
    throw ValidationError("expected a 2-D tensor, got rank " + std::to_string(t.dims.size()));
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(t.values.data(), static_cast<Eigen::Index>(t.dims[0]),
                                    static_cast<Eigen::Index>(t.dims[1]));
}

}  // namespace nfas
