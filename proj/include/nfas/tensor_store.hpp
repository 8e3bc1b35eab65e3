#pragma once

// NFT1 binary tensors.
//
//   offset  size      field
//   0       4         magic "NFT1"
//   4       2         version (uint16, little-endian)
//   6       1         ndim (uint8, 1..3)
//   7       8*ndim    dims (uint64, little-endian)
//   ...     8*prod    values (IEEE-754 binary64, little-endian, row-major)

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace nfas {

inline constexpr char kTensorMagic[4] = {'N', 'F', 'T', '1'};
inline constexpr std::uint16_t kTensorVersion = 1;
inline constexpr std::size_t kTensorMaxRank = 3;

struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> values;
  /// Set by the reader when non-finite values were accepted on request.
  bool quarantined = false;

  [[nodiscard]] std::uint64_t element_count() const;
};

struct TensorReadOptions {
  bool allow_nonfinite = false;
};

/// Total file size for a tensor of the given shape.
[[nodiscard]] std::uint64_t tensor_file_size(std::span<const std::uint64_t> dims);

[[nodiscard]] std::vector<std::uint8_t> encode_tensor(std::span<const std::uint64_t> dims,
                                                      std::span<const double> values);
[[nodiscard]] Tensor decode_tensor(std::span<const std::uint8_t> bytes,
                                   const TensorReadOptions& options = {});

void write_tensor(const std::filesystem::path& path, std::span<const std::uint64_t> dims,
                  std::span<const double> values);
[[nodiscard]] Tensor read_tensor(const std::filesystem::path& path,
                                 const TensorReadOptions& options = {});

// Eigen conveniences. Matrices are stored row-major on disk regardless of
// Eigen's column-major layout.
void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v);
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
[[nodiscard]] Eigen::VectorXd tensor_to_vector(const Tensor& t);
[[nodiscard]] Eigen::MatrixXd tensor_to_matrix(const Tensor& t);

}  // namespace nfas
