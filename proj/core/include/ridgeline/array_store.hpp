#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ridgeline {

/// N-dimensional double array with row-major storage, the in-memory image of
/// one "RLA1" file.
struct Array {
  std::vector<std::uint64_t> shape;
  std::vector<double> data;  // row-major

  [[nodiscard]] std::uint64_t size() const {
    std::uint64_t n = 1;
    for (auto s : shape) n *= s;
    return n;
  }
};

/// Binary array container, format "RLA1":
///
///   magic   4 bytes        "RLA1"
///   version u32 LE         1
///   dtype   u32 LE         1 = IEEE-754 binary64 little-endian
///   ndim    u32 LE
///   shape   ndim x u64 LE  row-major
///   payload 8 * prod(shape) bytes, row-major, bit-exact (NaN payloads kept)
///
/// All I/O goes through explicit little-endian byte packing so files are
/// portable and round-trips are bitwise exact.
namespace array_store {

void save(const std::filesystem::path& path, const Array& array);
Array load(const std::filesystem::path& path);

/// Matrix convenience wrappers (ndim = 2; Eigen column-major is transposed
/// into the file's row-major payload and back).
void save_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix(const std::filesystem::path& path);

/// Vector convenience wrappers (ndim = 1).
void save_vector(const std::filesystem::path& path, const Eigen::VectorXd& v);
Eigen::VectorXd load_vector(const std::filesystem::path& path);

}  // namespace array_store

}  // namespace ridgeline
