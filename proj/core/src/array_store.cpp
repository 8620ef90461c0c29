#include "ridgeline/array_store.hpp"

#include "ridgeline/errors.hpp"

#include <cstring>
#include <fstream>
#include <limits>

namespace ridgeline::array_store {

namespace {

constexpr char kMagic[4] = {'R', 'L', 'A', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeFloat64 = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  put_u64(out, bits);
}

class Reader {
 public:
  Reader(const unsigned char* data, std::size_t size, std::string name)
      : data_(data), size_(size), name_(std::move(name)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64() {
    std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }

  void raw(char* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_ + pos_, n);
    pos_ += n;
  }

  [[nodiscard]] std::size_t remaining() const { return size_ - pos_; }

 private:
  void need(std::size_t n) const {
    require_config(size_ - pos_ >= n, "array store: truncated file " + name_);
  }

  const unsigned char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string name_;
};

}  // namespace

void save(const std::filesystem::path& path, const Array& array) {
  require_config(array.data.size() == array.size(),
                 "array store: payload length does not match shape");
  std::string buffer;
  buffer.reserve(16 + 8 * array.shape.size() + 8 * array.data.size());
  buffer.append(kMagic, 4);
  put_u32(buffer, kVersion);
  put_u32(buffer, kDtypeFloat64);
  put_u32(buffer, static_cast<std::uint32_t>(array.shape.size()));
  for (auto s : array.shape) put_u64(buffer, s);
  for (double d : array.data) put_f64(buffer, d);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require_config(out.good(), "array store: cannot open for write: " + path.string());
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  require_config(out.good(), "array store: write failed: " + path.string());
}

Array load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  require_config(in.good(), "array store: cannot open: " + path.string());
  auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<unsigned char> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  require_config(in.good(), "array store: read failed: " + path.string());

  Reader r(bytes.data(), bytes.size(), path.string());
  char magic[4];
  r.raw(magic, 4);
  require_config(std::memcmp(magic, kMagic, 4) == 0,
                 "array store: bad magic in " + path.string());
  std::uint32_t version = r.u32();
  require_config(version == kVersion, "array store: unsupported version " +
                                          std::to_string(version) + " in " + path.string());
  std::uint32_t dtype = r.u32();
  require_config(dtype == kDtypeFloat64, "array store: unsupported dtype " +
                                             std::to_string(dtype) + " in " + path.string());
  std::uint32_t ndim = r.u32();

  Array array;
  array.shape.resize(ndim);
  for (auto& s : array.shape) s = r.u64();
  std::uint64_t count = array.size();
  require_config(r.remaining() == 8 * count,
                 "array store: payload length mismatch in " + path.string());
  array.data.resize(count);
  for (auto& d : array.data) d = r.f64();
  return array;
}

void save_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  Array array;
  array.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  array.data.resize(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      array.data.data(), m.rows(), m.cols()) = m;
  save(path, array);
}

Eigen::MatrixXd load_matrix(const std::filesystem::path& path) {
  Array array = load(path);
  require_config(array.shape.size() == 2,
                 "array store: expected 2-d array in " + path.string());
  auto rows = static_cast<Eigen::Index>(array.shape[0]);
  auto cols = static_cast<Eigen::Index>(array.shape[1]);
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(array.data.data(), rows, cols);
}

void save_vector(const std::filesystem::path& path, const Eigen::VectorXd& v) {
  Array array;
  array.shape = {static_cast<std::uint64_t>(v.size())};
  array.data.assign(v.data(), v.data() + v.size());
  save(path, array);
}

Eigen::VectorXd load_vector(const std::filesystem::path& path) {
  Array array = load(path);
  require_config(array.shape.size() == 1,
                 "array store: expected 1-d array in " + path.string());
  return Eigen::Map<const Eigen::VectorXd>(array.data.data(),
                                           static_cast<Eigen::Index>(array.data.size()));
}

}  // namespace ridgeline::array_store
