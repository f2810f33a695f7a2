#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "aesust/layers.hpp"

namespace aesust {

// TensorArchive byte layout (all integers little-endian):
//   "AESU1" | u32 entry count | entries...
//   entry: u16 name length | UTF-8 name | u8 dtype (0=f32, 1=f64) | u8 rank | u64 dims[rank] | payload
// The payload is the row-major element array, IEEE-754 little-endian.

enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

using ArchiveTensor = std::variant<Tensor<float>, Tensor<double>>;

template <typename T>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  return std::is_same_v<T, float> ? DType::F32 : DType::F64;
}

inline DType dtype_of(const ArchiveTensor& t) { return t.index() == 0 ? DType::F32 : DType::F64; }
inline const char* dtype_name(DType d) { return d == DType::F32 ? "f32" : "f64"; }
const Shape& shape_of(const ArchiveTensor& t);

struct ArchiveEntry {
  std::string name;
  ArchiveTensor tensor;
};

/// Ordered set of uniquely named tensors.
class TensorArchive {
 public:
  void add(std::string name, ArchiveTensor tensor);
  void set(const std::string& name, ArchiveTensor tensor);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const ArchiveTensor* find(const std::string& name) const;
  const std::vector<ArchiveEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Single-value f64 metadata entries.
  void set_scalar(const std::string& name, double value);
  std::optional<double> scalar(const std::string& name) const;

 private:
  std::vector<ArchiveEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::vector<std::uint8_t> save_archive(const TensorArchive& archive);
TensorArchive load_archive(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

void write_archive_file(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive read_archive_file(const std::filesystem::path& path);

template <typename T>
void store_parameters(const ParameterList<T>& params, TensorArchive& archive) {
  for (const auto& p : params) archive.set(p.name, p.var.value());
}

/// Copies every named parameter out of `archive`. Missing names, shape and
/// dtype mismatches are rejected before anything is modified.
template <typename T>
void load_parameters(const ParameterList<T>& params, const TensorArchive& archive) {
  for (const auto& p : params) {
    const ArchiveTensor* entry = archive.find(p.name);
    if (!entry) throw ConfigError("archive is missing tensor '" + p.name + "'");
    if (dtype_of(*entry) != dtype_of<T>()) {
      throw ConfigError("dtype mismatch for '" + p.name + "': archive " + dtype_name(dtype_of(*entry)) +
                        ", model " + dtype_name(dtype_of<T>()));
    }
    if (shape_of(*entry) != p.var.shape()) {
      throw ConfigError("shape mismatch for '" + p.name + "': archive " + to_string(shape_of(*entry)) +
                        ", model " + to_string(p.var.shape()));
    }
  }
  for (auto p : params) p.var.mutable_value() = std::get<Tensor<T>>(*archive.find(p.name));
}

}  // namespace aesust
