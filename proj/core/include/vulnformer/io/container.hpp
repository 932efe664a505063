#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vulnformer/numerics/tensor.hpp"

namespace vulnformer::io {

// Binary layout, all integers little-endian:
//   "DHMX" | u16 version | u16 flags (bit 0: entries carry names) | u32 count
//   per entry: [u16 name length, name bytes] if named | u8 dtype | u8 ndim |
//              u32 dims[ndim] | row-major payload
inline constexpr std::uint16_t kContainerVersion = 1;

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

struct ContainerEntry {
  std::string name;
  numerics::Shape shape;
  std::variant<std::vector<float>, std::vector<double>> data;

  DType dtype() const { return data.index() == 0 ? DType::kF32 : DType::kF64; }
  std::size_t element_count() const;

  static ContainerEntry from_tensor(std::string name, const numerics::Tensor& tensor);
  static ContainerEntry from_tensor(std::string name, const numerics::Tensor64& tensor);
  // Converts between precisions when the stored dtype differs.
  numerics::Tensor to_tensor() const;
  numerics::Tensor64 to_tensor64() const;
};

class MatrixContainer {
 public:
  // Throws Error(kFormat) on a duplicate non-empty name or a payload whose
  // length disagrees with the shape.
  void add(ContainerEntry entry);
  void add(std::string name, const numerics::Tensor& tensor) { add(ContainerEntry::from_tensor(std::move(name), tensor)); }

  const std::vector<ContainerEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool named() const;
  const ContainerEntry* find(std::string_view name) const;
  const ContainerEntry& at(std::string_view name) const;  // kFormat when missing

  std::vector<std::uint8_t> serialize() const;
  static MatrixContainer deserialize(std::span<const std::uint8_t> bytes);  // kFormat

  void save(const std::filesystem::path& path) const;              // kIo
  static MatrixContainer load(const std::filesystem::path& path);  // kIo, kFormat

 private:
  std::vector<ContainerEntry> entries_;
};

}  // namespace vulnformer::io
