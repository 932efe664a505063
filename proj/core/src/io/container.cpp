#include "vulnformer/io/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace vulnformer::io {

namespace {

constexpr char kMagic[4] = {'D', 'H', 'M', 'X'};
constexpr std::uint16_t kNamedFlag = 1;

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    auto p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  template <typename U>
  void uint(U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
  void real(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void real(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  const std::uint8_t* take(std::size_t n) {
    if (n > in_.size() - pos_) {
      throw Error(ErrorKind::kFormat, "container truncated at byte " + std::to_string(pos_));
    }
    const std::uint8_t* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <typename U>
  U uint() {
    const std::uint8_t* p = take(sizeof(U));
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
    return value;
  }
  bool done() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t ContainerEntry::element_count() const {
  return std::visit([](const auto& v) { return v.size(); }, data);
}

ContainerEntry ContainerEntry::from_tensor(std::string name, const numerics::Tensor& tensor) {
  return {std::move(name), tensor.shape(), std::vector<float>(tensor.values().begin(), tensor.values().end())};
}

ContainerEntry ContainerEntry::from_tensor(std::string name, const numerics::Tensor64& tensor) {
  return {std::move(name), tensor.shape(), std::vector<double>(tensor.values().begin(), tensor.values().end())};
}

numerics::Tensor ContainerEntry::to_tensor() const {
  return std::visit(
      [&](const auto& v) { return numerics::Tensor::from_values(shape, std::vector<float>(v.begin(), v.end())); }, data);
}

numerics::Tensor64 ContainerEntry::to_tensor64() const {
  return std::visit(
      [&](const auto& v) { return numerics::Tensor64::from_values(shape, std::vector<double>(v.begin(), v.end())); }, data);
}

void MatrixContainer::add(ContainerEntry entry) {
  if (numerics::element_count(entry.shape) != entry.element_count()) {
    throw Error(ErrorKind::kFormat, "entry '" + entry.name + "' has " + std::to_string(entry.element_count()) +
                                        " values for shape " + numerics::shape_string(entry.shape));
  }
  if (entry.shape.size() > std::numeric_limits<std::uint8_t>::max()) {
    throw Error(ErrorKind::kFormat, "entry '" + entry.name + "' has too many dimensions");
  }
  if (!entry.name.empty() && find(entry.name) != nullptr) {
    throw Error(ErrorKind::kFormat, "duplicate container entry '" + entry.name + "'");
  }
  entries_.push_back(std::move(entry));
}

bool MatrixContainer::named() const {
  for (const auto& e : entries_)
    if (!e.name.empty()) return true;
  return false;
}

const ContainerEntry* MatrixContainer::find(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e;
  return nullptr;
}

const ContainerEntry& MatrixContainer::at(std::string_view name) const {
  if (const ContainerEntry* e = find(name)) return *e;
  throw Error(ErrorKind::kFormat, "container has no entry '" + std::string(name) + "'");
}

std::vector<std::uint8_t> MatrixContainer::serialize() const {
  Writer w;
  w.bytes(kMagic, 4);
  w.uint(kContainerVersion);
  const bool with_names = named();
  w.uint(static_cast<std::uint16_t>(with_names ? kNamedFlag : 0));
  w.uint(static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    if (with_names) {
      if (e.name.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw Error(ErrorKind::kFormat, "entry name too long");
      }
      w.uint(static_cast<std::uint16_t>(e.name.size()));
      w.bytes(e.name.data(), e.name.size());
    }
    w.uint(static_cast<std::uint8_t>(e.dtype()));
    w.uint(static_cast<std::uint8_t>(e.shape.size()));
    for (std::size_t d : e.shape) w.uint(static_cast<std::uint32_t>(d));
    std::visit([&](const auto& values) {
      for (auto v : values) w.real(v);
    }, e.data);
  }
  return w.take();
}

MatrixContainer MatrixContainer::deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(4), kMagic, 4) != 0) throw Error(ErrorKind::kFormat, "not a matrix container (bad magic)");
  auto version = r.uint<std::uint16_t>();
  if (version != kContainerVersion) {
    throw Error(ErrorKind::kFormat, "unsupported container version " + std::to_string(version));
  }
  const bool with_names = (r.uint<std::uint16_t>() & kNamedFlag) != 0;
  const auto count = r.uint<std::uint32_t>();
  MatrixContainer out;
  for (std::uint32_t i = 0; i < count; ++i) {
    ContainerEntry e;
    if (with_names) {
      auto len = r.uint<std::uint16_t>();
      const std::uint8_t* p = r.take(len);
      e.name.assign(reinterpret_cast<const char*>(p), len);
    }
    auto dtype = r.uint<std::uint8_t>();
    if (dtype > 1) throw Error(ErrorKind::kFormat, "unknown dtype code " + std::to_string(dtype));
    auto ndim = r.uint<std::uint8_t>();
    std::size_t n = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      e.shape.push_back(r.uint<std::uint32_t>());
      n *= e.shape.back();
    }
    const std::size_t width = dtype == 0 ? 4 : 8;
    if (n > r.remaining() / width) throw Error(ErrorKind::kFormat, "payload shorter than shape " + numerics::shape_string(e.shape));
    if (dtype == 0) {
      std::vector<float> v(n);
      for (auto& x : v) x = std::bit_cast<float>(r.uint<std::uint32_t>());
      e.data = std::move(v);
    } else {
      std::vector<double> v(n);
      for (auto& x : v) x = std::bit_cast<double>(r.uint<std::uint64_t>());
      e.data = std::move(v);
    }
    out.add(std::move(e));
  }
  if (!r.done()) throw Error(ErrorKind::kFormat, "trailing bytes after container entries");
  return out;
}

void MatrixContainer::save(const std::filesystem::path& path) const {
  auto bytes = serialize();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

MatrixContainer MatrixContainer::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace vulnformer::io
