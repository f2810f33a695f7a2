#include "aesust/persist.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <random>

namespace aesust {

namespace {

constexpr char kMagic[5] = {'A', 'E', 'S', 'U', '1'};

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return value;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("archive truncated reading ") + what + " at offset " + std::to_string(pos_));
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void put_payload(std::vector<std::uint8_t>& out, const Tensor<T>& t) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  for (Index i = 0; i < t.size(); ++i) put_le(out, std::bit_cast<Bits>(t[i]));
}

template <typename T>
Tensor<T> get_payload(Reader& in, Shape shape) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  Tensor<T> t(std::move(shape));
  const auto n = static_cast<std::size_t>(t.size());
  if (n != 0 && in.remaining() / sizeof(T) < n) {
    throw FormatError("archive truncated reading payload at offset " + std::to_string(in.offset()));
  }
  for (Index i = 0; i < t.size(); ++i) t[i] = std::bit_cast<T>(in.get<Bits>("payload"));
  return t;
}

}  // namespace

const Shape& shape_of(const ArchiveTensor& t) {
  return std::visit([](const auto& x) -> const Shape& { return x.shape(); }, t);
}

void TensorArchive::add(std::string name, ArchiveTensor tensor) {
  if (contains(name)) throw FormatError("duplicate archive entry '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(tensor)});
}

void TensorArchive::set(const std::string& name, ArchiveTensor tensor) {
  auto it = index_.find(name);
  if (it == index_.end()) {
    add(name, std::move(tensor));
  } else {
    entries_[it->second].tensor = std::move(tensor);
  }
}

const ArchiveTensor* TensorArchive::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second].tensor;
}

void TensorArchive::set_scalar(const std::string& name, double value) {
  set(name, Tensor<double>::constant({1}, value));
}

std::optional<double> TensorArchive::scalar(const std::string& name) const {
  const ArchiveTensor* t = find(name);
  if (!t) return std::nullopt;
  return std::visit([](const auto& x) -> std::optional<double> {
    if (x.size() != 1) return std::nullopt;
    return static_cast<double>(x[0]);
  }, *t);
}

std::vector<std::uint8_t> save_archive(const TensorArchive& archive) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le(out, static_cast<std::uint32_t>(archive.size()));
  for (const auto& entry : archive.entries()) {
    if (entry.name.size() > 0xFFFF) throw FormatError("archive entry name longer than 65535 bytes");
    const Shape& shape = shape_of(entry.tensor);
    if (shape.size() > 0xFF) throw FormatError("archive entry '" + entry.name + "' has rank above 255");
    put_le(out, static_cast<std::uint16_t>(entry.name.size()));
    out.insert(out.end(), entry.name.begin(), entry.name.end());
    out.push_back(static_cast<std::uint8_t>(dtype_of(entry.tensor)));
    out.push_back(static_cast<std::uint8_t>(shape.size()));
    for (Index d : shape) put_le(out, static_cast<std::uint64_t>(d));
    std::visit([&out](const auto& t) { put_payload(out, t); }, entry.tensor);
  }
  return out;
}

TensorArchive load_archive(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  auto magic = in.take(sizeof(kMagic), "magic");
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) throw FormatError("bad archive magic at offset 0");
  const auto count = in.get<std::uint32_t>("entry count");
  TensorArchive archive;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto name_len = in.get<std::uint16_t>("name length");
    auto name_bytes = in.take(name_len, "name");
    std::string name(name_bytes.begin(), name_bytes.end());
    const std::size_t dtype_offset = in.offset();
    const auto dtype = in.get<std::uint8_t>("dtype");
    if (dtype > 1) {
      throw FormatError("unknown dtype code " + std::to_string(dtype) + " at offset " + std::to_string(dtype_offset));
    }
    const auto rank = in.get<std::uint8_t>("rank");
    Shape shape;
    std::uint64_t elements = 1;
    for (std::uint8_t r = 0; r < rank; ++r) {
      const auto d = in.get<std::uint64_t>("dims");
      if (d != 0 && elements > (std::uint64_t{1} << 48) / d) throw FormatError("archive entry '" + name + "' is too large");
      elements *= d;
      shape.push_back(static_cast<Index>(d));
    }
    if (archive.contains(name)) throw FormatError("duplicate archive entry '" + name + "'");
    if (dtype == 0) {
      archive.add(std::move(name), get_payload<float>(in, std::move(shape)));
    } else {
      archive.add(std::move(name), get_payload<double>(in, std::move(shape)));
    }
  }
  if (in.remaining() != 0) {
    throw FormatError("trailing bytes after last archive entry at offset " + std::to_string(in.offset()));
  }
  return archive;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::random_device rd;
  auto tmp = path;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_archive_file(const std::filesystem::path& path, const TensorArchive& archive) {
  write_file_atomic(path, save_archive(archive));
}

TensorArchive read_archive_file(const std::filesystem::path& path) { return load_archive(read_file(path)); }

}  // namespace aesust
