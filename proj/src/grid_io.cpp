#include "bsl/grid_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "bsl/errors.hpp"

namespace bsl {
namespace {

static_assert(std::endian::native == std::endian::little, "grid I/O assumes a little-endian host");

using Code = GridFormatError::Code;

template <class T>
void put(std::vector<char>& buf, T v) {
  const auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
  buf.insert(buf.end(), bytes.begin(), bytes.end());
}

class Reader {
 public:
  explicit Reader(std::vector<char> data) : data_(std::move(data)) {}
  template <class T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) throw GridFormatError(Code::Truncated, "grid file truncated");
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return std::bit_cast<T>(bytes);
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

constexpr char magic[4] = {'B', 'S', 'L', 'B'};

}  // namespace

void write_grid(const ScalarField& field, const std::filesystem::path& path) {
  const GridSpec& g = field.grid();
  std::vector<char> buf(magic, magic + 4);
  put<std::uint32_t>(buf, grid_format_version);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(g.dim));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(g.points_per_axis));
  put<double>(buf, g.box_half_width);
  put<double>(buf, g.domain_radius);
  put<std::uint8_t>(buf, static_cast<std::uint8_t>(field.kind()));
  const std::size_t header = buf.size();
  buf.resize(header + field.size() * sizeof(cplx));
  std::memcpy(buf.data() + header, field.values().data(), field.size() * sizeof(cplx));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw GridFormatError(Code::Io, "cannot open " + path.string() + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw GridFormatError(Code::Io, "write failed: " + path.string());
}

ScalarField read_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GridFormatError(Code::Io, "cannot open " + path.string());
  Reader r(std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
  for (char c : magic)
    if (r.get<char>() != c) throw GridFormatError(Code::BadMagic, "bad magic in " + path.string());
  const auto version = r.get<std::uint32_t>();
  if (version != grid_format_version)
    throw GridFormatError(Code::BadVersion, "unsupported grid format version " + std::to_string(version));
  const auto dim = r.get<std::uint32_t>();
  if (dim != 2 && dim != 3)
    throw GridFormatError(Code::UnsupportedDimension, "unsupported grid dimension " + std::to_string(dim));
  const auto n = r.get<std::uint32_t>();
  const auto rbox = r.get<double>();
  const auto rd = r.get<double>();
  const auto kind = r.get<std::uint8_t>();
  if (kind > 1) throw GridFormatError(Code::BadKind, "unknown field kind " + std::to_string(kind));
  GridSpec g;
  try {
    g = make_grid(static_cast<int>(dim), static_cast<int>(n), rbox, rd);
  } catch (const InvalidArgument& e) {
    throw GridFormatError(Code::BadSize, e.what());
  }
  if (r.remaining() < g.size() * sizeof(cplx)) throw GridFormatError(Code::Truncated, "grid file truncated");
  if (r.remaining() > g.size() * sizeof(cplx)) throw GridFormatError(Code::BadSize, "trailing bytes in grid file");
  Eigen::ArrayXcd values(static_cast<Eigen::Index>(g.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double re = r.get<double>();
    const double im = r.get<double>();
    values[i] = {re, im};
  }
  try {
    return ScalarField(g, std::move(values), static_cast<FieldKind>(kind));
  } catch (const InvalidArgument& e) {
    throw GridFormatError(Code::BadKind, e.what());
  }
}

}  // namespace bsl
