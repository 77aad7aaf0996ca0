#include "mentor/netcore/serialize.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "mentor/error.hpp"

namespace mentor::netcore {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    U r = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) r = (r << 8) | ((v >> (8 * i)) & 0xff);
    return r;
  }
}

void put_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& out, double d) {
  auto bits = to_little(std::bit_cast<std::uint64_t>(d));
  out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ParseError("truncated parameter file");
  return to_little(v);
}

double get_f64(std::istream& in) {
  std::uint64_t bits = 0;
  if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
    throw ParseError("truncated parameter file");
  }
  return std::bit_cast<double>(to_little(bits));
}

constexpr std::uint32_t kMaxArrays = 1u << 16;
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint64_t kMaxElements = 1ull << 32;

}  // namespace

void write_param_file(std::ostream& out, std::string_view magic,
                      const std::vector<const RealArray*>& arrays) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
  put_u32(out, static_cast<std::uint32_t>(arrays.size()));
  for (const RealArray* a : arrays) {
    put_u32(out, static_cast<std::uint32_t>(a->rank()));
    for (std::size_t d : a->shape()) put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (const RealArray* a : arrays) {
    for (double v : a->span()) put_f64(out, v);
  }
  if (!out) throw Error("failed writing parameter file");
}

std::vector<RealArray> read_param_file(std::istream& in, std::string_view magic) {
  std::string got(magic.size(), '\0');
  if (!in.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic) {
    throw ParseError("bad magic: expected \"" + std::string(magic) + "\"");
  }
  const std::uint32_t count = get_u32(in);
  if (count > kMaxArrays) throw ParseError("implausible array count " + std::to_string(count));
  std::vector<std::vector<std::size_t>> shapes(count);
  for (auto& shape : shapes) {
    const std::uint32_t rank = get_u32(in);
    if (rank == 0 || rank > kMaxRank) throw ParseError("bad array rank " + std::to_string(rank));
    std::uint64_t elements = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const std::uint32_t d = get_u32(in);
      if (d == 0) throw ParseError("zero dimension in parameter file");
      elements *= d;
      if (elements > kMaxElements) throw ParseError("array too large in parameter file");
      shape.push_back(d);
    }
  }
  std::vector<RealArray> arrays;
  arrays.reserve(count);
  for (auto& shape : shapes) {
    RealArray a(std::move(shape));
    for (double& v : a.span()) v = get_f64(in);
    arrays.push_back(std::move(a));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("trailing bytes in parameter file");
  return arrays;
}

void save_param_file(const std::filesystem::path& path, std::string_view magic,
                     const std::vector<const RealArray*>& arrays) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_param_file(out, magic, arrays);
}

std::vector<RealArray> load_param_file(const std::filesystem::path& path, std::string_view magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_param_file(in, magic);
}

}  // namespace mentor::netcore
