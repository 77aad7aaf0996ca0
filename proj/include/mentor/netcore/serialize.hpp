#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "mentor/netcore/array.hpp"

namespace mentor::netcore {

// Parameter file layout (all integers little-endian u32, reals little-endian
// IEEE-754 binary64):
//   magic (6 ASCII bytes)
//   array count N
//   N x { rank R, R x dimension }
//   N x { product(dims) reals }    in the same order

void write_param_file(std::ostream& out, std::string_view magic,
                      const std::vector<const RealArray*>& arrays);
std::vector<RealArray> read_param_file(std::istream& in, std::string_view magic);

void save_param_file(const std::filesystem::path& path, std::string_view magic,
                     const std::vector<const RealArray*>& arrays);
std::vector<RealArray> load_param_file(const std::filesystem::path& path, std::string_view magic);

}  // namespace mentor::netcore
