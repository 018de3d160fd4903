#pragma once

#include <filesystem>
#include <iosfwd>

#include "micns/tensor.hpp"

namespace micns {

// Binary tensor file layout (all integers little-endian):
//   bytes 0..3   magic "MICN"
//   bytes 4..5   format version, u16 (currently 1)
//   bytes 6..9   rank, u32
//   then         rank dimensions, u32 each
//   then         row-major payload, IEEE-754 float32
// Values are computed in 64-bit and narrowed to float32 for storage, so a
// save -> load -> save cycle is byte-stable.

inline constexpr char kTensorMagic[4] = {'M', 'I', 'C', 'N'};
inline constexpr std::uint16_t kTensorVersion = 1;

void save_tensor(std::ostream& out, const Tensor& t);
Tensor load_tensor(std::istream& in, const std::string& origin = "<stream>");

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace micns
