#pragma once

// Bit-packed network files.
//
//   offset size  field
//   0      4     magic "QSDP"
//   4      2     version (u16, little endian)
//   6      1     kind: 0 bilinear, 1 poly, 2 quadratic, 3 vector-output bilinear
//   7      1     flags: bit0 uniform alpha, bit1 lifted input
//   8      12    m, d, M (u32 each)
//   20     4     C (u32), present for kind 3 only
//   ..     24    a, b, c (f64 each)
//   ..           sign planes, row-major, +1 -> 1, each plane padded to a byte
//   ..           alpha: one f64 when uniform, else m (x C) f64 row-major
//
// Planes per kind: bilinear U then V (m x d); poly the canonical M-sign
// expansion of Q (m x dM); quadratic U then V with W = (U + V) / 2.

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "qsdp/model.hpp"

namespace qsdp {

using Network = std::variant<BilinearNetwork, PolyNetwork, QuadraticNetwork>;

inline constexpr std::uint16_t kNetworkFormatVersion = 1;
inline constexpr std::size_t kNetworkHeaderBytes = 44;

std::vector<std::uint8_t> encode_network(const Network& net);
Network decode_network(std::span<const std::uint8_t> bytes);

void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

}  // namespace qsdp
