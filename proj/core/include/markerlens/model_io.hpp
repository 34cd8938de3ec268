#pragma once

#include <cstdint>
#include <string>

#include "markerlens/nn.hpp"

namespace markerlens {

// Model file layout:
//   MARKERLENS-MODEL v1\n
//   arch conv <c0> <c1> <c2> <c3> input <side> head <d0> ... <dn> acts relu ... sigmoid\n
//   <little-endian 64-bit weight blocks, per layer: weights then biases>
//   checksum <crc32-of-weight-bytes, hex>\n
//
// Round-trips preserve every weight bit. Throws version_mismatch on a bad
// magic line, checksum_mismatch on CRC failure, corrupt_data otherwise.
void save_model(const RegressionModel& model, const std::string& path);
RegressionModel load_model(const std::string& path);

// CRC32 over all extractor weight bytes; the frozen-extractor invariant in
// one number.
std::uint32_t weights_digest(const FeatureExtractor& fe);

}  // namespace markerlens
