#pragma once

#include <map>
#include <string>
#include <vector>

#include "pdcp/tensor.hpp"

namespace pdcp {

// Repo-wide checkpoint format, bit-exact round trip:
//   magic "PDCP" | version u32 | count u32
//   per tensor: name_len u32 | name utf-8 | rank u32 | dims u64... | f64 data
// All integers and floats little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& tensors);

std::map<std::string, Tensor> load_checkpoint(const std::string& path);

}  // namespace pdcp
