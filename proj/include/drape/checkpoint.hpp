#pragma once

#include <map>
#include <string>
#include <vector>

#include "drape/autodiff.hpp"

namespace drape::ad {

// Flat binary parameter container: magic "DFRG", version u32, tensor count
// u32, then per tensor: name length u32, name bytes, rank u32, dims u32 each,
// row-major little-endian f64 payload.
void save_checkpoint(const std::string& path, const std::vector<const Param*>& params);

std::map<std::string, Mat> load_checkpoint(const std::string& path);

std::vector<std::string> checkpoint_tensor_names(const std::string& path);

}  // namespace drape::ad
