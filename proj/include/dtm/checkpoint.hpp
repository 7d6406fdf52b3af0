#pragma once

#include <filesystem>

#include "dtm/params.hpp"

namespace dtm {

// Binary checkpoint, little-endian throughout:
//   magic "DTMN", format version (u32), then per parameter in lexicographic
//   name order: name length (u32), name bytes, rank (u32), dims (u32 each),
//   values (f64 each).
// Round trips are bit-exact.
void save_checkpoint(const std::filesystem::path& path, const ParamStore& params);
ParamStore load_checkpoint(const std::filesystem::path& path);

// Names and dims must match the model exactly (CheckpointError otherwise).
void validate_against(const ParamStore& loaded, const ParamStore& expected);

}  // namespace dtm
