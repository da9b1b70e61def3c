#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dbmm {

// Flat binary parameter serialization. A checkpoint is:
//   magic "DBMMCKPT" | u32 format_version | u32 model_tag | u32 n_blocks
//   then per block: u32 name_len | name bytes | u32 n_dims | i32 dims[] |
//                   raw little-endian f64 payload (prod(dims) values)
// Doubles are written bit-for-bit, so save followed by load round-trips
// exactly. model_tag is free for the caller (the DBMM stores its mode).
struct ParamBlock {
    std::string name;
    std::vector<int32_t> dims;
    std::vector<double> data;
};

constexpr uint32_t kCheckpointFormatVersion = 1;

void save_param_blocks(const std::string& path, uint32_t model_tag,
                       const std::vector<ParamBlock>& blocks);

struct LoadedCheckpoint {
    uint32_t model_tag = 0;
    std::vector<ParamBlock> blocks;
};

// Throws dbmm::Error on bad magic, unsupported version, or truncation.
LoadedCheckpoint load_param_blocks(const std::string& path);

} // namespace dbmm
