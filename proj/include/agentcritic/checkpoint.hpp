#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "agentcritic/neuralnet.hpp"
#include "agentcritic/tensor.hpp"

namespace agentcritic {

inline constexpr int kCheckpointFormatVersion = 1;

struct CheckpointHeader {
    int format_version = kCheckpointFormatVersion;
    std::string architecture_id;
    NetDims dims;
    std::uint64_t seed = 0;

    bool operator==(const CheckpointHeader&) const = default;
};

struct Checkpoint {
    CheckpointHeader header;
    ParamSet params;
};

// JSON text; doubles written in shortest round-trip form so reading back is exact
// and identical parameters always produce identical bytes.
std::string write_checkpoint(const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::string_view text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace agentcritic
