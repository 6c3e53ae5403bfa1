#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "core/config.hpp"
#include "core/data.hpp"
#include "core/train.hpp"

namespace mimgan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to resume training or run detection.
struct Checkpoint {
  KeyValues config;  // resolved run configuration at save time
  std::optional<data::NormStats> norm;
  TrainState state;
};

/// Binary container: 8-byte magic, u32 format version, then tagged entries
/// (text, u64, or real blocks stored as raw little-endian IEEE-754 doubles
/// with their shape), then an end marker. Reals round-trip bit-exactly.
std::string encode_checkpoint(const Checkpoint& ckpt);
/// Throws VersionError for another format version and IoError for anything
/// malformed or truncated.
Checkpoint decode_checkpoint(std::string_view bytes, const std::string& origin = "<checkpoint>");

/// Atomic (temp file + rename).
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mimgan
