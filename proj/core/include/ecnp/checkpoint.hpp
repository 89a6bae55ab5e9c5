#pragma once

#include <cstdint>
#include <string>

#include "ecnp/model.hpp"
#include "ecnp/nn.hpp"

namespace ecnp {

/// Everything needed to resume or evaluate a training run.
struct TrainState {
    ModelParams model;
    AdamState adam;
    int64_t step = 0;          // completed training iterations
    uint64_t task_cursor = 0;  // next task stream index to consume
    uint64_t seed = 0;         // base task seed
};

/// Binary checkpoint: magic, format version, length-prefixed config text,
/// named little-endian f64 arrays (model parameters and Adam moments), and
/// a trailing 64-bit FNV-1a checksum over all preceding bytes.
/// save -> load -> save is byte-identical.
void save_checkpoint(const std::string& path, const TrainState& state);

/// Raises IoError (unreadable), CorruptFile (bad magic, truncation, or
/// checksum mismatch), or VersionMismatch (format version unsupported).
TrainState load_checkpoint(const std::string& path);

}  // namespace ecnp
