#pragma once

#include <string>
#include <vector>

#include "ecnp/array.hpp"

namespace ecnp {

/// Parse an IDX image file (big-endian; magic 0x00000803, then count, rows,
/// cols as 32-bit, then one byte per pixel). Intensities are scaled by
/// 1/255 so every returned [rows, cols] array lies in [0, 1].
/// Raises IoError (unreadable), BadMagic, or TruncatedFile.
std::vector<Array> load_mnist_images(const std::string& path);

/// Write images (values in [0, 1], identical shapes) as an IDX file,
/// rounding intensities to bytes. Used for test fixtures and tooling.
void write_idx_images(const std::string& path, const std::vector<Array>& images);

}  // namespace ecnp
