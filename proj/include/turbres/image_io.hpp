#pragma once

#include <string>

#include "turbres/image.hpp"

namespace turbres {

/// Load an 8- or 16-bit grayscale PGM (P2/P5) or PNG, mapped linearly to [0,1].
/// Throws io_error on missing files, color input, or malformed headers.
ScalarImage load_image(const std::string& path);

/// Clamp to [0,1], quantize to 8 bits, write PGM or PNG by extension.
void save_image(const ScalarImage& img, const std::string& path);

/// 16-bit binary PGM (maxval 65535, big-endian samples), values clamped to [0,1].
void save_pgm16(const ScalarImage& img, const std::string& path);

/// Displacement-field binary format: 4-byte magic 202021.25f ("PIEH"),
/// int32 width, int32 height, then row-major interleaved little-endian
/// float32 (u, v) pairs.
void write_flow_field(const VectorField& field, const std::string& path);
VectorField read_flow_field(const std::string& path);

/// Write text to path via a temporary file plus rename.
void write_text_file_atomic(const std::string& path, const std::string& content);

}  // namespace turbres
