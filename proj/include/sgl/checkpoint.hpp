#pragma once

#include <filesystem>
#include <string>

#include "sgl/field.hpp"

namespace sgl {

/// Serialized field: "SGL1", u32 version, u8 d, u32 points_per_dim,
/// f64 box_length, then interleaved (re, im) f64 values; all little-endian.
std::string encode_field(const Field& f);
/// Throws IoError("checkpoint_corrupt") on malformed input.
Field decode_field(const std::string& bytes);

/// Writes to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

void write_checkpoint(const std::filesystem::path& path, const Field& f);
Field read_checkpoint(const std::filesystem::path& path);

}  // namespace sgl
