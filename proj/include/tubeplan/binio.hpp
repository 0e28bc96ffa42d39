#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace tubeplan {

// Flat little-endian float32 array files: 8-byte magic, u32 version,
// u64 element count, payload. Readers throw FormatError on a bad magic,
// VersionError on an unexpected version, TruncatedFileError on short payload.
void write_f32_file(const std::filesystem::path& path, const char magic[8],
                    uint32_t version, std::span<const float> data);
std::vector<float> read_f32_file(const std::filesystem::path& path, const char magic[8],
                                 uint32_t version);

void write_u64_file(const std::filesystem::path& path, const char magic[8],
                    uint32_t version, std::span<const uint64_t> data);
std::vector<uint64_t> read_u64_file(const std::filesystem::path& path, const char magic[8],
                                    uint32_t version);

uint64_t fnv1a_file(const std::filesystem::path& path);

}  // namespace tubeplan
