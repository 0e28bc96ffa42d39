#include "tubeplan/binio.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "tubeplan/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "on-disk format is little-endian; big-endian hosts need swaps");

namespace tubeplan {
namespace {

struct Header {
    char magic[8];
    uint32_t version;
    uint32_t pad;
    uint64_t count;
};
static_assert(sizeof(Header) == 24);

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    return in;
}

Header read_header(std::ifstream& in, const std::filesystem::path& path, const char magic[8],
                   uint32_t version) {
    Header h{};
    in.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (in.gcount() != sizeof(h))
        throw TruncatedFileError("truncated header: " + path.string());
    if (std::memcmp(h.magic, magic, 8) != 0)
        throw FormatError("bad magic in " + path.string());
    if (h.version != version)
        throw VersionError("unsupported version " + std::to_string(h.version) + " in " +
                           path.string());
    return h;
}

template <typename T>
void write_blob(const std::filesystem::path& path, const char magic[8], uint32_t version,
                std::span<const T> data) {
    auto out = open_out(path);
    Header h{};
    std::memcpy(h.magic, magic, 8);
    h.version = version;
    h.count = data.size();
    out.write(reinterpret_cast<const char*>(&h), sizeof(h));
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(T)));
    if (!out) throw IoError("write failed: " + path.string());
}

template <typename T>
std::vector<T> read_blob(const std::filesystem::path& path, const char magic[8],
                         uint32_t version) {
    auto in = open_in(path);
    Header h = read_header(in, path, magic, version);
    std::vector<T> data(h.count);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(h.count * sizeof(T)));
    if (static_cast<uint64_t>(in.gcount()) != h.count * sizeof(T))
        throw TruncatedFileError("truncated payload: " + path.string());
    return data;
}

}  // namespace

void write_f32_file(const std::filesystem::path& path, const char magic[8], uint32_t version,
                    std::span<const float> data) {
    write_blob(path, magic, version, data);
}

std::vector<float> read_f32_file(const std::filesystem::path& path, const char magic[8],
                                 uint32_t version) {
    return read_blob<float>(path, magic, version);
}

void write_u64_file(const std::filesystem::path& path, const char magic[8], uint32_t version,
                    std::span<const uint64_t> data) {
    write_blob(path, magic, version, data);
}

std::vector<uint64_t> read_u64_file(const std::filesystem::path& path, const char magic[8],
                                    uint32_t version) {
    return read_blob<uint64_t>(path, magic, version);
}

uint64_t fnv1a_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (n < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    return h;
}

}  // namespace tubeplan
