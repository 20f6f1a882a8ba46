#include "tdsr/checkpoint.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "tdsr/errors.hpp"

namespace tdsr {

namespace {

constexpr char kMagic[4] = {'T', 'D', 'S', 'R'};

void put_u32(std::vector<unsigned char>& buf, uint32_t v) {
    buf.push_back(static_cast<unsigned char>(v & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

uint32_t get_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
           static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

void put_f32(std::vector<unsigned char>& buf, float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(buf, bits);
}

float get_f32(const unsigned char* p) {
    const uint32_t bits = get_u32(p);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params) {
    std::vector<unsigned char> buf;
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_u32(buf, kCheckpointVersion);
    put_u32(buf, static_cast<uint32_t>(params.tensors.size()));
    for (const auto& [name, arr] : params.tensors) {  // sorted by name
        put_u32(buf, static_cast<uint32_t>(name.size()));
        buf.insert(buf.end(), name.begin(), name.end());
        buf.push_back(0);  // dtype tag: f32
        put_u32(buf, static_cast<uint32_t>(arr.dims.size()));
        for (uint32_t d : arr.dims) put_u32(buf, d);
        for (double v : arr.v) put_f32(buf, static_cast<float>(v));
    }
    const uint32_t crc =
        static_cast<uint32_t>(crc32(0L, buf.data(), static_cast<uInt>(buf.size())));
    put_u32(buf, crc);

    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write checkpoint: " + tmp);
        f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!f) throw IoError("short write: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw PrereqError("missing checkpoint: " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 16) throw IoError("checkpoint truncated: " + path);

    const uint32_t stored_crc = get_u32(buf.data() + buf.size() - 4);
    const uint32_t crc =
        static_cast<uint32_t>(crc32(0L, buf.data(), static_cast<uInt>(buf.size() - 4)));
    if (stored_crc != crc) throw IoError("checkpoint checksum mismatch: " + path);

    size_t off = 0;
    auto need = [&](size_t n) {
        if (off + n > buf.size() - 4) throw IoError("checkpoint truncated: " + path);
    };
    need(4);
    if (std::memcmp(buf.data(), kMagic, 4) != 0) throw IoError("bad checkpoint magic: " + path);
    off = 4;
    need(8);
    const uint32_t version = get_u32(buf.data() + off);
    off += 4;
    if (version != kCheckpointVersion)
        throw IoError("unsupported checkpoint version: " + std::to_string(version));
    const uint32_t count = get_u32(buf.data() + off);
    off += 4;

    ModelParams out;
    for (uint32_t i = 0; i < count; ++i) {
        need(4);
        const uint32_t name_len = get_u32(buf.data() + off);
        off += 4;
        need(name_len + 5);
        std::string name(reinterpret_cast<const char*>(buf.data() + off), name_len);
        off += name_len;
        const unsigned char dtype = buf[off++];
        if (dtype != 0) throw IoError("unsupported dtype tag in checkpoint: " + path);
        const uint32_t rank = get_u32(buf.data() + off);
        off += 4;
        need(static_cast<size_t>(rank) * 4);
        Array arr;
        arr.dims.resize(rank);
        size_t numel = 1;
        for (uint32_t r = 0; r < rank; ++r) {
            arr.dims[r] = get_u32(buf.data() + off);
            off += 4;
            numel *= arr.dims[r];
        }
        need(numel * 4);
        arr.v.resize(numel);
        for (size_t n = 0; n < numel; ++n) {
            arr.v[n] = static_cast<double>(get_f32(buf.data() + off));
            off += 4;
        }
        out.tensors.emplace(std::move(name), std::move(arr));
    }
    if (off != buf.size() - 4) throw IoError("trailing bytes in checkpoint: " + path);
    return out;
}

}  // namespace tdsr
