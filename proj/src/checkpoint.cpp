#include "mfm/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mfm/errors.hpp"

namespace mfm {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
    if (pos + 4 > in.size()) throw IoError("checkpoint: truncated file");
    std::uint32_t v;
    std::memcpy(&v, in.data() + pos, 4);
    pos += 4;
    return v;
}

}  // namespace

std::string encode_params(const ParamMap& params) {
    std::string out;
    out.append("MFM1", 4);
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, arr] : params) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.append(name);
        put_u32(out, static_cast<std::uint32_t>(arr.rank()));
        for (std::size_t e : arr.shape()) put_u32(out, static_cast<std::uint32_t>(e));
        const std::size_t bytes = arr.numel() * sizeof(double);
        const std::size_t off = out.size();
        out.resize(off + bytes);
        std::memcpy(out.data() + off, arr.data(), bytes);
    }
    return out;
}

void write_params(const std::filesystem::path& path, const ParamMap& params) {
    const std::string blob = encode_params(params);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!f) throw IoError("short write to '" + path.string() + "'");
}

ParamMap read_params(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string in = ss.str();

    if (in.size() < 8 || in.compare(0, 4, "MFM1") != 0) {
        throw IoError("'" + path.string() + "' is not an MFM1 checkpoint");
    }
    std::size_t pos = 4;
    const std::uint32_t count = get_u32(in, pos);
    ParamMap params;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = get_u32(in, pos);
        if (pos + name_len > in.size()) throw IoError("checkpoint: truncated name");
        std::string name = in.substr(pos, name_len);
        pos += name_len;
        const std::uint32_t rank = get_u32(in, pos);
        Shape shape(rank);
        for (std::uint32_t r = 0; r < rank; ++r) shape[r] = get_u32(in, pos);
        const std::size_t numel = shape_numel(shape);
        const std::size_t bytes = numel * sizeof(double);
        if (pos + bytes > in.size()) throw IoError("checkpoint: truncated payload for " + name);
        std::vector<double> data(numel);
        std::memcpy(data.data(), in.data() + pos, bytes);
        pos += bytes;
        params.emplace(std::move(name), DenseArray(std::move(shape), std::move(data)));
    }
    if (pos != in.size()) throw IoError("checkpoint: trailing bytes");
    return params;
}

// ---------------------------------------------------------------------------
// SHA-1 (for git-style blob hashes in run manifests)

namespace {

struct Sha1 {
    std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};

    static std::uint32_t rol(std::uint32_t x, int n) { return (x << n) | (x >> (32 - n)); }

    void block(const unsigned char* p) {
        std::uint32_t w[80];
        for (int i = 0; i < 16; ++i) {
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        }
        for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int i = 0; i < 80; ++i) {
            std::uint32_t f, k;
            if (i < 20) {
                f = (b & c) | (~b & d);
                k = 0x5A827999u;
            } else if (i < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1u;
            } else if (i < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDCu;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6u;
            }
            const std::uint32_t tmp = rol(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rol(b, 30);
            b = a;
            a = tmp;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
    }

    std::string digest(const std::string& msg) {
        std::string padded = msg;
        const std::uint64_t bits = std::uint64_t(msg.size()) * 8;
        padded.push_back('\x80');
        while (padded.size() % 64 != 56) padded.push_back('\0');
        for (int i = 7; i >= 0; --i) padded.push_back(char((bits >> (8 * i)) & 0xFF));
        for (std::size_t off = 0; off < padded.size(); off += 64) {
            block(reinterpret_cast<const unsigned char*>(padded.data() + off));
        }
        static const char* hex = "0123456789abcdef";
        std::string out;
        for (std::uint32_t v : h) {
            for (int i = 7; i >= 0; --i) out.push_back(hex[(v >> (4 * i)) & 0xF]);
        }
        return out;
    }
};

}  // namespace

std::string sha1_hex(const std::string& bytes) {
    Sha1 s;
    return s.digest(bytes);
}

std::string git_blob_sha1(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for hashing");
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string content = ss.str();
    std::string preimage = "blob " + std::to_string(content.size());
    preimage.push_back('\0');
    preimage += content;
    return sha1_hex(preimage);
}

}  // namespace mfm
