#include "lesionkit/archive.hpp"

#include <algorithm>
#include <cctype>

#include <zlib.h>

#include "lesionkit/errors.hpp"

namespace lesionkit::archive {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;

std::uint32_t u16(std::span<const std::uint8_t> b, std::size_t at) {
    if (at + 2 > b.size()) throw InvalidInput("zip archive is truncated");
    return b[at] | (b[at + 1] << 8);
}

std::uint32_t u32(std::span<const std::uint8_t> b, std::size_t at) {
    if (at + 4 > b.size()) throw InvalidInput("zip archive is truncated");
    return b[at] | (b[at + 1] << 8) | (b[at + 2] << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

void put16(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(v & 0xff);
    out.push_back((v >> 8) & 0xff);
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    put16(out, v & 0xffff);
    put16(out, v >> 16);
}

std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> in, std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw InvalidInput("zlib initialization failed");
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != expected) throw InvalidInput("zip member failed to decompress");
    return out;
}

std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> in) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        throw InvalidInput("zlib initialization failed");
    }
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())));
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    deflate(&zs, Z_FINISH);
    out.resize(zs.total_out);
    deflateEnd(&zs);
    return out;
}

}  // namespace

bool looks_like_zip(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 4 && bytes[0] == 'P' && bytes[1] == 'K' &&
           ((bytes[2] == 3 && bytes[3] == 4) || (bytes[2] == 5 && bytes[3] == 6));
}

std::vector<ZipEntry> read_zip(std::span<const std::uint8_t> b) {
    if (b.size() < 22) throw InvalidInput("not a zip archive");
    std::size_t eocd = std::string::npos;
    const std::size_t lowest = b.size() > 22 + 65535 ? b.size() - 22 - 65535 : 0;
    for (std::size_t i = b.size() - 22 + 1; i-- > lowest;) {
        if (u32(b, i) == kEndSig) {
            eocd = i;
            break;
        }
    }
    if (eocd == std::string::npos) throw InvalidInput("zip end-of-directory record not found");
    const std::uint32_t count = u16(b, eocd + 10);
    const std::uint32_t cd_offset = u32(b, eocd + 16);
    if (count == 0xffff || cd_offset == 0xffffffff) throw InvalidInput("ZIP64 archives are not supported");

    std::vector<ZipEntry> out;
    std::size_t p = cd_offset;
    for (std::uint32_t i = 0; i < count; ++i) {
        if (u32(b, p) != kCentralSig) throw InvalidInput("corrupt zip central directory");
        const std::uint32_t flags = u16(b, p + 8);
        const std::uint32_t method = u16(b, p + 10);
        const std::uint32_t crc = u32(b, p + 16);
        const std::uint32_t csize = u32(b, p + 20);
        const std::uint32_t usize = u32(b, p + 24);
        const std::uint32_t name_len = u16(b, p + 28);
        const std::uint32_t extra_len = u16(b, p + 30);
        const std::uint32_t comment_len = u16(b, p + 32);
        const std::uint32_t local = u32(b, p + 42);
        if (p + 46 + name_len > b.size()) throw InvalidInput("zip archive is truncated");
        std::string name(reinterpret_cast<const char*>(b.data() + p + 46), name_len);
        p += 46 + name_len + extra_len + comment_len;

        if (!name.empty() && name.back() == '/') continue;
        if (flags & 1) throw InvalidInput("encrypted zip member '" + name + "'");
        if (csize == 0xffffffff || usize == 0xffffffff) throw InvalidInput("ZIP64 archives are not supported");
        if (u32(b, local) != kLocalSig) throw InvalidInput("corrupt zip local header for '" + name + "'");
        const std::size_t data_at = local + 30 + u16(b, local + 26) + u16(b, local + 28);
        if (data_at + csize > b.size()) throw InvalidInput("zip archive is truncated");
        const auto raw = b.subspan(data_at, csize);
        ZipEntry e;
        e.name = std::move(name);
        if (method == 0) {
            e.data.assign(raw.begin(), raw.end());
        } else if (method == 8) {
            e.data = inflate_raw(raw, usize);
        } else {
            throw InvalidInput("zip member '" + e.name + "' uses unsupported compression method " +
                               std::to_string(method));
        }
        if (crc32(0L, e.data.data(), static_cast<uInt>(e.data.size())) != crc) {
            throw InvalidInput("zip member '" + e.name + "' failed its CRC check");
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<std::uint8_t> write_zip(const std::vector<ZipEntry>& entries, bool deflate) {
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> central;
    for (const auto& e : entries) {
        const std::uint32_t crc = crc32(0L, e.data.data(), static_cast<uInt>(e.data.size()));
        const auto body = deflate ? deflate_raw(e.data) : e.data;
        const std::uint32_t method = deflate ? 8 : 0;
        const auto offset = static_cast<std::uint32_t>(out.size());
        put32(out, kLocalSig);
        put16(out, 20);
        put16(out, 0);
        put16(out, method);
        put32(out, 0);  // time, date
        put32(out, crc);
        put32(out, static_cast<std::uint32_t>(body.size()));
        put32(out, static_cast<std::uint32_t>(e.data.size()));
        put16(out, static_cast<std::uint32_t>(e.name.size()));
        put16(out, 0);
        out.insert(out.end(), e.name.begin(), e.name.end());
        out.insert(out.end(), body.begin(), body.end());

        put32(central, kCentralSig);
        put16(central, 20);
        put16(central, 20);
        put16(central, 0);
        put16(central, method);
        put32(central, 0);
        put32(central, crc);
        put32(central, static_cast<std::uint32_t>(body.size()));
        put32(central, static_cast<std::uint32_t>(e.data.size()));
        put16(central, static_cast<std::uint32_t>(e.name.size()));
        put16(central, 0);
        put16(central, 0);
        put16(central, 0);
        put16(central, 0);
        put32(central, 0);
        put32(central, offset);
        central.insert(central.end(), e.name.begin(), e.name.end());
    }
    const auto cd_offset = static_cast<std::uint32_t>(out.size());
    out.insert(out.end(), central.begin(), central.end());
    put32(out, kEndSig);
    put16(out, 0);
    put16(out, 0);
    put16(out, static_cast<std::uint32_t>(entries.size()));
    put16(out, static_cast<std::uint32_t>(entries.size()));
    put32(out, static_cast<std::uint32_t>(central.size()));
    put32(out, cd_offset);
    put16(out, 0);
    return out;
}

bool is_image_member(const std::string& name) {
    const auto slash = name.find_last_of('/');
    const std::string base = slash == std::string::npos ? name : name.substr(slash + 1);
    if (base.empty() || base[0] == '.' || name.rfind("__MACOSX/", 0) == 0) return false;
    const auto dot = base.find_last_of('.');
    if (dot == std::string::npos) return false;
    std::string ext = base.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == "png" || ext == "jpg" || ext == "jpeg";
}

}  // namespace lesionkit::archive
