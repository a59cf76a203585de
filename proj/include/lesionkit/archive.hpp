#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lesionkit::archive {

struct ZipEntry {
    std::string name;
    std::vector<std::uint8_t> data;
};

bool looks_like_zip(std::span<const std::uint8_t> bytes);

/// Reads stored and deflated members; directories are skipped. Throws
/// InvalidInput on malformed, encrypted or ZIP64 archives.
std::vector<ZipEntry> read_zip(std::span<const std::uint8_t> bytes);

/// Minimal writer (stored or deflated members), used by tests and tooling.
std::vector<std::uint8_t> write_zip(const std::vector<ZipEntry>& entries, bool deflate = true);

/// Entry names with an image extension, excluding hidden and resource-fork members.
bool is_image_member(const std::string& name);

}  // namespace lesionkit::archive
