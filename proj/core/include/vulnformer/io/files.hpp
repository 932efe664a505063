#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace vulnformer::io {

// Whole-file helpers; failures throw Error(kIo).
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view content);

nlohmann::json read_json(const std::filesystem::path& path);  // kIo, kFormat
void write_json(const std::filesystem::path& path, const nlohmann::json& value);

// FNV-1a, for content fingerprints (not cryptographic).
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t file_fingerprint(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

}  // namespace vulnformer::io
