#pragma once

#include <filesystem>
#include <span>
#include <string>

namespace nfas {

[[nodiscard]] std::string sha256_hex(std::span<const unsigned char> bytes);
[[nodiscard]] std::string sha256_hex(const std::string& text);
[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

}  // namespace nfas
