#pragma once

#include <filesystem>
#include <string>

namespace immsbm {

// Write-to-temp then rename, so readers never observe a partial file.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

} // namespace immsbm
