#pragma once

#include <string>
#include <string_view>

namespace dosematch {

std::string read_text_file(const std::string& path);

/// Writes to `<path>.tmp` then renames over `path`, so readers never see a
/// partially written file.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace dosematch
