#pragma once

#include <string>
#include <string_view>

namespace prdesc {

/// Copies `in`, replacing every ill-formed UTF-8 sequence with U+FFFD.
std::string sanitize_utf8(std::string_view in);

bool is_ascii(std::string_view s);

}  // namespace prdesc
