#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace refseg {

std::string base64_encode(const void* data, std::size_t len);
std::string base64_encode(std::string_view s);
std::vector<std::uint8_t> base64_decode(std::string_view s);

} // namespace refseg
