#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace prnn::detail {

std::string base64_encode(const std::uint8_t* data, std::size_t len);
// Throws std::runtime_error on characters outside the alphabet or bad padding.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace prnn::detail
