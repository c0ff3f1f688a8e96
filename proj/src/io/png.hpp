// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "generator/toy_generator.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace autodrag {

// 8-bit RGB PNG; values are clamped to [0, 1] and rounded.
std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const std::string& path, const Image& image);
Image decode_png(const std::vector<std::uint8_t>& bytes);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);

}  // namespace autodrag
