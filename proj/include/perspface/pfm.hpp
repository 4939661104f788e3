#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace perspface {

/// Portable float map. `data` is stored top row first, channels
/// interleaved; the file itself is written bottom row first.
struct PfmImage {
    int width = 0;
    int height = 0;
    int channels = 3;  // 3 for "PF", 1 for "Pf"
    std::vector<float> data;
};

PfmImage parse_pfm(std::string_view bytes);
std::string encode_pfm(const PfmImage& image);

PfmImage read_pfm_image(const std::filesystem::path& path);
void write_pfm_image(const PfmImage& image, const std::filesystem::path& path);

}  // namespace perspface
