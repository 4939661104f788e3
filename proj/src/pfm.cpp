#include "perspface/pfm.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "perspface/error.hpp"
#include "perspface/io_util.hpp"

namespace perspface {

namespace {

std::uint32_t byteswap32(std::uint32_t v) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

class HeaderReader {
public:
    explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

    std::string token() {
        while (pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            ++pos_;
        }
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            ++pos_;
        }
        if (start == pos_) {
            throw Error(ErrorCode::ParseError, "truncated PFM header");
        }
        return std::string(bytes_.substr(start, pos_ - start));
    }

    // Exactly one whitespace byte separates the scale from the raster.
    std::size_t raster_offset() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            throw Error(ErrorCode::ParseError, "missing separator after PFM scale");
        }
        return pos_ + 1;
    }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

int parse_dim(const std::string& token) {
    std::size_t used = 0;
    int value = 0;
    try {
        value = std::stoi(token, &used);
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad PFM dimension '" + token + "'");
    }
    if (used != token.size() || value <= 0) {
        throw Error(ErrorCode::ParseError, "bad PFM dimension '" + token + "'");
    }
    return value;
}

}  // namespace

PfmImage parse_pfm(std::string_view bytes) {
    HeaderReader reader(bytes);
    const std::string magic = reader.token();
    PfmImage image;
    if (magic == "PF") {
        image.channels = 3;
    } else if (magic == "Pf") {
        image.channels = 1;
    } else {
        throw Error(ErrorCode::ParseError, "bad PFM magic '" + magic + "'");
    }
    image.width = parse_dim(reader.token());
    image.height = parse_dim(reader.token());
    const std::string scale_token = reader.token();
    double scale = 0.0;
    try {
        std::size_t used = 0;
        scale = std::stod(scale_token, &used);
        if (used != scale_token.size()) {
            throw std::invalid_argument("trailing");
        }
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad PFM scale '" + scale_token + "'");
    }
    if (scale == 0.0 || !std::isfinite(scale)) {
        throw Error(ErrorCode::ParseError, "PFM scale must be finite and nonzero");
    }
    const bool file_little_endian = scale < 0.0;
    const std::size_t offset = reader.raster_offset();

    const std::size_t row_floats = static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.channels);
    const std::size_t count = row_floats * static_cast<std::size_t>(image.height);
    if (bytes.size() - offset != count * sizeof(float)) {
        throw Error(ErrorCode::ParseError, "PFM raster has " + std::to_string(bytes.size() - offset) +
                                               " bytes, expected " + std::to_string(count * sizeof(float)));
    }
    const bool swap = file_little_endian != (std::endian::native == std::endian::little);
    image.data.resize(count);
    for (int file_row = 0; file_row < image.height; ++file_row) {
        const int row = image.height - 1 - file_row;
        for (std::size_t k = 0; k < row_floats; ++k) {
            std::uint32_t raw = 0;
            std::memcpy(&raw, bytes.data() + offset + (static_cast<std::size_t>(file_row) * row_floats + k) * 4, 4);
            if (swap) {
                raw = byteswap32(raw);
            }
            image.data[static_cast<std::size_t>(row) * row_floats + k] = std::bit_cast<float>(raw);
        }
    }
    return image;
}

std::string encode_pfm(const PfmImage& image) {
    if (image.channels != 1 && image.channels != 3) {
        throw Error(ErrorCode::InvalidDimension, "PFM supports 1 or 3 channels");
    }
    const std::size_t row_floats = static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.channels);
    if (image.width <= 0 || image.height <= 0 || image.data.size() != row_floats * static_cast<std::size_t>(image.height)) {
        throw Error(ErrorCode::DimensionMismatch, "PFM data size does not match dimensions");
    }
    std::string out = (image.channels == 3 ? "PF\n" : "Pf\n") + std::to_string(image.width) + " " +
                      std::to_string(image.height) + "\n-1.0\n";
    const std::size_t header = out.size();
    out.resize(header + image.data.size() * 4);
    const bool swap = std::endian::native != std::endian::little;
    for (int file_row = 0; file_row < image.height; ++file_row) {
        const int row = image.height - 1 - file_row;
        for (std::size_t k = 0; k < row_floats; ++k) {
            auto raw = std::bit_cast<std::uint32_t>(image.data[static_cast<std::size_t>(row) * row_floats + k]);
            if (swap) {
                raw = byteswap32(raw);
            }
            std::memcpy(out.data() + header + (static_cast<std::size_t>(file_row) * row_floats + k) * 4, &raw, 4);
        }
    }
    return out;
}

PfmImage read_pfm_image(const std::filesystem::path& path) {
    return parse_pfm(read_file(path));
}

void write_pfm_image(const PfmImage& image, const std::filesystem::path& path) {
    write_file_atomic(path, encode_pfm(image));
}

}  // namespace perspface
