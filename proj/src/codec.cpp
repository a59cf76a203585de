#include "lesionkit/codec.hpp"

#include <fstream>
#include <iterator>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace lesionkit::codec {

namespace {

const std::vector<int> kPngParams{cv::IMWRITE_PNG_COMPRESSION, 6};

std::vector<std::uint8_t> encode_mat(const cv::Mat& mat) {
    std::vector<std::uint8_t> buf;
    if (!cv::imencode(".png", mat, buf, kPngParams)) {
        throw Error("PNG encoding failed");
    }
    return buf;
}

}  // namespace

RasterImage decode(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw InvalidInput("empty image upload");
    const cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat mat;
    try {
        mat = cv::imdecode(raw, cv::IMREAD_UNCHANGED);
    } catch (const cv::Exception& e) {
        throw InvalidInput(std::string("image could not be decoded: ") + e.what());
    }
    if (mat.empty()) throw InvalidInput("image could not be decoded; must be a JPEG or PNG image");
    if (mat.depth() != CV_8U) throw InvalidInput("only 8-bit images are supported");
    if (mat.channels() == 2 || mat.channels() == 4) {
        throw InvalidInput("images with an alpha channel are not supported");
    }
    const int channels = mat.channels();
    std::vector<std::uint8_t> data(static_cast<std::size_t>(mat.rows) * mat.cols * channels);
    for (int y = 0; y < mat.rows; ++y) {
        const auto* row = mat.ptr<std::uint8_t>(y);
        auto* dst = data.data() + static_cast<std::size_t>(y) * mat.cols * channels;
        if (channels == 1) {
            std::copy(row, row + mat.cols, dst);
        } else {
            for (int x = 0; x < mat.cols; ++x) {
                dst[3 * x + 0] = row[3 * x + 2];
                dst[3 * x + 1] = row[3 * x + 1];
                dst[3 * x + 2] = row[3 * x + 0];
            }
        }
    }
    return RasterImage(mat.cols, mat.rows, channels, std::move(data));
}

RasterImage read_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return decode(bytes);
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
    if (img.channels() == 1) {
        cv::Mat mat(img.height(), img.width(), CV_8UC1, const_cast<std::uint8_t*>(img.data().data()));
        return encode_mat(mat);
    }
    cv::Mat mat(img.height(), img.width(), CV_8UC3);
    for (int y = 0; y < img.height(); ++y) {
        auto* row = mat.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.width(); ++x) {
            row[3 * x + 0] = img.at(x, y, 2);
            row[3 * x + 1] = img.at(x, y, 1);
            row[3 * x + 2] = img.at(x, y, 0);
        }
    }
    return encode_mat(mat);
}

std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask) {
    return encode_png(mask_to_image(mask));
}

std::vector<std::uint8_t> encode_plane_png16(const FloatPlane& plane) {
    cv::Mat mat(plane.height(), plane.width(), CV_16UC1);
    for (int y = 0; y < plane.height(); ++y) {
        auto* row = mat.ptr<std::uint16_t>(y);
        for (int x = 0; x < plane.width(); ++x) {
            const double v = std::clamp(plane.at(x, y), 0.0, 1.0);
            row[x] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
        }
    }
    return encode_mat(mat);
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open file: " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace lesionkit::codec
