#include "tdsr/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <vector>

#include "tdsr/errors.hpp"

namespace tdsr {

Tensor load_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw IoError("cannot read PNG: " + path + " (" + image.message + ")");
    image.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> bytes(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError("cannot decode PNG: " + path + " (" + image.message + ")");
    }
    Tensor img(static_cast<int>(image.height), static_cast<int>(image.width), 3);
    size_t n = 0;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = bytes[n++] / 255.0;
    return img;
}

void save_png(const std::string& path, const Tensor& img) {
    if (img.c != 3) throw IoError("save_png: need a 3-channel image");
    std::vector<unsigned char> bytes(static_cast<size_t>(img.h) * img.w * 3);
    size_t n = 0;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(img.at(y, x, c), 0.0, 1.0);
                bytes[n++] = static_cast<unsigned char>(std::lround(v * 255.0));
            }

    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.w);
    image.height = static_cast<png_uint_32>(img.h);
    image.format = PNG_FORMAT_RGB;

    const std::string tmp = path + ".tmp";
    if (!png_image_write_to_file(&image, tmp.c_str(), 0, bytes.data(), 0, nullptr))
        throw IoError("cannot write PNG: " + tmp + " (" + image.message + ")");
    std::filesystem::rename(tmp, path);
}

}  // namespace tdsr
