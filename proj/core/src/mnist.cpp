#include "ecnp/mnist.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

#include "ecnp/error.hpp"

namespace ecnp {
namespace {

constexpr uint32_t kImageMagic = 0x00000803;

uint32_t read_u32_be(std::istream& in, const std::string& path) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (in.gcount() != 4)
        raise(Error::Kind::TruncatedFile, path + ": truncated IDX header");
    return (static_cast<uint32_t>(bytes[0]) << 24) | (static_cast<uint32_t>(bytes[1]) << 16) |
           (static_cast<uint32_t>(bytes[2]) << 8) | static_cast<uint32_t>(bytes[3]);
}

void write_u32_be(std::ostream& out, uint32_t v) {
    const unsigned char bytes[4] = {
        static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

}  // namespace

std::vector<Array> load_mnist_images(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Error::Kind::IoError, "cannot open image file: " + path);

    const uint32_t magic = read_u32_be(in, path);
    if (magic != kImageMagic)
        raise(Error::Kind::BadMagic,
              path + ": bad IDX magic " + std::to_string(magic) + ", expected " +
                  std::to_string(kImageMagic));
    const uint32_t count = read_u32_be(in, path);
    const uint32_t rows = read_u32_be(in, path);
    const uint32_t cols = read_u32_be(in, path);

    const size_t pixels = static_cast<size_t>(rows) * cols;
    std::vector<unsigned char> buf(pixels);
    std::vector<Array> images;
    images.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
        if (static_cast<size_t>(in.gcount()) != pixels)
            raise(Error::Kind::TruncatedFile,
                  path + ": truncated at image " + std::to_string(i) + " of " +
                      std::to_string(count));
        Array img = Array::zeros({static_cast<int64_t>(rows), static_cast<int64_t>(cols)});
        for (size_t p = 0; p < pixels; ++p)
            img[static_cast<int64_t>(p)] = static_cast<double>(buf[p]) / 255.0;
        images.push_back(std::move(img));
    }
    return images;
}

void write_idx_images(const std::string& path, const std::vector<Array>& images) {
    if (images.empty()) raise(Error::Kind::InvalidParams, "write_idx_images: empty image list");
    const int64_t rows = images.front().dim(0);
    const int64_t cols = images.front().dim(1);
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Error::Kind::IoError, "cannot create image file: " + path);
    write_u32_be(out, kImageMagic);
    write_u32_be(out, static_cast<uint32_t>(images.size()));
    write_u32_be(out, static_cast<uint32_t>(rows));
    write_u32_be(out, static_cast<uint32_t>(cols));
    std::vector<unsigned char> buf(static_cast<size_t>(rows * cols));
    for (const Array& img : images) {
        if (img.rank() != 2 || img.dim(0) != rows || img.dim(1) != cols)
            raise(Error::Kind::ShapeMismatch, "write_idx_images: inconsistent image shapes");
        for (int64_t p = 0; p < img.size(); ++p) {
            const double v = std::min(1.0, std::max(0.0, img[p]));
            buf[static_cast<size_t>(p)] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size()));
    }
    if (!out) raise(Error::Kind::IoError, "failed writing image file: " + path);
}

}  // namespace ecnp
