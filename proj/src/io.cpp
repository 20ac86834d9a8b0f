#include "ddf/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddf {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_ppm(const std::string& path, const Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 3) {
        throw std::invalid_argument("write_ppm: expected a [3 x H x W] image, got " +
                                    shape_to_string(image.shape()));
    }
    const std::int64_t h = image.dim(1);
    const std::int64_t w = image.dim(2);
    const std::int64_t plane = h * w;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::invalid_argument("write_ppm: cannot open '" + path + "'");
    out << "P6\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(image.data()[c * plane + y * w + x], 0.0, 1.0);
                row[static_cast<std::size_t>(x) * 3 + static_cast<std::size_t>(c)] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw std::runtime_error("write_ppm: write failed for '" + path + "'");
}

Tensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("read_ppm: cannot open '" + path + "'");
    std::string magic;
    std::int64_t w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || maxval != 255 || w <= 0 || h <= 0) {
        throw std::invalid_argument("read_ppm: '" + path + "' is not an 8-bit P6 file");
    }
    in.get();  // single whitespace after the header
    std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw std::invalid_argument("read_ppm: truncated pixel data in '" + path + "'");
    const std::int64_t plane = w * h;
    Array data(3 * plane);
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                data[c * plane + y * w + x] =
                    bytes[(static_cast<std::size_t>(y) * w + x) * 3 + static_cast<std::size_t>(c)] /
                    255.0;
            }
        }
    }
    return Tensor::from_array({3, h, w}, std::move(data));
}

Tensor hstack_images(const std::vector<Tensor>& images) {
    if (images.empty()) throw std::invalid_argument("hstack_images: empty list");
    const std::int64_t h = images.front().dim(1);
    const std::int64_t w = images.front().dim(2);
    for (const Tensor& im : images) {
        if (im.rank() != 3 || im.dim(0) != 3 || im.dim(1) != h || im.dim(2) != w) {
            throw std::invalid_argument("hstack_images: images must share shape");
        }
    }
    const std::int64_t cols = static_cast<std::int64_t>(images.size());
    const std::int64_t out_w = cols * w;
    Array data(3 * h * out_w);
    for (std::int64_t k = 0; k < cols; ++k) {
        const Array& src = images[static_cast<std::size_t>(k)].data();
        for (int c = 0; c < 3; ++c) {
            for (std::int64_t y = 0; y < h; ++y) {
                data.segment(c * h * out_w + y * out_w + k * w, w) =
                    src.segment(c * h * w + y * w, w);
            }
        }
    }
    return Tensor::from_array({3, h, out_w}, std::move(data));
}

void write_loss_csv(const std::string& path, const TrainingLog& log) {
    std::ostringstream os;
    os << "step,loss\n";
    for (const auto& s : log.steps) {
        os << s.step << ',' << format_double(s.loss) << '\n';
    }
    write_text_file(path, os.str());
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("read_text_file: cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::invalid_argument("write_text_file: cannot open '" + path + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write_text_file: write failed for '" + path + "'");
}

}  // namespace ddf
