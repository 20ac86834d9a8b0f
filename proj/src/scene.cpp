#include "ddf/scene.hpp"

#include "ddf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ddf {

namespace {

constexpr double kBandSaturation = 0.5;
constexpr double kBandValue = 0.6;
constexpr double kMaskThreshold = 0.25;

// Uniform double in [0, 1) built from the top 53 bits of the engine output,
// so the mapping is pinned by arithmetic rather than by the standard
// library's distribution implementation.
double uniform01(std::mt19937_64& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

int radius_for(ObjectSize size, int hw) {
    const double scale = static_cast<double>(hw) / 32.0;
    switch (size) {
        case ObjectSize::Small: return std::max(2, static_cast<int>(std::lround(3 * scale)));
        case ObjectSize::Medium: return std::max(3, static_cast<int>(std::lround(5 * scale)));
        case ObjectSize::Large: return std::max(4, static_cast<int>(std::lround(7 * scale)));
    }
    throw std::invalid_argument("radius_for: bad size");
}

int object_margin(int hw) { return radius_for(ObjectSize::Large, hw) + 1; }

bool inside_shape(ObjectShape shape, double dx, double dy, int r) {
    switch (shape) {
        case ObjectShape::Circle: return dx * dx + dy * dy <= static_cast<double>(r) * r;
        case ObjectShape::Square: return std::abs(dx) <= r && std::abs(dy) <= r;
        case ObjectShape::Triangle:
            // Apex up, base down, inscribed in the [-r, r] box.
            return dy >= -r && dy <= r && std::abs(dx) <= (dy + r) * 0.5;
    }
    throw std::invalid_argument("inside_shape: bad shape");
}

struct MaskStats {
    std::int64_t area = 0;
    double centroid_x = 0.0;
    double centroid_y = 0.0;
    int min_x = 0, max_x = 0, min_y = 0, max_y = 0;
    double fill = 0.0;       // area / bounding-box area
    double asymmetry = 0.0;  // (centroid_y - bbox center_y) / bbox height
};

MaskStats mask_stats(const std::vector<std::uint8_t>& mask, int hw) {
    MaskStats s;
    s.min_x = hw;
    s.min_y = hw;
    s.max_x = -1;
    s.max_y = -1;
    double sx = 0.0, sy = 0.0;
    for (int y = 0; y < hw; ++y) {
        for (int x = 0; x < hw; ++x) {
            if (!mask[static_cast<std::size_t>(y) * hw + x]) continue;
            ++s.area;
            sx += x;
            sy += y;
            s.min_x = std::min(s.min_x, x);
            s.max_x = std::max(s.max_x, x);
            s.min_y = std::min(s.min_y, y);
            s.max_y = std::max(s.max_y, y);
        }
    }
    if (s.area == 0) return s;
    s.centroid_x = sx / static_cast<double>(s.area);
    s.centroid_y = sy / static_cast<double>(s.area);
    const double bw = s.max_x - s.min_x + 1;
    const double bh = s.max_y - s.min_y + 1;
    s.fill = static_cast<double>(s.area) / (bw * bh);
    s.asymmetry = (s.centroid_y - 0.5 * (s.min_y + s.max_y)) / bh;
    return s;
}

struct ShapeTemplate {
    ObjectShape shape;
    ObjectSize size;
    double area;
    double fill;
    double asymmetry;
    double centroid_dy;  // centroid offset below the true center, pixels
};

// Rasterizes each (shape, size) at a representative half-pixel offset with
// the same predicate the renderer uses; the resulting statistics calibrate
// classification and the triangle centroid correction.
std::vector<ShapeTemplate> shape_templates(int hw) {
    std::vector<ShapeTemplate> out;
    for (int si = 0; si < 3; ++si) {
        for (int zi = 0; zi < 3; ++zi) {
            const auto shape = static_cast<ObjectShape>(si);
            const auto size = static_cast<ObjectSize>(zi);
            const int r = radius_for(size, hw);
            const int canvas = 2 * r + 5;
            const double c = r + 2 + 0.5;
            std::vector<std::uint8_t> mask(static_cast<std::size_t>(canvas) * canvas, 0);
            for (int y = 0; y < canvas; ++y) {
                for (int x = 0; x < canvas; ++x) {
                    if (inside_shape(shape, x - c, y - c, r)) {
                        mask[static_cast<std::size_t>(y) * canvas + x] = 1;
                    }
                }
            }
            MaskStats s = mask_stats(mask, canvas);
            out.push_back({shape, size, static_cast<double>(s.area), s.fill, s.asymmetry,
                           s.centroid_y - c});
        }
    }
    return out;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void check_unit(double v, const char* name) {
    if (!(v >= 0.0) || !(v < 1.0)) {
        throw std::invalid_argument(std::string("render: ") + name + " must lie in [0, 1)");
    }
}

// Per-channel median over a set of pixel indices.
void channel_medians(const Array& data, const std::vector<std::int64_t>& pixels,
                     std::int64_t plane, double out[3]) {
    std::vector<double> tmp(pixels.size());
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < pixels.size(); ++i) tmp[i] = data[c * plane + pixels[i]];
        auto mid = tmp.begin() + static_cast<std::ptrdiff_t>(tmp.size() / 2);
        std::nth_element(tmp.begin(), mid, tmp.end());
        out[c] = *mid;
    }
}

double signed_hue_displacement(double from, double to) {
    double d = to - from;
    d -= std::floor(d + 0.5);  // wrap into [-0.5, 0.5)
    return d;
}

}  // namespace

const std::vector<std::string>& factor_names() {
    static const std::vector<std::string> names = {
        "floor_hue", "wall_hue",  "object_present", "object_shape",
        "object_hue", "object_x", "object_y",       "object_size"};
    return names;
}

const char* to_string(ObjectShape s) {
    switch (s) {
        case ObjectShape::Circle: return "circle";
        case ObjectShape::Square: return "square";
        case ObjectShape::Triangle: return "triangle";
    }
    return "?";
}

const char* to_string(ObjectSize s) {
    switch (s) {
        case ObjectSize::Small: return "small";
        case ObjectSize::Medium: return "medium";
        case ObjectSize::Large: return "large";
    }
    return "?";
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    const double hh = (h - std::floor(h)) * 6.0;
    const int sector = static_cast<int>(hh) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (sector) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

double rgb_to_hue(double r, double g, double b) {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    if (delta <= 0.0) return 0.0;
    double h;
    if (mx == r) {
        h = (g - b) / delta;
    } else if (mx == g) {
        h = 2.0 + (b - r) / delta;
    } else {
        h = 4.0 + (r - g) / delta;
    }
    h /= 6.0;
    h -= std::floor(h);
    return h;
}

Tensor render(const SceneFactors& f, int hw) {
    if (hw < 16) throw std::invalid_argument("render: image size must be >= 16");
    check_unit(f.floor_hue, "floor_hue");
    check_unit(f.wall_hue, "wall_hue");
    if (f.object_present != 0 && f.object_present != 1) {
        throw std::invalid_argument("render: object_present must be 0 or 1");
    }
    if (f.object_present == 1) {
        check_unit(f.object_hue, "object_hue");
        check_unit(f.object_x, "object_x");
        check_unit(f.object_y, "object_y");
    }

    const std::int64_t plane = static_cast<std::int64_t>(hw) * hw;
    Array data(3 * plane);

    double wall[3], floor_[3];
    hsv_to_rgb(f.wall_hue, kBandSaturation, kBandValue, wall[0], wall[1], wall[2]);
    hsv_to_rgb(f.floor_hue, kBandSaturation, kBandValue, floor_[0], floor_[1], floor_[2]);

    const int horizon = hw / 2;
    for (int y = 0; y < hw; ++y) {
        const double* band = y < horizon ? wall : floor_;
        for (int x = 0; x < hw; ++x) {
            for (int c = 0; c < 3; ++c) data[c * plane + y * hw + x] = band[c];
        }
    }

    if (f.object_present == 1) {
        double obj[3];
        hsv_to_rgb(f.object_hue, 1.0, 1.0, obj[0], obj[1], obj[2]);
        const int r = radius_for(f.object_size, hw);
        const int margin = object_margin(hw);
        const double span = hw - 1 - 2 * margin;
        const double cx = margin + f.object_x * span;
        const double cy = margin + f.object_y * span;
        for (int y = 0; y < hw; ++y) {
            for (int x = 0; x < hw; ++x) {
                if (inside_shape(f.object_shape, x - cx, y - cy, r)) {
                    for (int c = 0; c < 3; ++c) data[c * plane + y * hw + x] = obj[c];
                }
            }
        }
    }

    return Tensor::from_array({3, hw, hw}, std::move(data));
}

FactorScene sample_scene(std::uint64_t seed, int hw) {
    auto engine = make_engine(seed);
    SceneFactors f;
    f.floor_hue = uniform01(engine);
    f.wall_hue = uniform01(engine);
    f.object_present = static_cast<int>(engine() & 1);
    f.object_shape = static_cast<ObjectShape>(engine() % 3);
    f.object_hue = uniform01(engine);
    f.object_x = uniform01(engine);
    f.object_y = uniform01(engine);
    f.object_size = static_cast<ObjectSize>(engine() % 3);
    return FactorScene{f, render(f, hw)};
}

FactorEstimate extract_factors(const Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != image.dim(2)) {
        throw std::invalid_argument("extract_factors: expected a [3 x H x H] image, got " +
                                    shape_to_string(image.shape()));
    }
    const int hw = static_cast<int>(image.dim(1));
    const std::int64_t plane = static_cast<std::int64_t>(hw) * hw;
    const Array& data = image.data();
    const int horizon = hw / 2;

    FactorEstimate est;

    // Band reference colors from per-channel medians; the object occupies a
    // minority of any band so medians ignore it.
    std::vector<std::int64_t> wall_pixels, floor_pixels;
    for (int y = 0; y < hw; ++y) {
        for (int x = 0; x < hw; ++x) {
            (y < horizon ? wall_pixels : floor_pixels).push_back(y * hw + x);
        }
    }
    double wall_ref[3], floor_ref[3];
    channel_medians(data, wall_pixels, plane, wall_ref);
    channel_medians(data, floor_pixels, plane, floor_ref);

    est.wall_hue = rgb_to_hue(wall_ref[0], wall_ref[1], wall_ref[2]);
    est.floor_hue = rgb_to_hue(floor_ref[0], floor_ref[1], floor_ref[2]);

    // Hue confidence falls with the spread around the reference color and
    // with desaturation (a gray band has no recoverable hue).
    auto band_conf = [&](const std::vector<std::int64_t>& pixels, const double ref[3]) {
        double mad = 0.0;
        for (std::int64_t p : pixels) {
            for (int c = 0; c < 3; ++c) mad += std::abs(data[c * plane + p] - ref[c]);
        }
        mad /= static_cast<double>(pixels.size()) * 3.0;
        const double chroma = *std::max_element(ref, ref + 3) - *std::min_element(ref, ref + 3);
        return clamp01(1.0 - 4.0 * mad) * clamp01(chroma / 0.15);
    };
    est.conf_wall_hue = band_conf(wall_pixels, wall_ref);
    est.conf_floor_hue = band_conf(floor_pixels, floor_ref);

    // Object mask: pixels far from their band's reference color, despeckled.
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(plane), 0);
    for (int y = 0; y < hw; ++y) {
        const double* ref = y < horizon ? wall_ref : floor_ref;
        for (int x = 0; x < hw; ++x) {
            double d2 = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double diff = data[c * plane + y * hw + x] - ref[c];
                d2 += diff * diff;
            }
            if (std::sqrt(d2) > kMaskThreshold) mask[static_cast<std::size_t>(y) * hw + x] = 1;
        }
    }
    std::vector<std::uint8_t> despeckled(mask);
    for (int y = 0; y < hw; ++y) {
        for (int x = 0; x < hw; ++x) {
            if (!mask[static_cast<std::size_t>(y) * hw + x]) continue;
            int neighbors = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= hw || ny >= hw) continue;
                    neighbors += mask[static_cast<std::size_t>(ny) * hw + nx];
                }
            }
            if (neighbors < 2) despeckled[static_cast<std::size_t>(y) * hw + x] = 0;
        }
    }
    const MaskStats stats = mask_stats(despeckled, hw);

    const auto templates = shape_templates(hw);
    double min_area = templates.front().area, max_area = templates.front().area;
    for (const auto& t : templates) {
        min_area = std::min(min_area, t.area);
        max_area = std::max(max_area, t.area);
    }

    if (stats.area < 0.5 * min_area) {
        est.object_present = 0;
        est.conf_present = clamp01(1.0 - static_cast<double>(stats.area) / (0.5 * min_area));
        return est;
    }

    est.object_present = 1;
    if (stats.area > 2.0 * max_area) {
        // Too much of the image deviates from the bands to be one object;
        // report presence with low confidence and no usable object factors.
        est.conf_present = 0.3;
        est.conf_shape = est.conf_hue = est.conf_x = est.conf_y = est.conf_size = 0.3;
        est.object_x = clamp01(stats.centroid_x / (hw - 1));
        est.object_y = clamp01(stats.centroid_y / (hw - 1));
        return est;
    }
    est.conf_present = 0.95;

    // Shape from vertical asymmetry (triangle) then fill ratio (square vs
    // circle); margins sit far from the template statistics.
    if (stats.asymmetry > 0.09) {
        est.object_shape = ObjectShape::Triangle;
    } else if (stats.fill > 0.83) {
        est.object_shape = ObjectShape::Square;
    } else {
        est.object_shape = ObjectShape::Circle;
    }

    const ShapeTemplate* best = nullptr;
    double best_ratio = 0.0;
    for (const auto& t : templates) {
        if (t.shape != est.object_shape) continue;
        const double ratio = stats.area > t.area ? stats.area / t.area : t.area / stats.area;
        if (best == nullptr || ratio < best_ratio) {
            best = &t;
            best_ratio = ratio;
        }
    }
    est.object_size = best->size;
    est.conf_size = clamp01(1.0 / best_ratio);
    est.conf_shape = 0.9 * est.conf_size + 0.05;

    const int margin = object_margin(hw);
    const double span = hw - 1 - 2 * margin;
    est.object_x = clamp01((stats.centroid_x - margin) / span);
    est.object_y = clamp01((stats.centroid_y - best->centroid_dy - margin) / span);
    est.conf_x = est.conf_y = est.conf_size;

    std::vector<std::int64_t> object_pixels;
    for (std::int64_t p = 0; p < plane; ++p) {
        if (despeckled[static_cast<std::size_t>(p)]) object_pixels.push_back(p);
    }
    double obj_ref[3];
    channel_medians(data, object_pixels, plane, obj_ref);
    est.object_hue = rgb_to_hue(obj_ref[0], obj_ref[1], obj_ref[2]);
    const double chroma =
        *std::max_element(obj_ref, obj_ref + 3) - *std::min_element(obj_ref, obj_ref + 3);
    est.conf_hue = est.conf_size * clamp01(chroma / 0.3);
    return est;
}

FactorDisplacement factor_displacement(const FactorEstimate& base, const FactorEstimate& other,
                                       int factor) {
    if (factor < 0 || factor >= kFactorCount) {
        throw std::invalid_argument("factor_displacement: factor index out of range");
    }

    auto joint = [](double a, double b) { return std::min(a, b); };
    FactorDisplacement d;
    switch (factor) {
        case 0:  // floor_hue
            d.value = signed_hue_displacement(base.floor_hue, other.floor_hue) / 0.5;
            d.weight = joint(base.conf_floor_hue, other.conf_floor_hue);
            return d;
        case 1:  // wall_hue
            d.value = signed_hue_displacement(base.wall_hue, other.wall_hue) / 0.5;
            d.weight = joint(base.conf_wall_hue, other.conf_wall_hue);
            return d;
        case 2:  // object_present
            d.value = base.object_present == other.object_present
                          ? 0.0
                          : (other.object_present > base.object_present ? 1.0 : -1.0);
            d.weight = joint(base.conf_present, other.conf_present);
            return d;
        default: break;
    }

    // Remaining factors describe the object; they are only comparable when
    // both estimates actually see one.
    if (base.object_present != 1 || other.object_present != 1) return d;
    switch (factor) {
        case 3:  // object_shape
            d.value = base.object_shape == other.object_shape ? 0.0 : 1.0;
            d.weight = joint(base.conf_shape, other.conf_shape);
            return d;
        case 4:  // object_hue
            d.value = signed_hue_displacement(base.object_hue, other.object_hue) / 0.5;
            d.weight = joint(base.conf_hue, other.conf_hue);
            return d;
        case 5:  // object_x
            d.value = other.object_x - base.object_x;
            d.weight = joint(base.conf_x, other.conf_x);
            return d;
        case 6:  // object_y
            d.value = other.object_y - base.object_y;
            d.weight = joint(base.conf_y, other.conf_y);
            return d;
        case 7:  // object_size
            d.value = base.object_size == other.object_size ? 0.0 : 1.0;
            d.weight = joint(base.conf_size, other.conf_size);
            return d;
    }
    return d;
}

}  // namespace ddf
