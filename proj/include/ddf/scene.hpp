#pragma once

#include "ddf/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ddf {

enum class ObjectShape { Circle = 0, Square = 1, Triangle = 2 };
enum class ObjectSize { Small = 0, Medium = 1, Large = 2 };

inline constexpr int kFactorCount = 8;
// Factor order used by effect matrices, reports and CSV headers.
const std::vector<std::string>& factor_names();

// Ground-truth generative factors of one synthetic scene. Hues live in
// [0, 1) (circular), positions in [0, 1).
struct SceneFactors {
    double floor_hue = 0.0;
    double wall_hue = 0.0;
    int object_present = 0;
    ObjectShape object_shape = ObjectShape::Circle;
    double object_hue = 0.0;
    double object_x = 0.5;
    double object_y = 0.5;
    ObjectSize object_size = ObjectSize::Medium;
};

// Factors plus the image they deterministically render to.
struct FactorScene {
    SceneFactors factors;
    Tensor image;  // [3 x H x W], values in [0, 1]
};

// Per-factor estimates recovered from an image, each with a confidence in
// [0, 1]. Object fields are meaningful only when object_present == 1.
struct FactorEstimate {
    double floor_hue = 0.0;
    double wall_hue = 0.0;
    int object_present = 0;
    ObjectShape object_shape = ObjectShape::Circle;
    double object_hue = 0.0;
    double object_x = 0.5;
    double object_y = 0.5;
    ObjectSize object_size = ObjectSize::Medium;

    double conf_floor_hue = 0.0;
    double conf_wall_hue = 0.0;
    double conf_present = 0.0;
    double conf_shape = 0.0;
    double conf_hue = 0.0;
    double conf_x = 0.0;
    double conf_y = 0.0;
    double conf_size = 0.0;
};

// Factors drawn independently and uniformly from their domains; the image
// is rendered at hw x hw. Same (seed, hw) reproduces the scene bit for bit.
FactorScene sample_scene(std::uint64_t seed, int hw = 32);

// Deterministic rasterization: muted wall band on top, muted floor band
// below, and a vivid shape when present. No anti-aliasing.
Tensor render(const SceneFactors& factors, int hw = 32);

// Analytic, learning-free factor recovery: band medians for the hues, a
// color-distance mask for the object, template matching on (area, fill,
// vertical asymmetry) for shape and size. Low confidence flags unreliable
// estimates instead of failing.
FactorEstimate extract_factors(const Tensor& image);

// Signed displacement between two estimates for factor index f (order of
// factor_names()), normalized so 1 is the largest possible change; the
// weight is the joint confidence of the two estimates for that factor.
struct FactorDisplacement {
    double value = 0.0;
    double weight = 0.0;
};
FactorDisplacement factor_displacement(const FactorEstimate& base, const FactorEstimate& other,
                                       int factor);

// HSV (h in [0,1), s, v in [0,1]) to RGB.
void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b);
// Hue of an RGB color; 0 when the color is gray.
double rgb_to_hue(double r, double g, double b);

const char* to_string(ObjectShape s);
const char* to_string(ObjectSize s);

}  // namespace ddf
