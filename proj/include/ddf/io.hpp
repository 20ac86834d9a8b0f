#pragma once

#include "ddf/host.hpp"
#include "ddf/tensor.hpp"

#include <string>
#include <vector>

namespace ddf {

// Binary P6 PPM with 8-bit channels; values are rounded from [0, 1] so the
// bytes are an exact function of the image.
void write_ppm(const std::string& path, const Tensor& image);
Tensor read_ppm(const std::string& path);

// Horizontal strip of equally sized images, left to right.
Tensor hstack_images(const std::vector<Tensor>& images);

// "step,loss" rows; wall-clock timing is deliberately kept out so reruns
// of the same config produce identical files.
void write_loss_csv(const std::string& path, const TrainingLog& log);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Deterministic shortest-faithful formatting for doubles in text outputs.
std::string format_double(double v);

}  // namespace ddf
