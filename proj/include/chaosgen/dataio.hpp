#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chaosgen/dynamics.hpp"

namespace chaosgen {

// Malformed input file; offset is the byte position where parsing failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// N_s x N_v matrix of transformed datapoints in [-1,1].
struct Dataset {
    MatrixXd samples;
    std::optional<std::pair<int, int>> image_shape;  // rows x cols
    std::string source;
    std::vector<std::uint8_t> labels;  // optional, diagnostics only
};

// pixel transform [0,255] <-> [-1,1]
double forward_transform(double pixel);
double inverse_transform_pixel(double value);  // clamped, rounded to nearest int

Dataset load_idx(const std::string& images_path, const std::string& labels_path = "");

// m distinct rows, deterministic in (seed, epoch_index)
MatrixXd minibatch(const Dataset& dataset, int m, std::uint64_t seed, std::uint64_t epoch_index);

enum class SyntheticKind { TwoClusters, BarsAndStripes, DownscaledDigits };
SyntheticKind parse_synthetic_kind(const std::string& name);

Dataset synthetic_dataset(SyntheticKind kind, int n_s, int n_v, std::uint64_t seed,
                          double noise = 0.1);

// Area-averaged rescale of a square grayscale image to out_side x out_side.
MatrixXd block_average_rescale(const MatrixXd& img, int out_side);

void write_pgm(const std::string& path, int rows, int cols,
               const std::vector<std::uint8_t>& pixels);

// samples (one image per row, values in [-1,1]) laid out on a grid and
// written as binary PGM after the inverse pixel transform
void export_image_grid(const MatrixXd& samples, std::pair<int, int> image_shape, int grid_cols,
                       const std::string& path);

// Exports {W_ia + A_ia}_i for each chosen hidden index a as a PGM grid, values
// divided by g then linearly mapped to [0,255]; scale bounds go to a sidecar
// text file at path + ".scale.txt".
void export_receptive_fields(const RestrictedParams& params, const std::vector<int>& neuron_indices,
                             const std::string& path);

}  // namespace chaosgen
