// Gramian angular field encoding of a univariate series.
//
// The series is min-max rescaled to [-1, 1], mapped to polar angles
// phi_i = arccos(x_i), and expanded into an n x n image:
//   GASF[i][j] = cos(phi_i + phi_j) = x_i x_j - sqrt(1-x_i^2) sqrt(1-x_j^2)
//   GADF[i][j] = sin(phi_i - phi_j)
// GASF is symmetric with diagonal 2 x_i^2 - 1; GADF is antisymmetric with a
// zero diagonal. Both triangles are filled from one computation, so the
// symmetries hold exactly.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nirsgaf/recording.hpp"

namespace nirsgaf::gaf {

struct RescaledSeries {
    std::vector<double> values;  // every element in [-1, 1]
    double original_min = 0.0;
    double original_max = 0.0;
};

enum class GafKind { GASF, GADF };

const char* gaf_kind_name(GafKind k);
GafKind gaf_kind_from_name(const std::string& name);

struct GafImage {
    std::vector<double> matrix;  // n x n, row-major
    std::size_t n = 0;
    GafKind kind = GafKind::GASF;
    std::string channel_id;
    Task task = Task::MI;

    double at(std::size_t i, std::size_t j) const { return matrix[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return matrix[i * n + j]; }
};

// Min-max rescale to [-1, 1]; a constant series maps to all zeros.
RescaledSeries rescale(const std::vector<double>& x);

// phi_i = arccos(x_i), in [0, pi].
std::vector<double> polar_angles(const RescaledSeries& s);

GafImage gasf(const RescaledSeries& s);
GafImage gadf(const RescaledSeries& s);

// Piecewise aggregate approximation: mean of each of target_n near-equal
// contiguous segments (segment k covers [floor(k*n/m), floor((k+1)*n/m))).
std::vector<double> paa_downsample(const std::vector<double>& x, std::size_t target_n);

// Writes the raw matrix as CSV (17 significant digits) and an 8-bit ASCII
// PGM with [-1,1] mapped linearly onto [0,255], rounding half up.
void export_image(const GafImage& img, const std::string& csv_path,
                  const std::string& pgm_path);

// Reads a matrix CSV written by export_image.
GafImage import_image_csv(const std::string& csv_path);

}  // namespace nirsgaf::gaf
