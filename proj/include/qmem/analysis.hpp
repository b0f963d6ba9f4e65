#pragma once

// Least-squares fits of the absorption dip and the readout decay, plus the
// Gaussian width deconvolution.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace qmem::analysis {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> params;
    /// Standard errors from the residual variance and (J^T J)^-1.
    std::vector<double> errors;
    double rss = 0.0;
    bool converged = false;
    /// Data carry no information on the shape (flat dip).
    bool degenerate = false;
    int iterations = 0;

    double operator[](const std::string& name) const;
};

inline constexpr double kFitTolerance = 1e-10;
inline constexpr int kMaxIterations = 1000;

/// 1 - depth exp(-4 ln2 (x - center)^2 / fwhm^2); params {depth, fwhm, center}.
FitResult fit_gaussian_dip(std::span<const Point> points);

/// amplitude 2^(-x / half_life) + offset; params {amplitude, half_life, offset}.
FitResult fit_half_life(std::span<const Point> points);

/// sqrt(w_a^2 - w_w^2) for Gaussian, transform-limited pulses.
double deconvolve_width(double w_a_fs, double w_w_fs);

/// Two numeric columns with a header line.
std::vector<Point> read_points_csv(std::istream& in);
void write_points_csv(std::ostream& out, std::span<const Point> points, const std::string& x_name,
                      const std::string& y_name);
/// name,value,error rows plus rss and converged.
void write_fit_csv(std::ostream& out, const FitResult& fit);

}  // namespace qmem::analysis
