#pragma once

// Compute kernels shared by the surrogate network and the prior.
//
// Every kernel exists twice: `serial` is the plain reference loop nest kept
// for testing, `parallel` is the fast path (OpenMP loops and Eigen GEMM, which
// threads through OpenMP as well). The two agree to rounding, not bitwise;
// each is deterministic for a fixed thread count.

#include "mcmcnet/mesh.hpp"

#include <Eigen/Dense>

#include <span>

namespace mcmcnet {
struct MaternParams;
}

namespace mcmcnet::kernels {

struct ConvShape {
    int in_ch = 1;
    int out_ch = 1;
    int height = 16;
    int width = 16;

    std::size_t weight_size() const { return static_cast<std::size_t>(out_ch) * in_ch * 9; }
    std::size_t in_size() const { return static_cast<std::size_t>(in_ch) * height * width; }
    std::size_t out_size() const { return static_cast<std::size_t>(out_ch) * height * width; }
};

namespace serial {

/// y = W^T x + b with W stored row-major as (in x out).
void dense_forward(std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y);
/// dW += dy x^T, db += dy, and dx = W^T dy when `dx` is non-empty.
void dense_backward(std::span<const double> w, std::span<const double> x, std::span<const double> dy,
                    std::span<double> dw, std::span<double> db, std::span<double> dx);

/// 3x3 convolution, stride 1, zero padding, channel-major (c, y, x) layout.
/// Weights are (out, in, 3, 3).
void conv3x3_forward(const ConvShape& s, std::span<const double> w, std::span<const double> b,
                     std::span<const double> in, std::span<double> out);
/// dw += ..., db += ..., din = ... (overwritten) when non-empty.
void conv3x3_backward(const ConvShape& s, std::span<const double> w, std::span<const double> in,
                      std::span<const double> dout, std::span<double> dw, std::span<double> db,
                      std::span<double> din);

Eigen::MatrixXd matern_covariance(std::span<const Point> points, const MaternParams& p);

} // namespace serial

namespace parallel {

void dense_forward(std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y);
void dense_backward(std::span<const double> w, std::span<const double> x, std::span<const double> dy,
                    std::span<double> dw, std::span<double> db, std::span<double> dx);
void conv3x3_forward(const ConvShape& s, std::span<const double> w, std::span<const double> b,
                     std::span<const double> in, std::span<double> out);
void conv3x3_backward(const ConvShape& s, std::span<const double> w, std::span<const double> in,
                      std::span<const double> dout, std::span<double> dw, std::span<double> db,
                      std::span<double> din);
Eigen::MatrixXd matern_covariance(std::span<const Point> points, const MaternParams& p);

} // namespace parallel

} // namespace mcmcnet::kernels
