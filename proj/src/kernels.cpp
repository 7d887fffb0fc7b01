#include "mcmcnet/kernels.hpp"

#include "mcmcnet/error.hpp"
#include "mcmcnet/prior.hpp"

#include <algorithm>
#include <cmath>

namespace mcmcnet::kernels {

namespace {

void check_dense(std::size_t w, std::size_t b, std::size_t x, std::size_t y) {
    if (b != y || w != x * y) throw InvalidArgument("dense kernel: shape mismatch");
}

void check_conv(const ConvShape& s, std::size_t w, std::size_t b, std::size_t in, std::size_t out) {
    if (w != s.weight_size() || b != static_cast<std::size_t>(s.out_ch) || in != s.in_size() ||
        out != s.out_size()) {
        throw InvalidArgument("conv kernel: shape mismatch");
    }
}

// Range of output rows (or columns) for which the input offset k - 1 stays
// in bounds under true convolution: out[y] += w[k] * in[y - k + 1].
inline int lo(int k) { return std::max(0, k - 1); }
inline int hi(int k, int n) { return std::min(n, n + k - 1); }

} // namespace

// ---------------------------------------------------------------- serial

namespace serial {

void dense_forward(std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y) {
    check_dense(w.size(), b.size(), x.size(), y.size());
    const std::size_t n_in = x.size();
    const std::size_t n_out = y.size();
    for (std::size_t j = 0; j < n_out; ++j) {
        double acc = b[j];
        for (std::size_t i = 0; i < n_in; ++i) acc += w[i * n_out + j] * x[i];
        y[j] = acc;
    }
}

void dense_backward(std::span<const double> w, std::span<const double> x, std::span<const double> dy,
                    std::span<double> dw, std::span<double> db, std::span<double> dx) {
    check_dense(w.size(), db.size(), x.size(), dy.size());
    const std::size_t n_in = x.size();
    const std::size_t n_out = dy.size();
    for (std::size_t i = 0; i < n_in; ++i) {
        for (std::size_t j = 0; j < n_out; ++j) dw[i * n_out + j] += x[i] * dy[j];
    }
    for (std::size_t j = 0; j < n_out; ++j) db[j] += dy[j];
    if (!dx.empty()) {
        for (std::size_t i = 0; i < n_in; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n_out; ++j) acc += w[i * n_out + j] * dy[j];
            dx[i] = acc;
        }
    }
}

void conv3x3_forward(const ConvShape& s, std::span<const double> w, std::span<const double> b,
                     std::span<const double> in, std::span<double> out) {
    check_conv(s, w.size(), b.size(), in.size(), out.size());
    const int H = s.height, W = s.width;
    for (int o = 0; o < s.out_ch; ++o) {
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                double acc = b[o];
                for (int i = 0; i < s.in_ch; ++i) {
                    for (int ky = 0; ky < 3; ++ky) {
                        for (int kx = 0; kx < 3; ++kx) {
                            const int yy = y - ky + 1;
                            const int xx = x - kx + 1;
                            if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
                            acc += w[((o * s.in_ch + i) * 3 + ky) * 3 + kx] * in[(i * H + yy) * W + xx];
                        }
                    }
                }
                out[(o * H + y) * W + x] = acc;
            }
        }
    }
}

void conv3x3_backward(const ConvShape& s, std::span<const double> w, std::span<const double> in,
                      std::span<const double> dout, std::span<double> dw, std::span<double> db,
                      std::span<double> din) {
    check_conv(s, dw.size(), db.size(), in.size(), dout.size());
    const int H = s.height, W = s.width;
    for (int o = 0; o < s.out_ch; ++o) {
        double acc = 0.0;
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) acc += dout[(o * H + y) * W + x];
        }
        db[o] += acc;
        for (int i = 0; i < s.in_ch; ++i) {
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    double g = 0.0;
                    for (int y = 0; y < H; ++y) {
                        for (int x = 0; x < W; ++x) {
                            const int yy = y - ky + 1;
                            const int xx = x - kx + 1;
                            if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
                            g += dout[(o * H + y) * W + x] * in[(i * H + yy) * W + xx];
                        }
                    }
                    dw[((o * s.in_ch + i) * 3 + ky) * 3 + kx] += g;
                }
            }
        }
    }
    if (din.empty()) return;
    if (din.size() != s.in_size()) throw InvalidArgument("conv kernel: shape mismatch");
    for (int i = 0; i < s.in_ch; ++i) {
        for (int yy = 0; yy < H; ++yy) {
            for (int xx = 0; xx < W; ++xx) {
                double acc = 0.0;
                for (int o = 0; o < s.out_ch; ++o) {
                    for (int ky = 0; ky < 3; ++ky) {
                        for (int kx = 0; kx < 3; ++kx) {
                            const int y = yy + ky - 1;
                            const int x = xx + kx - 1;
                            if (y < 0 || y >= H || x < 0 || x >= W) continue;
                            acc += w[((o * s.in_ch + i) * 3 + ky) * 3 + kx] * dout[(o * H + y) * W + x];
                        }
                    }
                }
                din[(i * H + yy) * W + xx] = acc;
            }
        }
    }
}

Eigen::MatrixXd matern_covariance(std::span<const Point> points, const MaternParams& p) {
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = std::hypot(points[i].x - points[j].x, points[i].y - points[j].y);
            cov(i, j) = matern(d, p);
        }
    }
    return cov;
}

} // namespace serial

// ---------------------------------------------------------------- parallel

namespace parallel {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMat>;
using RowMap = Eigen::Map<RowMat>;

// Column matrix (in*9) x (H*W): row (i, ky, kx) holds in[i][y-ky+1][x-kx+1].
RowMat im2col(const ConvShape& s, std::span<const double> in) {
    const int H = s.height, W = s.width;
    RowMat col = RowMat::Zero(static_cast<Eigen::Index>(s.in_ch) * 9, H * W);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < s.in_ch * 9; ++r) {
        const int i = r / 9, ky = (r % 9) / 3, kx = r % 3;
        const double* src = in.data() + static_cast<std::size_t>(i) * H * W;
        double* dst = col.data() + static_cast<std::size_t>(r) * H * W;
        for (int y = lo(ky); y < hi(ky, H); ++y) {
            const double* srow = src + (y - ky + 1) * W - kx + 1;
            for (int x = lo(kx); x < hi(kx, W); ++x) dst[y * W + x] = srow[x];
        }
    }
    return col;
}

} // namespace

void dense_forward(std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y) {
    check_dense(w.size(), b.size(), x.size(), y.size());
    const std::size_t n_in = x.size();
    const std::size_t n_out = y.size();
    std::copy(b.begin(), b.end(), y.begin());
    // Each y[j] sees the same operation sequence whatever the buffer alignment.
    for (std::size_t i = 0; i < n_in; ++i) {
        const double xi = x[i];
        const double* row = w.data() + i * n_out;
        double* yd = y.data();
#pragma omp simd
        for (std::size_t j = 0; j < n_out; ++j) yd[j] += row[j] * xi;
    }
}

void dense_backward(std::span<const double> w, std::span<const double> x, std::span<const double> dy,
                    std::span<double> dw, std::span<double> db, std::span<double> dx) {
    check_dense(w.size(), db.size(), x.size(), dy.size());
    if (dw.size() != w.size()) throw InvalidArgument("dense kernel: shape mismatch");
    if (!dx.empty() && dx.size() != x.size()) throw InvalidArgument("dense kernel: shape mismatch");
    const auto n_in = static_cast<std::ptrdiff_t>(x.size());
    const std::size_t n_out = dy.size();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n_in; ++i) {
        const double xi = x[i];
        double* row = dw.data() + i * n_out;
#pragma omp simd
        for (std::size_t j = 0; j < n_out; ++j) row[j] += xi * dy[j];
        if (!dx.empty()) {
            const double* wrow = w.data() + i * n_out;
            double acc = 0.0;
            for (std::size_t j = 0; j < n_out; ++j) acc += wrow[j] * dy[j];
            dx[i] = acc;
        }
    }
    for (std::size_t j = 0; j < n_out; ++j) db[j] += dy[j];
}

// Eigen picks scalar or vector paths by buffer alignment, so every operand
// handed to it is first copied into Eigen-owned storage. Results then do
// not depend on where the caller's vectors live.

void conv3x3_forward(const ConvShape& s, std::span<const double> w, std::span<const double> b,
                     std::span<const double> in, std::span<double> out) {
    check_conv(s, w.size(), b.size(), in.size(), out.size());
    const RowMat col = im2col(s, in);
    const RowMat wm = ConstRowMap(w.data(), s.out_ch, static_cast<Eigen::Index>(s.in_ch) * 9);
    RowMat om = wm * col;
    for (int o = 0; o < s.out_ch; ++o) om.row(o).array() += b[o];
    std::copy(om.data(), om.data() + om.size(), out.begin());
}

void conv3x3_backward(const ConvShape& s, std::span<const double> w, std::span<const double> in,
                      std::span<const double> dout, std::span<double> dw, std::span<double> db,
                      std::span<double> din) {
    check_conv(s, dw.size(), db.size(), in.size(), dout.size());
    const int H = s.height, W = s.width;
    const Eigen::Index hw = static_cast<Eigen::Index>(H) * W;
    const Eigen::Index k = static_cast<Eigen::Index>(s.in_ch) * 9;
    const RowMat gm = ConstRowMap(dout.data(), s.out_ch, hw);
    const RowMat col = im2col(s, in);
    const RowMat gw = gm * col.transpose();
    for (Eigen::Index i = 0; i < gw.size(); ++i) dw[i] += gw.data()[i];
    for (int o = 0; o < s.out_ch; ++o) db[o] += gm.row(o).sum();
    if (din.empty()) return;
    if (din.size() != s.in_size()) throw InvalidArgument("conv kernel: shape mismatch");
    const RowMat wm = ConstRowMap(w.data(), s.out_ch, k);
    const RowMat dcol = wm.transpose() * gm;
    std::fill(din.begin(), din.end(), 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < s.in_ch; ++i) {
        double* plane = din.data() + static_cast<std::size_t>(i) * H * W;
        for (int t = 0; t < 9; ++t) {
            const int ky = t / 3, kx = t % 3;
            const double* src = dcol.data() + (static_cast<std::size_t>(i) * 9 + t) * hw;
            for (int y = lo(ky); y < hi(ky, H); ++y) {
                double* drow = plane + (y - ky + 1) * W - kx + 1;
                for (int x = lo(kx); x < hi(kx, W); ++x) drow[x] += src[y * W + x];
            }
        }
    }
}

Eigen::MatrixXd matern_covariance(std::span<const Point> points, const MaternParams& p) {
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd cov(n, n);
#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double d = std::hypot(points[i].x - points[j].x, points[i].y - points[j].y);
            const double k = matern(d, p);
            cov(i, j) = k;
            cov(j, i) = k;
        }
    }
    return cov;
}

} // namespace parallel

} // namespace mcmcnet::kernels
