#pragma once

// Independent naive references used as test oracles. These deliberately do not
// share code with the library implementations they check.

#include <cmath>
#include <vector>

#include "trilead/ops.hpp"
#include "trilead/tensor.hpp"

namespace oracle {

using trilead::ArrayX;
using trilead::ConvParams;
using trilead::Mat;
using trilead::Tensor3;

// Quadruple-loop convolution over a materialized zero-padded copy of the input.
template <class S>
Tensor3<S> naive_conv1d(const Tensor3<S>& x, const ConvParams<S>& p) {
    const int L = x.length;
    const int Lp = L + 2 * p.padding;
    const int Lout = (Lp - p.kernel) / p.stride + 1;
    const int ipg = p.in_channels / p.groups;
    const int opg = p.out_channels / p.groups;

    std::vector<S> xpad(static_cast<std::size_t>(x.batch) * x.channels * Lp, S(0));
    for (int b = 0; b < x.batch; ++b)
        for (int c = 0; c < x.channels; ++c)
            for (int l = 0; l < L; ++l)
                xpad[(static_cast<std::size_t>(b) * x.channels + c) * Lp + p.padding + l] =
                    x.at(b, c, l);

    Tensor3<S> out(x.batch, p.out_channels, Lout);
    for (int b = 0; b < x.batch; ++b) {
        for (int o = 0; o < p.out_channels; ++o) {
            const int goff = (o / opg) * ipg;
            for (int t = 0; t < Lout; ++t) {
                S acc = p.has_bias() ? p.bias[o] : S(0);
                for (int c = 0; c < ipg; ++c)
                    for (int k = 0; k < p.kernel; ++k)
                        acc += p.weight[p.widx(o, c, k)] *
                               xpad[(static_cast<std::size_t>(b) * x.channels + goff + c) * Lp +
                                    t * p.stride + k];
                out.at(b, o, t) = acc;
            }
        }
    }
    return out;
}

// Double-loop matrix multiply for the FC layer.
template <class S>
Mat<S> naive_fc(const Mat<S>& x, const Mat<S>& w, const ArrayX<S>& b) {
    Mat<S> y(x.rows(), w.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index o = 0; o < w.rows(); ++o) {
            S acc = b.size() > 0 ? b[o] : S(0);
            for (Eigen::Index c = 0; c < x.cols(); ++c) acc += x(r, c) * w(o, c);
            y(r, o) = acc;
        }
    }
    return y;
}

// Straight-line transcription of the attention equations:
//   alpha = sigmoid(FC2(dropout(BN(FC1(concat[f1,f2,f3])))))  (dropout inactive)
//   f_merged = sum_i alpha_i * f_i
// BN here runs in eval mode with the given running statistics.
template <class S>
void straightline_attention(const Mat<S>& f1, const Mat<S>& f2, const Mat<S>& f3,
                            const Mat<S>& w1, const ArrayX<S>& b1, const ArrayX<S>& bn_gamma,
                            const ArrayX<S>& bn_beta, const ArrayX<S>& bn_mean,
                            const ArrayX<S>& bn_var, S bn_eps, const Mat<S>& w2,
                            const ArrayX<S>& b2, Mat<S>& f_merged, Mat<S>& alpha) {
    const Eigen::Index B = f1.rows(), D = f1.cols(), H = w1.rows();
    Mat<S> cat(B, 3 * D);
    cat << f1, f2, f3;
    Mat<S> h(B, H);
    for (Eigen::Index r = 0; r < B; ++r)
        for (Eigen::Index o = 0; o < H; ++o) {
            S acc = b1[o];
            for (Eigen::Index c = 0; c < 3 * D; ++c) acc += cat(r, c) * w1(o, c);
            h(r, o) = acc;
        }
    for (Eigen::Index r = 0; r < B; ++r)
        for (Eigen::Index o = 0; o < H; ++o)
            h(r, o) = (h(r, o) - bn_mean[o]) / std::sqrt(bn_var[o] + bn_eps) * bn_gamma[o] +
                      bn_beta[o];
    alpha = Mat<S>(B, 3);
    for (Eigen::Index r = 0; r < B; ++r)
        for (Eigen::Index o = 0; o < 3; ++o) {
            S acc = b2[o];
            for (Eigen::Index c = 0; c < H; ++c) acc += h(r, c) * w2(o, c);
            alpha(r, o) = S(1) / (S(1) + std::exp(-acc));
        }
    f_merged = Mat<S>::Zero(B, D);
    for (Eigen::Index r = 0; r < B; ++r)
        for (Eigen::Index d = 0; d < D; ++d)
            f_merged(r, d) = alpha(r, 0) * f1(r, d) + alpha(r, 1) * f2(r, d) +
                             alpha(r, 2) * f3(r, d);
}

}  // namespace oracle
