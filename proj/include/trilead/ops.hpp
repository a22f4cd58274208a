#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "trilead/common.hpp"
#include "trilead/rng.hpp"
#include "trilead/tensor.hpp"

namespace trilead {

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

template <class S>
struct ConvParams {
    ArrayX<S> weight;  // [out_ch][in_ch/groups][kernel], flattened row-major
    ArrayX<S> bias;    // [out_ch] or empty
    int out_channels = 0;
    int in_channels = 0;
    int kernel = 0;
    int stride = 1;
    int padding = 0;  // symmetric zero padding
    int groups = 1;

    int in_per_group() const { return in_channels / groups; }
    int out_per_group() const { return out_channels / groups; }
    bool has_bias() const { return bias.size() > 0; }

    Eigen::Index weight_size() const {
        return static_cast<Eigen::Index>(out_channels) * in_per_group() * kernel;
    }
    Eigen::Index widx(int o, int c, int k) const {
        return (static_cast<Eigen::Index>(o) * in_per_group() + c) * kernel + k;
    }
};

template <class S>
void check_conv_params(const ConvParams<S>& p) {
    require(p.out_channels > 0 && p.in_channels > 0 && p.kernel > 0, "conv: non-positive dims");
    require(p.stride >= 1 && p.padding >= 0, "conv: bad stride/padding");
    require(p.groups >= 1 && p.in_channels % p.groups == 0 && p.out_channels % p.groups == 0,
            "conv: groups=" + std::to_string(p.groups) + " must divide in_channels=" +
                std::to_string(p.in_channels) + " and out_channels=" + std::to_string(p.out_channels));
    require(p.weight.size() == p.weight_size(), "conv: weight size " + std::to_string(p.weight.size()) +
                                                    " != expected " + std::to_string(p.weight_size()));
    require(!p.has_bias() || p.bias.size() == p.out_channels, "conv: bias size mismatch");
}

inline int conv_out_length(int length, int kernel, int stride, int padding) {
    return (length + 2 * padding - kernel) / stride + 1;
}

// out[b][o][t] = bias[o] + sum_{c,k} w[o][c][k] * x_pad[b][goff+c][t*stride+k].
// Per output element the summation order is ascending (c, k), identical to the
// naive quadruple loop, so results are bit-equal to the nested-loop reference.
template <class S>
Tensor3<S> conv1d_forward(const Tensor3<S>& x, const ConvParams<S>& p) {
    check_conv_params(p);
    require(x.channels == p.in_channels,
            "conv: input channels " + x.shape_str() + " incompatible with weight in_channels=" +
                std::to_string(p.in_channels));
    const int L = x.length;
    const int Lout = conv_out_length(L, p.kernel, p.stride, p.padding);
    require(Lout >= 1, "conv: output length " + std::to_string(Lout) + " < 1 for input " +
                           x.shape_str() + ", kernel=" + std::to_string(p.kernel));

    Tensor3<S> out(x.batch, p.out_channels, Lout);
    const int ipg = p.in_per_group();
    const int opg = p.out_per_group();
    for (int b = 0; b < x.batch; ++b) {
        for (int o = 0; o < p.out_channels; ++o) {
            auto orow = out.row(b, o);
            if (p.has_bias()) orow.setConstant(p.bias[o]);
            const int goff = (o / opg) * ipg;
            for (int c = 0; c < ipg; ++c) {
                const auto xrow = x.row(b, goff + c);
                for (int k = 0; k < p.kernel; ++k) {
                    const S w = p.weight[p.widx(o, c, k)];
                    // valid t range: 0 <= t*stride + k - padding <= L-1
                    const int num = p.padding - k;
                    const int t_lo = num <= 0 ? 0 : (num + p.stride - 1) / p.stride;
                    const int t_hi = std::min(Lout - 1, (L - 1 + p.padding - k) / p.stride);
                    if (t_lo > t_hi) continue;
                    const int n = t_hi - t_lo + 1;
                    const int x0 = t_lo * p.stride + k - p.padding;
                    if (p.stride == 1) {
                        orow.segment(t_lo, n) += w * xrow.segment(x0, n);
                    } else {
                        const S* xp = xrow.data() + x0;
                        S* op = orow.data() + t_lo;
                        for (int t = 0; t < n; ++t) op[t] += w * xp[t * p.stride];
                    }
                }
            }
        }
    }
    return out;
}

template <class S>
struct ConvGrads {
    Tensor3<S> grad_x;
    ArrayX<S> grad_weight;
    ArrayX<S> grad_bias;  // empty when the layer has no bias
};

template <class S>
ConvGrads<S> conv1d_backward(const Tensor3<S>& x, const ConvParams<S>& p,
                             const Tensor3<S>& grad_out) {
    check_conv_params(p);
    const int Lout = conv_out_length(x.length, p.kernel, p.stride, p.padding);
    require(grad_out.batch == x.batch && grad_out.channels == p.out_channels &&
                grad_out.length == Lout,
            "conv backward: grad_out " + grad_out.shape_str() + " does not match forward output [" +
                std::to_string(x.batch) + "," + std::to_string(p.out_channels) + "," +
                std::to_string(Lout) + "]");

    ConvGrads<S> g;
    g.grad_x = Tensor3<S>::zeros(x.batch, x.channels, x.length);
    g.grad_weight = ArrayX<S>::Zero(p.weight.size());
    if (p.has_bias()) g.grad_bias = ArrayX<S>::Zero(p.out_channels);

    const int ipg = p.in_per_group();
    const int opg = p.out_per_group();
    const int L = x.length;
    for (int b = 0; b < x.batch; ++b) {
        for (int o = 0; o < p.out_channels; ++o) {
            const auto go = grad_out.row(b, o);
            if (p.has_bias()) g.grad_bias[o] += go.sum();
            const int goff = (o / opg) * ipg;
            for (int c = 0; c < ipg; ++c) {
                const auto xrow = x.row(b, goff + c);
                auto gxrow = g.grad_x.row(b, goff + c);
                for (int k = 0; k < p.kernel; ++k) {
                    const int num = p.padding - k;
                    const int t_lo = num <= 0 ? 0 : (num + p.stride - 1) / p.stride;
                    const int t_hi = std::min(Lout - 1, (L - 1 + p.padding - k) / p.stride);
                    if (t_lo > t_hi) continue;
                    const int n = t_hi - t_lo + 1;
                    const int x0 = t_lo * p.stride + k - p.padding;
                    const S w = p.weight[p.widx(o, c, k)];
                    if (p.stride == 1) {
                        g.grad_weight[p.widx(o, c, k)] +=
                            (go.segment(t_lo, n) * xrow.segment(x0, n)).sum();
                        gxrow.segment(x0, n) += w * go.segment(t_lo, n);
                    } else {
                        const S* xp = xrow.data() + x0;
                        S* gxp = gxrow.data() + x0;
                        const S* gop = go.data() + t_lo;
                        S acc = 0;
                        for (int t = 0; t < n; ++t) {
                            acc += gop[t] * xp[t * p.stride];
                            gxp[t * p.stride] += w * gop[t];
                        }
                        g.grad_weight[p.widx(o, c, k)] += acc;
                    }
                }
            }
        }
    }
    return g;
}

// Depthwise-separable conv: per-channel depthwise pass, then 1x1 pointwise mix.
template <class S>
Tensor3<S> dsconv1d(const Tensor3<S>& x, const ConvParams<S>& depthwise,
                    const ConvParams<S>& pointwise) {
    require(depthwise.groups == x.channels && depthwise.in_channels == x.channels,
            "dsconv: depthwise must have groups == in_channels == " + std::to_string(x.channels) +
                " (got groups=" + std::to_string(depthwise.groups) + ")");
    require(pointwise.kernel == 1 && pointwise.groups == 1,
            "dsconv: pointwise must have kernel=1, groups=1");
    return conv1d_forward(conv1d_forward(x, depthwise), pointwise);
}

// Parameter count of a DSConv layer: in_ch*K (depthwise) + in_ch*out_ch (pointwise).
inline long long dsconv_param_count(int in_ch, int out_ch, int kernel, bool dw_bias = false,
                                    bool pw_bias = false) {
    long long n = static_cast<long long>(in_ch) * kernel + static_cast<long long>(in_ch) * out_ch;
    if (dw_bias) n += in_ch;
    if (pw_bias) n += out_ch;
    return n;
}

// ---------------------------------------------------------------------------
// Batch normalization
// ---------------------------------------------------------------------------

template <class S>
struct BatchNormState {
    ArrayX<S> gamma;
    ArrayX<S> beta;
    ArrayX<S> running_mean;
    ArrayX<S> running_var;
    S eps = static_cast<S>(1e-5);
    S momentum = static_cast<S>(0.1);  // new = (1-m)*old + m*batch
    Mode mode = Mode::train;

    static BatchNormState identity(int channels) {
        BatchNormState s;
        s.gamma = ArrayX<S>::Ones(channels);
        s.beta = ArrayX<S>::Zero(channels);
        s.running_mean = ArrayX<S>::Zero(channels);
        s.running_var = ArrayX<S>::Ones(channels);
        return s;
    }
    int channels() const { return static_cast<int>(gamma.size()); }
};

// Cache of train-mode batch statistics, needed for the backward pass.
template <class S>
struct BnCache {
    ArrayX<S> mean;
    ArrayX<S> invstd;
};

// Train mode: normalize by batch stats over (batch, length) per channel and
// update running statistics (unbiased variance, as the reference frameworks do).
// Eval mode: normalize by running statistics only.
template <class S>
Tensor3<S> batchnorm1d(const Tensor3<S>& x, BatchNormState<S>& s, BnCache<S>* cache = nullptr) {
    require(x.channels == s.channels(), "batchnorm: input " + x.shape_str() + " has " +
                                            std::to_string(x.channels) + " channels, state has " +
                                            std::to_string(s.channels()));
    Tensor3<S> out(x.batch, x.channels, x.length);
    const Eigen::Index n = static_cast<Eigen::Index>(x.batch) * x.length;
    if (s.mode == Mode::train) {
        require(n >= 2, "batchnorm train mode requires batch*length >= 2 (got " +
                            std::to_string(n) + "): variance undefined");
        ArrayX<S> mean(x.channels), invstd(x.channels);
        for (int c = 0; c < x.channels; ++c) {
            S sum = 0, sq = 0;
            for (int b = 0; b < x.batch; ++b) {
                sum += x.row(b, c).sum();
            }
            const S mu = sum / static_cast<S>(n);
            for (int b = 0; b < x.batch; ++b) {
                sq += (x.row(b, c) - mu).square().sum();
            }
            const S var = sq / static_cast<S>(n);
            mean[c] = mu;
            invstd[c] = S(1) / std::sqrt(var + s.eps);
            const S unbiased = sq / static_cast<S>(n - 1);
            s.running_mean[c] = (S(1) - s.momentum) * s.running_mean[c] + s.momentum * mu;
            s.running_var[c] = (S(1) - s.momentum) * s.running_var[c] + s.momentum * unbiased;
            for (int b = 0; b < x.batch; ++b) {
                out.row(b, c) = (x.row(b, c) - mu) * invstd[c] * s.gamma[c] + s.beta[c];
            }
        }
        if (cache) {
            cache->mean = std::move(mean);
            cache->invstd = std::move(invstd);
        }
    } else {
        for (int c = 0; c < x.channels; ++c) {
            const S invstd = S(1) / std::sqrt(s.running_var[c] + s.eps);
            for (int b = 0; b < x.batch; ++b) {
                out.row(b, c) = (x.row(b, c) - s.running_mean[c]) * invstd * s.gamma[c] + s.beta[c];
            }
        }
        if (cache) {
            cache->mean = s.running_mean;
            cache->invstd = (s.running_var + s.eps).sqrt().inverse();
        }
    }
    return out;
}

template <class S>
struct BnGrads {
    Tensor3<S> grad_x;
    ArrayX<S> grad_gamma;
    ArrayX<S> grad_beta;
};

template <class S>
BnGrads<S> batchnorm1d_backward(const Tensor3<S>& x, const BatchNormState<S>& s,
                                const BnCache<S>& cache, const Tensor3<S>& grad_out) {
    require(x.same_shape(grad_out), "batchnorm backward: grad_out " + grad_out.shape_str() +
                                        " != input " + x.shape_str());
    BnGrads<S> g;
    g.grad_x = Tensor3<S>::zeros(x.batch, x.channels, x.length);
    g.grad_gamma = ArrayX<S>::Zero(x.channels);
    g.grad_beta = ArrayX<S>::Zero(x.channels);
    const S n = static_cast<S>(static_cast<Eigen::Index>(x.batch) * x.length);

    for (int c = 0; c < x.channels; ++c) {
        const S mu = cache.mean[c];
        const S is = cache.invstd[c];
        S sum_dy = 0, sum_dy_xhat = 0;
        for (int b = 0; b < x.batch; ++b) {
            const auto dy = grad_out.row(b, c);
            sum_dy += dy.sum();
            sum_dy_xhat += (dy * (x.row(b, c) - mu) * is).sum();
        }
        g.grad_beta[c] = sum_dy;
        g.grad_gamma[c] = sum_dy_xhat;
        if (s.mode == Mode::train) {
            // dx = gamma*is/n * (n*dy - sum(dy) - xhat*sum(dy*xhat))
            for (int b = 0; b < x.batch; ++b) {
                const auto xhat = (x.row(b, c) - mu) * is;
                g.grad_x.row(b, c) = s.gamma[c] * is / n *
                                     (n * grad_out.row(b, c) - sum_dy - xhat * sum_dy_xhat);
            }
        } else {
            for (int b = 0; b < x.batch; ++b) {
                g.grad_x.row(b, c) = grad_out.row(b, c) * s.gamma[c] * is;
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

template <class S>
Tensor3<S> relu(const Tensor3<S>& x) {
    Tensor3<S> out = x;
    out.data = x.data.max(S(0));
    return out;
}

template <class S>
Tensor3<S> relu_backward(const Tensor3<S>& x, const Tensor3<S>& grad_out) {
    require(x.same_shape(grad_out), "relu backward: shape mismatch");
    Tensor3<S> g = grad_out;
    g.data = (x.data > S(0)).select(grad_out.data, ArrayX<S>::Zero(x.data.size()));
    return g;
}

template <class S>
ArrayX<S> sigmoid(const ArrayX<S>& x) {
    // 1/(1+exp(-x)), computed branch-wise for stability at large |x|.
    // Clamped to the open interval's representable neighbors so outputs stay
    // strictly inside (0,1) even where exp underflows.
    const S lo = std::numeric_limits<S>::min();
    const S hi = S(1) - std::numeric_limits<S>::epsilon() / S(2);
    ArrayX<S> out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const S v = x[i];
        S y;
        if (v >= S(0)) {
            y = S(1) / (S(1) + std::exp(-v));
        } else {
            const S e = std::exp(v);
            y = e / (S(1) + e);
        }
        out[i] = std::min(hi, std::max(lo, y));
    }
    return out;
}

template <class S>
ArrayX<S> sigmoid_backward(const ArrayX<S>& y, const ArrayX<S>& grad_out) {
    return grad_out * y * (S(1) - y);
}

// Row-wise softmax over the class axis of a 2-D logits view.
template <class S>
Mat<S> softmax(const Mat<S>& logits) {
    Mat<S> out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const S m = logits.row(r).maxCoeff();
        ArrayX<S> e = (logits.row(r).transpose().array() - m).exp();
        out.row(r) = (e / e.sum()).matrix().transpose();
    }
    return out;
}

// vjp of softmax: dx = s .* (dy - (dy . s))
template <class S>
Mat<S> softmax_backward(const Mat<S>& y, const Mat<S>& grad_out) {
    Mat<S> g(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        const S dot = y.row(r).dot(grad_out.row(r));
        g.row(r) = (y.row(r).array() * (grad_out.row(r).array() - dot)).matrix();
    }
    return g;
}

// ---------------------------------------------------------------------------
// Pooling
// ---------------------------------------------------------------------------

template <class S>
Tensor3<S> global_avg_pool(const Tensor3<S>& x) {
    require(x.length >= 1, "global_avg_pool: empty length");
    Tensor3<S> out(x.batch, x.channels, 1);
    for (int b = 0; b < x.batch; ++b)
        for (int c = 0; c < x.channels; ++c)
            out.at(b, c, 0) = x.row(b, c).mean();
    return out;
}

template <class S>
Tensor3<S> global_avg_pool_backward(const Tensor3<S>& x, const Tensor3<S>& grad_out) {
    require(grad_out.batch == x.batch && grad_out.channels == x.channels && grad_out.length == 1,
            "global_avg_pool backward: grad_out shape mismatch");
    Tensor3<S> g(x.batch, x.channels, x.length);
    const S inv = S(1) / static_cast<S>(x.length);
    for (int b = 0; b < x.batch; ++b)
        for (int c = 0; c < x.channels; ++c)
            g.row(b, c).setConstant(grad_out.at(b, c, 0) * inv);
    return g;
}

template <class S>
struct MaxPoolResult {
    Tensor3<S> y;
    std::vector<int> argmax;  // flat per output element, ties -> lowest input index
};

template <class S>
MaxPoolResult<S> maxpool1d(const Tensor3<S>& x, int kernel, int stride, int padding = 0) {
    require(kernel >= 1 && stride >= 1, "maxpool: bad kernel/stride");
    require(padding >= 0 && padding < kernel,
            "maxpool: padding must be < kernel so every window sees real samples");
    const int Lout = conv_out_length(x.length, kernel, stride, padding);
    require(Lout >= 1, "maxpool: output length < 1");
    MaxPoolResult<S> r;
    r.y = Tensor3<S>(x.batch, x.channels, Lout);
    r.argmax.assign(static_cast<std::size_t>(r.y.size()), -1);
    Eigen::Index oi = 0;
    for (int b = 0; b < x.batch; ++b) {
        for (int c = 0; c < x.channels; ++c) {
            const auto xr = x.row(b, c);
            for (int t = 0; t < Lout; ++t, ++oi) {
                S best = std::numeric_limits<S>::lowest();
                int bestl = -1;
                for (int k = 0; k < kernel; ++k) {
                    const int l = t * stride + k - padding;
                    if (l < 0 || l >= x.length) continue;  // padding never wins
                    if (xr[l] > best) {
                        best = xr[l];
                        bestl = l;
                    }
                }
                r.y.data[oi] = best;
                r.argmax[static_cast<std::size_t>(oi)] = bestl;
            }
        }
    }
    return r;
}

template <class S>
Tensor3<S> maxpool1d_backward(const Tensor3<S>& x, const MaxPoolResult<S>& fwd,
                              const Tensor3<S>& grad_out) {
    require(grad_out.same_shape(fwd.y), "maxpool backward: grad_out shape mismatch");
    Tensor3<S> g = Tensor3<S>::zeros(x.batch, x.channels, x.length);
    Eigen::Index oi = 0;
    for (int b = 0; b < x.batch; ++b)
        for (int c = 0; c < x.channels; ++c)
            for (int t = 0; t < grad_out.length; ++t, ++oi)
                g.row(b, c)[fwd.argmax[static_cast<std::size_t>(oi)]] += grad_out.data[oi];
    return g;
}

// ---------------------------------------------------------------------------
// Fully connected
// ---------------------------------------------------------------------------

// y = x * W^T + b, x: [B, n_in], W: [n_out, n_in], b: [n_out]
template <class S, class D>
Mat<S> fc_forward(const Mat<S>& x, const Eigen::MatrixBase<D>& weight, const ArrayX<S>& bias) {
    require(x.cols() == weight.cols(), "fc: input [" + std::to_string(x.rows()) + "," +
                                           std::to_string(x.cols()) + "] vs weight [" +
                                           std::to_string(weight.rows()) + "," +
                                           std::to_string(weight.cols()) + "]");
    require(bias.size() == 0 || bias.size() == weight.rows(), "fc: bias size mismatch");
    Mat<S> y = x * weight.transpose();
    if (bias.size() > 0) y.rowwise() += bias.matrix().transpose();
    return y;
}

template <class S>
struct FcGrads {
    Mat<S> grad_x;
    Mat<S> grad_weight;
    ArrayX<S> grad_bias;
};

template <class S, class D>
FcGrads<S> fc_backward(const Mat<S>& x, const Eigen::MatrixBase<D>& weight,
                       const Mat<S>& grad_out) {
    require(grad_out.rows() == x.rows() && grad_out.cols() == weight.rows(),
            "fc backward: grad_out shape mismatch");
    FcGrads<S> g;
    g.grad_x = grad_out * weight;
    g.grad_weight = grad_out.transpose() * x;
    g.grad_bias = grad_out.colwise().sum().transpose().array();
    return g;
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

template <class S>
struct DropoutResult {
    Tensor3<S> y;
    ArrayX<S> scale;  // per-element multiplier (0 or 1/(1-rate)); empty in eval mode
};

template <class S>
DropoutResult<S> dropout(const Tensor3<S>& x, double rate, Mode mode, Rng& rng) {
    require(rate >= 0.0 && rate < 1.0,
            "dropout: rate " + std::to_string(rate) + " outside [0, 1)");
    DropoutResult<S> r;
    r.y = x;
    if (mode == Mode::eval || rate == 0.0) return r;
    const S keep_scale = static_cast<S>(1.0 / (1.0 - rate));
    r.scale = ArrayX<S>(x.data.size());
    for (Eigen::Index i = 0; i < x.data.size(); ++i)
        r.scale[i] = rng.next_double() < rate ? S(0) : keep_scale;
    r.y.data = x.data * r.scale;
    return r;
}

template <class S>
Tensor3<S> dropout_backward(const DropoutResult<S>& fwd, const Tensor3<S>& grad_out) {
    Tensor3<S> g = grad_out;
    if (fwd.scale.size() > 0) g.data = grad_out.data * fwd.scale;
    return g;
}

// ---------------------------------------------------------------------------
// Losses (mean reduction; gradients returned alongside the scalar)
// ---------------------------------------------------------------------------

template <class S>
struct LossResult {
    S loss;
    Mat<S> grad_logits;
};

template <class S>
LossResult<S> cross_entropy(const Mat<S>& logits, const std::vector<int>& targets) {
    require(static_cast<Eigen::Index>(targets.size()) == logits.rows(),
            "cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                std::to_string(logits.rows()) + " logit rows");
    const Eigen::Index B = logits.rows(), C = logits.cols();
    for (int t : targets)
        require(t >= 0 && t < C, "cross_entropy: target index " + std::to_string(t) +
                                     " out of range [0," + std::to_string(C) + ")");
    LossResult<S> r;
    r.grad_logits = Mat<S>(B, C);
    S total = 0;
    for (Eigen::Index b = 0; b < B; ++b) {
        const S m = logits.row(b).maxCoeff();
        ArrayX<S> shifted = logits.row(b).transpose().array() - m;
        const S lse = std::log(shifted.exp().sum());
        total += lse - shifted[targets[static_cast<std::size_t>(b)]];
        ArrayX<S> p = (shifted - lse).exp();
        p[targets[static_cast<std::size_t>(b)]] -= S(1);
        r.grad_logits.row(b) = (p / static_cast<S>(B)).matrix().transpose();
    }
    r.loss = total / static_cast<S>(B);
    return r;
}

// Numerically stable binary cross-entropy with logits; targets in {0,1}.
// Mean over all elements, matching the common framework reduction.
template <class S>
LossResult<S> binary_cross_entropy(const Mat<S>& logits, const Mat<S>& targets) {
    require(logits.rows() == targets.rows() && logits.cols() == targets.cols(),
            "bce: logits/targets shape mismatch");
    const S n = static_cast<S>(logits.size());
    LossResult<S> r;
    r.grad_logits = Mat<S>(logits.rows(), logits.cols());
    S total = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            const S z = logits(i, j), y = targets(i, j);
            // max(z,0) - z*y + log(1 + exp(-|z|))
            total += std::max(z, S(0)) - z * y + std::log1p(std::exp(-std::abs(z)));
            S sig;
            if (z >= S(0)) {
                sig = S(1) / (S(1) + std::exp(-z));
            } else {
                const S e = std::exp(z);
                sig = e / (S(1) + e);
            }
            r.grad_logits(i, j) = (sig - y) / n;
        }
    }
    r.loss = total / n;
    return r;
}

}  // namespace trilead
