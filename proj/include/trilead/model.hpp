#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "trilead/config.hpp"
#include "trilead/ops.hpp"
#include "trilead/rng.hpp"
#include "trilead/tensor.hpp"

namespace trilead {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct StageConfig {
    int blocks = 2;
    int out_ch = 64;
    int kernel = 7;
    int stride = 1;  // stride of the first block in the stage
};

struct BackboneConfig {
    int stem_kernel = 15;
    int stem_stride = 3;
    int stem_out = 64;
    bool stem_dsconv = true;
    bool stem_pool = true;
    int pool_kernel = 3;
    int pool_stride = 2;
    std::vector<StageConfig> stages = {{2, 64, 7, 1}, {2, 128, 7, 2}, {2, 256, 7, 2}, {2, 512, 7, 2}};
    int se_reduction = 16;

    int feature_dim() const { return stages.back().out_ch; }

    // ResNet-style layer accounting: stem conv + per-block convs + the final
    // FC that closes an 18-layer network. The default config counts 18.
    int main_layer_count() const {
        int n = 1;
        for (const auto& s : stages) n += 2 * s.blocks;
        return n + 1;
    }
};

struct ModelConfig {
    BackboneConfig backbone;
    int n_leads = 3;
    int input_length = 5000;
    int n_classes = 4;
    TaskKind task = TaskKind::multi_class;
    int attention_hidden = 0;  // 0 -> feature_dim
    double attention_dropout = 0.3;

    int attention_hidden_dim() const {
        return attention_hidden > 0 ? attention_hidden : backbone.feature_dim();
    }
};

// Round-trippable key-value form; embedded in checkpoints.
KvConfig model_config_to_kv(const ModelConfig& cfg);
ModelConfig model_config_from_kv(const KvConfig& kv);
std::vector<std::string> model_config_keys();

// ---------------------------------------------------------------------------
// Parameter plumbing
// ---------------------------------------------------------------------------

template <class S>
struct ParamRef {
    std::string name;
    std::vector<int> shape;
    ArrayX<S>* value = nullptr;
    ArrayX<S>* grad = nullptr;
    bool prunable = false;  // conv/FC weight tensors only
    bool decay = false;     // weight decay applies (not BN params, not biases)
};

template <class S>
struct BufferRef {
    std::string name;
    std::vector<int> shape;
    ArrayX<S>* value = nullptr;
};

namespace detail {

template <class S>
void kaiming_uniform(ArrayX<S>& w, int fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < w.size(); ++i)
        w[i] = static_cast<S>(rng.uniform(-bound, bound));
}

template <class S>
void bias_uniform(ArrayX<S>& b, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < b.size(); ++i)
        b[i] = static_cast<S>(rng.uniform(-bound, bound));
}

template <class S>
Mat<S> squeeze_to_mat(const Tensor3<S>& t) {
    Mat<S> m(t.batch, t.channels);
    for (int b = 0; b < t.batch; ++b)
        for (int c = 0; c < t.channels; ++c) m(b, c) = t.at(b, c, 0);
    return m;
}

template <class S>
Tensor3<S> mat_to_tensor3(const Mat<S>& m) {
    Tensor3<S> t(static_cast<int>(m.rows()), static_cast<int>(m.cols()), 1);
    for (int b = 0; b < t.batch; ++b)
        for (int c = 0; c < t.channels; ++c) t.at(b, c, 0) = m(b, c);
    return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Layers (each caches what its backward needs)
// ---------------------------------------------------------------------------

template <class S>
struct Conv1dLayer {
    ConvParams<S> p;
    ArrayX<S> grad_weight;
    ArrayX<S> grad_bias;
    Tensor3<S> cached_x;

    void setup(int in_ch, int out_ch, int kernel, int stride, int padding, int groups, bool bias) {
        p.in_channels = in_ch;
        p.out_channels = out_ch;
        p.kernel = kernel;
        p.stride = stride;
        p.padding = padding;
        p.groups = groups;
        p.weight = ArrayX<S>::Zero(p.weight_size());
        grad_weight = ArrayX<S>::Zero(p.weight_size());
        if (bias) {
            p.bias = ArrayX<S>::Zero(out_ch);
            grad_bias = ArrayX<S>::Zero(out_ch);
        }
    }

    void init(Rng& rng) {
        const int fan_in = p.in_per_group() * p.kernel;
        detail::kaiming_uniform(p.weight, fan_in, rng);
        if (p.has_bias()) detail::bias_uniform(p.bias, fan_in, rng);
    }

    Tensor3<S> forward(const Tensor3<S>& x, bool cache) {
        if (cache) cached_x = x;
        return conv1d_forward(x, p);
    }

    Tensor3<S> backward(const Tensor3<S>& grad_out) {
        auto g = conv1d_backward(cached_x, p, grad_out);
        grad_weight += g.grad_weight;
        if (p.has_bias()) grad_bias += g.grad_bias;
        return std::move(g.grad_x);
    }

    void visit(const std::string& prefix, std::vector<ParamRef<S>>& out) {
        out.push_back({prefix + ".weight",
                       {p.out_channels, p.in_per_group(), p.kernel},
                       &p.weight,
                       &grad_weight,
                       true,
                       true});
        if (p.has_bias())
            out.push_back({prefix + ".bias", {p.out_channels}, &p.bias, &grad_bias, false, false});
    }
};

template <class S>
struct BatchNormLayer {
    BatchNormState<S> s;
    ArrayX<S> grad_gamma;
    ArrayX<S> grad_beta;
    Tensor3<S> cached_x;
    BnCache<S> cache;

    void setup(int channels) {
        s = BatchNormState<S>::identity(channels);
        grad_gamma = ArrayX<S>::Zero(channels);
        grad_beta = ArrayX<S>::Zero(channels);
    }

    Tensor3<S> forward(const Tensor3<S>& x, Mode mode, bool keep) {
        s.mode = mode;
        if (keep) cached_x = x;
        return batchnorm1d(x, s, keep ? &cache : nullptr);
    }

    Tensor3<S> backward(const Tensor3<S>& grad_out) {
        auto g = batchnorm1d_backward(cached_x, s, cache, grad_out);
        grad_gamma += g.grad_gamma;
        grad_beta += g.grad_beta;
        return std::move(g.grad_x);
    }

    void visit(const std::string& prefix, std::vector<ParamRef<S>>& out) {
        out.push_back({prefix + ".gamma", {s.channels()}, &s.gamma, &grad_gamma, false, false});
        out.push_back({prefix + ".beta", {s.channels()}, &s.beta, &grad_beta, false, false});
    }
    void visit_buffers(const std::string& prefix, std::vector<BufferRef<S>>& out) {
        out.push_back({prefix + ".running_mean", {s.channels()}, &s.running_mean});
        out.push_back({prefix + ".running_var", {s.channels()}, &s.running_var});
    }
};

// Flat FC layer on [B, n_in] features; weight stored flat for the param store.
template <class S>
struct FcLayer {
    int n_out = 0, n_in = 0;
    ArrayX<S> weight;  // [n_out * n_in], row-major
    ArrayX<S> bias;    // may be empty
    ArrayX<S> grad_weight;
    ArrayX<S> grad_bias;
    Mat<S> cached_x;

    void setup(int out, int in, bool with_bias) {
        n_out = out;
        n_in = in;
        weight = ArrayX<S>::Zero(static_cast<Eigen::Index>(out) * in);
        grad_weight = ArrayX<S>::Zero(weight.size());
        if (with_bias) {
            bias = ArrayX<S>::Zero(out);
            grad_bias = ArrayX<S>::Zero(out);
        }
    }

    void init(Rng& rng) {
        detail::kaiming_uniform(weight, n_in, rng);
        if (bias.size() > 0) detail::bias_uniform(bias, n_in, rng);
    }

    Eigen::Map<const Mat<S>> w() const {
        return Eigen::Map<const Mat<S>>(weight.data(), n_out, n_in);
    }

    Mat<S> forward(const Mat<S>& x, bool cache) {
        if (cache) cached_x = x;
        return fc_forward(x, w(), bias);
    }

    Mat<S> backward(const Mat<S>& grad_out) {
        auto g = fc_backward(cached_x, w(), grad_out);
        Eigen::Map<Mat<S>>(grad_weight.data(), n_out, n_in) += g.grad_weight;
        if (bias.size() > 0) grad_bias += g.grad_bias;
        return std::move(g.grad_x);
    }

    void visit(const std::string& prefix, std::vector<ParamRef<S>>& out) {
        out.push_back({prefix + ".weight", {n_out, n_in}, &weight, &grad_weight, true, true});
        if (bias.size() > 0)
            out.push_back({prefix + ".bias", {n_out}, &bias, &grad_bias, false, false});
    }
};

// Squeeze-and-excitation: GAP -> FC(C -> C/r) -> ReLU -> FC -> sigmoid gate.
template <class S>
struct SEBlock {
    FcLayer<S> fc1, fc2;
    Tensor3<S> cached_x;
    Mat<S> cached_a1;     // pre-relu hidden
    Mat<S> cached_r1;     // post-relu hidden
    Mat<S> cached_gate;   // sigmoid output [B, C]

    void setup(int channels, int reduction) {
        const int hidden = std::max(1, channels / reduction);
        fc1.setup(hidden, channels, true);
        fc2.setup(channels, hidden, true);
    }
    void init(Rng& rng) {
        fc1.init(rng);
        fc2.init(rng);
    }

    Tensor3<S> forward(const Tensor3<S>& x, bool cache) {
        if (cache) cached_x = x;
        Mat<S> pooled = detail::squeeze_to_mat(global_avg_pool(x));
        Mat<S> a1 = fc1.forward(pooled, cache);
        Mat<S> r1 = a1.array().max(S(0)).matrix();
        Mat<S> a2 = fc2.forward(r1, cache);
        Mat<S> gate(a2.rows(), a2.cols());
        for (Eigen::Index r = 0; r < a2.rows(); ++r) {
            ArrayX<S> row = a2.row(r).transpose().array();
            gate.row(r) = sigmoid(row).matrix().transpose();
        }
        if (cache) {
            cached_a1 = a1;
            cached_r1 = r1;
            cached_gate = gate;
        }
        Tensor3<S> y(x.batch, x.channels, x.length);
        for (int b = 0; b < x.batch; ++b)
            for (int c = 0; c < x.channels; ++c) y.row(b, c) = x.row(b, c) * gate(b, c);
        return y;
    }

    Tensor3<S> backward(const Tensor3<S>& grad_out) {
        const auto& x = cached_x;
        Tensor3<S> gx(x.batch, x.channels, x.length);
        Mat<S> ggate(x.batch, x.channels);
        for (int b = 0; b < x.batch; ++b)
            for (int c = 0; c < x.channels; ++c) {
                gx.row(b, c) = grad_out.row(b, c) * cached_gate(b, c);
                ggate(b, c) = (grad_out.row(b, c) * x.row(b, c)).sum();
            }
        Mat<S> ga2 =
            (ggate.array() * cached_gate.array() * (S(1) - cached_gate.array())).matrix();
        Mat<S> gr1 = fc2.backward(ga2);
        Mat<S> ga1 = (cached_a1.array() > S(0)).select(gr1, Mat<S>::Zero(gr1.rows(), gr1.cols()));
        Mat<S> gpooled = fc1.backward(ga1);
        const S inv = S(1) / static_cast<S>(x.length);
        for (int b = 0; b < x.batch; ++b)
            for (int c = 0; c < x.channels; ++c) gx.row(b, c) += gpooled(b, c) * inv;
        return gx;
    }

    void visit(const std::string& prefix, std::vector<ParamRef<S>>& out) {
        fc1.visit(prefix + ".fc1", out);
        fc2.visit(prefix + ".fc2", out);
    }
};

// SE-residual block: DSConv-BN-ReLU x2 + SE + skip (projection when shape changes).
template <class S>
struct ResidualBlock {
    Conv1dLayer<S> conv1_dw, conv1_pw, conv2_dw, conv2_pw;
    BatchNormLayer<S> bn1, bn2;
    SEBlock<S> se;
    bool has_proj = false;
    Conv1dLayer<S> proj_conv;
    BatchNormLayer<S> proj_bn;
    Tensor3<S> cached_b1;   // bn1 output (pre-relu)
    Tensor3<S> cached_sum;  // pre-activation of the block output

    void setup(int in_ch, int out_ch, int kernel, int stride, int se_reduction) {
        conv1_dw.setup(in_ch, in_ch, kernel, stride, kernel / 2, in_ch, false);
        conv1_pw.setup(in_ch, out_ch, 1, 1, 0, 1, false);
        bn1.setup(out_ch);
        conv2_dw.setup(out_ch, out_ch, kernel, 1, kernel / 2, out_ch, false);
        conv2_pw.setup(out_ch, out_ch, 1, 1, 0, 1, false);
        bn2.setup(out_ch);
        se.setup(out_ch, se_reduction);
        has_proj = (in_ch != out_ch) || (stride != 1);
        if (has_proj) {
            proj_conv.setup(in_ch, out_ch, 1, stride, 0, 1, false);
            proj_bn.setup(out_ch);
        }
    }

    void init(Rng& rng) {
        conv1_dw.init(rng);
        conv1_pw.init(rng);
        conv2_dw.init(rng);
        conv2_pw.init(rng);
        se.init(rng);
        if (has_proj) proj_conv.init(rng);
    }

    Tensor3<S> forward(const Tensor3<S>& x, Mode mode, bool cache) {
        Tensor3<S> h = conv1_pw.forward(conv1_dw.forward(x, cache), cache);
        Tensor3<S> b1 = bn1.forward(h, mode, cache);
        if (cache) cached_b1 = b1;
        Tensor3<S> r1 = relu(b1);
        h = conv2_pw.forward(conv2_dw.forward(r1, cache), cache);
        h = bn2.forward(h, mode, cache);
        h = se.forward(h, cache);
        Tensor3<S> skip =
            has_proj ? proj_bn.forward(proj_conv.forward(x, cache), mode, cache) : x;
        require(h.same_shape(skip), "residual block: branch " + h.shape_str() + " vs skip " +
                                        skip.shape_str());
        h.data += skip.data;
        if (cache) cached_sum = h;
        return relu(h);
    }

    Tensor3<S> backward(const Tensor3<S>& grad_out) {
        Tensor3<S> gsum = relu_backward(cached_sum, grad_out);
        Tensor3<S> gx_skip =
            has_proj ? proj_conv.backward(proj_bn.backward(gsum)) : gsum;
        Tensor3<S> g = se.backward(gsum);
        g = bn2.backward(g);
        g = conv2_dw.backward(conv2_pw.backward(g));
        g = relu_backward(cached_b1, g);
        g = bn1.backward(g);
        g = conv1_dw.backward(conv1_pw.backward(g));
        g.data += gx_skip.data;
        return g;
    }

    void visit(const std::string& prefix, std::vector<ParamRef<S>>& out) {
        conv1_dw.visit(prefix + ".conv1.dw", out);
        conv1_pw.visit(prefix + ".conv1.pw", out);
        bn1.visit(prefix + ".bn1", out);
        conv2_dw.visit(prefix + ".conv2.dw", out);
        conv2_pw.visit(prefix + ".conv2.pw", out);
        bn2.visit(prefix + ".bn2", out);
        se.visit(prefix + ".se", out);
        if (has_proj) {
            proj_conv.visit(prefix + ".proj.conv", out);
            proj_bn.visit(prefix + ".proj.bn", out);
        }
    }
    void visit_buffers(const std::string& prefix, std::vector<BufferRef<S>>& out) {
        bn1.visit_buffers(prefix + ".bn1", out);
        bn2.visit_buffers(prefix + ".bn2", out);
        if (has_proj) proj_bn.visit_buffers(prefix + ".proj.bn", out);
    }
};

// One redesigned 1D-SEResNet backbone: large-kernel DSConv stem, four stages
// of SE-residual blocks, global average pooling into a flat feature.
template <class S>
struct Backbone {
    BackboneConfig cfg;
    Conv1dLayer<S> stem_dw, stem_pw, stem_conv;  // dsconv pair or single conv
    BatchNormLayer<S> stem_bn;
    std::vector<ResidualBlock<S>> blocks;
    // caches
    Tensor3<S> cached_stem_bn_out;
    Tensor3<S> cached_pool_in;
    MaxPoolResult<S> pool_fwd;
    Tensor3<S> final_activation;  // A: last stage output, post-relu
    Tensor3<S> final_activation_grad;

    void setup(const BackboneConfig& c) {
        cfg = c;
        const int pad = c.stem_kernel / 2;
        if (c.stem_dsconv) {
            stem_dw.setup(1, 1, c.stem_kernel, c.stem_stride, pad, 1, false);
            stem_pw.setup(1, c.stem_out, 1, 1, 0, 1, false);
        } else {
            stem_conv.setup(1, c.stem_out, c.stem_kernel, c.stem_stride, pad, 1, false);
        }
        stem_bn.setup(c.stem_out);
        int in_ch = c.stem_out;
        blocks.clear();
        for (const auto& st : c.stages) {
            for (int b = 0; b < st.blocks; ++b) {
                ResidualBlock<S> blk;
                blk.setup(in_ch, st.out_ch, st.kernel, b == 0 ? st.stride : 1, c.se_reduction);
                blocks.push_back(std::move(blk));
                in_ch = st.out_ch;
            }
        }
    }

    void init(Rng& rng) {
        if (cfg.stem_dsconv) {
            stem_dw.init(rng);
            stem_pw.init(rng);
        } else {
            stem_conv.init(rng);
        }
        for (auto& b : blocks) b.init(rng);
    }

    // lead: [B, 1, L] -> feature [B, D]
    Mat<S> forward(const Tensor3<S>& lead, Mode mode, bool cache) {
        require(lead.channels == 1, "backbone expects a single-channel lead, got " +
                                        lead.shape_str());
        Tensor3<S> h;
        if (cfg.stem_dsconv) {
            h = stem_pw.forward(stem_dw.forward(lead, cache), cache);
        } else {
            h = stem_conv.forward(lead, cache);
        }
        h = stem_bn.forward(h, mode, cache);
        if (cache) cached_stem_bn_out = h;
        h = relu(h);
        if (cfg.stem_pool) {
            if (cache) cached_pool_in = h;
            auto r = maxpool1d(h, cfg.pool_kernel, cfg.pool_stride, cfg.pool_kernel / 2);
            if (cache) pool_fwd = r;
            h = std::move(r.y);
        }
        for (auto& b : blocks) h = b.forward(h, mode, cache);
        if (cache) final_activation = h;
        return detail::squeeze_to_mat(global_avg_pool(h));
    }

    // grad_feature: [B, D] -> grad wrt input lead; also records grad at the
    // final conv-stage activation (used by the explanation module).
    Tensor3<S> backward(const Mat<S>& grad_feature) {
        Tensor3<S> g = global_avg_pool_backward(final_activation,
                                                detail::mat_to_tensor3(grad_feature));
        final_activation_grad = g;
        for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) g = it->backward(g);
        if (cfg.stem_pool) g = maxpool1d_backward(cached_pool_in, pool_fwd, g);
        g = relu_backward(cached_stem_bn_out, g);
        g = stem_bn.backward(g);
        if (cfg.stem_dsconv) {
            g = stem_dw.backward(stem_pw.backward(g));
        } else {
            g = stem_conv.backward(g);
        }
        return g;
    }

    void visit(const std::string& prefix, std::vector<ParamRef<S>>& out) {
        if (cfg.stem_dsconv) {
            stem_dw.visit(prefix + ".stem.dw", out);
            stem_pw.visit(prefix + ".stem.pw", out);
        } else {
            stem_conv.visit(prefix + ".stem.conv", out);
        }
        stem_bn.visit(prefix + ".stem.bn", out);
        for (std::size_t i = 0; i < blocks.size(); ++i)
            blocks[i].visit(prefix + ".block" + std::to_string(i), out);
    }
    void visit_buffers(const std::string& prefix, std::vector<BufferRef<S>>& out) {
        stem_bn.visit_buffers(prefix + ".stem.bn", out);
        for (std::size_t i = 0; i < blocks.size(); ++i)
            blocks[i].visit_buffers(prefix + ".block" + std::to_string(i), out);
    }
};

// Lead-wise attention: alpha = sigmoid(FC2(dropout(BN(FC1(concat[f1,f2,f3]))))),
// f_merged = sum_i alpha_i * f_i. Scores are per-lead sigmoids, not a softmax;
// nothing downstream assumes they sum to 1.
template <class S>
struct AttentionMerge {
    int feature_dim = 0;
    double dropout_rate = 0.3;
    FcLayer<S> fc1, fc2;
    BatchNormLayer<S> bn;
    // caches
    Mat<S> cached_f[3];
    Mat<S> cached_alpha;
    DropoutResult<S> drop_fwd;

    void setup(int d, int hidden, double drop) {
        feature_dim = d;
        dropout_rate = drop;
        fc1.setup(hidden, 3 * d, true);
        bn.setup(hidden);
        fc2.setup(3, hidden, true);
    }
    void init(Rng& rng) {
        fc1.init(rng);
        fc2.init(rng);
    }

    struct Result {
        Mat<S> f_merged;
        Mat<S> alpha;  // [B, 3]
    };

    Result forward(const Mat<S>& f1, const Mat<S>& f2, const Mat<S>& f3, Mode mode, Rng* rng,
                   bool cache) {
        require(f1.rows() == f2.rows() && f2.rows() == f3.rows() && f1.cols() == feature_dim &&
                    f2.cols() == feature_dim && f3.cols() == feature_dim,
                "attention: feature shape mismatch");
        const Eigen::Index B = f1.rows();
        Mat<S> cat(B, 3 * feature_dim);
        cat << f1, f2, f3;
        Mat<S> a1 = fc1.forward(cat, cache);
        Tensor3<S> bn_out = bn.forward(detail::mat_to_tensor3(a1), mode, cache);
        Tensor3<S> dropped;
        if (mode == Mode::train && dropout_rate > 0.0) {
            require(rng != nullptr, "attention: train mode needs an rng stream");
            auto d = dropout(bn_out, dropout_rate, mode, *rng);
            dropped = d.y;
            if (cache) drop_fwd = std::move(d);
        } else {
            dropped = bn_out;
            if (cache) drop_fwd = DropoutResult<S>{};
        }
        Mat<S> a2 = fc2.forward(detail::squeeze_to_mat(dropped), cache);
        Result r;
        r.alpha = Mat<S>(B, 3);
        for (Eigen::Index b = 0; b < B; ++b) {
            ArrayX<S> row = a2.row(b).transpose().array();
            r.alpha.row(b) = sigmoid(row).matrix().transpose();
        }
        r.f_merged = Mat<S>::Zero(B, feature_dim);
        r.f_merged += r.alpha.col(0).asDiagonal() * f1;
        r.f_merged += r.alpha.col(1).asDiagonal() * f2;
        r.f_merged += r.alpha.col(2).asDiagonal() * f3;
        if (cache) {
            cached_f[0] = f1;
            cached_f[1] = f2;
            cached_f[2] = f3;
            cached_alpha = r.alpha;
        }
        return r;
    }

    // Returns grads wrt f1, f2, f3.
    std::array<Mat<S>, 3> backward(const Mat<S>& grad_merged) {
        const Eigen::Index B = grad_merged.rows();
        Mat<S> galpha(B, 3);
        std::array<Mat<S>, 3> gf;
        for (int i = 0; i < 3; ++i) {
            galpha.col(i) = (grad_merged.array() * cached_f[i].array()).rowwise().sum().matrix();
            gf[i] = cached_alpha.col(i).asDiagonal() * grad_merged;
        }
        // through sigmoid
        Mat<S> ga2 =
            (galpha.array() * cached_alpha.array() * (S(1) - cached_alpha.array())).matrix();
        Mat<S> gdropped = fc2.backward(ga2);
        Tensor3<S> gdrop_t = detail::mat_to_tensor3(gdropped);
        Tensor3<S> gbn_out = dropout_backward(drop_fwd, gdrop_t);
        Mat<S> ga1 = detail::squeeze_to_mat(bn.backward(gbn_out));
        Mat<S> gcat = fc1.backward(ga1);
        for (int i = 0; i < 3; ++i)
            gf[i] += gcat.middleCols(static_cast<Eigen::Index>(i) * feature_dim, feature_dim);
        return gf;
    }

    void visit(const std::string& prefix, std::vector<ParamRef<S>>& out) {
        fc1.visit(prefix + ".fc1", out);
        bn.visit(prefix + ".bn", out);
        fc2.visit(prefix + ".fc2", out);
    }
    void visit_buffers(const std::string& prefix, std::vector<BufferRef<S>>& out) {
        bn.visit_buffers(prefix + ".bn", out);
    }
};

// ---------------------------------------------------------------------------
// Full model: three backbones + lead-wise attention + classifier FC
// ---------------------------------------------------------------------------

template <class S>
struct ModelT {
    ModelConfig cfg;
    std::array<Backbone<S>, 3> backbones;
    AttentionMerge<S> attention;
    FcLayer<S> classifier;
    Mode mode = Mode::train;

    void setup(const ModelConfig& c) {
        cfg = c;
        require(c.n_leads == 3, "model requires exactly 3 leads");
        for (auto& b : backbones) b.setup(c.backbone);
        attention.setup(c.backbone.feature_dim(), c.attention_hidden_dim(), c.attention_dropout);
        classifier.setup(c.n_classes, c.backbone.feature_dim(), true);
    }

    void init(Rng& rng) {
        // the three backbones share shapes but draw independent values
        for (int i = 0; i < 3; ++i) {
            Rng stream = rng.split(100 + static_cast<std::uint64_t>(i));
            backbones[static_cast<std::size_t>(i)].init(stream);
        }
        Rng astream = rng.split(200);
        attention.init(astream);
        Rng cstream = rng.split(300);
        classifier.init(cstream);
    }

    struct ForwardResult {
        Mat<S> logits;  // [B, n_classes]
        Mat<S> alpha;   // [B, 3]
    };

    ForwardResult forward(const Tensor3<S>& x, Rng* rng = nullptr, bool cache = true) {
        require(x.channels == 3, "model_forward: input must have exactly 3 channels, got " +
                                     x.shape_str());
        require(x.length == cfg.input_length,
                "model_forward: input length " + std::to_string(x.length) + " != configured " +
                    std::to_string(cfg.input_length));
        std::array<Mat<S>, 3> feats;
        for (int i = 0; i < 3; ++i) {
            Tensor3<S> lead(x.batch, 1, x.length);
            for (int b = 0; b < x.batch; ++b) lead.row(b, 0) = x.row(b, i);
            feats[static_cast<std::size_t>(i)] =
                backbones[static_cast<std::size_t>(i)].forward(lead, mode, cache);
        }
        auto merged = attention.forward(feats[0], feats[1], feats[2], mode, rng, cache);
        ForwardResult r;
        r.logits = classifier.forward(merged.f_merged, cache);
        r.alpha = std::move(merged.alpha);
        return r;
    }

    // Backpropagate from d(objective)/d(logits); accumulates parameter grads.
    // Returns grad wrt the stacked input.
    Tensor3<S> backward(const Mat<S>& grad_logits) {
        Mat<S> gmerged = classifier.backward(grad_logits);
        auto gf = attention.backward(gmerged);
        Tensor3<S> gx(static_cast<int>(grad_logits.rows()), 3, cfg.input_length);
        for (int i = 0; i < 3; ++i) {
            Tensor3<S> glead =
                backbones[static_cast<std::size_t>(i)].backward(gf[static_cast<std::size_t>(i)]);
            for (int b = 0; b < glead.batch; ++b) gx.row(b, i) = glead.row(b, 0);
        }
        return gx;
    }

    void set_mode(Mode m) { mode = m; }

    std::vector<ParamRef<S>> parameters() {
        std::vector<ParamRef<S>> out;
        for (int i = 0; i < 3; ++i)
            backbones[static_cast<std::size_t>(i)].visit("backbone" + std::to_string(i), out);
        attention.visit("attention", out);
        classifier.visit("classifier", out);
        return out;
    }

    std::vector<BufferRef<S>> buffers() {
        std::vector<BufferRef<S>> out;
        for (int i = 0; i < 3; ++i)
            backbones[static_cast<std::size_t>(i)].visit_buffers("backbone" + std::to_string(i),
                                                                 out);
        attention.visit_buffers("attention", out);
        return out;
    }

    void zero_grad() {
        for (auto& p : parameters()) p.grad->setZero();
    }

    Eigen::Index param_count() {
        Eigen::Index n = 0;
        for (auto& p : parameters()) n += p.value->size();
        return n;
    }
};

using Model = ModelT<float>;

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

// Argmax with ties broken toward the lowest class index.
template <class S>
std::vector<int> argmax_rows(const Mat<S>& m) {
    std::vector<int> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        int best = 0;
        for (Eigen::Index c = 1; c < m.cols(); ++c)
            if (m(r, c) > m(r, best)) best = static_cast<int>(c);
        out[static_cast<std::size_t>(r)] = best;
    }
    return out;
}

using LabelIndicator = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// multi_class: one-hot of argmax(softmax(logits)); multi_label: per-class
// sigmoid(logit) >= threshold (inclusive at the boundary).
template <class S>
LabelIndicator predict(const Mat<S>& logits, TaskKind task,
                       const std::vector<double>* thresholds = nullptr) {
    LabelIndicator out = LabelIndicator::Zero(logits.rows(), logits.cols());
    if (task == TaskKind::multi_class) {
        const Mat<S> probs = softmax(logits);
        auto am = argmax_rows(probs);
        for (Eigen::Index r = 0; r < logits.rows(); ++r) out(r, am[static_cast<std::size_t>(r)]) = 1;
    } else {
        require(thresholds != nullptr &&
                    static_cast<Eigen::Index>(thresholds->size()) == logits.cols(),
                "predict: multi_label task requires one threshold per class");
        for (Eigen::Index r = 0; r < logits.rows(); ++r) {
            ArrayX<S> row = logits.row(r).transpose().array();
            ArrayX<S> probs = sigmoid(row);
            for (Eigen::Index c = 0; c < logits.cols(); ++c)
                if (static_cast<double>(probs[c]) >= (*thresholds)[static_cast<std::size_t>(c)])
                    out(r, c) = 1;
        }
    }
    return out;
}

}  // namespace trilead
