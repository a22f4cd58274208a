#include "trilead/compress.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "trilead/checkpoint.hpp"

namespace trilead {

namespace {

struct Entry {
    float mag;
    std::uint32_t tensor;
    std::uint32_t index;
};

ParamMask ones_mask(const std::vector<ParamRef<float>>& params) {
    ParamMask mask(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].prunable) mask[i] = ArrayX<float>::Ones(params[i].value->size());
    return mask;
}

}  // namespace

PruneResult prune_global_l1(Model& model, double sparsity) {
    require(sparsity > 0.0 && sparsity < 1.0,
            "prune: sparsity " + std::to_string(sparsity) + " outside (0, 1)");
    auto params = model.parameters();
    PruneResult res;
    res.mask = ones_mask(params);

    std::vector<Entry> entries;
    for (std::size_t t = 0; t < params.size(); ++t) {
        if (!params[t].prunable) continue;
        const ArrayX<float>& v = *params[t].value;
        for (Eigen::Index i = 0; i < v.size(); ++i)
            entries.push_back({std::abs(v[i]), static_cast<std::uint32_t>(t),
                               static_cast<std::uint32_t>(i)});
    }
    res.total_prunable = static_cast<long long>(entries.size());
    res.zeroed = static_cast<long long>(
        std::floor(sparsity * static_cast<double>(res.total_prunable)));

    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return std::tie(a.mag, a.tensor, a.index) < std::tie(b.mag, b.tensor, b.index);
    });
    for (long long k = 0; k < res.zeroed; ++k) {
        const Entry& e = entries[static_cast<std::size_t>(k)];
        (*params[e.tensor].value)[e.index] = 0.0f;
        res.mask[e.tensor][e.index] = 0.0f;
    }
    return res;
}

PruneResult prune_per_layer_l1(Model& model, double sparsity) {
    require(sparsity > 0.0 && sparsity < 1.0,
            "prune: sparsity " + std::to_string(sparsity) + " outside (0, 1)");
    auto params = model.parameters();
    PruneResult res;
    res.mask = ones_mask(params);
    for (std::size_t t = 0; t < params.size(); ++t) {
        if (!params[t].prunable) continue;
        ArrayX<float>& v = *params[t].value;
        res.total_prunable += v.size();
        const long long zero_here =
            static_cast<long long>(std::floor(sparsity * static_cast<double>(v.size())));
        std::vector<std::uint32_t> order(static_cast<std::size_t>(v.size()));
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            return std::make_pair(std::abs(v[a]), a) < std::make_pair(std::abs(v[b]), b);
        });
        for (long long k = 0; k < zero_here; ++k) {
            v[order[static_cast<std::size_t>(k)]] = 0.0f;
            res.mask[t][order[static_cast<std::size_t>(k)]] = 0.0f;
        }
        res.zeroed += zero_here;
    }
    return res;
}

namespace {

struct ConvSpec {
    int out_ch, in_per_group, kernel, l_out;
    bool bias;
};

// Enumerates every conv in the backbone with its output length; the single
// source for both the parameter and FLOP walk.
void walk_backbone(const BackboneConfig& b, int input_length, std::vector<ConvSpec>& convs,
                   std::vector<int>& bn_channels, std::vector<std::pair<int, int>>& se_fcs) {
    int L = conv_out_length(input_length, b.stem_kernel, b.stem_stride, b.stem_kernel / 2);
    if (b.stem_dsconv) {
        convs.push_back({1, 1, b.stem_kernel, L, false});
        convs.push_back({b.stem_out, 1, 1, L, false});
    } else {
        convs.push_back({b.stem_out, 1, b.stem_kernel, L, false});
    }
    bn_channels.push_back(b.stem_out);
    if (b.stem_pool) L = conv_out_length(L, b.pool_kernel, b.pool_stride, b.pool_kernel / 2);
    int in_ch = b.stem_out;
    for (const auto& st : b.stages) {
        for (int blk = 0; blk < st.blocks; ++blk) {
            const int stride = blk == 0 ? st.stride : 1;
            const int L1 = conv_out_length(L, st.kernel, stride, st.kernel / 2);
            convs.push_back({in_ch, 1, st.kernel, L1, false});          // conv1 depthwise
            convs.push_back({st.out_ch, in_ch, 1, L1, false});          // conv1 pointwise
            bn_channels.push_back(st.out_ch);
            convs.push_back({st.out_ch, 1, st.kernel, L1, false});      // conv2 depthwise
            convs.push_back({st.out_ch, st.out_ch, 1, L1, false});      // conv2 pointwise
            bn_channels.push_back(st.out_ch);
            const int hidden = std::max(1, st.out_ch / b.se_reduction);
            se_fcs.push_back({hidden, st.out_ch});
            se_fcs.push_back({st.out_ch, hidden});
            if (in_ch != st.out_ch || stride != 1) {
                convs.push_back({st.out_ch, in_ch, 1, L1, false});      // projection
                bn_channels.push_back(st.out_ch);
            }
            L = L1;
            in_ch = st.out_ch;
        }
    }
}

}  // namespace

long long count_params(const ModelConfig& cfg) {
    std::vector<ConvSpec> convs;
    std::vector<int> bns;
    std::vector<std::pair<int, int>> se_fcs;
    walk_backbone(cfg.backbone, cfg.input_length, convs, bns, se_fcs);
    long long per_backbone = 0;
    for (const auto& c : convs) per_backbone += static_cast<long long>(c.out_ch) * c.in_per_group * c.kernel;
    for (int ch : bns) per_backbone += 2LL * ch;  // gamma + beta
    for (const auto& [o, i] : se_fcs) per_backbone += fc_param_count(o, i, true);

    const int D = cfg.backbone.feature_dim();
    const int H = cfg.attention_hidden_dim();
    long long total = 3 * per_backbone;
    total += fc_param_count(H, 3 * D, true);  // attention fc1
    total += 2LL * H;                         // attention bn
    total += fc_param_count(3, H, true);      // attention fc2
    total += fc_param_count(cfg.n_classes, D, true);
    return total;
}

long long count_params_dense_equivalent(const ModelConfig& cfg) {
    // replace each DSConv pair (depthwise K + pointwise 1) by one dense conv
    // of kernel K over the same channel map
    const BackboneConfig& b = cfg.backbone;
    long long per_backbone = 0;
    per_backbone += conv_param_count(b.stem_out, 1, b.stem_kernel, 1, false);
    per_backbone += 2LL * b.stem_out;
    int in_ch = b.stem_out;
    for (const auto& st : b.stages) {
        for (int blk = 0; blk < st.blocks; ++blk) {
            const int stride = blk == 0 ? st.stride : 1;
            per_backbone += conv_param_count(st.out_ch, in_ch, st.kernel, 1, false);
            per_backbone += 2LL * st.out_ch;
            per_backbone += conv_param_count(st.out_ch, st.out_ch, st.kernel, 1, false);
            per_backbone += 2LL * st.out_ch;
            const int hidden = std::max(1, st.out_ch / b.se_reduction);
            per_backbone += fc_param_count(hidden, st.out_ch, true);
            per_backbone += fc_param_count(st.out_ch, hidden, true);
            if (in_ch != st.out_ch || stride != 1) {
                per_backbone += conv_param_count(st.out_ch, in_ch, 1, 1, false);
                per_backbone += 2LL * st.out_ch;
            }
            in_ch = st.out_ch;
        }
    }
    const int D = cfg.backbone.feature_dim();
    const int H = cfg.attention_hidden_dim();
    long long total = 3 * per_backbone;
    total += fc_param_count(H, 3 * D, true) + 2LL * H + fc_param_count(3, H, true);
    total += fc_param_count(cfg.n_classes, D, true);
    return total;
}

long long count_flops(const ModelConfig& cfg) {
    std::vector<ConvSpec> convs;
    std::vector<int> bns;
    std::vector<std::pair<int, int>> se_fcs;
    walk_backbone(cfg.backbone, cfg.input_length, convs, bns, se_fcs);
    long long per_backbone = 0;
    for (const auto& c : convs) per_backbone += conv_flops(c.out_ch, c.l_out, c.in_per_group, c.kernel, c.bias);
    for (const auto& [o, i] : se_fcs) per_backbone += fc_flops(o, i, true);

    const int D = cfg.backbone.feature_dim();
    const int H = cfg.attention_hidden_dim();
    long long total = 3 * per_backbone;
    total += fc_flops(H, 3 * D, true);
    total += fc_flops(3, H, true);
    total += fc_flops(cfg.n_classes, D, true);
    return total;
}

ModelStats model_stats(Model& model, const ParamMask* mask) {
    ModelStats s;
    s.params = count_params(model.cfg);
    s.flops = count_flops(model.cfg);
    s.dense_bytes = static_cast<long long>(serialize_checkpoint(model).size());
    if (mask) s.sparse_bytes = static_cast<long long>(serialize_checkpoint(model, {}, mask).size());
    return s;
}

std::string stats_text(const ModelStats& s) {
    std::ostringstream ss;
    ss << "params = " << s.params << "\n";
    ss << "params_millions = " << static_cast<double>(s.params) / 1e6 << "\n";
    ss << "flops = " << s.flops << "\n";
    ss << "flops_billions = " << static_cast<double>(s.flops) / 1e9 << "\n";
    ss << "dense_bytes = " << s.dense_bytes << "\n";
    if (s.sparse_bytes > 0) {
        ss << "sparse_bytes = " << s.sparse_bytes << "\n";
        ss << "sparse_over_dense = "
           << static_cast<double>(s.sparse_bytes) / static_cast<double>(s.dense_bytes) << "\n";
    }
    return ss.str();
}

}  // namespace trilead
