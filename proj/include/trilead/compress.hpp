#pragma once

#include <string>

#include "trilead/model.hpp"
#include "trilead/training.hpp"

namespace trilead {

// ---------------------------------------------------------------------------
// Global L1 magnitude pruning
// ---------------------------------------------------------------------------

struct PruneResult {
    ParamMask mask;  // aligned with model.parameters(); empty entries = not prunable
    long long zeroed = 0;
    long long total_prunable = 0;
};

// Zeroes exactly floor(sparsity * N_prunable) weights with the globally
// smallest |w| across all conv and FC weight tensors (BN parameters and
// biases excluded). Ties break by (tensor order, flat index). Deterministic
// and idempotent for a fixed sparsity.
PruneResult prune_global_l1(Model& model, double sparsity);

// Per-layer variant: the same rule applied within each prunable tensor
// independently (kept behind a flag for comparison with the global rule).
PruneResult prune_per_layer_l1(Model& model, double sparsity);

// ---------------------------------------------------------------------------
// Parameter / FLOP / size accounting
// ---------------------------------------------------------------------------

inline long long conv_param_count(int out_ch, int in_ch, int kernel, int groups, bool bias) {
    long long n = static_cast<long long>(out_ch) * (in_ch / groups) * kernel;
    if (bias) n += out_ch;
    return n;
}

inline long long fc_param_count(int n_out, int n_in, bool bias) {
    return static_cast<long long>(n_out) * n_in + (bias ? n_out : 0);
}

// Multiply-accumulate counted as 2 FLOPs; bias adds counted once per output.
inline long long conv_flops(int out_ch, int l_out, int in_per_group, int kernel, bool bias) {
    long long f = 2LL * out_ch * l_out * in_per_group * kernel;
    if (bias) f += static_cast<long long>(out_ch) * l_out;
    return f;
}

inline long long fc_flops(int n_out, int n_in, bool bias) {
    return 2LL * n_out * n_in + (bias ? n_out : 0);
}

// Closed-form totals for the configured architecture (batch 1 forward at the
// configured input length; conv and FC work only).
long long count_params(const ModelConfig& cfg);
long long count_flops(const ModelConfig& cfg);

// Same topology with every DSConv replaced by a dense conv of equal kernel.
long long count_params_dense_equivalent(const ModelConfig& cfg);

struct ModelStats {
    long long params = 0;
    long long flops = 0;
    long long dense_bytes = 0;
    long long sparse_bytes = 0;  // 0 when no mask given
};

// Byte sizes are measured on the actual serialized container.
ModelStats model_stats(Model& model, const ParamMask* mask = nullptr);

std::string stats_text(const ModelStats& s);

}  // namespace trilead
