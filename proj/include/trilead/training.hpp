#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trilead/model.hpp"
#include "trilead/ops.hpp"
#include "trilead/rng.hpp"
#include "trilead/tensor.hpp"

namespace trilead {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct TrainConfig {
    double lr0 = 1e-3;
    double lr_min = 1e-4;
    double weight_decay = 5e-5;
    int epochs_total = 70;
    int epochs_cosine = 40;
    int batch_size = 32;
    TaskKind task = TaskKind::multi_class;
    double droplead_p = 0.5;
    std::uint64_t seed = 0;
    int k_folds = 10;
    int rounds = 10;  // CV rounds actually executed (1 = single-split desk run)

    void validate() const {
        require(epochs_cosine <= epochs_total, "train config: epochs_cosine > epochs_total");
        require(droplead_p >= 0.0 && droplead_p <= 1.0, "train config: droplead_p outside [0,1]");
        require(batch_size >= 1, "train config: batch_size < 1");
        require(rounds >= 1 && rounds <= k_folds, "train config: rounds must be in [1, k_folds]");
    }
};

// Cosine annealing from lr0 to lr_min over the first epochs_cosine epochs,
// constant at lr_min afterwards. Continuous at the switch point.
inline double lr_schedule(int epoch, const TrainConfig& cfg) {
    require(epoch >= 0 && epoch < cfg.epochs_total,
            "lr_schedule: epoch " + std::to_string(epoch) + " outside [0, " +
                std::to_string(cfg.epochs_total) + ")");
    if (epoch >= cfg.epochs_cosine) return cfg.lr_min;
    const double t = static_cast<double>(epoch) / static_cast<double>(cfg.epochs_cosine);
    return cfg.lr_min + (cfg.lr0 - cfg.lr_min) * (1.0 + std::cos(M_PI * t)) / 2.0;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

template <class S>
struct AdamState {
    std::vector<ArrayX<S>> m;
    std::vector<ArrayX<S>> v;
    long long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    template <class P>
    static AdamState like(const std::vector<P>& params) {
        AdamState st;
        st.m.reserve(params.size());
        st.v.reserve(params.size());
        for (const auto& p : params) {
            st.m.push_back(ArrayX<S>::Zero(p.value->size()));
            st.v.push_back(ArrayX<S>::Zero(p.value->size()));
        }
        return st;
    }
};

// Bias-corrected Adam with the L2 term folded into the gradient
// (g <- g + wd * theta) for decay-flagged parameters only.
template <class S>
void adam_step(std::vector<ParamRef<S>>& params, AdamState<S>& st, double lr,
               double weight_decay) {
    require(params.size() == st.m.size(), "adam_step: state/parameter count mismatch");
    st.t += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        if (!p.grad->isFinite().all())
            throw std::runtime_error("adam_step: non-finite gradient in parameter '" + p.name +
                                     "'");
        ArrayX<S> g = *p.grad;
        if (p.decay && weight_decay != 0.0) g += static_cast<S>(weight_decay) * (*p.value);
        st.m[i] = static_cast<S>(st.beta1) * st.m[i] + static_cast<S>(1.0 - st.beta1) * g;
        st.v[i] = static_cast<S>(st.beta2) * st.v[i] + static_cast<S>(1.0 - st.beta2) * g.square();
        const ArrayX<S> mhat = st.m[i] / static_cast<S>(bc1);
        const ArrayX<S> vhat = st.v[i] / static_cast<S>(bc2);
        *p.value -= static_cast<S>(lr) * mhat / (vhat.sqrt() + static_cast<S>(st.eps));
    }
}

// ---------------------------------------------------------------------------
// DropLead augmentation
// ---------------------------------------------------------------------------

// Per batch row: with probability p pick one of the three leads uniformly and
// zero it. At most one lead per row; identity in eval mode.
template <class S>
Tensor3<S> drop_lead(const Tensor3<S>& batch, double p, Rng& rng, Mode mode) {
    require(batch.channels == 3, "drop_lead: expected 3 channels, got " + batch.shape_str());
    Tensor3<S> out = batch;
    if (mode == Mode::eval || p <= 0.0) return out;
    for (int b = 0; b < batch.batch; ++b) {
        if (rng.next_double() < p) {
            const int lead = rng.next_int(3);
            out.row(b, lead).setZero();
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Folds, thresholds, metrics (implemented in training.cpp)
// ---------------------------------------------------------------------------

struct FoldPlan {
    int k = 10;
    std::vector<int> assignment;   // record index -> fold id
    std::vector<int> strat_labels; // stratification class used per record

    std::vector<int> indices_in(int fold) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < assignment.size(); ++i)
            if (assignment[i] == fold) out.push_back(static_cast<int>(i));
        return out;
    }
    std::vector<int> indices_not_in(const std::vector<int>& folds) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < assignment.size(); ++i) {
            bool excluded = false;
            for (int f : folds) excluded = excluded || assignment[i] == f;
            if (!excluded) out.push_back(static_cast<int>(i));
        }
        return out;
    }
};

// Stratified k-fold. Multi-label records are stratified on the most frequent
// constituent class of their label set (ties toward the lowest class id).
FoldPlan stratified_kfold(const std::vector<std::vector<int>>& labels, int n_classes, int k,
                          std::uint64_t seed);

struct ThresholdResult {
    std::vector<double> thresholds;
    std::vector<bool> defaulted;  // true where the class was absent (0.5 fallback)
};

// Per-class grid search over (0.05, 0.95) step 0.05 maximizing that class's
// F1 on validation; ties resolved toward the lowest threshold.
ThresholdResult threshold_search(const Mat<float>& val_probs, const LabelIndicator& val_labels);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    ClassMetrics macro;
};

MetricsReport compute_metrics(const LabelIndicator& pred, const LabelIndicator& truth);

// ---------------------------------------------------------------------------
// Trainer (float models; implemented in trainer.cpp)
// ---------------------------------------------------------------------------

// In-memory training set: one [1, 3, L] tensor per record.
struct Dataset {
    std::vector<Tensor3<float>> inputs;
    std::vector<std::vector<int>> labels;
    std::vector<std::string> ids;
    std::vector<std::string> class_names;
    TaskKind task = TaskKind::multi_class;

    int n_classes() const { return static_cast<int>(class_names.size()); }
    int size() const { return static_cast<int>(inputs.size()); }
};

// Per-parameter keep mask (1 keep, 0 pruned), aligned with model.parameters().
using ParamMask = std::vector<ArrayX<float>>;

struct RoundResult {
    int round = 0;
    MetricsReport test_metrics;
    std::vector<double> thresholds;  // empty for multi_class
    std::vector<bool> thresholds_defaulted;
};

struct CvResult {
    std::vector<RoundResult> rounds;
    MetricsReport averaged;
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double lr = 0.0;
};

class Trainer {
  public:
    Trainer(const Dataset& data, ModelConfig model_cfg, TrainConfig train_cfg);

    // Train a fresh model on the given record indices.
    Model train(const std::vector<int>& train_idx,
                const std::function<void(const EpochStats&)>& on_epoch = {});

    // Continue training an existing model (used for post-prune fine-tuning).
    // With a mask, pruned coordinates receive no updates and stay zero.
    void train_existing(Model& model, const std::vector<int>& train_idx, int epochs, double lr,
                        const ParamMask* mask,
                        const std::function<void(const EpochStats&)>& on_epoch = {});

    // Eval-mode logits over the given indices, in order.
    Mat<float> logits(Model& model, const std::vector<int>& idx) const;

    LabelIndicator truth(const std::vector<int>& idx) const;

    MetricsReport evaluate(Model& model, const std::vector<int>& idx,
                           const std::vector<double>* thresholds) const;

    ThresholdResult fit_thresholds(Model& model, const std::vector<int>& val_idx) const;

    CvResult run_cv(const FoldPlan& plan,
                    const std::function<void(int, const Model&, const RoundResult&)>& on_round = {},
                    const std::function<void(const EpochStats&)>& on_epoch = {});

    const Dataset& data() const { return data_; }
    const ModelConfig& model_config() const { return model_cfg_; }
    const TrainConfig& train_config() const { return train_cfg_; }

  private:
    void train_loop(Model& model, const std::vector<int>& train_idx, int epochs,
                    bool use_schedule, double const_lr, const ParamMask* mask, Rng& run_rng,
                    const std::function<void(const EpochStats&)>& on_epoch);

    const Dataset& data_;
    ModelConfig model_cfg_;
    TrainConfig train_cfg_;
};

// Metrics serialization: one `fold,class,metric,value` line per entry plus
// macro and cross-fold average rows.
std::string metrics_csv(const CvResult& cv, const std::vector<std::string>& class_names);
std::string metrics_pretty(const CvResult& cv, const std::vector<std::string>& class_names);

}  // namespace trilead
