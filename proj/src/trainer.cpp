#include <algorithm>
#include <numeric>

#include "trilead/training.hpp"

namespace trilead {

namespace {

Tensor3<float> assemble_batch(const Dataset& data, const std::vector<int>& idx, int from, int to) {
    const int b = to - from;
    const int L = data.inputs[0].length;
    Tensor3<float> x(b, 3, L);
    for (int i = 0; i < b; ++i) {
        const auto& rec = data.inputs[static_cast<std::size_t>(idx[static_cast<std::size_t>(from + i)])];
        for (int c = 0; c < 3; ++c) x.row(i, c) = rec.row(0, c);
    }
    return x;
}

Mat<float> indicator_to_targets(const LabelIndicator& ind) {
    Mat<float> t(ind.rows(), ind.cols());
    for (Eigen::Index r = 0; r < ind.rows(); ++r)
        for (Eigen::Index c = 0; c < ind.cols(); ++c) t(r, c) = static_cast<float>(ind(r, c));
    return t;
}

void apply_mask_to_grads(std::vector<ParamRef<float>>& params, const ParamMask& mask) {
    for (std::size_t i = 0; i < params.size(); ++i)
        if (mask[i].size() > 0) *params[i].grad *= mask[i];
}

void apply_mask_to_values(std::vector<ParamRef<float>>& params, const ParamMask& mask) {
    for (std::size_t i = 0; i < params.size(); ++i)
        if (mask[i].size() > 0) *params[i].value *= mask[i];
}

}  // namespace

Trainer::Trainer(const Dataset& data, ModelConfig model_cfg, TrainConfig train_cfg)
    : data_(data), model_cfg_(std::move(model_cfg)), train_cfg_(train_cfg) {
    train_cfg_.validate();
    require(data.size() > 0, "trainer: empty dataset");
    require(model_cfg_.n_classes == data.n_classes(),
            "trainer: model n_classes " + std::to_string(model_cfg_.n_classes) +
                " != dataset classes " + std::to_string(data.n_classes()));
}

void Trainer::train_loop(Model& model, const std::vector<int>& train_idx, int epochs,
                         bool use_schedule, double const_lr, const ParamMask* mask, Rng& run_rng,
                         const std::function<void(const EpochStats&)>& on_epoch) {
    model.set_mode(Mode::train);
    auto params = model.parameters();
    auto adam = AdamState<float>::like(params);
    if (mask) apply_mask_to_values(params, *mask);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        const double lr = use_schedule ? lr_schedule(epoch, train_cfg_) : const_lr;
        std::vector<int> order = train_idx;
        Rng shuffle_rng = run_rng.split(1000 + static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);
        Rng aug_rng = run_rng.split(5000 + static_cast<std::uint64_t>(epoch));
        Rng drop_rng = run_rng.split(9000 + static_cast<std::uint64_t>(epoch));

        double loss_sum = 0.0;
        long seen = 0;
        const int n = static_cast<int>(order.size());
        for (int from = 0; from < n; from += train_cfg_.batch_size) {
            const int to = std::min(n, from + train_cfg_.batch_size);
            // attention BN needs batch statistics; a single row has none
            if (to - from < 2) continue;
            Tensor3<float> x = assemble_batch(data_, order, from, to);
            x = drop_lead(x, train_cfg_.droplead_p, aug_rng, Mode::train);

            auto fwd = model.forward(x, &drop_rng, true);
            float loss;
            Mat<float> grad_logits;
            if (data_.task == TaskKind::multi_class) {
                std::vector<int> targets;
                targets.reserve(static_cast<std::size_t>(to - from));
                for (int i = from; i < to; ++i)
                    targets.push_back(
                        data_.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])][0]);
                auto lr_res = cross_entropy(fwd.logits, targets);
                loss = lr_res.loss;
                grad_logits = std::move(lr_res.grad_logits);
            } else {
                LabelIndicator truth = LabelIndicator::Zero(to - from, data_.n_classes());
                for (int i = from; i < to; ++i)
                    for (int c : data_.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])])
                        truth(i - from, c) = 1;
                auto lr_res = binary_cross_entropy(fwd.logits, indicator_to_targets(truth));
                loss = lr_res.loss;
                grad_logits = std::move(lr_res.grad_logits);
            }
            model.zero_grad();
            model.backward(grad_logits);
            if (mask) apply_mask_to_grads(params, *mask);
            adam_step(params, adam, lr, train_cfg_.weight_decay);
            if (mask) apply_mask_to_values(params, *mask);
            loss_sum += static_cast<double>(loss) * (to - from);
            seen += to - from;
        }
        if (on_epoch) on_epoch({epoch, seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0, lr});
    }
    model.set_mode(Mode::eval);
}

Model Trainer::train(const std::vector<int>& train_idx,
                     const std::function<void(const EpochStats&)>& on_epoch) {
    Model model;
    model.setup(model_cfg_);
    Rng run_rng(train_cfg_.seed);
    Rng init_rng = run_rng.split(1);
    model.init(init_rng);
    Rng loop_rng = run_rng.split(2);
    train_loop(model, train_idx, train_cfg_.epochs_total, true, 0.0, nullptr, loop_rng, on_epoch);
    return model;
}

void Trainer::train_existing(Model& model, const std::vector<int>& train_idx, int epochs,
                             double lr, const ParamMask* mask,
                             const std::function<void(const EpochStats&)>& on_epoch) {
    Rng run_rng(train_cfg_.seed);
    Rng loop_rng = run_rng.split(3);
    train_loop(model, train_idx, epochs, false, lr, mask, loop_rng, on_epoch);
}

Mat<float> Trainer::logits(Model& model, const std::vector<int>& idx) const {
    model.set_mode(Mode::eval);
    Mat<float> out(static_cast<Eigen::Index>(idx.size()), data_.n_classes());
    const int n = static_cast<int>(idx.size());
    for (int from = 0; from < n; from += train_cfg_.batch_size) {
        const int to = std::min(n, from + train_cfg_.batch_size);
        Tensor3<float> x = assemble_batch(data_, idx, from, to);
        auto fwd = model.forward(x, nullptr, false);
        out.middleRows(from, to - from) = fwd.logits;
    }
    return out;
}

LabelIndicator Trainer::truth(const std::vector<int>& idx) const {
    LabelIndicator t = LabelIndicator::Zero(static_cast<Eigen::Index>(idx.size()),
                                            data_.n_classes());
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (int c : data_.labels[static_cast<std::size_t>(idx[i])])
            t(static_cast<Eigen::Index>(i), c) = 1;
    return t;
}

MetricsReport Trainer::evaluate(Model& model, const std::vector<int>& idx,
                                const std::vector<double>* thresholds) const {
    const Mat<float> lg = logits(model, idx);
    const LabelIndicator pred = predict(lg, data_.task, thresholds);
    return compute_metrics(pred, truth(idx));
}

ThresholdResult Trainer::fit_thresholds(Model& model, const std::vector<int>& val_idx) const {
    const Mat<float> lg = logits(model, val_idx);
    Mat<float> probs(lg.rows(), lg.cols());
    for (Eigen::Index r = 0; r < lg.rows(); ++r) {
        ArrayX<float> row = lg.row(r).transpose().array();
        probs.row(r) = sigmoid(row).matrix().transpose();
    }
    return threshold_search(probs, truth(val_idx));
}

CvResult Trainer::run_cv(
    const FoldPlan& plan,
    const std::function<void(int, const Model&, const RoundResult&)>& on_round,
    const std::function<void(const EpochStats&)>& on_epoch) {
    CvResult cv;
    for (int round = 0; round < train_cfg_.rounds; ++round) {
        const int test_fold = round;
        const int val_fold = (round + 1) % plan.k;
        const auto test_idx = plan.indices_in(test_fold);
        const auto val_idx = plan.indices_in(val_fold);
        const auto train_idx = plan.indices_not_in({test_fold, val_fold});
        require(!train_idx.empty() && !test_idx.empty(),
                "run_cv: round " + std::to_string(round) + " has an empty split");

        TrainConfig round_cfg = train_cfg_;
        round_cfg.seed = train_cfg_.seed + static_cast<std::uint64_t>(round) * 0x9E37;
        Trainer round_trainer(data_, model_cfg_, round_cfg);
        Model model;
        try {
            model = round_trainer.train(train_idx, on_epoch);
        } catch (const std::exception& e) {
            throw std::runtime_error("run_cv: round " + std::to_string(round) +
                                     " aborted: " + e.what());
        }

        RoundResult rr;
        rr.round = round;
        if (data_.task == TaskKind::multi_label) {
            auto tr = round_trainer.fit_thresholds(model, val_idx);
            rr.thresholds = tr.thresholds;
            rr.thresholds_defaulted = tr.defaulted;
            rr.test_metrics = round_trainer.evaluate(model, test_idx, &rr.thresholds);
        } else {
            rr.test_metrics = round_trainer.evaluate(model, test_idx, nullptr);
        }
        if (on_round) on_round(round, model, rr);
        cv.rounds.push_back(std::move(rr));
    }

    // average per-class metrics across rounds; macro are means over classes
    const std::size_t C = static_cast<std::size_t>(data_.n_classes());
    cv.averaged.per_class.assign(C, ClassMetrics{});
    for (const auto& r : cv.rounds) {
        for (std::size_t c = 0; c < C; ++c) {
            cv.averaged.per_class[c].precision += r.test_metrics.per_class[c].precision;
            cv.averaged.per_class[c].recall += r.test_metrics.per_class[c].recall;
            cv.averaged.per_class[c].f1 += r.test_metrics.per_class[c].f1;
            cv.averaged.per_class[c].accuracy += r.test_metrics.per_class[c].accuracy;
        }
    }
    const double nr = static_cast<double>(cv.rounds.size());
    for (auto& m : cv.averaged.per_class) {
        m.precision /= nr;
        m.recall /= nr;
        m.f1 /= nr;
        m.accuracy /= nr;
    }
    for (const auto& m : cv.averaged.per_class) {
        cv.averaged.macro.precision += m.precision;
        cv.averaged.macro.recall += m.recall;
        cv.averaged.macro.f1 += m.f1;
        cv.averaged.macro.accuracy += m.accuracy;
    }
    const double nc = static_cast<double>(C);
    cv.averaged.macro.precision /= nc;
    cv.averaged.macro.recall /= nc;
    cv.averaged.macro.f1 /= nc;
    cv.averaged.macro.accuracy /= nc;
    return cv;
}

}  // namespace trilead
