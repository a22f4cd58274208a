#include "trilead/training.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace trilead {

FoldPlan stratified_kfold(const std::vector<std::vector<int>>& labels, int n_classes, int k,
                          std::uint64_t seed) {
    const int n = static_cast<int>(labels.size());
    require(k >= 2, "stratified_kfold: k must be >= 2");
    require(k <= n, "stratified_kfold: k=" + std::to_string(k) + " exceeds dataset size " +
                        std::to_string(n));

    // global class frequencies decide the stratification label of
    // multi-label records
    std::vector<long> counts(static_cast<std::size_t>(n_classes), 0);
    for (const auto& ls : labels) {
        require(!ls.empty(), "stratified_kfold: record with empty label set");
        for (int c : ls) {
            require(c >= 0 && c < n_classes, "stratified_kfold: label id out of range");
            ++counts[static_cast<std::size_t>(c)];
        }
    }
    std::vector<int> strat(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int best = labels[static_cast<std::size_t>(i)][0];
        for (int c : labels[static_cast<std::size_t>(i)]) {
            if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)] ||
                (counts[static_cast<std::size_t>(c)] == counts[static_cast<std::size_t>(best)] &&
                 c < best))
                best = c;
        }
        strat[static_cast<std::size_t>(i)] = best;
    }

    FoldPlan plan;
    plan.k = k;
    plan.assignment.assign(static_cast<std::size_t>(n), -1);
    plan.strat_labels = strat;
    Rng rng = Rng(seed).split(0xF01D);
    int ptr = 0;  // continues across classes so fold sizes stay balanced
    for (int c = 0; c < n_classes; ++c) {
        std::vector<int> members;
        for (int i = 0; i < n; ++i)
            if (strat[static_cast<std::size_t>(i)] == c) members.push_back(i);
        Rng stream = rng.split(static_cast<std::uint64_t>(c));
        stream.shuffle(members);
        for (int idx : members) {
            plan.assignment[static_cast<std::size_t>(idx)] = ptr % k;
            ++ptr;
        }
    }
    return plan;
}

namespace {

ClassMetrics binary_metrics(long tp, long fp, long fn, long tn) {
    ClassMetrics m;
    const long n = tp + fp + fn + tn;
    m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.accuracy = n > 0 ? static_cast<double>(tp + tn) / static_cast<double>(n) : 0.0;
    return m;
}

double f1_at(const Mat<float>& probs, const LabelIndicator& truth, Eigen::Index c, double thr) {
    long tp = 0, fp = 0, fn = 0;
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        const bool pred = static_cast<double>(probs(r, c)) >= thr;
        const bool pos = truth(r, c) != 0;
        if (pred && pos) ++tp;
        else if (pred && !pos) ++fp;
        else if (!pred && pos) ++fn;
    }
    const double precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    return (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

}  // namespace

ThresholdResult threshold_search(const Mat<float>& val_probs, const LabelIndicator& val_labels) {
    require(val_probs.rows() == val_labels.rows() && val_probs.cols() == val_labels.cols(),
            "threshold_search: probs/labels shape mismatch");
    const Eigen::Index C = val_probs.cols();
    ThresholdResult out;
    out.thresholds.assign(static_cast<std::size_t>(C), 0.5);
    out.defaulted.assign(static_cast<std::size_t>(C), false);
    for (Eigen::Index c = 0; c < C; ++c) {
        long pos = 0;
        for (Eigen::Index r = 0; r < val_labels.rows(); ++r) pos += val_labels(r, c);
        if (pos == 0) {
            out.defaulted[static_cast<std::size_t>(c)] = true;  // caller warns
            continue;
        }
        double best_thr = 0.05;
        double best_f1 = -1.0;
        for (int i = 1; i <= 19; ++i) {
            const double thr = 0.05 * i;
            const double f1 = f1_at(val_probs, val_labels, c, thr);
            if (f1 > best_f1) {  // strict: ties keep the lowest threshold
                best_f1 = f1;
                best_thr = thr;
            }
        }
        out.thresholds[static_cast<std::size_t>(c)] = best_thr;
    }
    return out;
}

MetricsReport compute_metrics(const LabelIndicator& pred, const LabelIndicator& truth) {
    require(pred.rows() == truth.rows() && pred.cols() == truth.cols(),
            "compute_metrics: shape mismatch");
    MetricsReport rep;
    const Eigen::Index C = pred.cols();
    rep.per_class.resize(static_cast<std::size_t>(C));
    for (Eigen::Index c = 0; c < C; ++c) {
        long tp = 0, fp = 0, fn = 0, tn = 0;
        for (Eigen::Index r = 0; r < pred.rows(); ++r) {
            const bool p = pred(r, c) != 0;
            const bool t = truth(r, c) != 0;
            if (p && t) ++tp;
            else if (p && !t) ++fp;
            else if (!p && t) ++fn;
            else ++tn;
        }
        rep.per_class[static_cast<std::size_t>(c)] = binary_metrics(tp, fp, fn, tn);
    }
    for (const auto& m : rep.per_class) {
        rep.macro.precision += m.precision;
        rep.macro.recall += m.recall;
        rep.macro.f1 += m.f1;
        rep.macro.accuracy += m.accuracy;
    }
    const double nc = static_cast<double>(C);
    rep.macro.precision /= nc;
    rep.macro.recall /= nc;
    rep.macro.f1 /= nc;
    rep.macro.accuracy /= nc;
    return rep;
}

namespace {

void append_metric_lines(std::ostringstream& ss, const std::string& fold,
                         const MetricsReport& rep, const std::vector<std::string>& class_names) {
    auto emit = [&](const std::string& cls, const ClassMetrics& m) {
        ss << fold << "," << cls << ",precision," << m.precision << "\n";
        ss << fold << "," << cls << ",recall," << m.recall << "\n";
        ss << fold << "," << cls << ",f1," << m.f1 << "\n";
        ss << fold << "," << cls << ",accuracy," << m.accuracy << "\n";
    };
    for (std::size_t c = 0; c < rep.per_class.size(); ++c) emit(class_names[c], rep.per_class[c]);
    emit("macro", rep.macro);
}

}  // namespace

std::string metrics_csv(const CvResult& cv, const std::vector<std::string>& class_names) {
    std::ostringstream ss;
    ss << std::setprecision(6) << std::fixed;
    ss << "fold,class,metric,value\n";
    for (const auto& r : cv.rounds)
        append_metric_lines(ss, std::to_string(r.round), r.test_metrics, class_names);
    append_metric_lines(ss, "avg", cv.averaged, class_names);
    return ss.str();
}

std::string metrics_pretty(const CvResult& cv, const std::vector<std::string>& class_names) {
    std::ostringstream ss;
    ss << std::setprecision(4) << std::fixed;
    ss << "# test metrics averaged over " << cv.rounds.size()
       << " round(s); averages are macro (unweighted over classes)\n";
    ss << std::left << std::setw(14) << "class" << std::right << std::setw(10) << "precision"
       << std::setw(10) << "recall" << std::setw(10) << "f1" << std::setw(10) << "accuracy"
       << "\n";
    for (std::size_t c = 0; c < cv.averaged.per_class.size(); ++c) {
        const auto& m = cv.averaged.per_class[c];
        ss << std::left << std::setw(14) << class_names[c] << std::right << std::setw(10)
           << m.precision << std::setw(10) << m.recall << std::setw(10) << m.f1 << std::setw(10)
           << m.accuracy << "\n";
    }
    const auto& m = cv.averaged.macro;
    ss << std::left << std::setw(14) << "macro" << std::right << std::setw(10) << m.precision
       << std::setw(10) << m.recall << std::setw(10) << m.f1 << std::setw(10) << m.accuracy
       << "\n";
    return ss.str();
}

}  // namespace trilead
