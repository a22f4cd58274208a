#include "trilead/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace trilead {

namespace {

ArrayX<double> average_ranks(const ArrayX<double>& v) {
    const Eigen::Index n = v.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
    ArrayX<double> ranks(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && v[order[static_cast<std::size_t>(j + 1)]] ==
                                v[order[static_cast<std::size_t>(i)]])
            ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
        for (Eigen::Index k = i; k <= j; ++k) ranks[order[static_cast<std::size_t>(k)]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const ArrayX<double>& a, const ArrayX<double>& b, bool* constant) {
    require(a.size() == b.size() && a.size() >= 2, "spearman: need two equal-length vectors");
    const bool a_const = (a == a[0]).all();
    const bool b_const = (b == b[0]).all();
    if (constant) *constant = a_const || b_const;
    if (a_const || b_const) return 0.0;
    const ArrayX<double> ra = average_ranks(a);
    const ArrayX<double> rb = average_ranks(b);
    const double ma = ra.mean();
    const double mb = rb.mean();
    const double cov = ((ra - ma) * (rb - mb)).sum();
    const double va = (ra - ma).square().sum();
    const double vb = (rb - mb).square().sum();
    if (va == 0.0 || vb == 0.0) {
        if (constant) *constant = true;
        return 0.0;
    }
    return cov / std::sqrt(va * vb);
}

int predicted_class(Model& model, const Tensor3<float>& input) {
    model.set_mode(Mode::eval);
    auto fwd = model.forward(input, nullptr, false);
    return argmax_rows(fwd.logits)[0];
}

SanityReport sanity_check(Model& model, const std::vector<Tensor3<float>>& recordings,
                          const std::vector<std::string>& record_ids,
                          const std::function<int(Model&, const Tensor3<float>&)>& class_oracle,
                          std::uint64_t randomization_seed) {
    require(recordings.size() == record_ids.size(), "sanity_check: ids/recordings mismatch");
    require(!recordings.empty(), "sanity_check: no recordings");

    // randomized system: same weights except a freshly drawn classifier FC
    Model randomized = model;
    Rng rng(randomization_seed);
    randomized.classifier.init(rng);

    SanityReport rep;
    rep.randomization_seed = randomization_seed;
    double sum = 0.0;
    long counted = 0;
    for (std::size_t r = 0; r < recordings.size(); ++r) {
        const int cls = class_oracle(model, recordings[r]);
        const Explanation orig = lead_wise_explanation(model, recordings[r], cls);
        const Explanation rand = lead_wise_explanation(randomized, recordings[r], cls);
        for (int lead = 0; lead < 3; ++lead) {
            const ArrayX<double> a =
                orig.maps[static_cast<std::size_t>(lead)].cast<double>();
            const ArrayX<double> b =
                rand.maps[static_cast<std::size_t>(lead)].cast<double>();
            SanityRow row;
            row.record_id = record_ids[r];
            row.lead = lead;
            row.rho = spearman(a, b, &row.flagged);
            if (!row.flagged) {
                sum += row.rho;
                ++counted;
            }
            rep.rows.push_back(std::move(row));
        }
    }
    rep.average = counted > 0 ? sum / static_cast<double>(counted) : 0.0;
    return rep;
}

std::string sanity_report_csv(const SanityReport& rep) {
    std::ostringstream ss;
    ss << "lead,recording_id,rho\n";
    for (const auto& row : rep.rows) {
        ss << row.lead << "," << row.record_id << "," << row.rho;
        if (row.flagged) ss << ",constant";
        ss << "\n";
    }
    ss << "average,," << rep.average << "\n";
    ss << "randomization_seed,," << rep.randomization_seed << "\n";
    return ss.str();
}

}  // namespace trilead
