#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "trilead/model.hpp"
#include "trilead/training.hpp"

namespace trilead {

// ---------------------------------------------------------------------------
// Lead-wise Grad-CAM
// ---------------------------------------------------------------------------

template <class S>
struct GradCamResult {
    std::array<ArrayX<S>, 3> cams;  // C_i at final-conv resolution, >= 0
    std::array<S, 3> alpha;
    int class_id = 0;
};

// CAM core: channel weights are the position-averaged gradients of the class
// score wrt the activation, C = relu(sum_ch w_ch * A_ch).
template <class S>
ArrayX<S> cam_from_activation(const Tensor3<S>& activation, const Tensor3<S>& grad_activation) {
    require(activation.same_shape(grad_activation) && activation.batch == 1,
            "cam_from_activation: activation/gradient shape mismatch");
    ArrayX<S> cam = ArrayX<S>::Zero(activation.length);
    for (int c = 0; c < activation.channels; ++c) {
        const S w = grad_activation.row(0, c).mean();
        cam += w * activation.row(0, c);
    }
    return cam.max(S(0));
}

// Gradients of the class score (pre-softmax logit) flowing into each
// backbone's final conv-stage activation A: channel weights are the
// position-averaged gradients, C = relu(sum_ch w_ch * A_ch).
template <class S>
GradCamResult<S> grad_cam_per_backbone(ModelT<S>& model, const Tensor3<S>& input, int class_id) {
    require(input.batch == 1, "grad_cam: one recording at a time, got " + input.shape_str());
    require(class_id >= 0 && class_id < model.cfg.n_classes,
            "grad_cam: class id " + std::to_string(class_id) + " outside [0, " +
                std::to_string(model.cfg.n_classes) + ")");
    model.set_mode(Mode::eval);
    auto fwd = model.forward(input, nullptr, true);
    Mat<S> grad_logits = Mat<S>::Zero(1, model.cfg.n_classes);
    grad_logits(0, class_id) = S(1);
    model.zero_grad();
    model.backward(grad_logits);

    GradCamResult<S> out;
    out.class_id = class_id;
    for (int i = 0; i < 3; ++i) {
        const auto& bb = model.backbones[static_cast<std::size_t>(i)];
        out.cams[static_cast<std::size_t>(i)] =
            cam_from_activation(bb.final_activation, bb.final_activation_grad);
        out.alpha[static_cast<std::size_t>(i)] = fwd.alpha(0, i);
    }
    model.zero_grad();
    return out;
}

// Endpoint-aligned linear interpolation to `out_len` samples.
template <class S>
ArrayX<S> linear_upsample(const ArrayX<S>& v, int out_len) {
    require(v.size() >= 1 && out_len >= 1, "linear_upsample: empty input");
    ArrayX<S> out(out_len);
    if (v.size() == 1) {
        out.setConstant(v[0]);
        return out;
    }
    const double scale = static_cast<double>(v.size() - 1) / static_cast<double>(out_len - 1);
    for (int t = 0; t < out_len; ++t) {
        const double u = t * scale;
        const int lo = std::min(static_cast<int>(u), static_cast<int>(v.size()) - 2);
        const double frac = u - lo;
        out[t] = static_cast<S>((1.0 - frac) * v[lo] + frac * v[lo + 1]);
    }
    return out;
}

struct Explanation {
    std::array<ArrayX<float>, 3> maps;  // M_i in [0,1], one per lead, input resolution
    std::array<float, 3> alpha;
    int class_id = 0;
};

// min-max of alpha_i * C_i; a constant product maps to all zeros.
template <class S>
ArrayX<float> normalized_overlay(S alpha_i, const ArrayX<S>& cam_upsampled) {
    ArrayX<S> weighted = alpha_i * cam_upsampled;
    const S lo = weighted.minCoeff();
    const S hi = weighted.maxCoeff();
    ArrayX<float> m(weighted.size());
    if (hi > lo) {
        for (Eigen::Index t = 0; t < weighted.size(); ++t)
            m[t] = static_cast<float>((weighted[t] - lo) / (hi - lo));
    } else {
        m.setZero();
    }
    return m;
}

// M_i = minmax(alpha_i * C_i) after upsampling C_i to the input resolution.
template <class S>
Explanation lead_wise_explanation(ModelT<S>& model, const Tensor3<S>& input, int class_id) {
    auto cam = grad_cam_per_backbone(model, input, class_id);
    Explanation ex;
    ex.class_id = class_id;
    for (int i = 0; i < 3; ++i) {
        ex.alpha[static_cast<std::size_t>(i)] =
            static_cast<float>(cam.alpha[static_cast<std::size_t>(i)]);
        ArrayX<S> up = linear_upsample(cam.cams[static_cast<std::size_t>(i)], input.length);
        ex.maps[static_cast<std::size_t>(i)] =
            normalized_overlay(cam.alpha[static_cast<std::size_t>(i)], up);
    }
    return ex;
}

// ---------------------------------------------------------------------------
// Spearman rank correlation and the parameter-randomization sanity check
// ---------------------------------------------------------------------------

// Average-rank ties; sets *constant when either input has zero variance
// (rank correlation undefined; reported as 0 with the flag).
double spearman(const ArrayX<double>& a, const ArrayX<double>& b, bool* constant = nullptr);

struct SanityRow {
    std::string record_id;
    int lead = 0;
    double rho = 0.0;
    bool flagged = false;  // constant explanation, correlation undefined
};

struct SanityReport {
    std::vector<SanityRow> rows;
    double average = 0.0;  // over non-flagged rows
    std::uint64_t randomization_seed = 0;
};

// Compares explanations from the trained model against a copy whose
// classifier FC was freshly re-initialized. The class for each recording
// comes from `class_oracle` (typically the original model's prediction).
SanityReport sanity_check(Model& model, const std::vector<Tensor3<float>>& recordings,
                          const std::vector<std::string>& record_ids,
                          const std::function<int(Model&, const Tensor3<float>&)>& class_oracle,
                          std::uint64_t randomization_seed);

// Convenience oracle: the model's own prediction.
int predicted_class(Model& model, const Tensor3<float>& input);

std::string sanity_report_csv(const SanityReport& rep);

// ---------------------------------------------------------------------------
// SVG rendering (implemented in svg.cpp)
// ---------------------------------------------------------------------------

struct RenderOptions {
    int panel_width = 1200;
    int panel_height = 180;
    int heat_strips = 1000;
    std::array<std::string, 3> lead_names = {"I", "II", "V1"};
};

// One panel per lead: signal trace over a heat background with intensity
// proportional to M_i; alpha_i printed per panel.
void render_explanation_svg(const Tensor3<float>& input, const Explanation& ex,
                            const std::string& out_path, const RenderOptions& opts = {});

}  // namespace trilead
