#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "trilead/explain.hpp"

using namespace trilead;
namespace fs = std::filesystem;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.backbone.stem_kernel = 7;
    cfg.backbone.stem_stride = 2;
    cfg.backbone.stem_out = 4;
    cfg.backbone.stem_pool = true;
    cfg.backbone.stages = {{1, 4, 3, 1}, {1, 8, 3, 2}};
    cfg.backbone.se_reduction = 2;
    cfg.input_length = 128;
    cfg.n_classes = 3;
    cfg.attention_hidden = 8;
    return cfg;
}

Model make_model(std::uint64_t seed) {
    Model m;
    m.setup(tiny_config());
    Rng rng(seed);
    m.init(rng);
    m.set_mode(Mode::eval);
    return m;
}

Tensor3<float> random_input(int len, Rng& rng) {
    Tensor3<float> x(1, 3, len);
    for (Eigen::Index i = 0; i < x.data.size(); ++i)
        x.data[i] = static_cast<float>(rng.uniform(-1, 1));
    return x;
}

// minimal well-formedness scan: tags balance and nest properly
bool xml_well_formed(const std::string& text) {
    std::vector<std::string> stack;
    std::size_t pos = 0;
    while ((pos = text.find('<', pos)) != std::string::npos) {
        const auto end = text.find('>', pos);
        if (end == std::string::npos) return false;
        std::string tag = text.substr(pos + 1, end - pos - 1);
        pos = end + 1;
        if (tag.empty()) return false;
        if (tag[0] == '?' || tag[0] == '!') continue;
        const bool closing = tag[0] == '/';
        const bool self_closing = tag.back() == '/';
        std::string name = tag.substr(closing ? 1 : 0);
        const auto sp = name.find_first_of(" \t\n/");
        if (sp != std::string::npos) name = name.substr(0, sp);
        if (closing) {
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
        } else if (!self_closing) {
            stack.push_back(name);
        }
    }
    return stack.empty();
}

}  // namespace

TEST_CASE("cam core matches the hand-derived closed form on a linear toy net") {
    // toy: x [1,1,L] -> conv (C channels) -> A; score = sum_ch w_fc[ch]*mean_t A[ch][t]
    // => dscore/dA[ch][t] = w_fc[ch]/L', so C[t] = relu(sum_ch (w_fc[ch]/L')*A[ch][t])
    Rng rng(3);
    Tensor3<double> x(1, 1, 20);
    for (int i = 0; i < 20; ++i) x.data[i] = rng.uniform(-1, 1);
    ConvParams<double> conv;
    conv.in_channels = 1;
    conv.out_channels = 4;
    conv.kernel = 3;
    conv.padding = 1;
    conv.weight = ArrayX<double>(conv.weight_size());
    for (Eigen::Index i = 0; i < conv.weight.size(); ++i) conv.weight[i] = rng.uniform(-1, 1);
    ArrayX<double> w_fc(4);
    for (int i = 0; i < 4; ++i) w_fc[i] = rng.uniform(-1, 1);

    Tensor3<double> A = conv1d_forward(x, conv);
    const int Lf = A.length;

    // gradient of the score wrt A via the ops chain: FC backward -> GAP backward
    Mat<double> pooled(1, 4);
    for (int c = 0; c < 4; ++c) pooled(0, c) = A.row(0, c).mean();
    Mat<double> wmat(1, 4);
    for (int c = 0; c < 4; ++c) wmat(0, c) = w_fc[c];
    Mat<double> gscore = Mat<double>::Ones(1, 1);
    auto fcg = fc_backward(pooled, wmat, gscore);
    Tensor3<double> gpooled(1, 4, 1);
    for (int c = 0; c < 4; ++c) gpooled.at(0, c, 0) = fcg.grad_x(0, c);
    Tensor3<double> gA = global_avg_pool_backward(A, gpooled);

    ArrayX<double> got = cam_from_activation(A, gA);

    // symbolic closed form
    ArrayX<double> want = ArrayX<double>::Zero(Lf);
    for (int t = 0; t < Lf; ++t) {
        double acc = 0;
        for (int c = 0; c < 4; ++c) acc += w_fc[c] / Lf * A.at(0, c, t);
        want[t] = std::max(0.0, acc);
    }
    CHECK((got - want).abs().maxCoeff() < 1e-12);
}

TEST_CASE("grad-cam: zeroed classifier row kills all three CAMs; CAMs nonnegative") {
    auto model = make_model(7);
    Rng rng(9);
    auto x = random_input(128, rng);

    // class score independent of every backbone: zero that classifier row
    const int cls = 1;
    for (int j = 0; j < model.classifier.n_in; ++j)
        model.classifier.weight[cls * model.classifier.n_in + j] = 0.0f;
    auto cam = grad_cam_per_backbone(model, x, cls);
    for (int i = 0; i < 3; ++i) CHECK((cam.cams[static_cast<std::size_t>(i)] == 0.0f).all());

    // nonnegativity on random trials
    auto m2 = make_model(11);
    for (int trial = 0; trial < 5; ++trial) {
        auto xi = random_input(128, rng);
        auto c = grad_cam_per_backbone(m2, xi, trial % 3);
        for (int i = 0; i < 3; ++i) CHECK((c.cams[static_cast<std::size_t>(i)] >= 0.0f).all());
    }

    CHECK_THROWS_AS(grad_cam_per_backbone(m2, x, 99), ShapeError);
    CHECK_THROWS_AS(grad_cam_per_backbone(m2, x, -1), ShapeError);
}

TEST_CASE("normalized overlay: zero alpha, minmax contract, scale invariance") {
    Rng rng(13);
    ArrayX<double> cam(50);
    for (int i = 0; i < 50; ++i) cam[i] = rng.uniform(0.0, 2.0);

    // alpha = 0 -> constant product -> all zeros
    auto zero = normalized_overlay(0.0, cam);
    CHECK((zero == 0.0f).all());

    // non-constant map: max exactly 1, min exactly 0
    auto m = normalized_overlay(0.7, cam);
    CHECK(m.maxCoeff() == 1.0f);
    CHECK(m.minCoeff() == 0.0f);
    CHECK((m >= 0.0f).all());
    CHECK((m <= 1.0f).all());

    // doubling alpha leaves the overlay bit-identical
    auto doubled = normalized_overlay(1.4, cam);
    CHECK((doubled == m).all());

    // constant cam -> zeros
    ArrayX<double> flat = ArrayX<double>::Constant(50, 3.0);
    CHECK((normalized_overlay(0.9, flat) == 0.0f).all());
}

TEST_CASE("linear upsample: endpoints and monotone interpolation") {
    ArrayX<float> v(3);
    v << 0.0f, 1.0f, 0.0f;
    auto up = linear_upsample(v, 9);
    CHECK(up[0] == 0.0f);
    CHECK(up[8] == 0.0f);
    CHECK(up[4] == doctest::Approx(1.0f));
    ArrayX<float> single(1);
    single << 2.5f;
    auto flat = linear_upsample(single, 5);
    CHECK((flat == 2.5f).all());
}

TEST_CASE("lead-wise explanation: ranges, determinism") {
    auto model = make_model(17);
    Rng rng(19);
    auto x = random_input(128, rng);
    auto ex = lead_wise_explanation(model, x, 0);
    for (int i = 0; i < 3; ++i) {
        const auto& m = ex.maps[static_cast<std::size_t>(i)];
        CHECK(m.size() == 128);
        CHECK((m >= 0.0f).all());
        CHECK((m <= 1.0f).all());
        CHECK(ex.alpha[static_cast<std::size_t>(i)] > 0.0f);
        CHECK(ex.alpha[static_cast<std::size_t>(i)] < 1.0f);
    }
    auto ex2 = lead_wise_explanation(model, x, 0);
    for (int i = 0; i < 3; ++i)
        CHECK((ex.maps[static_cast<std::size_t>(i)] == ex2.maps[static_cast<std::size_t>(i)]).all());
}

TEST_CASE("spearman: fixed points, ties, constant flag") {
    ArrayX<double> a(5);
    a << 1, 2, 3, 4, 5;
    bool flag = false;
    CHECK(spearman(a, a, &flag) == doctest::Approx(1.0));
    CHECK_FALSE(flag);
    ArrayX<double> rev(5);
    rev << 5, 4, 3, 2, 1;
    CHECK(spearman(a, rev, &flag) == doctest::Approx(-1.0));
    // monotone transform preserves rho = 1
    ArrayX<double> sq = a.square();
    CHECK(spearman(a, sq, &flag) == doctest::Approx(1.0));
    // constant vector flagged, reported as 0
    ArrayX<double> c = ArrayX<double>::Constant(5, 2.0);
    CHECK(spearman(a, c, &flag) == 0.0);
    CHECK(flag);
    // ties get average ranks
    ArrayX<double> t1(4), t2(4);
    t1 << 1, 1, 2, 3;
    t2 << 1, 1, 2, 3;
    CHECK(spearman(t1, t2, &flag) == doctest::Approx(1.0));
}

TEST_CASE("sanity check: structure, determinism, self-comparison") {
    auto model = make_model(23);
    Rng rng(29);
    std::vector<Tensor3<float>> recs;
    std::vector<std::string> ids;
    for (int i = 0; i < 4; ++i) {
        recs.push_back(random_input(128, rng));
        ids.push_back("rec" + std::to_string(i));
    }
    auto rep = sanity_check(model, recs, ids, predicted_class, 99);
    CHECK(rep.rows.size() == 12);
    for (const auto& row : rep.rows) {
        CHECK(row.rho >= -1.0);
        CHECK(row.rho <= 1.0);
    }
    CHECK(rep.average >= -1.0);
    CHECK(rep.average <= 1.0);
    CHECK(rep.randomization_seed == 99);

    auto rep2 = sanity_check(model, recs, ids, predicted_class, 99);
    CHECK(rep.average == rep2.average);

    // self-comparison: identical explanations correlate at exactly 1
    auto ex = lead_wise_explanation(model, recs[0], 0);
    bool flag = false;
    const double self = spearman(ex.maps[0].cast<double>(), ex.maps[0].cast<double>(), &flag);
    if (!flag) CHECK(self == doctest::Approx(1.0));

    const std::string csv = sanity_report_csv(rep);
    CHECK(csv.find("lead,recording_id,rho") == 0);
}

TEST_CASE("svg rendering: file contract, panels, zero map, bad path") {
    auto model = make_model(31);
    Rng rng(37);
    auto x = random_input(128, rng);
    auto ex = lead_wise_explanation(model, x, 1);

    auto dir = fs::temp_directory_path() / "trilead_test_svg";
    fs::create_directories(dir);
    const auto path = (dir / "explain.svg").string();
    render_explanation_svg(x, ex, path);

    std::ifstream in(path);
    REQUIRE(in.good());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.size() > 100);
    CHECK(xml_well_formed(text));
    CHECK(text.find("lead-I") != std::string::npos);
    CHECK(text.find("lead-II") != std::string::npos);
    CHECK(text.find("lead-V1") != std::string::npos);
    CHECK(text.find("alpha=") != std::string::npos);

    // all-zero maps: no heat rects, trace still drawn
    Explanation zero = ex;
    for (int i = 0; i < 3; ++i) zero.maps[static_cast<std::size_t>(i)].setZero();
    const auto zpath = (dir / "zero.svg").string();
    render_explanation_svg(x, zero, zpath);
    std::ifstream zin(zpath);
    std::string ztext((std::istreambuf_iterator<char>(zin)), std::istreambuf_iterator<char>());
    CHECK(xml_well_formed(ztext));
    CHECK(ztext.find("fill-opacity") == std::string::npos);
    CHECK(ztext.find("polyline") != std::string::npos);

    CHECK_THROWS_WITH_AS(render_explanation_svg(x, ex, "/nonexistent_dir_xyz/out.svg"),
                         doctest::Contains("/nonexistent_dir_xyz/out.svg"), std::runtime_error);
}
