#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "trilead/gradcheck.hpp"
#include "trilead/model.hpp"

using namespace trilead;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.backbone.stem_kernel = 7;
    cfg.backbone.stem_stride = 2;
    cfg.backbone.stem_out = 4;
    cfg.backbone.stem_pool = true;
    cfg.backbone.pool_kernel = 3;
    cfg.backbone.pool_stride = 2;
    cfg.backbone.stages = {{1, 4, 3, 1}, {1, 8, 3, 2}};
    cfg.backbone.se_reduction = 2;
    cfg.input_length = 64;
    cfg.n_classes = 3;
    cfg.attention_hidden = 8;
    cfg.attention_dropout = 0.3;
    return cfg;
}

template <class S>
Tensor3<S> random_input(int b, const ModelConfig& cfg, Rng& rng) {
    Tensor3<S> x(b, 3, cfg.input_length);
    for (Eigen::Index i = 0; i < x.data.size(); ++i)
        x.data[i] = static_cast<S>(rng.uniform(-1, 1));
    return x;
}

}  // namespace

TEST_CASE("backbone: shape contract and zero-input constancy") {
    auto cfg = tiny_config();
    Backbone<float> bb;
    bb.setup(cfg.backbone);
    Rng rng(5);
    bb.init(rng);

    Tensor3<float> lead(2, 1, cfg.input_length);
    for (Eigen::Index i = 0; i < lead.data.size(); ++i)
        lead.data[i] = static_cast<float>(rng.uniform(-1, 1));
    auto f = bb.forward(lead, Mode::eval, false);
    CHECK(f.rows() == 2);
    CHECK(f.cols() == cfg.backbone.feature_dim());

    // zero input -> identical, input-independent feature rows
    Tensor3<float> zero(3, 1, cfg.input_length);
    auto fz = bb.forward(zero, Mode::eval, false);
    for (int r = 1; r < 3; ++r)
        CHECK((fz.row(r) - fz.row(0)).cwiseAbs().maxCoeff() == 0.0f);

    Tensor3<float> bad(1, 2, cfg.input_length);
    CHECK_THROWS_AS(bb.forward(bad, Mode::eval, false), ShapeError);
}

TEST_CASE("SE block with zero weights gates every channel by exactly 0.5") {
    SEBlock<float> se;
    se.setup(6, 2);  // weights zero-initialised by setup
    Rng rng(9);
    Tensor3<float> x(2, 6, 5);
    for (Eigen::Index i = 0; i < x.data.size(); ++i)
        x.data[i] = static_cast<float>(rng.uniform(-1, 1));
    auto y = se.forward(x, false);
    CHECK((y.data == 0.5f * x.data).all());
}

TEST_CASE("attention: sigmoid(0) case and linearity of the weighted sum") {
    AttentionMerge<float> att;
    att.setup(4, 5, 0.0);
    Rng rng(13);
    Mat<float> f1(2, 4), f2(2, 4), f3(2, 4);
    for (Eigen::Index i = 0; i < f1.size(); ++i) {
        f1.data()[i] = static_cast<float>(rng.uniform(-1, 1));
        f2.data()[i] = static_cast<float>(rng.uniform(-1, 1));
        f3.data()[i] = static_cast<float>(rng.uniform(-1, 1));
    }
    // all-zero attention weights -> alpha = 0.5 and f_merged = 0.5*(f1+f2+f3)
    auto r = att.forward(f1, f2, f3, Mode::eval, nullptr, false);
    CHECK((r.alpha.array() == 0.5f).all());
    Mat<float> expect = 0.5f * (f1 + f2 + f3);
    CHECK((r.f_merged - expect).cwiseAbs().maxCoeff() < 1e-6f);

    // identical features: f_merged = (a1+a2+a3) * f
    Rng rng2(17);
    att.init(rng2);
    auto ri = att.forward(f1, f1, f1, Mode::eval, nullptr, false);
    for (int b = 0; b < 2; ++b) {
        const float asum = ri.alpha.row(b).sum();
        CHECK((ri.f_merged.row(b) - asum * f1.row(b)).cwiseAbs().maxCoeff() < 1e-5f);
    }

    Mat<float> short_f(2, 3);
    CHECK_THROWS_AS(att.forward(short_f, f2, f3, Mode::eval, nullptr, false), ShapeError);
}

TEST_CASE("attention matches a straight-line transcription of its equations") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const int D = 2 + rng.next_int(6);
        const int H = 2 + rng.next_int(6);
        const int B = 1 + rng.next_int(4);
        AttentionMerge<double> att;
        att.setup(D, H, 0.0);
        att.init(rng);
        // non-trivial BN statistics
        for (int c = 0; c < H; ++c) {
            att.bn.s.gamma[c] = rng.uniform(0.5, 1.5);
            att.bn.s.beta[c] = rng.uniform(-0.5, 0.5);
            att.bn.s.running_mean[c] = rng.uniform(-0.5, 0.5);
            att.bn.s.running_var[c] = rng.uniform(0.5, 2.0);
        }
        Mat<double> f1(B, D), f2(B, D), f3(B, D);
        for (Eigen::Index i = 0; i < f1.size(); ++i) {
            f1.data()[i] = rng.uniform(-2, 2);
            f2.data()[i] = rng.uniform(-2, 2);
            f3.data()[i] = rng.uniform(-2, 2);
        }
        auto got = att.forward(f1, f2, f3, Mode::eval, nullptr, false);

        Mat<double> want_merged, want_alpha;
        Mat<double> w1(H, 3 * D), w2(3, H);
        w1 = Eigen::Map<const Mat<double>>(att.fc1.weight.data(), H, 3 * D);
        w2 = Eigen::Map<const Mat<double>>(att.fc2.weight.data(), 3, H);
        oracle::straightline_attention(f1, f2, f3, w1, att.fc1.bias, att.bn.s.gamma,
                                       att.bn.s.beta, att.bn.s.running_mean, att.bn.s.running_var,
                                       att.bn.s.eps, w2, att.fc2.bias, want_merged, want_alpha);
        REQUIRE((got.alpha - want_alpha).cwiseAbs().maxCoeff() < 1e-6);
        REQUIRE((got.f_merged - want_merged).cwiseAbs().maxCoeff() < 1e-6);
        // alpha strictly inside (0,1)
        REQUIRE((got.alpha.array() > 0.0).all());
        REQUIRE((got.alpha.array() < 1.0).all());
    }
}

TEST_CASE("model forward: equivariance, determinism, validation") {
    auto cfg = tiny_config();
    ModelT<float> model;
    model.setup(cfg);
    Rng rng(31);
    model.init(rng);
    model.set_mode(Mode::eval);

    auto x = random_input<float>(2, cfg, rng);
    auto r1 = model.forward(x, nullptr, false);
    CHECK(r1.logits.rows() == 2);
    CHECK(r1.logits.cols() == cfg.n_classes);
    CHECK(r1.alpha.rows() == 2);
    CHECK(r1.alpha.cols() == 3);

    // permuting batch rows permutes logits rows identically
    Tensor3<float> xs(2, 3, cfg.input_length);
    for (int c = 0; c < 3; ++c) {
        xs.row(0, c) = x.row(1, c);
        xs.row(1, c) = x.row(0, c);
    }
    auto r2 = model.forward(xs, nullptr, false);
    CHECK((r2.logits.row(0) - r1.logits.row(1)).cwiseAbs().maxCoeff() == 0.0f);
    CHECK((r2.logits.row(1) - r1.logits.row(0)).cwiseAbs().maxCoeff() == 0.0f);

    // eval-mode forward twice -> bit-identical
    auto r3 = model.forward(x, nullptr, false);
    CHECK((r3.logits - r1.logits).cwiseAbs().maxCoeff() == 0.0f);

    Tensor3<float> bad(1, 2, cfg.input_length);
    CHECK_THROWS_AS(model.forward(bad, nullptr, false), ShapeError);
    Tensor3<float> badlen(1, 3, cfg.input_length + 1);
    CHECK_THROWS_AS(model.forward(badlen, nullptr, false), ShapeError);
}

TEST_CASE("masked lead contributes no input-dependent information") {
    auto cfg = tiny_config();
    ModelT<float> model;
    model.setup(cfg);
    Rng rng(37);
    model.init(rng);
    model.set_mode(Mode::eval);

    auto x = random_input<float>(2, cfg, rng);
    // zero lead 1 as DropLead would
    for (int b = 0; b < 2; ++b) x.row(b, 1).setZero();
    Tensor3<float> lead1(2, 1, cfg.input_length);
    for (int b = 0; b < 2; ++b) lead1.row(b, 0) = x.row(b, 1);
    auto f_masked = model.backbones[1].forward(lead1, Mode::eval, false);

    Tensor3<float> zero(2, 1, cfg.input_length);
    auto f_zero = model.backbones[1].forward(zero, Mode::eval, false);
    CHECK((f_masked - f_zero).cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("predict: argmax ties, thresholds, monotonicity") {
    Mat<float> logits(1, 4);
    logits << 2, 1, 0, 0;
    auto ind = predict(logits, TaskKind::multi_class);
    CHECK(ind(0, 0) == 1);
    CHECK(ind.row(0).template cast<int>().sum() == 1);

    Mat<float> tie(1, 3);
    tie << 5, 5, 5;
    auto ti = predict(tie, TaskKind::multi_class);
    CHECK(ti(0, 0) == 1);  // lowest index wins

    // multi-label boundary: sigmoid(0)=0.5 >= 0.5 -> positive
    Mat<float> zeros = Mat<float>::Zero(1, 3);
    std::vector<double> thr(3, 0.5);
    auto ml = predict(zeros, TaskKind::multi_label, &thr);
    CHECK(static_cast<int>(ml(0, 0)) + ml(0, 1) + ml(0, 2) == 3);

    CHECK_THROWS_AS(predict(zeros, TaskKind::multi_label), ShapeError);

    // monotonicity: raising one logit never removes that class
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        Mat<float> lg(1, 4);
        for (int c = 0; c < 4; ++c) lg(0, c) = static_cast<float>(rng.uniform(-2, 2));
        std::vector<double> t{0.3, 0.5, 0.7, 0.4};
        auto before = predict(lg, TaskKind::multi_label, &t);
        const int c = rng.next_int(4);
        lg(0, c) += static_cast<float>(rng.uniform(0.0, 3.0));
        auto after = predict(lg, TaskKind::multi_label, &t);
        if (before(0, c) == 1) CHECK(after(0, c) == 1);
    }
}

TEST_CASE("default config counts 18 main layers") {
    BackboneConfig def;
    CHECK(def.main_layer_count() == 18);
}

TEST_CASE("parameter store: flags, naming, independence of backbones") {
    auto cfg = tiny_config();
    ModelT<float> model;
    model.setup(cfg);
    Rng rng(43);
    model.init(rng);

    std::set<std::string> names;
    bool saw_prunable = false;
    for (auto& p : model.parameters()) {
        CHECK(names.insert(p.name).second);  // unique
        Eigen::Index expect = 1;
        for (int d : p.shape) expect *= d;
        CHECK(p.value->size() == expect);
        CHECK(p.grad->size() == expect);
        const bool is_weight = p.name.ends_with(".weight");
        const bool is_bn = p.name.ends_with(".gamma") || p.name.ends_with(".beta");
        CHECK(p.prunable == is_weight);
        CHECK(p.decay == is_weight);
        if (is_bn) CHECK_FALSE(p.decay);
        saw_prunable = saw_prunable || p.prunable;
    }
    CHECK(saw_prunable);

    // three backbones: identical shapes, independent values
    auto params = model.parameters();
    ArrayX<float>*b0w = nullptr, *b1w = nullptr;
    for (auto& p : params) {
        if (p.name == "backbone0.stem.pw.weight") b0w = p.value;
        if (p.name == "backbone1.stem.pw.weight") b1w = p.value;
    }
    REQUIRE(b0w != nullptr);
    REQUIRE(b1w != nullptr);
    CHECK(b0w->size() == b1w->size());
    CHECK_FALSE((*b0w == *b1w).all());
}

TEST_CASE("end-to-end gradient matches finite differences (double, sampled)") {
    ModelConfig cfg = tiny_config();
    cfg.input_length = 32;
    cfg.backbone.stem_kernel = 5;
    cfg.backbone.stages = {{1, 4, 3, 2}};
    cfg.backbone.se_reduction = 2;
    cfg.attention_hidden = 4;
    cfg.attention_dropout = 0.0;  // keep the map deterministic

    ModelT<double> model;
    model.setup(cfg);
    Rng rng(47);
    model.init(rng);
    model.set_mode(Mode::train);

    Tensor3<double> x(3, 3, cfg.input_length);
    for (Eigen::Index i = 0; i < x.data.size(); ++i) x.data[i] = rng.uniform(-1, 1);
    std::vector<int> targets = {0, 2, 1};

    auto params = model.parameters();
    // flatten parameters; loss as a function of the flat vector
    Eigen::Index total = 0;
    for (auto& p : params) total += p.value->size();
    ArrayX<double> theta(total);
    Eigen::Index off = 0;
    for (auto& p : params) {
        theta.segment(off, p.value->size()) = *p.value;
        off += p.value->size();
    }
    auto set_theta = [&](const ArrayX<double>& t) {
        Eigen::Index o = 0;
        for (auto& p : params) {
            *p.value = t.segment(o, p.value->size());
            o += p.value->size();
        }
    };
    auto loss_fn = [&](const ArrayX<double>& t) {
        set_theta(t);
        // BN running stats mutate in train mode; stash and restore for purity
        auto bufs = model.buffers();
        std::vector<ArrayX<double>> saved;
        for (auto& b : bufs) saved.push_back(*b.value);
        auto r = model.forward(x, nullptr, true);
        for (std::size_t i = 0; i < bufs.size(); ++i) *bufs[i].value = saved[i];
        return static_cast<double>(cross_entropy(r.logits, targets).loss);
    };

    model.zero_grad();
    {
        auto bufs = model.buffers();
        std::vector<ArrayX<double>> saved;
        for (auto& b : bufs) saved.push_back(*b.value);
        auto r = model.forward(x, nullptr, true);
        auto lr = cross_entropy(r.logits, targets);
        model.backward(lr.grad_logits);
        for (std::size_t i = 0; i < bufs.size(); ++i) *bufs[i].value = saved[i];
    }
    ArrayX<double> analytic(total);
    off = 0;
    for (auto& p : params) {
        analytic.segment(off, p.grad->size()) = *p.grad;
        off += p.grad->size();
    }

    // sample 1% of coordinates (at least 60), deterministic
    const Eigen::Index n_sample = std::max<Eigen::Index>(60, total / 100);
    std::vector<Eigen::Index> coords;
    Rng pick(99);
    for (Eigen::Index i = 0; i < n_sample; ++i)
        coords.push_back(static_cast<Eigen::Index>(pick.next_u64() % static_cast<std::uint64_t>(total)));
    auto res = grad_check_sampled(loss_fn, analytic, theta, coords, 1e-5);
    set_theta(theta);
    CHECK(res.max_rel_err < 1e-3);
}

TEST_CASE("model config round-trips through key-value form") {
    ModelConfig cfg = tiny_config();
    cfg.task = TaskKind::multi_label;
    cfg.n_classes = 9;
    auto kv = model_config_to_kv(cfg);
    auto back = model_config_from_kv(kv);
    CHECK(back.backbone.stem_kernel == cfg.backbone.stem_kernel);
    CHECK(back.backbone.stages.size() == cfg.backbone.stages.size());
    for (std::size_t i = 0; i < cfg.backbone.stages.size(); ++i) {
        CHECK(back.backbone.stages[i].out_ch == cfg.backbone.stages[i].out_ch);
        CHECK(back.backbone.stages[i].blocks == cfg.backbone.stages[i].blocks);
        CHECK(back.backbone.stages[i].kernel == cfg.backbone.stages[i].kernel);
        CHECK(back.backbone.stages[i].stride == cfg.backbone.stages[i].stride);
    }
    CHECK(back.n_classes == 9);
    CHECK(back.task == TaskKind::multi_label);
    CHECK(model_config_to_kv(back).canonical() == kv.canonical());
}
