#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "trilead/checkpoint.hpp"
#include "trilead/compress.hpp"
#include "trilead/data.hpp"

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
    cfg.backbone.stages = {{1, 4, 3, 1}, {2, 8, 3, 2}};
    cfg.backbone.se_reduction = 2;
    cfg.input_length = 64;
    cfg.n_classes = 3;
    cfg.attention_hidden = 8;
    return cfg;
}

Model make_model(std::uint64_t seed, const ModelConfig& cfg) {
    Model m;
    m.setup(cfg);
    Rng rng(seed);
    m.init(rng);
    m.set_mode(Mode::eval);
    return m;
}

}  // namespace

TEST_CASE("prune: hand example, counting contract, idempotence, rejection") {
    // weights (0.1, -0.5, 0.01, 2.0, -0.03), sparsity 0.8 -> only 2.0 survives
    ArrayX<float> w(5);
    w << 0.1f, -0.5f, 0.01f, 2.0f, -0.03f;
    ArrayX<float> g = ArrayX<float>::Zero(5);
    // run the selection through a real model? the rule itself is in
    // prune_global_l1; emulate with a single prunable tensor via a tiny model
    // is awkward, so check the rule directly on a model below and the
    // arithmetic here against a sorted reference
    std::vector<float> mags = {0.1f, 0.5f, 0.01f, 2.0f, 0.03f};
    std::vector<int> order = {2, 4, 0, 1, 3};  // ascending |w|
    (void)order;

    auto cfg = tiny_config();
    auto model = make_model(3, cfg);
    auto params = model.parameters();

    long long prunable = 0;
    for (auto& p : params)
        if (p.prunable) prunable += p.value->size();

    auto r = prune_global_l1(model, 0.8);
    CHECK(r.total_prunable == prunable);
    CHECK(r.zeroed == static_cast<long long>(std::floor(0.8 * prunable)));

    // post-prune nonzero fraction ~= 1 - sparsity
    long long zeros = 0;
    for (auto& p : params)
        if (p.prunable) zeros += (p.value->abs() == 0.0f).count();
    CHECK(zeros >= r.zeroed);  // natural zeros may add to the count

    // global selection: every zeroed |w| <= every survivor |w|
    float max_zeroed = 0.0f, min_kept = std::numeric_limits<float>::max();
    for (std::size_t t = 0; t < params.size(); ++t) {
        if (!params[t].prunable) continue;
        for (Eigen::Index i = 0; i < params[t].value->size(); ++i) {
            const float mag = std::abs((*params[t].value)[i]);
            if (r.mask[t][i] == 0.0f) max_zeroed = std::max(max_zeroed, mag);
            else min_kept = std::min(min_kept, mag);
        }
    }
    CHECK(max_zeroed <= min_kept);

    // idempotence: same mask on a second application
    auto r2 = prune_global_l1(model, 0.8);
    for (std::size_t t = 0; t < r.mask.size(); ++t) {
        if (r.mask[t].size() == 0) {
            CHECK(r2.mask[t].size() == 0);
        } else {
            CHECK((r.mask[t] == r2.mask[t]).all());
        }
    }

    CHECK_THROWS_AS(prune_global_l1(model, 0.0), ShapeError);
    CHECK_THROWS_AS(prune_global_l1(model, 1.0), ShapeError);

    // BN params and biases untouched: their mask entries are empty
    for (std::size_t t = 0; t < params.size(); ++t)
        if (!params[t].prunable) CHECK(r.mask[t].size() == 0);
}

TEST_CASE("prune hand example via the documented rule") {
    // sorted by (|w|, tensor, index): 0.01 < 0.03 < 0.1 < 0.5 < 2.0;
    // floor(0.8*5) = 4 zeroed -> (0, 0, 0, 2.0, 0)
    std::vector<std::pair<float, int>> entries = {
        {0.1f, 0}, {0.5f, 1}, {0.01f, 2}, {2.0f, 3}, {0.03f, 4}};
    std::sort(entries.begin(), entries.end(), [](auto a, auto b) {
        return std::make_pair(std::abs(a.first), a.second) <
               std::make_pair(std::abs(b.first), b.second);
    });
    std::vector<float> vals = {0.1f, -0.5f, 0.01f, 2.0f, -0.03f};
    for (int k = 0; k < 4; ++k) vals[static_cast<std::size_t>(entries[static_cast<std::size_t>(k)].second)] = 0.0f;
    CHECK(vals[0] == 0.0f);
    CHECK(vals[1] == 0.0f);
    CHECK(vals[2] == 0.0f);
    CHECK(vals[3] == 2.0f);
    CHECK(vals[4] == 0.0f);
}

TEST_CASE("per-layer prune variant zeroes the stated fraction per tensor") {
    auto model = make_model(5, tiny_config());
    auto params = model.parameters();
    auto r = prune_per_layer_l1(model, 0.5);
    for (std::size_t t = 0; t < params.size(); ++t) {
        if (!params[t].prunable) continue;
        const long long zeroed = (r.mask[t] == 0.0f).count();
        CHECK(zeroed == static_cast<long long>(params[t].value->size() / 2));
    }
}

TEST_CASE("checkpoint: dense round trip preserves forward bits") {
    auto cfg = tiny_config();
    auto model = make_model(11, cfg);
    Rng rng(13);
    Tensor3<float> x(2, 3, cfg.input_length);
    for (Eigen::Index i = 0; i < x.data.size(); ++i)
        x.data[i] = static_cast<float>(rng.uniform(-1, 1));
    auto before = model.forward(x, nullptr, false);

    const std::string bytes = serialize_checkpoint(model);
    CheckpointMeta meta;
    auto back = deserialize_checkpoint(bytes, &meta);
    CHECK_FALSE(meta.sparse);
    auto after = back.forward(x, nullptr, false);
    CHECK((after.logits - before.logits).cwiseAbs().maxCoeff() == 0.0f);
    CHECK((after.alpha - before.alpha).cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("checkpoint: sparse payload, size ratio, densify identity") {
    auto cfg = tiny_config();
    auto model = make_model(17, cfg);
    const std::string dense = serialize_checkpoint(model);

    Model pruned = model;
    auto r = prune_global_l1(pruned, 0.8);
    const std::string sparse = serialize_checkpoint(pruned, {}, &r.mask);
    CheckpointMeta meta;
    auto back = deserialize_checkpoint(sparse, &meta);
    CHECK(meta.sparse);

    // densified values equal the masked dense tensors exactly
    auto pp = pruned.parameters();
    auto bp = back.parameters();
    REQUIRE(pp.size() == bp.size());
    for (std::size_t i = 0; i < pp.size(); ++i) CHECK((*pp[i].value == *bp[i].value).all());

    // forward identity after round trip
    Rng rng(19);
    Tensor3<float> x(1, 3, cfg.input_length);
    for (Eigen::Index i = 0; i < x.data.size(); ++i)
        x.data[i] = static_cast<float>(rng.uniform(-1, 1));
    auto a = pruned.forward(x, nullptr, false);
    auto b = back.forward(x, nullptr, false);
    CHECK((a.logits - b.logits).cwiseAbs().maxCoeff() == 0.0f);

    // sparse size is monotone non-increasing in sparsity
    long long prev = std::numeric_limits<long long>::max();
    for (double s : {0.2, 0.5, 0.8, 0.95}) {
        Model m2 = model;
        auto rr = prune_global_l1(m2, s);
        const auto sz = static_cast<long long>(serialize_checkpoint(m2, {}, &rr.mask).size());
        CHECK(sz <= prev);
        prev = sz;
    }
}

TEST_CASE("checkpoint: corruption reported with offset") {
    auto model = make_model(23, tiny_config());
    std::string bytes = serialize_checkpoint(model);
    // flip a header byte
    std::string bad = bytes;
    bad[3] = 'X';
    CHECK_THROWS_WITH_AS(deserialize_checkpoint(bad), doctest::Contains("offset"),
                         std::runtime_error);
    // truncate
    std::string trunc = bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_WITH_AS(deserialize_checkpoint(trunc), doctest::Contains("offset"),
                         std::runtime_error);
    // corrupt the config region -> digest mismatch
    std::string caught = bytes;
    caught[30] ^= 0x7;
    CHECK_THROWS_AS(deserialize_checkpoint(caught), std::runtime_error);
}

TEST_CASE("stats: closed-form examples and agreement with the built model") {
    CHECK(conv_param_count(8, 4, 3, 1, true) == 104);
    CHECK(fc_param_count(4, 512, true) == 2052);
    CHECK(fc_flops(4, 512, true) == 4096 + 4);
    CHECK(dsconv_param_count(64, 64, 15) == 5056);

    // closed-form parameter count equals the instantiated model exactly
    for (std::uint64_t seed : {1ull, 2ull}) {
        auto cfg = tiny_config();
        if (seed == 2) {
            cfg.backbone.stem_dsconv = false;
            cfg.backbone.stem_pool = false;
            cfg.backbone.stages = {{2, 6, 5, 1}, {1, 12, 5, 2}, {1, 24, 5, 2}};
            cfg.attention_hidden = 0;
        }
        auto model = make_model(seed, cfg);
        CHECK(count_params(cfg) == static_cast<long long>(model.param_count()));
    }

    // dense-equivalent replacement is at least 4x larger for the default net
    ModelConfig full;
    CHECK(count_params_dense_equivalent(full) >= 4 * count_params(full));
}

TEST_CASE("stats: default full config lands near the published accounting") {
    ModelConfig full;  // defaults: 3x5000 input, 4 classes
    const double params_m = static_cast<double>(count_params(full)) / 1e6;
    const double flops_b = static_cast<double>(count_flops(full)) / 1e9;
    MESSAGE("default config: ", params_m, "M params, ", flops_b, "B flops");
    CHECK(params_m > 5.31 * 0.75);
    CHECK(params_m < 5.31 * 1.25);
    CHECK(flops_b > 1.34 * 0.75);
    CHECK(flops_b < 1.34 * 1.25);
}

TEST_CASE("fine-tune honors the mask; zero learning rate changes nothing") {
    // small synthetic dataset straight from the generator
    Dataset ds;
    ds.task = TaskKind::multi_class;
    ds.class_names = {"baseline", "st_up"};
    Rng seeds(77);
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 8; ++i) {
            std::set<std::string> edits;
            if (c == 1) edits.insert("st_up");
            auto sr = synth_record(seeds.split(static_cast<std::uint64_t>(c * 8 + i)).next_u64(),
                                   edits, 0.04, "r");
            auto pre = preprocess(sr.record);
            ds.inputs.push_back(std::move(pre.x));
            ds.labels.push_back({c});
            ds.ids.push_back("r" + std::to_string(c * 8 + i));
        }

    ModelConfig mc = tiny_config();
    mc.input_length = 5000;
    mc.n_classes = 2;
    TrainConfig tc;
    tc.batch_size = 8;
    tc.epochs_total = 1;
    tc.epochs_cosine = 1;
    tc.seed = 3;
    Trainer trainer(ds, mc, tc);
    std::vector<int> all(ds.inputs.size());
    for (int i = 0; i < static_cast<int>(all.size()); ++i) all[static_cast<std::size_t>(i)] = i;

    Model model = trainer.train(all);
    auto r = prune_global_l1(model, 0.5);

    // lr = 0: nothing moves
    Model frozen = model;
    {
        Trainer t2(ds, mc, tc);
        t2.train_existing(frozen, all, 2, 0.0, &r.mask);
    }
    auto pa = model.parameters();
    auto pb = frozen.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK((*pa[i].value == *pb[i].value).all());

    // lr > 0: masked coordinates stay exactly zero, survivors move
    Model tuned = model;
    {
        Trainer t3(ds, mc, tc);
        t3.train_existing(tuned, all, 2, 1e-4, &r.mask);
    }
    auto pt = tuned.parameters();
    bool any_moved = false;
    for (std::size_t t = 0; t < pt.size(); ++t) {
        if (r.mask[t].size() == 0) continue;
        for (Eigen::Index i = 0; i < pt[t].value->size(); ++i) {
            if (r.mask[t][i] == 0.0f) {
                REQUIRE((*pt[t].value)[i] == 0.0f);
            } else if ((*pt[t].value)[i] != (*pa[t].value)[i]) {
                any_moved = true;
            }
        }
    }
    CHECK(any_moved);
}

TEST_CASE("sparse checkpoint at 0.8 sparsity stays under 0.40x dense bytes") {
    // use a config whose prunable weights dominate, as in the real model
    ModelConfig cfg = tiny_config();
    cfg.backbone.stages = {{2, 16, 5, 1}, {2, 32, 5, 2}, {2, 64, 5, 2}};
    auto model = make_model(29, cfg);
    const auto dense = static_cast<long long>(serialize_checkpoint(model).size());
    auto r = prune_global_l1(model, 0.8);
    const auto sparse = static_cast<long long>(serialize_checkpoint(model, {}, &r.mask).size());
    CHECK(static_cast<double>(sparse) / static_cast<double>(dense) <= 0.40);
}
