#include <sstream>

#include "trilead/model.hpp"

namespace trilead {

namespace {

std::string join_ints(const std::vector<int>& v) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) ss << ",";
        ss << v[i];
    }
    return ss.str();
}

}  // namespace

std::vector<std::string> model_config_keys() {
    return {"arch.stem_kernel", "arch.stem_stride", "arch.stem_out",   "arch.stem_dsconv",
            "arch.stem_pool",   "arch.pool_kernel", "arch.pool_stride", "arch.channels",
            "arch.blocks",      "arch.kernels",     "arch.strides",     "arch.se_reduction",
            "arch.attention_hidden", "arch.attention_dropout",
            "input_length",     "n_classes",        "task"};
}

KvConfig model_config_to_kv(const ModelConfig& cfg) {
    KvConfig kv;
    const auto& b = cfg.backbone;
    kv.set("arch.stem_kernel", std::to_string(b.stem_kernel));
    kv.set("arch.stem_stride", std::to_string(b.stem_stride));
    kv.set("arch.stem_out", std::to_string(b.stem_out));
    kv.set("arch.stem_dsconv", b.stem_dsconv ? "true" : "false");
    kv.set("arch.stem_pool", b.stem_pool ? "true" : "false");
    kv.set("arch.pool_kernel", std::to_string(b.pool_kernel));
    kv.set("arch.pool_stride", std::to_string(b.pool_stride));
    std::vector<int> chans, blocks, kernels, strides;
    for (const auto& s : b.stages) {
        chans.push_back(s.out_ch);
        blocks.push_back(s.blocks);
        kernels.push_back(s.kernel);
        strides.push_back(s.stride);
    }
    kv.set("arch.channels", join_ints(chans));
    kv.set("arch.blocks", join_ints(blocks));
    kv.set("arch.kernels", join_ints(kernels));
    kv.set("arch.strides", join_ints(strides));
    kv.set("arch.se_reduction", std::to_string(b.se_reduction));
    kv.set("arch.attention_hidden", std::to_string(cfg.attention_hidden));
    {
        std::ostringstream ss;
        ss << cfg.attention_dropout;
        kv.set("arch.attention_dropout", ss.str());
    }
    kv.set("input_length", std::to_string(cfg.input_length));
    kv.set("n_classes", std::to_string(cfg.n_classes));
    kv.set("task", task_name(cfg.task));
    return kv;
}

ModelConfig model_config_from_kv(const KvConfig& kv) {
    ModelConfig cfg;
    BackboneConfig& b = cfg.backbone;
    if (kv.has("arch.stem_kernel")) b.stem_kernel = static_cast<int>(kv.get_long("arch.stem_kernel"));
    if (kv.has("arch.stem_stride")) b.stem_stride = static_cast<int>(kv.get_long("arch.stem_stride"));
    if (kv.has("arch.stem_out")) b.stem_out = static_cast<int>(kv.get_long("arch.stem_out"));
    if (kv.has("arch.stem_dsconv")) b.stem_dsconv = kv.get_bool("arch.stem_dsconv");
    if (kv.has("arch.stem_pool")) b.stem_pool = kv.get_bool("arch.stem_pool");
    if (kv.has("arch.pool_kernel")) b.pool_kernel = static_cast<int>(kv.get_long("arch.pool_kernel"));
    if (kv.has("arch.pool_stride")) b.pool_stride = static_cast<int>(kv.get_long("arch.pool_stride"));
    if (kv.has("arch.channels")) {
        const auto chans = kv.get_int_list("arch.channels");
        const auto blocks = kv.has("arch.blocks") ? kv.get_int_list("arch.blocks")
                                                  : std::vector<int>(chans.size(), 2);
        const auto kernels = kv.has("arch.kernels") ? kv.get_int_list("arch.kernels")
                                                    : std::vector<int>(chans.size(), 7);
        std::vector<int> strides;
        if (kv.has("arch.strides")) {
            strides = kv.get_int_list("arch.strides");
        } else {
            strides.assign(chans.size(), 2);
            if (!strides.empty()) strides[0] = 1;
        }
        require(blocks.size() == chans.size() && kernels.size() == chans.size() &&
                    strides.size() == chans.size(),
                "arch lists (channels/blocks/kernels/strides) must have equal lengths");
        b.stages.clear();
        for (std::size_t i = 0; i < chans.size(); ++i)
            b.stages.push_back({blocks[i], chans[i], kernels[i], strides[i]});
    }
    if (kv.has("arch.se_reduction"))
        b.se_reduction = static_cast<int>(kv.get_long("arch.se_reduction"));
    if (kv.has("arch.attention_hidden"))
        cfg.attention_hidden = static_cast<int>(kv.get_long("arch.attention_hidden"));
    if (kv.has("arch.attention_dropout"))
        cfg.attention_dropout = kv.get_double("arch.attention_dropout");
    if (kv.has("input_length")) cfg.input_length = static_cast<int>(kv.get_long("input_length"));
    if (kv.has("n_classes")) cfg.n_classes = static_cast<int>(kv.get_long("n_classes"));
    if (kv.has("task")) cfg.task = task_from_name(kv.get("task"));
    return cfg;
}

}  // namespace trilead
