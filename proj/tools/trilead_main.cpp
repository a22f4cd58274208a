// trilead: train, evaluate, explain and compress a 3-lead ECG classifier.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "trilead/checkpoint.hpp"
#include "trilead/compress.hpp"
#include "trilead/config.hpp"
#include "trilead/data.hpp"
#include "trilead/explain.hpp"
#include "trilead/model.hpp"
#include "trilead/training.hpp"

namespace fs = std::filesystem;
using namespace trilead;

namespace {

// Exclusive lock on a run directory; stale locks must be removed by hand.
class RunLock {
  public:
    explicit RunLock(const fs::path& dir) : path_(dir / ".lock") {
        if (fs::exists(path_))
            throw std::runtime_error("run directory is locked: " + path_.string() +
                                     " exists (remove it if the previous run is dead)");
        std::ofstream out(path_);
        if (!out) throw std::runtime_error("cannot create lock file: " + path_.string());
        out << "pid unknown\n";
    }
    ~RunLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }

  private:
    fs::path path_;
};

std::vector<std::string> train_config_keys() {
    std::vector<std::string> keys = {"seed",         "folds",        "k_folds",
                                     "epochs",       "cosine_epochs", "batch_size",
                                     "lr0",          "lr_min",       "weight_decay",
                                     "droplead_p",   "standardize"};
    for (const auto& k : model_config_keys()) {
        if (k == "input_length" || k == "n_classes" || k == "task") continue;
        keys.push_back(k);
    }
    return keys;
}

struct TrainArgs {
    std::string data;
    std::string run;
    std::string config_file;
    std::map<std::string, std::string> overrides;  // flag-provided key = value
};

void set_if(KvConfig& kv, const std::map<std::string, std::string>& overrides) {
    for (const auto& [k, v] : overrides) kv.set(k, v);
}

KvConfig default_train_kv() {
    KvConfig kv = model_config_to_kv(ModelConfig{});
    kv.set("seed", "0");
    kv.set("folds", "10");
    kv.set("k_folds", "10");
    kv.set("epochs", "70");
    kv.set("cosine_epochs", "40");
    kv.set("batch_size", "32");
    kv.set("lr0", "1e-3");
    kv.set("lr_min", "1e-4");
    kv.set("weight_decay", "5e-5");
    kv.set("droplead_p", "0.5");
    kv.set("standardize", "true");
    return kv;
}

TrainConfig train_config_from_kv(const KvConfig& kv, TaskKind task) {
    TrainConfig tc;
    tc.seed = static_cast<std::uint64_t>(kv.get_long("seed"));
    tc.rounds = static_cast<int>(kv.get_long("folds"));
    tc.k_folds = static_cast<int>(kv.get_long("k_folds"));
    tc.epochs_total = static_cast<int>(kv.get_long("epochs"));
    tc.epochs_cosine = static_cast<int>(kv.get_long("cosine_epochs"));
    tc.batch_size = static_cast<int>(kv.get_long("batch_size"));
    tc.lr0 = kv.get_double("lr0");
    tc.lr_min = kv.get_double("lr_min");
    tc.weight_decay = kv.get_double("weight_decay");
    tc.droplead_p = kv.get_double("droplead_p");
    tc.task = task;
    tc.validate();
    return tc;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("short write to " + path.string());
}

std::vector<double> read_thresholds(const std::string& path, int n_classes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open thresholds file: " + path);
    std::vector<double> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        out.push_back(std::stod(line.substr(comma + 1)));
    }
    if (static_cast<int>(out.size()) != n_classes)
        throw std::runtime_error("thresholds file " + path + " has " +
                                 std::to_string(out.size()) + " entries, expected " +
                                 std::to_string(n_classes));
    return out;
}

std::string thresholds_text(const std::vector<double>& thr,
                            const std::vector<std::string>& classes,
                            const std::vector<bool>& defaulted) {
    std::ostringstream ss;
    for (std::size_t c = 0; c < thr.size(); ++c) {
        ss << classes[c] << "," << thr[c];
        if (!defaulted.empty() && defaulted[c]) ss << " # defaulted: class absent in validation";
        ss << "\n";
    }
    return ss.str();
}

int cmd_train(const TrainArgs& args) {
    KvConfig kv = default_train_kv();
    if (!args.config_file.empty()) {
        KvConfig file_kv = KvConfig::parse_file(args.config_file);
        file_kv.validate_keys(train_config_keys());
        for (const auto& [k, v] : file_kv.entries()) kv.set(k, v);
    }
    set_if(kv, args.overrides);

    const auto manifest = load_manifest(args.data);
    const Dataset ds = load_training_set(manifest, kv.get_bool("standardize"));
    require(ds.size() > 0, "empty dataset");

    ModelConfig mc = model_config_from_kv(kv);
    mc.n_classes = ds.n_classes();
    mc.task = ds.task;
    mc.input_length = ds.inputs[0].length;
    TrainConfig tc = train_config_from_kv(kv, ds.task);

    const fs::path run_dir(args.run);
    fs::create_directories(run_dir / "checkpoints");
    fs::create_directories(run_dir / "figures");
    RunLock lock(run_dir);

    // effective config echoed for reproducibility
    KvConfig echo = kv;
    echo.set("data", args.data);
    echo.set("task", task_name(ds.task));
    echo.set("n_classes", std::to_string(ds.n_classes()));
    echo.set("input_length", std::to_string(mc.input_length));
    echo.set("leads", manifest.lead_selection[0] + "," + manifest.lead_selection[1] + "," +
                          manifest.lead_selection[2]);
    write_text(run_dir / "config", echo.canonical());

    const FoldPlan plan = stratified_kfold(ds.labels, ds.n_classes(), tc.k_folds, tc.seed);
    Trainer trainer(ds, mc, tc);

    KvConfig ckpt_extra;
    ckpt_extra.set("data.standardize", kv.get("standardize"));
    ckpt_extra.set("data.leads", echo.get("leads"));

    auto cv = trainer.run_cv(
        plan,
        [&](int round, const Model& model, const RoundResult& rr) {
            Model copy = model;
            const auto ckpt = run_dir / "checkpoints" / ("fold_" + std::to_string(round) + ".ckpt");
            save_checkpoint(copy, ckpt.string(), ckpt_extra);
            if (!rr.thresholds.empty()) {
                write_text(run_dir / "checkpoints" / ("fold_" + std::to_string(round) + ".thresholds"),
                           thresholds_text(rr.thresholds, ds.class_names, rr.thresholds_defaulted));
                for (std::size_t c = 0; c < rr.thresholds_defaulted.size(); ++c)
                    if (rr.thresholds_defaulted[c])
                        std::cerr << "warning: class '" << ds.class_names[c]
                                  << "' absent in validation; threshold defaulted to 0.5\n";
            }
            std::cerr << "round " << round << ": macro F1 " << rr.test_metrics.macro.f1 << "\n";
        },
        [&](const EpochStats& s) {
            std::cerr << "  epoch " << s.epoch << " loss " << s.mean_loss << " lr " << s.lr
                      << "\n";
        });

    write_text(run_dir / "metrics.csv", metrics_csv(cv, ds.class_names));
    write_text(run_dir / "metrics.txt", metrics_pretty(cv, ds.class_names));
    std::cerr << "wrote " << (run_dir / "metrics.csv").string() << "\n";
    return 0;
}

int cmd_eval(const std::string& data, const std::string& checkpoint,
             const std::string& thresholds_path, const std::string& out_path) {
    const auto manifest = load_manifest(data);
    CheckpointMeta meta;
    Model model = load_checkpoint(checkpoint, &meta);
    const bool standardize =
        !meta.config.has("data.standardize") || meta.config.get_bool("data.standardize");
    const Dataset ds = load_training_set(manifest, standardize);
    require(ds.n_classes() == model.cfg.n_classes,
            "dataset has " + std::to_string(ds.n_classes()) + " classes but checkpoint expects " +
                std::to_string(model.cfg.n_classes));

    TrainConfig tc;
    tc.task = ds.task;
    tc.rounds = 1;
    Trainer trainer(ds, model.cfg, tc);
    std::vector<int> all(static_cast<std::size_t>(ds.size()));
    for (int i = 0; i < ds.size(); ++i) all[static_cast<std::size_t>(i)] = i;

    std::vector<double> thresholds;
    const std::vector<double>* thr_ptr = nullptr;
    if (ds.task == TaskKind::multi_label) {
        if (!thresholds_path.empty()) {
            thresholds = read_thresholds(thresholds_path, ds.n_classes());
        } else {
            std::cerr << "warning: no thresholds file given; using 0.5 everywhere\n";
            thresholds.assign(static_cast<std::size_t>(ds.n_classes()), 0.5);
        }
        thr_ptr = &thresholds;
    }
    auto rep = trainer.evaluate(model, all, thr_ptr);
    CvResult cv;
    RoundResult rr;
    rr.round = 0;
    rr.test_metrics = rep;
    cv.rounds.push_back(rr);
    cv.averaged = rep;
    write_text(out_path, metrics_csv(cv, ds.class_names));
    std::cerr << metrics_pretty(cv, ds.class_names);
    return 0;
}

int cmd_explain(const std::string& checkpoint, const std::string& record_path, int class_id,
                const std::string& out_path) {
    CheckpointMeta meta;
    Model model = load_checkpoint(checkpoint, &meta);
    const auto rec = load_record(record_path);
    PreprocessOptions opts;
    if (meta.config.has("data.leads")) {
        const auto leads = meta.config.get("data.leads");
        std::stringstream ss(leads);
        std::string item;
        int i = 0;
        while (std::getline(ss, item, ',') && i < 3) opts.leads[static_cast<std::size_t>(i++)] = item;
    }
    opts.standardize =
        !meta.config.has("data.standardize") || meta.config.get_bool("data.standardize");
    auto pre = preprocess(rec, opts);

    if (class_id < 0) {
        class_id = predicted_class(model, pre.x);
        std::cerr << "explaining predicted class " << class_id << "\n";
    }
    require(class_id < model.cfg.n_classes, "class id " + std::to_string(class_id) +
                                                " out of range [0, " +
                                                std::to_string(model.cfg.n_classes) + ")");
    auto ex = lead_wise_explanation(model, pre.x, class_id);
    RenderOptions ropts;
    ropts.lead_names = opts.leads;
    render_explanation_svg(pre.x, ex, out_path, ropts);
    std::cout << "class = " << class_id << "\n";
    for (int i = 0; i < 3; ++i)
        std::cout << "alpha_" << opts.leads[static_cast<std::size_t>(i)] << " = "
                  << ex.alpha[static_cast<std::size_t>(i)] << "\n";
    std::cerr << "wrote " << out_path << "\n";
    return 0;
}

int cmd_prune(const std::string& checkpoint, const std::string& out_path, double sparsity,
              bool per_layer, bool fine_tune, const std::string& data, int epochs, double lr,
              std::uint64_t seed) {
    CheckpointMeta meta;
    Model model = load_checkpoint(checkpoint, &meta);
    auto result = per_layer ? prune_per_layer_l1(model, sparsity) : prune_global_l1(model, sparsity);
    std::cerr << "pruned " << result.zeroed << " of " << result.total_prunable
              << " prunable weights\n";

    if (fine_tune) {
        require(!data.empty(), "--fine-tune requires --data <manifest>");
        const auto manifest = load_manifest(data);
        const bool standardize =
            !meta.config.has("data.standardize") || meta.config.get_bool("data.standardize");
        const Dataset ds = load_training_set(manifest, standardize);
        TrainConfig tc;
        tc.task = ds.task;
        tc.seed = seed;
        tc.rounds = 1;
        Trainer trainer(ds, model.cfg, tc);
        std::vector<int> all(static_cast<std::size_t>(ds.size()));
        for (int i = 0; i < ds.size(); ++i) all[static_cast<std::size_t>(i)] = i;
        trainer.train_existing(model, all, epochs, lr, &result.mask, [&](const EpochStats& s) {
            std::cerr << "  fine-tune epoch " << s.epoch << " loss " << s.mean_loss << "\n";
        });
    }

    KvConfig extra = meta.config;
    extra.set("prune.sparsity", std::to_string(sparsity));
    extra.set("prune.norm", "l1");
    extra.set("prune.scope", per_layer ? "per_layer" : "global");
    extra.set("prune.seed", std::to_string(seed));
    // keep only the non-architecture extras; architecture keys are re-emitted
    KvConfig extras_only;
    for (const auto& [k, v] : extra.entries())
        if (k.rfind("prune.", 0) == 0 || k.rfind("data.", 0) == 0) extras_only.set(k, v);
    save_checkpoint(model, out_path, extras_only, &result.mask);
    std::cerr << "wrote " << out_path << "\n";
    return 0;
}

int cmd_stats(const std::string& checkpoint, const std::string& config_file, double sparsity) {
    Model model;
    if (!checkpoint.empty()) {
        model = load_checkpoint(checkpoint);
    } else {
        ModelConfig mc;
        if (!config_file.empty()) {
            KvConfig kv = KvConfig::parse_file(config_file);
            kv.validate_keys(model_config_keys());
            mc = model_config_from_kv(kv);
        }
        model.setup(mc);
        Rng rng(0);
        model.init(rng);
    }
    ModelStats stats;
    if (sparsity > 0.0) {
        Model pruned = model;
        auto r = prune_global_l1(pruned, sparsity);
        stats = model_stats(pruned, &r.mask);
        // dense size must describe the unpruned model
        stats.dense_bytes = model_stats(model).dense_bytes;
    } else {
        stats = model_stats(model);
    }
    std::cout << stats_text(stats);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trilead: lightweight, explainable 3-lead ECG classification"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a synthetic pseudo-ECG dataset");
    std::string synth_out;
    SynthOptions synth_opts;
    std::string synth_task = "multi_class";
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--classes", synth_opts.n_classes, "number of classes (2-5)");
    synth->add_option("--per-class", synth_opts.per_class, "records per class");
    synth->add_option("--seed", synth_opts.seed, "generator seed");
    synth->add_option("--noise", synth_opts.noise, "noise sigma");
    synth->add_option("--task", synth_task, "multi_class or multi_label");

    // ---- train ----
    auto* train = app.add_subcommand("train", "run cross-validated training");
    TrainArgs targs;
    train->add_option("--data", targs.data, "dataset manifest")->required();
    train->add_option("--run", targs.run, "run directory")->required();
    train->add_option("--config", targs.config_file, "key = value config file");
    const std::vector<std::pair<std::string, std::string>> train_flags = {
        {"--seed", "seed"},
        {"--folds", "folds"},
        {"--k-folds", "k_folds"},
        {"--epochs", "epochs"},
        {"--cosine-epochs", "cosine_epochs"},
        {"--batch", "batch_size"},
        {"--lr0", "lr0"},
        {"--lr-min", "lr_min"},
        {"--weight-decay", "weight_decay"},
        {"--droplead", "droplead_p"},
        {"--standardize", "standardize"},
        {"--stem-kernel", "arch.stem_kernel"},
        {"--stem-stride", "arch.stem_stride"},
        {"--stem-out", "arch.stem_out"},
        {"--stem-dsconv", "arch.stem_dsconv"},
        {"--stem-pool", "arch.stem_pool"},
        {"--pool-kernel", "arch.pool_kernel"},
        {"--pool-stride", "arch.pool_stride"},
        {"--channels", "arch.channels"},
        {"--blocks", "arch.blocks"},
        {"--kernels", "arch.kernels"},
        {"--strides", "arch.strides"},
        {"--se-reduction", "arch.se_reduction"},
        {"--attention-hidden", "arch.attention_hidden"},
        {"--attention-dropout", "arch.attention_dropout"},
    };
    auto flag_values = std::make_shared<std::map<std::string, std::string>>();
    for (const auto& [flag, key] : train_flags) {
        train->add_option_function<std::string>(
            flag, [flag_values, key = key](const std::string& v) { (*flag_values)[key] = v; },
            "override config key " + key);
    }

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
    std::string eval_data, eval_ckpt, eval_thresholds, eval_out = "metrics_eval.csv";
    eval->add_option("--data", eval_data, "dataset manifest")->required();
    eval->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
    eval->add_option("--thresholds", eval_thresholds, "per-class thresholds file (multi-label)");
    eval->add_option("--out", eval_out, "metrics csv output path");

    // ---- explain ----
    auto* explain = app.add_subcommand("explain", "render a lead-wise explanation");
    std::string ex_ckpt, ex_record, ex_out = "explanation.svg";
    int ex_class = -1;
    explain->add_option("--checkpoint", ex_ckpt, "model checkpoint")->required();
    explain->add_option("--record", ex_record, "ECG record file")->required();
    explain->add_option("--class", ex_class, "class id (default: model prediction)");
    explain->add_option("--out", ex_out, "output SVG path");

    // ---- prune ----
    auto* prune = app.add_subcommand("prune", "global L1 weight pruning");
    std::string pr_ckpt, pr_out, pr_data;
    double pr_sparsity = 0.8;
    bool pr_per_layer = false, pr_finetune = false;
    int pr_epochs = 5;
    double pr_lr = 1e-4;
    std::uint64_t pr_seed = 0;
    prune->add_option("--checkpoint", pr_ckpt, "input checkpoint")->required();
    prune->add_option("--out", pr_out, "output (sparse) checkpoint")->required();
    prune->add_option("--sparsity", pr_sparsity, "fraction of prunable weights to zero");
    prune->add_flag("--per-layer", pr_per_layer, "prune each tensor independently");
    prune->add_flag("--fine-tune", pr_finetune, "fine-tune surviving weights");
    prune->add_option("--data", pr_data, "manifest for fine-tuning");
    prune->add_option("--epochs", pr_epochs, "fine-tune epochs");
    prune->add_option("--lr", pr_lr, "fine-tune learning rate");
    prune->add_option("--seed", pr_seed, "fine-tune shuffling seed");

    // ---- stats ----
    auto* stats = app.add_subcommand("stats", "parameter / FLOP / size accounting");
    std::string st_ckpt, st_config;
    double st_sparsity = 0.8;
    stats->add_option("--checkpoint", st_ckpt, "model checkpoint");
    stats->add_option("--config", st_config, "architecture config file");
    stats->add_option("--sparsity", st_sparsity,
                      "also report sparse size at this sparsity (0 = skip)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*synth) {
            synth_opts.task = task_from_name(synth_task);
            auto res = synth_dataset(synth_out, synth_opts);
            std::cerr << "wrote " << res.manifest.records.size() << " records, manifest.txt and "
                      << "evidence.csv under " << synth_out << "\n";
            return 0;
        }
        if (*train) {
            targs.overrides = *flag_values;
            return cmd_train(targs);
        }
        if (*eval) return cmd_eval(eval_data, eval_ckpt, eval_thresholds, eval_out);
        if (*explain) return cmd_explain(ex_ckpt, ex_record, ex_class, ex_out);
        if (*prune)
            return cmd_prune(pr_ckpt, pr_out, pr_sparsity, pr_per_layer, pr_finetune, pr_data,
                             pr_epochs, pr_lr, pr_seed);
        if (*stats) return cmd_stats(st_ckpt, st_config, st_sparsity);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
