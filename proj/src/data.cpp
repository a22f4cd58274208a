#include "trilead/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "trilead/rng.hpp"

namespace fs = std::filesystem;

namespace trilead {

namespace {

constexpr int kTargetRate = 500;
constexpr int kTargetLen = 5000;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += v[i];
    }
    return out;
}

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& msg) {
    throw std::runtime_error("record parse error at " + path + ":" + std::to_string(line) + ": " +
                             msg);
}

}  // namespace

const std::vector<std::string>& standard_lead_order() {
    static const std::vector<std::string> order = {"I",  "II", "III", "aVR", "aVL", "aVF",
                                                   "V1", "V2", "V3",  "V4",  "V5",  "V6"};
    return order;
}

int ECGRecord::lead_index(const std::string& name) const {
    for (std::size_t i = 0; i < leads.size(); ++i)
        if (leads[i] == name) return static_cast<int>(i);
    return -1;
}

ECGRecord load_record(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open record file: " + path);

    ECGRecord rec;
    int declared_len = -1;
    std::string line;
    int lineno = 0;
    bool header_done = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) {
            header_done = true;
            break;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) parse_fail(path, lineno, "expected `key = value`");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "id") {
            rec.id = value;
        } else if (key == "leads") {
            rec.leads = split(value, ',');
            if (rec.leads.empty()) parse_fail(path, lineno, "empty lead list");
        } else if (key == "rate") {
            try {
                rec.sampling_rate = std::stoi(value);
            } catch (...) {
                parse_fail(path, lineno, "rate is not an integer: '" + value + "'");
            }
            if (rec.sampling_rate <= 0) parse_fail(path, lineno, "rate must be positive");
        } else if (key == "unit") {
            if (value == "microvolt") rec.unit = AmplitudeUnit::microvolt;
            else if (value == "millivolt") rec.unit = AmplitudeUnit::millivolt;
            else parse_fail(path, lineno, "unknown unit '" + value +
                                              "' (expected microvolt or millivolt)");
        } else if (key == "length") {
            try {
                declared_len = std::stoi(value);
            } catch (...) {
                parse_fail(path, lineno, "length is not an integer: '" + value + "'");
            }
            if (declared_len < 1) parse_fail(path, lineno, "length must be >= 1");
        } else if (key == "labels") {
            rec.labels = split(value, '|');
        } else if (key == "age") {
            try {
                rec.age = std::stoi(value);
            } catch (...) {
                parse_fail(path, lineno, "age is not an integer");
            }
        } else if (key == "sex") {
            rec.sex = value;
        } else {
            parse_fail(path, lineno, "unknown header key '" + key + "'");
        }
    }
    if (!header_done) parse_fail(path, lineno, "missing blank line after header");
    if (rec.id.empty()) parse_fail(path, lineno, "missing id");
    if (rec.leads.empty()) parse_fail(path, lineno, "missing leads");
    if (declared_len < 0) parse_fail(path, lineno, "missing length");

    const int n_leads = static_cast<int>(rec.leads.size());
    rec.signals = Mat<float>(n_leads, declared_len);
    for (int r = 0; r < n_leads; ++r) {
        const std::streamsize want = static_cast<std::streamsize>(declared_len) *
                                     static_cast<std::streamsize>(sizeof(float));
        in.read(reinterpret_cast<char*>(rec.signals.row(r).data()), want);
        if (in.gcount() != want)
            throw std::runtime_error(
                "record " + path + ": lead row " + std::to_string(r) + " (" + rec.leads[static_cast<std::size_t>(r)] +
                ") truncated: expected " + std::to_string(declared_len) + " samples, got " +
                std::to_string(in.gcount() / static_cast<std::streamsize>(sizeof(float))));
    }
    char extra;
    if (in.read(&extra, 1))
        throw std::runtime_error("record " + path + ": trailing bytes after declared data");

    if (rec.unit == AmplitudeUnit::millivolt) {
        rec.signals *= 1000.0f;  // canonical unit is microvolt
        rec.unit = AmplitudeUnit::microvolt;
    }
    return rec;
}

void save_record(const ECGRecord& rec, const std::string& path) {
    require(rec.signals.rows() == static_cast<Eigen::Index>(rec.leads.size()),
            "save_record: lead names do not match signal rows");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write record file: " + path);
    out << "id = " << rec.id << "\n";
    out << "leads = " << join(rec.leads, ",") << "\n";
    out << "rate = " << rec.sampling_rate << "\n";
    out << "unit = " << (rec.unit == AmplitudeUnit::microvolt ? "microvolt" : "millivolt") << "\n";
    out << "length = " << rec.length() << "\n";
    if (!rec.labels.empty()) out << "labels = " << join(rec.labels, "|") << "\n";
    if (rec.age >= 0) out << "age = " << rec.age << "\n";
    if (!rec.sex.empty()) out << "sex = " << rec.sex << "\n";
    out << "\n";
    for (int r = 0; r < rec.n_leads(); ++r)
        out.write(reinterpret_cast<const char*>(rec.signals.row(r).data()),
                  static_cast<std::streamsize>(rec.length()) *
                      static_cast<std::streamsize>(sizeof(float)));
    if (!out) throw std::runtime_error("short write to record file: " + path);
}

int DatasetManifest::class_id(const std::string& name) const {
    for (std::size_t i = 0; i < class_names.size(); ++i)
        if (class_names[i] == name) return static_cast<int>(i);
    throw std::runtime_error("manifest: unknown class '" + name + "'");
}

std::string DatasetManifest::record_path(std::size_t i) const {
    return (fs::path(root) / records[i].file).string();
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    DatasetManifest m;
    m.root = fs::path(path).parent_path().string();
    if (m.root.empty()) m.root = ".";
    std::string line;
    int lineno = 0;
    bool saw_task = false, saw_classes = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("manifest " + path + ":" + std::to_string(lineno) +
                                     ": expected `key = value`");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "task") {
            m.task = task_from_name(value);
            saw_task = true;
        } else if (key == "classes") {
            m.class_names = split(value, ',');
            saw_classes = true;
        } else if (key == "leads") {
            const auto leads = split(value, ',');
            if (leads.size() != 3)
                throw std::runtime_error("manifest " + path + ":" + std::to_string(lineno) +
                                         ": lead selection must name exactly 3 leads");
            m.lead_selection = {leads[0], leads[1], leads[2]};
        } else if (key == "record") {
            const auto comma = value.find(',');
            if (comma == std::string::npos)
                throw std::runtime_error("manifest " + path + ":" + std::to_string(lineno) +
                                         ": record line must be `file,label[|label...]`");
            ManifestEntry e;
            e.file = trim(value.substr(0, comma));
            e.labels = split(value.substr(comma + 1), '|');
            if (e.labels.empty())
                throw std::runtime_error("manifest " + path + ":" + std::to_string(lineno) +
                                         ": record has no labels");
            m.records.push_back(std::move(e));
        } else if (key == "version") {
            // accepted for forward compatibility
        } else {
            throw std::runtime_error("manifest " + path + ":" + std::to_string(lineno) +
                                     ": unknown key '" + key + "'");
        }
    }
    if (!saw_task || !saw_classes)
        throw std::runtime_error("manifest " + path + ": missing task or classes");
    for (const auto& e : m.records) {
        for (const auto& lb : e.labels) m.class_id(lb);  // validates
        const auto p = fs::path(m.root) / e.file;
        if (!fs::exists(p))
            throw std::runtime_error("manifest " + path + ": referenced file missing: " +
                                     p.string());
    }
    return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << "version = 1\n";
    out << "task = " << task_name(m.task) << "\n";
    out << "classes = " << join(m.class_names, ",") << "\n";
    out << "leads = " << m.lead_selection[0] << "," << m.lead_selection[1] << ","
        << m.lead_selection[2] << "\n";
    for (const auto& e : m.records) out << "record = " << e.file << "," << join(e.labels, "|") << "\n";
    if (!out) throw std::runtime_error("short write to manifest: " + path);
}

PreprocessedInput preprocess(const ECGRecord& rec, const PreprocessOptions& opts) {
    require(rec.sampling_rate == kTargetRate,
            "preprocess: record '" + rec.id + "' sampled at " +
                std::to_string(rec.sampling_rate) +
                " Hz; only 500 Hz is supported (resample offline, resampling is out of scope)");
    PreprocessedInput out;
    out.record_id = rec.id;
    out.leads = opts.leads;
    out.x = Tensor3<float>(1, 3, kTargetLen);
    for (int i = 0; i < 3; ++i) {
        const int row = rec.lead_index(opts.leads[static_cast<std::size_t>(i)]);
        require(row >= 0, "preprocess: record '" + rec.id + "' is missing lead '" +
                              opts.leads[static_cast<std::size_t>(i)] + "'");
        const int keep = std::min(rec.length(), kTargetLen);
        ArrayX<float> seg = rec.signals.row(row).head(keep).transpose().array();
        if (opts.standardize) {
            const float mean = seg.mean();
            const float var = (seg - mean).square().sum() / static_cast<float>(keep);
            const float sd = std::sqrt(var);
            seg = (seg - mean) / std::max(sd, 1e-6f);
        }
        out.x.row(0, i).head(keep) = seg;  // tail beyond keep stays exactly zero
    }
    return out;
}

Dataset load_training_set(const DatasetManifest& manifest, bool standardize) {
    Dataset ds;
    ds.task = manifest.task;
    ds.class_names = manifest.class_names;
    PreprocessOptions opts;
    opts.leads = manifest.lead_selection;
    opts.standardize = standardize;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const auto rec = load_record(manifest.record_path(i));
        auto pre = preprocess(rec, opts);
        ds.inputs.push_back(std::move(pre.x));
        std::vector<int> ids;
        for (const auto& lb : manifest.records[i].labels) ids.push_back(manifest.class_id(lb));
        std::sort(ids.begin(), ids.end());
        ds.labels.push_back(std::move(ids));
        ds.ids.push_back(rec.id);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

const std::vector<std::string>& synth_class_names() {
    static const std::vector<std::string> names = {"baseline", "st_up",    "wide_qrs",
                                                   "p_inverted", "no_p",   "tall_t"};
    return names;
}

namespace {

// per-lead gains for (P, QRS, T); lead V1 has an inverted dominant deflection
struct LeadGain {
    float p, qrs, t;
};
constexpr LeadGain kLeadGains[3] = {{1.0f, 1.0f, 1.0f}, {1.2f, 1.3f, 1.1f}, {0.8f, -0.7f, 0.6f}};

// class edits express strongest in specific leads, as the real diagnoses do
constexpr double kStGain[3] = {1.0, 1.0, 0.15};       // ST shifts in the limb leads
constexpr double kPInvGain[3] = {0.2, 1.0, 1.0};      // abnormal P in II and V1
constexpr double kWideGain[3] = {0.6, 0.6, 1.4};      // QRS widening dominant in V1

double add_gaussian(Eigen::Ref<Eigen::RowVectorXf> row, double center, double sigma, double amp) {
    const int lo = std::max(0, static_cast<int>(std::floor(center - 4 * sigma)));
    const int hi = std::min(kTargetLen - 1, static_cast<int>(std::ceil(center + 4 * sigma)));
    double area = 0.0;
    for (int t = lo; t <= hi; ++t) {
        const double d = (t - center) / sigma;
        const double v = amp * std::exp(-0.5 * d * d);
        row[t] += static_cast<float>(v);
        area += v;
    }
    return area;
}

double add_triangle(Eigen::Ref<Eigen::RowVectorXf> row, double center, double half_width,
                    double amp) {
    const int lo = std::max(0, static_cast<int>(std::floor(center - half_width)));
    const int hi = std::min(kTargetLen - 1, static_cast<int>(std::ceil(center + half_width)));
    double area = 0.0;
    for (int t = lo; t <= hi; ++t) {
        const double d = 1.0 - std::abs(t - center) / half_width;
        if (d > 0) {
            row[t] += static_cast<float>(amp * d);
            area += amp * d;
        }
    }
    return area;
}

double add_plateau(Eigen::Ref<Eigen::RowVectorXf> row, int begin, int end, int ramp, double amp) {
    double area = 0.0;
    for (int t = std::max(0, begin - ramp); t < std::min(kTargetLen, begin); ++t) {
        const double v = amp * (1.0 - static_cast<double>(begin - t) / ramp);
        row[t] += static_cast<float>(v);
        area += v;
    }
    for (int t = std::max(0, begin); t < std::min(kTargetLen, end); ++t) {
        row[t] += static_cast<float>(amp);
        area += amp;
    }
    for (int t = std::max(0, end); t < std::min(kTargetLen, end + ramp); ++t) {
        const double v = amp * (1.0 - static_cast<double>(t - end + 1) / ramp);
        row[t] += static_cast<float>(v);
        area += v;
    }
    return area;
}

void push_window(std::vector<EvidenceWindow>& out, int begin, int end) {
    begin = std::max(0, begin);
    end = std::min(kTargetLen, end);
    if (begin < end) out.push_back({begin, end});
}

struct BeatParams {
    double hr, period, phase;
    double qrs_amp, p_scale, t_scale;
};

struct EditSet {
    bool no_p = false, st_up = false, wide_qrs = false, p_inverted = false, tall_t = false;
    bool none() const { return !(no_p || st_up || wide_qrs || p_inverted || tall_t); }
};

// Renders beat components for one lead; returns the summed sample area so
// class edits can be rebalanced to zero net area against the baseline twin.
double render_beats(Eigen::Ref<Eigen::RowVectorXf> row, int lead, const BeatParams& bp,
                    const EditSet& e) {
    const auto& g = kLeadGains[lead];
    const double qrs_half = e.wide_qrs ? 12.0 + 16.0 * kWideGain[lead] : 12.0;
    const double qrs_amp = bp.qrs_amp * g.qrs;
    double area = 0.0;
    for (double t0 = bp.phase; t0 < kTargetLen + bp.period; t0 += bp.period) {
        if (!e.no_p) {
            const double p_amp = (e.p_inverted ? -(0.8 + 0.6 * kPInvGain[lead]) : 1.0) * 0.12 *
                                 bp.p_scale * g.p;
            area += add_gaussian(row, t0 - 110, 12, p_amp);
        }
        area += add_gaussian(row, t0 - qrs_half - 8, 4, -0.12 * qrs_amp);
        area += add_triangle(row, t0, qrs_half, qrs_amp);
        area += add_gaussian(row, t0 + qrs_half + 8, 4, -0.2 * qrs_amp);
        area += add_gaussian(row, t0 + 150, 26,
                             (e.tall_t ? 2.2 : 1.0) * 0.3 * bp.t_scale * g.t);
        if (e.st_up)
            area += add_plateau(row, static_cast<int>(t0) + 45, static_cast<int>(t0) + 115, 6,
                                0.35 * kStGain[lead] * std::abs(g.qrs));
    }
    return area;
}

}  // namespace

SynthRecordResult synth_record(std::uint64_t record_seed, const std::set<std::string>& edits,
                               double noise, const std::string& id) {
    for (const auto& name : edits) {
        const auto& names = synth_class_names();
        require(std::find(names.begin(), names.end(), name) != names.end(),
                "synth_record: unknown class edit '" + name + "'");
    }
    EditSet e;
    e.no_p = edits.count("no_p") > 0;
    e.st_up = edits.count("st_up") > 0;
    e.wide_qrs = edits.count("wide_qrs") > 0;
    e.p_inverted = edits.count("p_inverted") > 0;
    e.tall_t = edits.count("tall_t") > 0;

    SynthRecordResult out;
    out.record.id = id;
    out.record.leads = {"I", "II", "V1"};
    out.record.sampling_rate = kTargetRate;
    out.record.unit = AmplitudeUnit::millivolt;
    out.record.signals = Mat<float>::Zero(3, kTargetLen);

    Rng base(record_seed);
    // noise, rhythm and per-record jitters are drawn before any class edit so
    // records with the same seed differ from their baseline twin only inside
    // evidence windows (plus the uniform area rebalance below)
    Rng noise_rng = base.split(1);
    for (int lead = 0; lead < 3; ++lead)
        for (int t = 0; t < kTargetLen; ++t)
            out.record.signals(lead, t) = static_cast<float>(noise_rng.normal() * noise);
    Rng rhythm = base.split(2);
    BeatParams bp;
    bp.hr = rhythm.uniform(55.0, 90.0);
    bp.period = 60.0 / bp.hr * kTargetRate;
    bp.phase = rhythm.uniform(0.0, bp.period);
    Rng wander_rng = base.split(3);
    const double wfreq = wander_rng.uniform(0.15, 0.4);
    const double wphase = wander_rng.uniform(0.0, 6.283185307179586);
    Rng jitter = base.split(4);
    bp.qrs_amp = jitter.uniform(0.85, 1.15);
    bp.p_scale = jitter.uniform(0.8, 1.2);
    bp.t_scale = jitter.uniform(0.8, 1.2);
    const double dc = jitter.uniform(-0.1, 0.1);
    for (int lead = 0; lead < 3; ++lead) {
        auto row = out.record.signals.row(lead);
        for (int t = 0; t < kTargetLen; ++t)
            row[t] += static_cast<float>(
                dc + 0.02 * std::sin(6.283185307179586 * wfreq * t / kTargetRate + wphase));
    }

    for (int lead = 0; lead < 3; ++lead) {
        auto row = out.record.signals.row(lead);
        const double area = render_beats(row, lead, bp, e);
        if (!e.none()) {
            // rebalance so the record's net area matches its baseline twin:
            // morphology stays local, the record mean carries no class signal
            Eigen::RowVectorXf scratch = Eigen::RowVectorXf::Zero(kTargetLen);
            const double base_area = render_beats(scratch, lead, bp, EditSet{});
            row.array() -= static_cast<float>((area - base_area) / kTargetLen);
        }
    }

    for (double t0 = bp.phase; t0 < kTargetLen + bp.period; t0 += bp.period) {
        // edit windows cover the full difference support vs the baseline twin
        // (gaussian components contribute over center +- 4 sigma)
        const int beat = static_cast<int>(t0);
        if (e.no_p || e.p_inverted) push_window(out.evidence, beat - 160, beat - 60);
        if (e.wide_qrs) push_window(out.evidence, beat - 64, beat + 64);
        if (e.st_up) push_window(out.evidence, beat + 39, beat + 121);
        if (e.tall_t) push_window(out.evidence, beat + 44, beat + 256);
        if (e.none()) {
            // normality is read at the component sites themselves
            push_window(out.evidence, beat - 140, beat - 80);
            push_window(out.evidence, beat - 44, beat + 44);
            push_window(out.evidence, beat + 39, beat + 121);
        }
    }
    std::sort(out.evidence.begin(), out.evidence.end(),
              [](const EvidenceWindow& a, const EvidenceWindow& b) { return a.begin < b.begin; });
    return out;
}

SynthResult synth_dataset(const std::string& out_dir, const SynthOptions& opts) {
    require(opts.n_classes >= 2, "synth_dataset: need at least 2 classes");
    require(opts.n_classes <= static_cast<int>(synth_class_names().size()),
            "synth_dataset: at most " + std::to_string(synth_class_names().size()) + " classes");
    require(opts.per_class >= 1, "synth_dataset: per_class must be >= 1");

    fs::create_directories(out_dir);
    SynthResult res;
    res.manifest.root = out_dir;
    res.manifest.task = opts.task;
    res.manifest.lead_selection = {"I", "II", "V1"};
    std::vector<std::string> classes(synth_class_names().begin(),
                                     synth_class_names().begin() + opts.n_classes);
    if (opts.task == TaskKind::multi_label) classes[0] = "normal";
    res.manifest.class_names = classes;

    Rng seeds(opts.seed);
    int counter = 0;
    auto emit = [&](const std::set<std::string>& edits, const std::vector<std::string>& labels) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "rec_%05d", counter);
        const std::string id = buf;
        const std::uint64_t rec_seed = seeds.split(static_cast<std::uint64_t>(counter)).next_u64();
        auto sr = synth_record(rec_seed, edits, opts.noise, id);
        sr.record.labels = labels;
        const std::string file = id + ".ecg";
        save_record(sr.record, (fs::path(out_dir) / file).string());
        res.manifest.records.push_back({file, labels});
        res.evidence[id] = std::move(sr.evidence);
        ++counter;
    };

    if (opts.task == TaskKind::multi_class) {
        for (int c = 0; c < opts.n_classes; ++c) {
            for (int i = 0; i < opts.per_class; ++i) {
                std::set<std::string> edits;
                if (classes[static_cast<std::size_t>(c)] != "baseline")
                    edits.insert(classes[static_cast<std::size_t>(c)]);
                emit(edits, {classes[static_cast<std::size_t>(c)]});
            }
        }
    } else {
        // per_class singles for every class, plus per_class random pairs
        for (int c = 0; c < opts.n_classes; ++c) {
            for (int i = 0; i < opts.per_class; ++i) {
                std::set<std::string> edits;
                if (c > 0) edits.insert(classes[static_cast<std::size_t>(c)]);
                emit(edits, {classes[static_cast<std::size_t>(c)]});
            }
        }
        Rng pair_rng = Rng(opts.seed).split(0xBEEF);
        for (int i = 0; i < opts.per_class; ++i) {
            const int a = 1 + pair_rng.next_int(opts.n_classes - 1);
            int b = 1 + pair_rng.next_int(opts.n_classes - 1);
            while (b == a) b = 1 + pair_rng.next_int(opts.n_classes - 1);
            std::set<std::string> edits = {classes[static_cast<std::size_t>(a)],
                                           classes[static_cast<std::size_t>(b)]};
            std::vector<std::string> labels(edits.begin(), edits.end());
            emit(edits, labels);
        }
    }

    save_manifest(res.manifest, (fs::path(out_dir) / "manifest.txt").string());
    std::ofstream ev((fs::path(out_dir) / "evidence.csv").string());
    ev << "record,begin,end\n";
    for (const auto& [id, windows] : res.evidence)
        for (const auto& w : windows) ev << id << "," << w.begin << "," << w.end << "\n";
    return res;
}

std::map<std::string, std::vector<EvidenceWindow>> load_evidence(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open evidence file: " + path);
    std::map<std::string, std::vector<EvidenceWindow>> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first) {
            first = false;
            continue;  // header
        }
        if (trim(line).empty()) continue;
        const auto parts = split(line, ',');
        if (parts.size() != 3)
            throw std::runtime_error("evidence file " + path + ": bad line '" + line + "'");
        out[parts[0]].push_back({std::stoi(parts[1]), std::stoi(parts[2])});
    }
    return out;
}

}  // namespace trilead
