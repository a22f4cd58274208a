#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "trilead/common.hpp"
#include "trilead/tensor.hpp"
#include "trilead/training.hpp"

namespace trilead {

// Standard 12-lead row order; lead selection maps names through this table
// (or through the record's own lead list for reduced-lead files).
const std::vector<std::string>& standard_lead_order();

enum class AmplitudeUnit { microvolt, millivolt };

struct ECGRecord {
    std::string id;
    std::vector<std::string> leads;
    int sampling_rate = 500;
    AmplitudeUnit unit = AmplitudeUnit::microvolt;
    Mat<float> signals;  // [n_leads, length]
    std::vector<std::string> labels;
    int age = -1;          // optional demographics
    std::string sex;       // optional

    int length() const { return static_cast<int>(signals.cols()); }
    int n_leads() const { return static_cast<int>(signals.rows()); }
    int lead_index(const std::string& name) const;  // -1 when absent
};

// Self-describing on-disk format: text header (`key = value`, one per line)
// terminated by a blank line, then row-major little-endian float32 samples.
// Loading converts millivolt records to the canonical microvolt unit.
ECGRecord load_record(const std::string& path);
void save_record(const ECGRecord& rec, const std::string& path);

struct ManifestEntry {
    std::string file;
    std::vector<std::string> labels;
};

struct DatasetManifest {
    std::string root;  // directory records are resolved against
    TaskKind task = TaskKind::multi_class;
    std::vector<std::string> class_names;  // position = dense class id
    std::array<std::string, 3> lead_selection = {"I", "II", "V1"};
    std::vector<ManifestEntry> records;

    int class_id(const std::string& name) const;
    std::string record_path(std::size_t i) const;
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);

struct PreprocessOptions {
    std::array<std::string, 3> leads = {"I", "II", "V1"};
    bool standardize = true;  // per-lead zero mean / unit variance, before padding
};

struct PreprocessedInput {
    Tensor3<float> x;  // [1, 3, 5000]
    std::string record_id;
    std::array<std::string, 3> leads;
};

// Fix to 10 s at 500 Hz: truncate past the first 5000 samples, right-pad
// shorter signals with exact zeros. Non-500 Hz records are rejected.
PreprocessedInput preprocess(const ECGRecord& rec, const PreprocessOptions& opts = {});

// Assemble the in-memory training set from a manifest.
Dataset load_training_set(const DatasetManifest& manifest, bool standardize = true);

// ---------------------------------------------------------------------------
// Synthetic desk-scale dataset
// ---------------------------------------------------------------------------

// Morphological class edits on a shared pseudo-ECG beat template. Evidence
// windows mark the sample ranges where a class differs from baseline.
//   baseline / normal : no edit (evidence = all component windows)
//   no_p              : P bumps removed        (evidence = P windows)
//   st_up             : ST segment offset up   (evidence = ST windows)
//   wide_qrs          : QRS spike stretched    (evidence = QRS windows)
//   tall_t            : T bump doubled         (evidence = T windows)
const std::vector<std::string>& synth_class_names();

struct EvidenceWindow {
    int begin = 0;
    int end = 0;  // exclusive
};

struct SynthOptions {
    int n_classes = 4;
    int per_class = 200;
    std::uint64_t seed = 7;
    TaskKind task = TaskKind::multi_class;
    double noise = 0.04;
};

struct SynthRecordResult {
    ECGRecord record;
    std::vector<EvidenceWindow> evidence;
};

// One 3-lead, 500 Hz, 10 s record. `edits` hold class names ("baseline" or
// empty set = no edit). Same seed and edits -> identical samples.
SynthRecordResult synth_record(std::uint64_t record_seed, const std::set<std::string>& edits,
                               double noise, const std::string& id);

struct SynthResult {
    DatasetManifest manifest;
    std::map<std::string, std::vector<EvidenceWindow>> evidence;
};

// Writes records, manifest.txt and evidence.csv under out_dir.
SynthResult synth_dataset(const std::string& out_dir, const SynthOptions& opts);

std::map<std::string, std::vector<EvidenceWindow>> load_evidence(const std::string& path);

}  // namespace trilead
