#pragma once

#include <string>

#include "trilead/config.hpp"
#include "trilead/model.hpp"
#include "trilead/training.hpp"

namespace trilead {

// Versioned binary container: header (magic, version, flags, config digest),
// embedded config text, then per-parameter records (name, shape, storage,
// little-endian float32 payload). Tensors with pruned entries are stored as
// (index, value) pairs of the surviving coordinates; everything else is dense.
struct CheckpointMeta {
    KvConfig config;
    bool sparse = false;
    std::uint64_t digest = 0;
};

// `extra` keys (e.g. pruning provenance) are merged into the embedded config.
// A non-null mask switches masked tensors to the sparse record format.
std::string serialize_checkpoint(Model& model, const KvConfig& extra = {},
                                 const ParamMask* mask = nullptr);
Model deserialize_checkpoint(const std::string& bytes, CheckpointMeta* meta = nullptr);

void save_checkpoint(Model& model, const std::string& path, const KvConfig& extra = {},
                     const ParamMask* mask = nullptr);
Model load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace trilead
