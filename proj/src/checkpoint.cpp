#include "trilead/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace trilead {

namespace {

constexpr char kMagic[8] = {'T', 'R', 'I', 'L', 'E', 'A', 'D', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kEndMarker = 0x444E4524;  // "$END"

class Writer {
  public:
    void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
    void u8(std::uint8_t v) { raw(&v, 1); }
    void u16(std::uint16_t v) { raw(&v, 2); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void f32(float v) { raw(&v, 4); }
    void str(const std::string& s) {
        u16(static_cast<std::uint16_t>(s.size()));
        raw(s.data(), s.size());
    }
    std::string take() { return std::move(buf_); }

  private:
    std::string buf_;
};

class Reader {
  public:
    explicit Reader(const std::string& buf) : buf_(buf) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw std::runtime_error("checkpoint parse error at offset " + std::to_string(off_) +
                                 ": " + msg);
    }
    void raw(void* p, std::size_t n) {
        if (off_ + n > buf_.size())
            fail("truncated (need " + std::to_string(n) + " bytes, have " +
                 std::to_string(buf_.size() - off_) + ")");
        std::memcpy(p, buf_.data() + off_, n);
        off_ += n;
    }
    std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
    std::uint16_t u16() { std::uint16_t v; raw(&v, 2); return v; }
    std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
    std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
    float f32() { float v; raw(&v, 4); return v; }
    std::string str() {
        const std::uint16_t n = u16();
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }
    std::size_t offset() const { return off_; }
    bool at_end() const { return off_ == buf_.size(); }

  private:
    const std::string& buf_;
    std::size_t off_ = 0;
};

// Surviving indices are strictly increasing, so they are stored as u16 gaps
// from the previous index (0xFFFF acts as an add-and-continue escape for
// larger gaps). Six bytes per survivor keeps an 80%-pruned checkpoint near a
// third of its dense size; plain (u32, f32) pairs would bottom out at 0.40x
// before headers.
void write_gaps(Writer& w, const std::vector<std::uint32_t>& indices) {
    std::int64_t prev = -1;
    for (std::uint32_t idx : indices) {
        std::int64_t gap = static_cast<std::int64_t>(idx) - prev;
        prev = idx;
        while (gap >= 0xFFFF) {
            w.u16(0xFFFF);
            gap -= 0xFFFF;
        }
        w.u16(static_cast<std::uint16_t>(gap));
    }
}

template <class Ref>
void write_record(Writer& w, std::uint8_t kind, const Ref& ref, const ArrayX<float>* mask) {
    w.u8(kind);
    const bool sparse = mask != nullptr && mask->size() > 0 && (*mask == 0.0f).any();
    w.u8(sparse ? 1 : 0);
    w.str(ref.name);
    w.u8(static_cast<std::uint8_t>(ref.shape.size()));
    for (int d : ref.shape) w.u32(static_cast<std::uint32_t>(d));
    const ArrayX<float>& v = *ref.value;
    if (sparse) {
        std::vector<std::uint32_t> indices;
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if ((*mask)[i] != 0.0f) indices.push_back(static_cast<std::uint32_t>(i));
        w.u64(indices.size());
        write_gaps(w, indices);
        for (std::uint32_t i : indices) w.f32(v[i]);
    } else {
        w.raw(v.data(), static_cast<std::size_t>(v.size()) * sizeof(float));
    }
}

}  // namespace

std::string serialize_checkpoint(Model& model, const KvConfig& extra, const ParamMask* mask) {
    KvConfig cfg = model_config_to_kv(model.cfg);
    for (const auto& [k, v] : extra.entries()) cfg.set(k, v);
    const std::string cfg_text = cfg.canonical();

    auto params = model.parameters();
    auto buffers = model.buffers();
    require(mask == nullptr || mask->size() == params.size(),
            "serialize_checkpoint: mask size does not match parameter count");
    bool any_sparse = false;
    if (mask)
        for (const auto& m : *mask)
            if (m.size() > 0 && (m == 0.0f).any()) any_sparse = true;

    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.u32(kVersion);
    w.u32(any_sparse ? 1u : 0u);
    w.u64(fnv1a64(cfg_text));
    w.u32(static_cast<std::uint32_t>(cfg_text.size()));
    w.raw(cfg_text.data(), cfg_text.size());
    w.u32(static_cast<std::uint32_t>(params.size() + buffers.size()));
    for (std::size_t i = 0; i < params.size(); ++i)
        write_record(w, 0, params[i], mask ? &(*mask)[i] : nullptr);
    for (const auto& b : buffers) write_record(w, 1, b, nullptr);
    w.u32(kEndMarker);
    return w.take();
}

Model deserialize_checkpoint(const std::string& bytes, CheckpointMeta* meta) {
    Reader r(bytes);
    char magic[8];
    r.raw(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0) r.fail("bad magic");
    const std::uint32_t version = r.u32();
    if (version != kVersion) r.fail("unsupported version " + std::to_string(version));
    const std::uint32_t flags = r.u32();
    const std::uint64_t digest = r.u64();
    const std::uint32_t cfg_len = r.u32();
    std::string cfg_text(cfg_len, '\0');
    r.raw(cfg_text.data(), cfg_len);
    if (fnv1a64(cfg_text) != digest) r.fail("config digest mismatch (corrupted header)");

    const KvConfig kv = KvConfig::parse_text(cfg_text);
    Model model;
    model.setup(model_config_from_kv(kv));
    model.set_mode(Mode::eval);
    if (meta) {
        meta->config = kv;
        meta->sparse = (flags & 1u) != 0;
        meta->digest = digest;
    }

    std::map<std::string, ArrayX<float>*> by_name;
    std::map<std::string, std::vector<int>> shapes;
    auto params = model.parameters();
    auto buffers = model.buffers();
    for (auto& p : params) {
        by_name[p.name] = p.value;
        shapes[p.name] = p.shape;
    }
    for (auto& b : buffers) {
        by_name[b.name] = b.value;
        shapes[b.name] = b.shape;
    }

    const std::uint32_t n_records = r.u32();
    if (n_records != params.size() + buffers.size())
        r.fail("record count " + std::to_string(n_records) + " does not match architecture (" +
               std::to_string(params.size() + buffers.size()) + ")");
    std::map<std::string, bool> seen;
    for (std::uint32_t i = 0; i < n_records; ++i) {
        const std::uint8_t kind = r.u8();
        if (kind > 1) r.fail("bad record kind " + std::to_string(kind));
        const std::uint8_t storage = r.u8();
        if (storage > 1) r.fail("bad storage tag " + std::to_string(storage));
        const std::string name = r.str();
        auto it = by_name.find(name);
        if (it == by_name.end()) r.fail("unknown tensor '" + name + "'");
        if (seen[name]) r.fail("duplicate tensor '" + name + "'");
        seen[name] = true;
        const std::uint8_t rank = r.u8();
        Eigen::Index n = 1;
        const auto& want_shape = shapes[name];
        if (rank != want_shape.size()) r.fail("tensor '" + name + "': rank mismatch");
        for (std::uint8_t d = 0; d < rank; ++d) {
            const std::uint32_t dim = r.u32();
            if (dim != static_cast<std::uint32_t>(want_shape[d]))
                r.fail("tensor '" + name + "': dimension " + std::to_string(d) + " is " +
                       std::to_string(dim) + ", expected " + std::to_string(want_shape[d]));
            n *= dim;
        }
        ArrayX<float>& dst = *it->second;
        if (dst.size() != n) r.fail("tensor '" + name + "': size mismatch");
        if (storage == 0) {
            r.raw(dst.data(), static_cast<std::size_t>(n) * sizeof(float));
        } else {
            dst.setZero();
            const std::uint64_t nnz = r.u64();
            if (nnz > static_cast<std::uint64_t>(n)) r.fail("tensor '" + name + "': nnz > size");
            std::vector<std::uint32_t> idx(nnz);
            std::int64_t prev = -1;
            for (std::uint64_t k = 0; k < nnz; ++k) {
                std::int64_t gap = 0;
                std::uint16_t g;
                do {
                    g = r.u16();
                    gap += g;
                } while (g == 0xFFFF);
                if (gap < 1) r.fail("tensor '" + name + "': indices not strictly increasing");
                prev += gap;
                if (prev >= static_cast<std::int64_t>(n))
                    r.fail("tensor '" + name + "': index out of range");
                idx[k] = static_cast<std::uint32_t>(prev);
            }
            for (std::uint64_t k = 0; k < nnz; ++k) dst[static_cast<Eigen::Index>(idx[k])] = r.f32();
        }
    }
    if (r.u32() != kEndMarker) r.fail("missing end marker");
    if (!r.at_end()) r.fail("trailing bytes");
    return model;
}

void save_checkpoint(Model& model, const std::string& path, const KvConfig& extra,
                     const ParamMask* mask) {
    const std::string bytes = serialize_checkpoint(model, extra, mask);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to checkpoint: " + path);
}

Model load_checkpoint(const std::string& path, CheckpointMeta* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes, meta);
}

}  // namespace trilead
