#pragma once

#include <Eigen/Dense>
#include <string>

#include "trilead/common.hpp"

namespace trilead {

// Batched signal/activation array, row-major [batch][channel][length].
// The optional grad slot mirrors data's shape when present.
template <class S>
struct Tensor3 {
    int batch = 0;
    int channels = 0;
    int length = 0;
    ArrayX<S> data;
    ArrayX<S> grad;  // size 0 when absent

    Tensor3() = default;
    Tensor3(int b, int c, int l) : batch(b), channels(c), length(l) {
        require(b >= 0 && c >= 0 && l >= 0, "Tensor3: negative dimension");
        data = ArrayX<S>::Zero(static_cast<Eigen::Index>(b) * c * l);
    }

    static Tensor3 zeros(int b, int c, int l) { return Tensor3(b, c, l); }

    Eigen::Index size() const { return data.size(); }

    bool has_grad() const { return grad.size() == data.size() && data.size() > 0; }
    void alloc_grad() { grad = ArrayX<S>::Zero(data.size()); }

    S& at(int b, int c, int l) { return data[offset(b, c, l)]; }
    S at(int b, int c, int l) const { return data[offset(b, c, l)]; }

    Eigen::Index offset(int b, int c, int l) const {
        return (static_cast<Eigen::Index>(b) * channels + c) * length + l;
    }

    // Contiguous view of one (batch, channel) row.
    Eigen::Map<ArrayX<S>> row(int b, int c) {
        return Eigen::Map<ArrayX<S>>(data.data() + offset(b, c, 0), length);
    }
    Eigen::Map<const ArrayX<S>> row(int b, int c) const {
        return Eigen::Map<const ArrayX<S>>(data.data() + offset(b, c, 0), length);
    }

    std::string shape_str() const {
        return "[" + std::to_string(batch) + "," + std::to_string(channels) + "," +
               std::to_string(length) + "]";
    }

    bool same_shape(const Tensor3& o) const {
        return batch == o.batch && channels == o.channels && length == o.length;
    }

    bool all_finite() const { return data.isFinite().all(); }
};

}  // namespace trilead
