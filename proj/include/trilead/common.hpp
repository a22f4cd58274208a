#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace trilead {

template <class S>
using ArrayX = Eigen::Array<S, Eigen::Dynamic, 1>;

// Row-major 2-D value type used for flat features, logits and probabilities.
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Mode { train, eval };

enum class TaskKind { multi_class, multi_label };

inline std::string task_name(TaskKind t) {
    return t == TaskKind::multi_class ? "multi_class" : "multi_label";
}

inline TaskKind task_from_name(const std::string& s) {
    if (s == "multi_class") return TaskKind::multi_class;
    if (s == "multi_label") return TaskKind::multi_label;
    throw std::invalid_argument("unknown task '" + s + "' (expected multi_class or multi_label)");
}

// Contract violations (bad shapes, invalid arguments) throw this.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

[[noreturn]] inline void shape_fail(const std::string& msg) { throw ShapeError(msg); }

inline void require(bool ok, const std::string& msg) {
    if (!ok) shape_fail(msg);
}

}  // namespace trilead
