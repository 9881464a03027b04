#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lexjudge::tape {

// Named weight matrix living outside the tape; gradients accumulate here.
struct Parameter {
    std::string name;
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string name, Eigen::MatrixXd value);
    void zero_grad();
};

class Tape;

struct Var {
    Tape* tape = nullptr;
    std::size_t index = 0;
};

// Records one forward pass; backward() replays it in reverse. Rebuilt per step.
class Tape {
  public:
    Var param(Parameter& p);
    Var constant(Eigen::MatrixXd value);

    const Eigen::MatrixXd& value(Var v) const;
    void backward(Var scalar);
    std::size_t size() const { return nodes_.size(); }

    using Pull = std::function<void(Tape&, std::size_t)>;
    Var emit(Eigen::MatrixXd value, std::vector<std::size_t> inputs, Pull pull);

    Eigen::MatrixXd& grad_ref(std::size_t index);
    bool needs_grad(std::size_t index) const { return nodes_[index].needs_grad; }

  private:
    struct Node {
        Eigen::MatrixXd value;
        Eigen::MatrixXd grad;
        std::vector<std::size_t> inputs;
        Pull pull;
        Parameter* external = nullptr;
        bool needs_grad = false;
    };
    std::vector<Node> nodes_;
};

Var add(Var a, Var b);
Var add_rowvec(Var a, Var row);          // broadcast a 1 x C row over every row of a
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);             // a * b^T
Var scale(Var a, double factor);
Var mul_elem(Var a, Var b);
Var gelu(Var a);                         // tanh approximation
Var layernorm(Var a, Var gamma, Var beta, double eps = 1e-5);
Var masked_softmax_rows(Var scores, const Eigen::MatrixXd& key_mask);
Var masked_maxpool_rows(Var a, const Eigen::VectorXd& row_mask);   // 1 x C column maxima
Var select_row(Var a, std::size_t row);
Var stack_rows(const std::vector<Var>& rows);
Var slice_cols(Var a, std::size_t start, std::size_t count);
Var concat_cols(const std::vector<Var>& parts);
Var gather_rows(Var table, const std::vector<int>& ids);
Var sum_all(Var a);                      // 1 x 1 sum of all entries

// Mean smoothed cross entropy over rows of 2-column logits; returns a 1 x 1 var.
Var smoothed_cross_entropy(Var logits, const std::vector<int>& labels, double epsilon);

struct GradcheckReport {
    double max_abs_diff = 0.0;
    double max_rel_diff = 0.0;
    std::size_t entries_checked = 0;
};

// Central finite differences against reverse-mode gradients. The builder must
// be deterministic across calls (no fresh randomness inside).
GradcheckReport gradcheck(const std::vector<Parameter*>& params,
                          const std::function<Var(Tape&)>& build_loss, double step = 1e-5,
                          std::size_t stride = 1);

}  // namespace lexjudge::tape
