#include "lexjudge/tape.hpp"

#include <algorithm>
#include <cmath>

#include "lexjudge/error.hpp"

namespace lexjudge::tape {

namespace {

void check(bool ok, const char* message) {
    if (!ok) throw Error(ErrorCode::Internal, message);
}

void accumulate(Tape& t, std::size_t index, const Eigen::MatrixXd& g) {
    if (t.needs_grad(index)) t.grad_ref(index) += g;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

}  // namespace

Parameter::Parameter(std::string name_in, Eigen::MatrixXd value_in)
    : name(std::move(name_in)), value(std::move(value_in)) {
    grad = Eigen::MatrixXd::Zero(value.rows(), value.cols());
}

void Parameter::zero_grad() { grad.setZero(value.rows(), value.cols()); }

Var Tape::param(Parameter& p) {
    Node node;
    node.value = p.value;
    node.external = &p;
    node.needs_grad = p.trainable;
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Eigen::MatrixXd value) {
    Node node;
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

const Eigen::MatrixXd& Tape::value(Var v) const {
    check(v.tape == this && v.index < nodes_.size(), "var does not belong to this tape");
    return nodes_[v.index].value;
}

Eigen::MatrixXd& Tape::grad_ref(std::size_t index) {
    Node& node = nodes_[index];
    if (node.grad.size() == 0) node.grad = Eigen::MatrixXd::Zero(node.value.rows(), node.value.cols());
    return node.grad;
}

Var Tape::emit(Eigen::MatrixXd value, std::vector<std::size_t> inputs, Pull pull) {
    Node node;
    node.value = std::move(value);
    for (std::size_t i : inputs) node.needs_grad = node.needs_grad || nodes_[i].needs_grad;
    node.inputs = std::move(inputs);
    if (node.needs_grad) node.pull = std::move(pull);
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

void Tape::backward(Var scalar) {
    check(scalar.tape == this, "var does not belong to this tape");
    check(nodes_[scalar.index].value.rows() == 1 && nodes_[scalar.index].value.cols() == 1,
          "backward needs a 1 x 1 output");
    grad_ref(scalar.index).setOnes();
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.needs_grad || node.grad.size() == 0) continue;
        if (node.pull) node.pull(*this, i);
        if (node.external && node.external->trainable) node.external->grad += node.grad;
    }
}

Var add(Var a, Var b) {
    Tape& t = *a.tape;
    const auto& va = t.value(a);
    const auto& vb = t.value(b);
    check(va.rows() == vb.rows() && va.cols() == vb.cols(), "add shape mismatch");
    std::size_t ia = a.index, ib = b.index;
    return t.emit(va + vb, {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const auto& g = t.grad_ref(self);
        accumulate(t, ia, g);
        accumulate(t, ib, g);
    });
}

Var add_rowvec(Var a, Var row) {
    Tape& t = *a.tape;
    const auto& va = t.value(a);
    const auto& vr = t.value(row);
    check(vr.rows() == 1 && vr.cols() == va.cols(), "add_rowvec needs a matching 1 x C row");
    Eigen::MatrixXd out = va;
    out.rowwise() += vr.row(0);
    std::size_t ia = a.index, ir = row.index;
    return t.emit(std::move(out), {ia, ir}, [ia, ir](Tape& t, std::size_t self) {
        const auto& g = t.grad_ref(self);
        accumulate(t, ia, g);
        accumulate(t, ir, g.colwise().sum());
    });
}

Var matmul(Var a, Var b) {
    Tape& t = *a.tape;
    const auto& va = t.value(a);
    const auto& vb = t.value(b);
    check(va.cols() == vb.rows(), "matmul shape mismatch");
    std::size_t ia = a.index, ib = b.index;
    return t.emit(va * vb, {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const auto& g = t.grad_ref(self);
        const Eigen::MatrixXd& va = t.value(Var{&t, ia});
        const Eigen::MatrixXd& vb = t.value(Var{&t, ib});
        accumulate(t, ia, g * vb.transpose());
        accumulate(t, ib, va.transpose() * g);
    });
}

Var matmul_nt(Var a, Var b) {
    Tape& t = *a.tape;
    const auto& va = t.value(a);
    const auto& vb = t.value(b);
    check(va.cols() == vb.cols(), "matmul_nt shape mismatch");
    std::size_t ia = a.index, ib = b.index;
    return t.emit(va * vb.transpose(), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const auto& g = t.grad_ref(self);
        const Eigen::MatrixXd& va = t.value(Var{&t, ia});
        const Eigen::MatrixXd& vb = t.value(Var{&t, ib});
        accumulate(t, ia, g * vb);
        accumulate(t, ib, g.transpose() * va);
    });
}

Var scale(Var a, double factor) {
    Tape& t = *a.tape;
    std::size_t ia = a.index;
    return t.emit(t.value(a) * factor, {ia}, [ia, factor](Tape& t, std::size_t self) {
        accumulate(t, ia, t.grad_ref(self) * factor);
    });
}

Var mul_elem(Var a, Var b) {
    Tape& t = *a.tape;
    const auto& va = t.value(a);
    const auto& vb = t.value(b);
    check(va.rows() == vb.rows() && va.cols() == vb.cols(), "mul_elem shape mismatch");
    std::size_t ia = a.index, ib = b.index;
    return t.emit(va.cwiseProduct(vb), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const auto& g = t.grad_ref(self);
        accumulate(t, ia, g.cwiseProduct(t.value(Var{&t, ib})));
        accumulate(t, ib, g.cwiseProduct(t.value(Var{&t, ia})));
    });
}

Var gelu(Var a) {
    Tape& t = *a.tape;
    const auto& va = t.value(a);
    Eigen::MatrixXd out(va.rows(), va.cols());
    for (Eigen::Index r = 0; r < va.rows(); ++r)
        for (Eigen::Index c = 0; c < va.cols(); ++c) {
            double x = va(r, c);
            out(r, c) = 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
        }
    std::size_t ia = a.index;
    return t.emit(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
        const auto& g = t.grad_ref(self);
        const Eigen::MatrixXd& va = t.value(Var{&t, ia});
        Eigen::MatrixXd dx(va.rows(), va.cols());
        for (Eigen::Index r = 0; r < va.rows(); ++r)
            for (Eigen::Index c = 0; c < va.cols(); ++c) {
                double x = va(r, c);
                double u = kGeluC * (x + kGeluA * x * x * x);
                double th = std::tanh(u);
                double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
                dx(r, c) = 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
            }
        accumulate(t, ia, g.cwiseProduct(dx));
    });
}

Var layernorm(Var a, Var gamma, Var beta, double eps) {
    Tape& t = *a.tape;
    const auto& va = t.value(a);
    const auto& vg = t.value(gamma);
    const auto& vb = t.value(beta);
    check(vg.rows() == 1 && vg.cols() == va.cols(), "layernorm gamma must be 1 x C");
    check(vb.rows() == 1 && vb.cols() == va.cols(), "layernorm beta must be 1 x C");

    Eigen::MatrixXd xhat(va.rows(), va.cols());
    Eigen::VectorXd inv(va.rows());
    for (Eigen::Index r = 0; r < va.rows(); ++r) {
        double mean = va.row(r).mean();
        double var = (va.row(r).array() - mean).square().mean();
        inv(r) = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (va.row(r).array() - mean) * inv(r);
    }
    Eigen::MatrixXd out = xhat;
    out.array().rowwise() *= vg.row(0).array();
    out.rowwise() += vb.row(0);

    std::size_t ia = a.index, ig = gamma.index, ib = beta.index;
    return t.emit(std::move(out), {ia, ig, ib},
                  [ia, ig, ib, xhat, inv](Tape& t, std::size_t self) {
                      const auto& g = t.grad_ref(self);
                      accumulate(t, ib, g.colwise().sum());
                      accumulate(t, ig, g.cwiseProduct(xhat).colwise().sum());
                      if (!t.needs_grad(ia)) return;
                      const Eigen::MatrixXd& vg = t.value(Var{&t, ig});
                      Eigen::MatrixXd dxhat = g;
                      dxhat.array().rowwise() *= vg.row(0).array();
                      Eigen::MatrixXd dx(g.rows(), g.cols());
                      for (Eigen::Index r = 0; r < g.rows(); ++r) {
                          double m1 = dxhat.row(r).mean();
                          double m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
                          dx.row(r) =
                              inv(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
                      }
                      t.grad_ref(ia) += dx;
                  });
}

Var masked_softmax_rows(Var scores, const Eigen::MatrixXd& key_mask) {
    Tape& t = *scores.tape;
    const auto& vs = t.value(scores);
    check(key_mask.rows() == 1 && key_mask.cols() == vs.cols(),
          "masked_softmax_rows needs a 1 x C key mask");

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(vs.rows(), vs.cols());
    for (Eigen::Index r = 0; r < vs.rows(); ++r) {
        double best = -std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < vs.cols(); ++c)
            if (key_mask(0, c) != 0.0) best = std::max(best, vs(r, c));
        if (!std::isfinite(best)) continue;  // fully masked row stays zero
        double sum = 0.0;
        for (Eigen::Index c = 0; c < vs.cols(); ++c)
            if (key_mask(0, c) != 0.0) {
                out(r, c) = std::exp(vs(r, c) - best);
                sum += out(r, c);
            }
        out.row(r) /= sum;
    }
    std::size_t is = scores.index;
    return t.emit(std::move(out), {is}, [is](Tape& t, std::size_t self) {
        const auto& g = t.grad_ref(self);
        const Eigen::MatrixXd& y = t.value(Var{&t, self});
        Eigen::MatrixXd ds(g.rows(), g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            double dot = g.row(r).cwiseProduct(y.row(r)).sum();
            ds.row(r) = (y.row(r).array() * (g.row(r).array() - dot)).matrix();
        }
        accumulate(t, is, ds);
    });
}

Var masked_maxpool_rows(Var a, const Eigen::VectorXd& row_mask) {
    Tape& t = *a.tape;
    const auto& va = t.value(a);
    check(row_mask.size() == va.rows(), "masked_maxpool_rows mask length mismatch");
    check((row_mask.array() != 0.0).any(), "masked_maxpool_rows needs a valid row");

    Eigen::MatrixXd out(1, va.cols());
    std::vector<Eigen::Index> argmax(std::size_t(va.cols()));
    for (Eigen::Index c = 0; c < va.cols(); ++c) {
        bool first = true;
        for (Eigen::Index r = 0; r < va.rows(); ++r) {
            if (row_mask(r) == 0.0) continue;
            if (first || va(r, c) > out(0, c)) {
                out(0, c) = va(r, c);
                argmax[std::size_t(c)] = r;
                first = false;
            }
        }
    }
    std::size_t ia = a.index;
    return t.emit(std::move(out), {ia}, [ia, argmax](Tape& t, std::size_t self) {
        const auto& g = t.grad_ref(self);
        Eigen::MatrixXd& ga = t.grad_ref(ia);
        for (Eigen::Index c = 0; c < g.cols(); ++c) ga(argmax[std::size_t(c)], c) += g(0, c);
    });
}

Var select_row(Var a, std::size_t row) {
    Tape& t = *a.tape;
    const auto& va = t.value(a);
    check(row < std::size_t(va.rows()), "select_row out of range");
    std::size_t ia = a.index;
    return t.emit(va.row(Eigen::Index(row)), {ia}, [ia, row](Tape& t, std::size_t self) {
        t.grad_ref(ia).row(Eigen::Index(row)) += t.grad_ref(self).row(0);
    });
}

Var stack_rows(const std::vector<Var>& rows) {
    check(!rows.empty(), "stack_rows needs input rows");
    Tape& t = *rows[0].tape;
    Eigen::Index cols = t.value(rows[0]).cols();
    Eigen::MatrixXd out(Eigen::Index(rows.size()), cols);
    std::vector<std::size_t> inputs;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& v = t.value(rows[i]);
        check(v.rows() == 1 && v.cols() == cols, "stack_rows needs matching 1 x C rows");
        out.row(Eigen::Index(i)) = v.row(0);
        inputs.push_back(rows[i].index);
    }
    auto indices = inputs;
    return t.emit(std::move(out), std::move(inputs), [indices](Tape& t, std::size_t self) {
        const auto& g = t.grad_ref(self);
        for (std::size_t i = 0; i < indices.size(); ++i)
            accumulate(t, indices[i], g.row(Eigen::Index(i)));
    });
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
    Tape& t = *a.tape;
    const auto& va = t.value(a);
    check(start + count <= std::size_t(va.cols()), "slice_cols out of range");
    std::size_t ia = a.index;
    return t.emit(va.middleCols(Eigen::Index(start), Eigen::Index(count)), {ia},
                  [ia, start, count](Tape& t, std::size_t self) {
                      t.grad_ref(ia).middleCols(Eigen::Index(start), Eigen::Index(count)) +=
                          t.grad_ref(self);
                  });
}

Var concat_cols(const std::vector<Var>& parts) {
    check(!parts.empty(), "concat_cols needs input parts");
    Tape& t = *parts[0].tape;
    Eigen::Index rows = t.value(parts[0]).rows();
    Eigen::Index cols = 0;
    for (const auto& p : parts) {
        check(t.value(p).rows() == rows, "concat_cols needs matching row counts");
        cols += t.value(p).cols();
    }
    Eigen::MatrixXd out(rows, cols);
    std::vector<std::size_t> inputs;
    std::vector<Eigen::Index> offsets;
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        offsets.push_back(at);
        out.middleCols(at, t.value(p).cols()) = t.value(p);
        at += t.value(p).cols();
        inputs.push_back(p.index);
    }
    auto indices = inputs;
    return t.emit(std::move(out), std::move(inputs), [indices, offsets](Tape& t, std::size_t self) {
        const auto& g = t.grad_ref(self);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            Eigen::Index width = t.value(Var{&t, indices[i]}).cols();
            accumulate(t, indices[i], g.middleCols(offsets[i], width));
        }
    });
}

Var gather_rows(Var table, const std::vector<int>& ids) {
    Tape& t = *table.tape;
    const auto& vt = t.value(table);
    Eigen::MatrixXd out(Eigen::Index(ids.size()), vt.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        check(ids[i] >= 0 && ids[i] < vt.rows(), "gather_rows id out of range");
        out.row(Eigen::Index(i)) = vt.row(ids[i]);
    }
    std::size_t it = table.index;
    return t.emit(std::move(out), {it}, [it, ids](Tape& t, std::size_t self) {
        const auto& g = t.grad_ref(self);
        Eigen::MatrixXd& gt = t.grad_ref(it);
        for (std::size_t i = 0; i < ids.size(); ++i) gt.row(ids[i]) += g.row(Eigen::Index(i));
    });
}

Var sum_all(Var a) {
    Tape& t = *a.tape;
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = t.value(a).sum();
    std::size_t ia = a.index;
    return t.emit(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
        double g = t.grad_ref(self)(0, 0);
        Eigen::MatrixXd& ga = t.grad_ref(ia);
        ga.array() += g;
    });
}

Var smoothed_cross_entropy(Var logits, const std::vector<int>& labels, double epsilon) {
    Tape& t = *logits.tape;
    const auto& vl = t.value(logits);
    check(vl.cols() == 2, "smoothed_cross_entropy needs 2-column logits");
    check(std::size_t(vl.rows()) == labels.size(), "smoothed_cross_entropy label count mismatch");
    check(epsilon >= 0.0 && epsilon < 1.0, "smoothed_cross_entropy needs epsilon in [0, 1)");
    check(vl.allFinite(), "smoothed_cross_entropy needs finite logits");

    double n = double(vl.rows());
    double loss = 0.0;
    Eigen::MatrixXd softmax(vl.rows(), 2);
    for (Eigen::Index r = 0; r < vl.rows(); ++r) {
        double m = std::max(vl(r, 0), vl(r, 1));
        double e0 = std::exp(vl(r, 0) - m), e1 = std::exp(vl(r, 1) - m);
        double z = e0 + e1;
        softmax(r, 0) = e0 / z;
        softmax(r, 1) = e1 / z;
        double log_z = m + std::log(z);
        for (int cls = 0; cls < 2; ++cls) {
            double q = epsilon / 2.0 + (labels[std::size_t(r)] == cls ? 1.0 - epsilon : 0.0);
            loss -= q * (vl(r, cls) - log_z);
        }
    }
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = loss / n;

    std::size_t il = logits.index;
    return t.emit(std::move(out), {il},
                  [il, labels, epsilon, softmax, n](Tape& t, std::size_t self) {
                      double g = t.grad_ref(self)(0, 0);
                      Eigen::MatrixXd dl = softmax;
                      for (Eigen::Index r = 0; r < dl.rows(); ++r)
                          for (int cls = 0; cls < 2; ++cls)
                              dl(r, cls) -= epsilon / 2.0 +
                                            (labels[std::size_t(r)] == cls ? 1.0 - epsilon : 0.0);
                      accumulate(t, il, dl * (g / n));
                  });
}

GradcheckReport gradcheck(const std::vector<Parameter*>& params,
                          const std::function<Var(Tape&)>& build_loss, double step,
                          std::size_t stride) {
    if (stride == 0) throw Error(ErrorCode::Invalid, "gradcheck stride must be positive");
    for (auto* p : params) p->zero_grad();
    {
        Tape t;
        Var loss = build_loss(t);
        t.backward(loss);
    }
    std::vector<Eigen::MatrixXd> analytic;
    analytic.reserve(params.size());
    for (auto* p : params) analytic.push_back(p->grad);

    GradcheckReport report;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = *params[k];
        for (Eigen::Index idx = 0; idx < p.value.size(); idx += Eigen::Index(stride)) {
            double orig = p.value(idx);
            p.value(idx) = orig + step;
            Tape tp;
            double fp = tp.value(build_loss(tp))(0, 0);
            p.value(idx) = orig - step;
            Tape tm;
            double fm = tm.value(build_loss(tm))(0, 0);
            p.value(idx) = orig;
            double fd = (fp - fm) / (2.0 * step);
            double ad = analytic[k](idx);
            double abs_diff = std::abs(fd - ad);
            double denom = std::max({std::abs(fd), std::abs(ad), 1e-3});
            report.max_abs_diff = std::max(report.max_abs_diff, abs_diff);
            report.max_rel_diff = std::max(report.max_rel_diff, abs_diff / denom);
            ++report.entries_checked;
        }
    }
    return report;
}

}  // namespace lexjudge::tape
