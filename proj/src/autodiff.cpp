#include "drape/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace drape::ad {

namespace {

void check_finite(const Mat& m, const char* op) {
  if (!m.allFinite()) {
    throw NumericError(std::string("non-finite result in op '") + op + "'");
  }
}

void check_same_tape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.valid() || !b.valid() || a.tape != b.tape) {
    throw ValidationError(std::string(op) + ": tensors must live on the same tape");
  }
}

}  // namespace

int Tape::emplace(Mat value, std::vector<int> parents, const char* op,
                  std::function<void(Tape&, int)> backward_fn) {
  check_finite(value, op);
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.backward_fn = std::move(backward_fn);
  n.op = op;
  for (int p : n.parents) n.needs_grad = n.needs_grad || nodes_[p].needs_grad;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::constant(Mat value) {
  const int id = emplace(std::move(value), {}, "constant", nullptr);
  return {this, id};
}

Tensor Tape::leaf(Param& param) {
  Node n;
  n.value = param.value;
  n.op = "leaf";
  n.needs_grad = true;
  n.bound = &param;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

const Mat& Tape::value(const Tensor& t) const {
  if (!t.valid() || t.tape != this) throw ValidationError("tensor not on this tape");
  return nodes_[t.id].value;
}

Mat Tape::grad(const Tensor& t) const {
  if (!t.valid() || t.tape != this) throw ValidationError("tensor not on this tape");
  const Node& n = nodes_[t.id];
  if (!n.grad_live) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(int id, const Mat& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (!n.grad_live) {
    n.grad = g;
    n.grad_live = true;
  } else {
    n.grad += g;
  }
}

void Tape::backward(const Tensor& loss) {
  if (!loss.valid() || loss.tape != this) throw ValidationError("loss not on this tape");
  const Node& ln = nodes_[loss.id];
  if (ln.value.rows() != 1 || ln.value.cols() != 1) {
    throw ValidationError("backward requires a scalar loss, got " +
                          std::to_string(ln.value.rows()) + "x" + std::to_string(ln.value.cols()));
  }
  accumulate(loss.id, Mat::Ones(1, 1));
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.grad_live || !n.needs_grad) continue;
    if (n.backward_fn) n.backward_fn(*this, id);
    if (n.bound != nullptr) n.bound->grad += n.grad;
  }
}

// --- ops ---

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_same_tape(a, b, "matmul");
  Tape& t = *a.tape;
  const Mat& av = t.value(a);
  const Mat& bv = t.value(b);
  if (av.cols() != bv.rows()) {
    throw ValidationError("matmul shape mismatch: " + std::to_string(av.rows()) + "x" +
                          std::to_string(av.cols()) + " * " + std::to_string(bv.rows()) + "x" +
                          std::to_string(bv.cols()));
  }
  Mat out = av * bv;
  const int pa = a.id, pb = b.id;
  const int id = t.emplace(std::move(out), {pa, pb}, "matmul", [pa, pb](Tape& tp, int self) {
    const Mat& g = tp.node(self).grad;
    if (tp.node(pa).needs_grad) tp.accumulate(pa, g * tp.node(pb).value.transpose());
    if (tp.node(pb).needs_grad) tp.accumulate(pb, tp.node(pa).value.transpose() * g);
  });
  return {&t, id};
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_tape(a, b, "add");
  Tape& t = *a.tape;
  const Mat& av = t.value(a);
  const Mat& bv = t.value(b);
  const int pa = a.id, pb = b.id;
  if (av.rows() == bv.rows() && av.cols() == bv.cols()) {
    const int id = t.emplace(av + bv, {pa, pb}, "add", [pa, pb](Tape& tp, int self) {
      const Mat& g = tp.node(self).grad;
      tp.accumulate(pa, g);
      tp.accumulate(pb, g);
    });
    return {&t, id};
  }
  if (bv.rows() == 1 && bv.cols() == av.cols()) {  // row broadcast (bias)
    Mat out = av.rowwise() + bv.row(0);
    const int id = t.emplace(std::move(out), {pa, pb}, "add", [pa, pb](Tape& tp, int self) {
      const Mat& g = tp.node(self).grad;
      tp.accumulate(pa, g);
      if (tp.node(pb).needs_grad) tp.accumulate(pb, g.colwise().sum());
    });
    return {&t, id};
  }
  throw ValidationError("add shape mismatch");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_tape(a, b, "sub");
  Tape& t = *a.tape;
  const Mat& av = t.value(a);
  const Mat& bv = t.value(b);
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
    throw ValidationError("sub shape mismatch");
  }
  const int pa = a.id, pb = b.id;
  const int id = t.emplace(av - bv, {pa, pb}, "sub", [pa, pb](Tape& tp, int self) {
    const Mat& g = tp.node(self).grad;
    tp.accumulate(pa, g);
    if (tp.node(pb).needs_grad) tp.accumulate(pb, -g);
  });
  return {&t, id};
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_tape(a, b, "mul");
  Tape& t = *a.tape;
  const Mat& av = t.value(a);
  const Mat& bv = t.value(b);
  const int pa = a.id, pb = b.id;
  if (av.rows() == bv.rows() && av.cols() == bv.cols()) {
    Mat out = av.cwiseProduct(bv);
    const int id = t.emplace(std::move(out), {pa, pb}, "mul", [pa, pb](Tape& tp, int self) {
      const Mat& g = tp.node(self).grad;
      if (tp.node(pa).needs_grad) tp.accumulate(pa, g.cwiseProduct(tp.node(pb).value));
      if (tp.node(pb).needs_grad) tp.accumulate(pb, g.cwiseProduct(tp.node(pa).value));
    });
    return {&t, id};
  }
  if (bv.cols() == 1 && bv.rows() == av.rows()) {  // column broadcast
    Mat out = av.array().colwise() * bv.col(0).array();
    const int id = t.emplace(std::move(out), {pa, pb}, "mul", [pa, pb](Tape& tp, int self) {
      const Mat& g = tp.node(self).grad;
      const Mat& avv = tp.node(pa).value;
      const Mat& bvv = tp.node(pb).value;
      if (tp.node(pa).needs_grad) {
        tp.accumulate(pa, g.array().colwise() * bvv.col(0).array());
      }
      if (tp.node(pb).needs_grad) {
        tp.accumulate(pb, g.cwiseProduct(avv).rowwise().sum());
      }
    });
    return {&t, id};
  }
  if (bv.rows() == 1 && bv.cols() == av.cols()) {  // row broadcast
    Mat out = av.array().rowwise() * bv.row(0).array();
    const int id = t.emplace(std::move(out), {pa, pb}, "mul", [pa, pb](Tape& tp, int self) {
      const Mat& g = tp.node(self).grad;
      const Mat& avv = tp.node(pa).value;
      const Mat& bvv = tp.node(pb).value;
      if (tp.node(pa).needs_grad) {
        tp.accumulate(pa, g.array().rowwise() * bvv.row(0).array());
      }
      if (tp.node(pb).needs_grad) {
        tp.accumulate(pb, g.cwiseProduct(avv).colwise().sum());
      }
    });
    return {&t, id};
  }
  throw ValidationError("mul shape mismatch");
}

Tensor scalar_mul(const Tensor& a, double c) {
  Tape& t = *a.tape;
  if (!std::isfinite(c)) throw ValidationError("scalar_mul: non-finite scalar");
  const int pa = a.id;
  const int id = t.emplace(t.value(a) * c, {pa}, "scalar_mul", [pa, c](Tape& tp, int self) {
    tp.accumulate(pa, tp.node(self).grad * c);
  });
  return {&t, id};
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ValidationError("concat_cols: empty input");
  Tape& t = *parts[0].tape;
  const Eigen::Index rows = t.value(parts[0]).rows();
  Eigen::Index cols = 0;
  std::vector<int> ids;
  for (const auto& p : parts) {
    check_same_tape(parts[0], p, "concat_cols");
    if (t.value(p).rows() != rows) throw ValidationError("concat_cols: row mismatch");
    cols += t.value(p).cols();
    ids.push_back(p.id);
  }
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, t.value(p).cols()) = t.value(p);
    at += t.value(p).cols();
  }
  const int id = t.emplace(std::move(out), ids, "concat_cols", [ids](Tape& tp, int self) {
    const Mat& g = tp.node(self).grad;
    Eigen::Index at2 = 0;
    for (int pid : ids) {
      const Eigen::Index w = tp.node(pid).value.cols();
      if (tp.node(pid).needs_grad) tp.accumulate(pid, g.middleCols(at2, w));
      at2 += w;
    }
  });
  return {&t, id};
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ValidationError("concat_rows: empty input");
  Tape& t = *parts[0].tape;
  const Eigen::Index cols = t.value(parts[0]).cols();
  Eigen::Index rows = 0;
  std::vector<int> ids;
  for (const auto& p : parts) {
    check_same_tape(parts[0], p, "concat_rows");
    if (t.value(p).cols() != cols) throw ValidationError("concat_rows: column mismatch");
    rows += t.value(p).rows();
    ids.push_back(p.id);
  }
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, t.value(p).rows()) = t.value(p);
    at += t.value(p).rows();
  }
  const int id = t.emplace(std::move(out), ids, "concat_rows", [ids](Tape& tp, int self) {
    const Mat& g = tp.node(self).grad;
    Eigen::Index at2 = 0;
    for (int pid : ids) {
      const Eigen::Index h = tp.node(pid).value.rows();
      if (tp.node(pid).needs_grad) tp.accumulate(pid, g.middleRows(at2, h));
      at2 += h;
    }
  });
  return {&t, id};
}

Tensor relu(const Tensor& a) {
  Tape& t = *a.tape;
  const int pa = a.id;
  Mat out = t.value(a).cwiseMax(0.0);
  const int id = t.emplace(std::move(out), {pa}, "relu", [pa](Tape& tp, int self) {
    const Mat& g = tp.node(self).grad;
    const Mat mask = (tp.node(pa).value.array() > 0.0).cast<double>();
    tp.accumulate(pa, g.cwiseProduct(mask));
  });
  return {&t, id};
}

Tensor tanh(const Tensor& a) {
  Tape& t = *a.tape;
  const int pa = a.id;
  Mat out = t.value(a).array().tanh();
  const int id = t.emplace(std::move(out), {pa}, "tanh", [pa](Tape& tp, int self) {
    const Mat& g = tp.node(self).grad;
    const Mat& y = tp.node(self).value;
    tp.accumulate(pa, (g.array() * (1.0 - y.array().square())).matrix());
  });
  return {&t, id};
}

Tensor exp(const Tensor& a) {
  Tape& t = *a.tape;
  const int pa = a.id;
  Mat out = t.value(a).array().exp();
  const int id = t.emplace(std::move(out), {pa}, "exp", [pa](Tape& tp, int self) {
    const Mat& g = tp.node(self).grad;
    tp.accumulate(pa, g.cwiseProduct(tp.node(self).value));
  });
  return {&t, id};
}

Tensor leaky_relu(const Tensor& a) {
  return sub(relu(a), scalar_mul(relu(scalar_mul(a, -1.0)), 0.2));
}

namespace {

void check_segments(const std::vector<int>& segments, Eigen::Index rows, int num_segments,
                    const char* op, bool require_sorted) {
  if (static_cast<Eigen::Index>(segments.size()) != rows) {
    throw ValidationError(std::string(op) + ": segment list size != row count");
  }
  int prev = -1;
  for (int s : segments) {
    if (s < 0 || s >= num_segments) throw ValidationError(std::string(op) + ": segment id out of range");
    if (require_sorted && s < prev) throw ValidationError(std::string(op) + ": segments not sorted");
    prev = require_sorted ? s : prev;
  }
}

}  // namespace

Tensor masked_softmax(const Tensor& logits, std::shared_ptr<const std::vector<int>> segments,
                      int num_segments) {
  Tape& t = *logits.tape;
  const Mat& lv = t.value(logits);
  if (lv.cols() != 1) throw ValidationError("masked_softmax expects an E x 1 logit column");
  check_segments(*segments, lv.rows(), num_segments, "masked_softmax", true);

  Mat out(lv.rows(), 1);
  const auto& seg = *segments;
  Eigen::Index start = 0;
  while (start < lv.rows()) {
    Eigen::Index end = start;
    while (end < lv.rows() && seg[end] == seg[start]) ++end;
    // Shift by the segment max (a constant w.r.t. the gradient) before
    // exponentiation, matching additive masking outside the set.
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index e = start; e < end; ++e) mx = std::max(mx, lv(e, 0));
    double total = 0.0;
    for (Eigen::Index e = start; e < end; ++e) total += std::exp(lv(e, 0) - mx);
    for (Eigen::Index e = start; e < end; ++e) out(e, 0) = std::exp(lv(e, 0) - mx) / total;
    start = end;
  }

  const int pa = logits.id;
  const int id = t.emplace(std::move(out), {pa}, "masked_softmax",
                           [pa, segments](Tape& tp, int self) {
    const Mat& g = tp.node(self).grad;
    const Mat& y = tp.node(self).value;
    const auto& sg = *segments;
    Mat dl(y.rows(), 1);
    Eigen::Index s2 = 0;
    while (s2 < y.rows()) {
      Eigen::Index e2 = s2;
      double dot = 0.0;
      while (e2 < y.rows() && sg[e2] == sg[s2]) {
        dot += g(e2, 0) * y(e2, 0);
        ++e2;
      }
      for (Eigen::Index e = s2; e < e2; ++e) dl(e, 0) = y(e, 0) * (g(e, 0) - dot);
      s2 = e2;
    }
    tp.accumulate(pa, dl);
  });
  return {&t, id};
}

Tensor l2_normalize_rows(const Tensor& a) {
  constexpr double kGuard = 1e-12;
  Tape& t = *a.tape;
  const Mat& av = t.value(a);
  Mat out(av.rows(), av.cols());
  for (Eigen::Index i = 0; i < av.rows(); ++i) {
    const double n = av.row(i).norm();
    if (n < kGuard) {
      out.row(i).setZero();
    } else {
      out.row(i) = av.row(i) / n;
    }
  }
  const int pa = a.id;
  const int id = t.emplace(std::move(out), {pa}, "l2_normalize_rows", [pa](Tape& tp, int self) {
    const Mat& g = tp.node(self).grad;
    const Mat& x = tp.node(pa).value;
    const Mat& y = tp.node(self).value;
    Mat dx = Mat::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double n = x.row(i).norm();
      if (n < kGuard) continue;  // zero-row guard: zero subgradient
      const double gy = g.row(i).dot(y.row(i));
      dx.row(i) = (g.row(i) - gy * y.row(i)) / n;
    }
    tp.accumulate(pa, dx);
  });
  return {&t, id};
}

Tensor segment_sum(const Tensor& a, std::shared_ptr<const std::vector<int>> segments,
                   int num_segments) {
  Tape& t = *a.tape;
  const Mat& av = t.value(a);
  check_segments(*segments, av.rows(), num_segments, "segment_sum", false);
  Mat out = Mat::Zero(num_segments, av.cols());
  for (Eigen::Index e = 0; e < av.rows(); ++e) out.row((*segments)[e]) += av.row(e);
  const int pa = a.id;
  const int id = t.emplace(std::move(out), {pa}, "segment_sum",
                           [pa, segments](Tape& tp, int self) {
    const Mat& g = tp.node(self).grad;
    const auto& sg = *segments;
    Mat da(sg.size(), g.cols());
    for (Eigen::Index e = 0; e < da.rows(); ++e) da.row(e) = g.row(sg[e]);
    tp.accumulate(pa, da);
  });
  return {&t, id};
}

Tensor gather_rows(const Tensor& a, std::shared_ptr<const std::vector<int>> indices) {
  Tape& t = *a.tape;
  const Mat& av = t.value(a);
  for (int i : *indices) {
    if (i < 0 || i >= av.rows()) throw ValidationError("gather_rows: index out of range");
  }
  Mat out(indices->size(), av.cols());
  for (size_t k = 0; k < indices->size(); ++k) out.row(k) = av.row((*indices)[k]);
  const int pa = a.id;
  const int id = t.emplace(std::move(out), {pa}, "gather_rows",
                           [pa, indices](Tape& tp, int self) {
    const Mat& g = tp.node(self).grad;
    const Mat& x = tp.node(pa).value;
    Mat da = Mat::Zero(x.rows(), x.cols());
    for (size_t k = 0; k < indices->size(); ++k) da.row((*indices)[k]) += g.row(k);
    tp.accumulate(pa, da);
  });
  return {&t, id};
}

Tensor sum(const Tensor& a) {
  Tape& t = *a.tape;
  const int pa = a.id;
  Mat out(1, 1);
  out(0, 0) = t.value(a).sum();
  const int id = t.emplace(std::move(out), {pa}, "sum", [pa](Tape& tp, int self) {
    const double g = tp.node(self).grad(0, 0);
    const Mat& x = tp.node(pa).value;
    tp.accumulate(pa, Mat::Constant(x.rows(), x.cols(), g));
  });
  return {&t, id};
}

Tensor mse_loss(const Tensor& a, const Tensor& b) {
  check_same_tape(a, b, "mse_loss");
  Tape& t = *a.tape;
  const Mat& av = t.value(a);
  const Mat& bv = t.value(b);
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
    throw ValidationError("mse_loss shape mismatch");
  }
  const double rows = static_cast<double>(av.rows());
  Mat out(1, 1);
  out(0, 0) = (av - bv).squaredNorm() / rows;
  const int pa = a.id, pb = b.id;
  const int id = t.emplace(std::move(out), {pa, pb}, "mse_loss", [pa, pb, rows](Tape& tp, int self) {
    const double g = tp.node(self).grad(0, 0);
    const Mat diff = tp.node(pa).value - tp.node(pb).value;
    if (tp.node(pa).needs_grad) tp.accumulate(pa, (2.0 * g / rows) * diff);
    if (tp.node(pb).needs_grad) tp.accumulate(pb, (-2.0 * g / rows) * diff);
  });
  return {&t, id};
}

// --- finite differences ---

double fd_check(const TensorFn& f, const Mat& x, double h) {
  Param px("fd_x", x);
  Mat analytic;
  {
    Tape tape;
    Tensor tx = tape.leaf(px);
    Tensor loss = f(tape, tx);
    tape.backward(loss);
    analytic = px.grad;
  }

  auto eval = [&](const Mat& at) {
    Tape tape;
    Param p("fd_x", at);
    Tensor tx = tape.leaf(p);
    return tape.value(f(tape, tx))(0, 0);
  };

  double worst = 0.0;
  Mat xp = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double orig = xp(i, j);
      xp(i, j) = orig + h;
      const double fp = eval(xp);
      xp(i, j) = orig - h;
      const double fm = eval(xp);
      xp(i, j) = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double ga = analytic(i, j);
      const double denom = std::max({std::abs(ga), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(ga - numeric) / denom);
    }
  }
  return worst;
}

double fd_check_params(const std::function<Tensor(Tape&)>& build_loss,
                       const std::vector<Param*>& params, double h, int max_coords) {
  for (Param* p : params) p->zero_grad();
  {
    Tape tape;
    Tensor loss = build_loss(tape);
    tape.backward(loss);
  }
  std::vector<Mat> analytic;
  analytic.reserve(params.size());
  for (Param* p : params) analytic.push_back(p->grad);

  auto eval = [&]() {
    Tape tape;
    return tape.value(build_loss(tape))(0, 0);
  };

  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Mat& value = params[pi]->value;
    const Eigen::Index total = value.size();
    const Eigen::Index step =
        max_coords > 0 ? std::max<Eigen::Index>(1, total / max_coords) : 1;
    for (Eigen::Index k = 0; k < total; k += step) {
      double* entry = value.data() + k;
      const double orig = *entry;
      *entry = orig + h;
      const double fp = eval();
      *entry = orig - h;
      const double fm = eval();
      *entry = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double ga = *(analytic[pi].data() + k);
      const double denom = std::max({std::abs(ga), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(ga - numeric) / denom);
    }
    params[pi]->zero_grad();
  }
  return worst;
}

Adam::Adam(std::vector<Param*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (Param* p : params_) {
    m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i];
    if (!p.grad.allFinite()) {
      throw NumericError("non-finite gradient for parameter '" + p.name + "'");
    }
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    const Mat m_hat = m_[i] / bc1;
    const Mat v_hat = v_[i] / bc2;
    p.value.array() -= lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
    p.zero_grad();
  }
}

}  // namespace drape::ad
