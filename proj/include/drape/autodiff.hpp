#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "drape/errors.hpp"

namespace drape::ad {

using Mat = Eigen::MatrixXd;

// Trainable tensor: value plus the gradient accumulated by Tape::backward.
struct Param {
  std::string name;
  Mat value;
  Mat grad;

  Param() = default;
  Param(std::string n, Mat v) : name(std::move(n)), value(std::move(v)) {
    grad = Mat::Zero(value.rows(), value.cols());
  }
  void zero_grad() { grad.setZero(); }
};

class Tape;

// Handle into the active tape. Constants and parameters both live on the tape
// for the duration of one forward/backward pass.
struct Tensor {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
};

// Dynamic tape, rebuilt per forward pass. All values are dense 64-bit
// matrices; a scalar is 1x1. Every forward op checks its result for
// non-finite entries and throws NumericError naming the op.
class Tape {
 public:
  Tensor constant(Mat value);
  Tensor leaf(Param& param);

  const Mat& value(const Tensor& t) const;
  // Gradient of the last backward() target w.r.t. tensor t (zero matrix if
  // the node was never reached).
  Mat grad(const Tensor& t) const;

  // Reverse-mode sweep from a scalar loss; accumulates into every bound
  // Param's grad. Deterministic: identical tapes give identical gradients.
  void backward(const Tensor& loss);

  size_t size() const { return nodes_.size(); }

  // --- internal plumbing for the op implementations ---
  struct Node {
    Mat value;
    std::vector<int> parents;
    std::function<void(Tape&, int)> backward_fn;  // (tape, own node id)
    Mat grad;
    bool needs_grad = false;
    bool grad_live = false;
    const char* op = "";
    Param* bound = nullptr;
  };

  int emplace(Mat value, std::vector<int> parents, const char* op,
              std::function<void(Tape&, int)> backward_fn);
  Node& node(int id) { return nodes_[id]; }
  const Node& node(int id) const { return nodes_[id]; }
  void accumulate(int id, const Mat& g);

 private:
  std::vector<Node> nodes_;
};

// Forward ops. Shapes are validated; mismatches throw ValidationError.
Tensor matmul(const Tensor& a, const Tensor& b);
// add/sub accept equal shapes; add also broadcasts a 1 x n row (bias).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// Elementwise product; b may also be m x 1 (column broadcast) or 1 x n
// (row broadcast).
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double c);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
// relu(x) - 0.2 relu(-x), composed from the primitive ops.
Tensor leaky_relu(const Tensor& a);

// Softmax per masked neighbor set: logits is E x 1, `segments` assigns each
// row to its set and must be sorted non-decreasing. Weight is exactly zero
// outside a set and each nonempty set's weights sum to 1.
Tensor masked_softmax(const Tensor& logits, std::shared_ptr<const std::vector<int>> segments,
                      int num_segments);

// Rows scaled to unit norm; rows with norm < 1e-12 map to zero rows.
Tensor l2_normalize_rows(const Tensor& a);

Tensor segment_sum(const Tensor& a, std::shared_ptr<const std::vector<int>> segments,
                   int num_segments);
Tensor gather_rows(const Tensor& a, std::shared_ptr<const std::vector<int>> indices);

Tensor sum(const Tensor& a);
// Sum of squared differences divided by the row count of a.
Tensor mse_loss(const Tensor& a, const Tensor& b);

// --- finite-difference verification harness ---

// f builds a scalar tensor from x on the given tape.
using TensorFn = std::function<Tensor(Tape&, const Tensor&)>;

// Central-difference check of backward() against f at x. Returns the worst
// relative error, denominator max(|analytic|, |numeric|, 1e-8).
double fd_check(const TensorFn& f, const Mat& x, double h);

// Same check against a set of shared parameters. `build_loss` must construct
// the loss from the params' current values each call. Checks every
// coordinate when max_coords <= 0, else an evenly strided subset per param.
double fd_check_params(const std::function<Tensor(Tape&)>& build_loss,
                       const std::vector<Param*>& params, double h, int max_coords = 0);

// Adam with bias correction; step() consumes and zeroes the grads.
class Adam {
 public:
  Adam(std::vector<Param*> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void step();
  double lr() const { return lr_; }

 private:
  std::vector<Param*> params_;
  std::vector<Mat> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace drape::ad
