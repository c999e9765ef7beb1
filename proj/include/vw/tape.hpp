#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vw/matrix.hpp"

namespace vw::ad {

class Tape;

// Handle to a matrix on a tape. Constants carry their payload and no node id;
// no gradient flows into them.
struct Value {
  Tape* tape = nullptr;
  int id = -1;
  std::shared_ptr<const Mat> cval;

  bool tracked() const { return tape != nullptr; }
  const Mat& mat() const;
  int rows() const { return mat().rows; }
  int cols() const { return mat().cols; }
  double scalar() const;

  static Value constant(Mat m) { return Value{nullptr, -1, std::make_shared<Mat>(std::move(m))}; }
  static Value constant_scalar(double s) {
    Mat m(1, 1);
    m(0, 0) = s;
    return constant(std::move(m));
  }
};

// accum(slot, g) adds g to the adjoint of the slot-th input; slots holding
// constants are dropped silently.
using AccumFn = std::function<void(int, const Mat&)>;
using VjpFn = std::function<void(const Mat& upstream, const AccumFn& accum)>;

// One forward pass worth of nodes, appended in evaluation order so node ids
// are already topological. backward() walks them once in reverse, adding each
// node's contribution into its parents' adjoints (fan-out accumulates).
class Tape {
 public:
  Value input(Mat m);
  Value record(const char* tag, const std::vector<Value>& inputs, Mat out, VjpFn vjp);

  void backward(const Value& out, const Mat& seed);
  void backward(const Value& out);  // 1x1 output, seed 1

  const Mat& value(const Value& v) const;
  Mat grad(const Value& v) const;
  int node_count() const { return int(nodes_.size()); }

 private:
  struct Node {
    Mat val;
    const char* tag;
    std::vector<int> parents;
    VjpFn vjp;
  };
  std::vector<Node> nodes_;
  std::vector<Mat> adj_;
  std::vector<char> touched_;

  friend struct Value;
};

// Primitives. Mixed tracked/constant inputs are fine; an op with no tracked
// input folds to a constant.
Value matmul(const Value& a, const Value& b);
Value transpose(const Value& a);
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);  // elementwise
Value divide(const Value& a, const Value& b);
Value smul(const Value& a, double s);
Value bscale(const Value& s, const Value& m);  // s is 1x1, broadcast over m
Value min_const(const Value& a, double c);
Value max_const(const Value& a, double c);
Value relu(const Value& a);
Value softmax_rows(const Value& a);
Value softmax_cols(const Value& a);
Value gelu(const Value& a);
Value sum(const Value& a);
Value mean(const Value& a);
Value trace(const Value& a);
Value outer(const Value& u, const Value& v);
Value add_colvec(const Value& m, const Value& v);
Value slice_cols(const Value& a, int c0, int c1);

// Batch normalization over rows (each row is a channel, statistics taken
// across all columns present). Variance is floored, never an error.
struct BnRunning {
  Mat* mean = nullptr;
  Mat* var = nullptr;
  double momentum = 0.1;
};
Value batchnorm_train(const Value& x, const Value& gamma, const Value& beta, BnRunning running,
                      bool update_running, double floor = 1e-5);
Value batchnorm_eval(const Value& x, const Value& gamma, const Value& beta, const Mat& run_mean,
                     const Mat& run_var, double floor = 1e-5);

}  // namespace vw::ad
