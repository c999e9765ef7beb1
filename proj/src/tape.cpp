#include "vw/tape.hpp"

#include <cmath>

#include "vw/kernels.hpp"

namespace vw::ad {

namespace k = vw::kernels;

const Mat& Value::mat() const {
  if (tracked()) return tape->value(*this);
  if (!cval) throw std::logic_error("Value: empty handle");
  return *cval;
}

double Value::scalar() const {
  const Mat& m = mat();
  if (m.rows != 1 || m.cols != 1) throw std::invalid_argument("Value::scalar: shape " + m.shape_str());
  return m(0, 0);
}

Value Tape::input(Mat m) {
  nodes_.push_back(Node{std::move(m), "input", {}, nullptr});
  return Value{this, int(nodes_.size()) - 1, nullptr};
}

Value Tape::record(const char* tag, const std::vector<Value>& inputs, Mat out, VjpFn vjp) {
  std::vector<int> parents;
  parents.reserve(inputs.size());
  for (const Value& v : inputs) {
    if (v.tracked() && v.tape != this)
      throw std::logic_error(std::string(tag) + ": input from a different tape");
    parents.push_back(v.tracked() ? v.id : -1);
  }
  nodes_.push_back(Node{std::move(out), tag, std::move(parents), std::move(vjp)});
  return Value{this, int(nodes_.size()) - 1, nullptr};
}

const Mat& Tape::value(const Value& v) const {
  if (v.tape != this || v.id < 0 || v.id >= int(nodes_.size()))
    throw std::logic_error("Tape::value: stale handle");
  return nodes_[v.id].val;
}

void Tape::backward(const Value& out) {
  const Mat& o = value(out);
  if (o.rows != 1 || o.cols != 1)
    throw std::invalid_argument("backward: default seed needs a 1x1 output, got " + o.shape_str());
  Mat seed(1, 1);
  seed(0, 0) = 1.0;
  backward(out, seed);
}

void Tape::backward(const Value& out, const Mat& seed) {
  if (!out.tracked() || out.tape != this) throw std::logic_error("backward: output not on this tape");
  if (!seed.same_shape(value(out)))
    throw std::invalid_argument("backward: seed shape " + seed.shape_str() + " vs output " + value(out).shape_str());

  adj_.assign(nodes_.size(), Mat());
  touched_.assign(nodes_.size(), 0);
  adj_[out.id] = seed;
  touched_[out.id] = 1;

  for (int id = out.id; id >= 0; --id) {
    if (!touched_[id] || !nodes_[id].vjp) continue;
    const Node& node = nodes_[id];
    AccumFn accum = [&](int slot, const Mat& g) {
      int pid = node.parents.at(slot);
      if (pid < 0) return;
      if (!g.same_shape(nodes_[pid].val))
        throw std::logic_error(std::string(node.tag) + ": vjp slot " + std::to_string(slot) + " shape " +
                               g.shape_str() + " vs input " + nodes_[pid].val.shape_str());
      if (!touched_[pid]) {
        adj_[pid] = g;
        touched_[pid] = 1;
      } else {
        for (int i = 0; i < g.size(); ++i) adj_[pid].a[i] += g.a[i];
      }
    };
    node.vjp(adj_[id], accum);
  }
}

Mat Tape::grad(const Value& v) const {
  if (!v.tracked() || v.tape != this) throw std::logic_error("grad: value not on this tape");
  if (adj_.empty()) throw std::logic_error("grad: backward has not run");
  if (!touched_[v.id]) return Mat(nodes_[v.id].val.rows, nodes_[v.id].val.cols);
  return adj_[v.id];
}

namespace {

Tape* tape_of(std::initializer_list<const Value*> vs, const char* op) {
  Tape* t = nullptr;
  for (const Value* v : vs) {
    if (!v->tracked()) continue;
    if (t && v->tape != t) throw std::logic_error(std::string(op) + ": inputs on different tapes");
    t = v->tape;
  }
  return t;
}

Value finish(Tape* t, const char* tag, const std::vector<Value>& inputs, Mat out, VjpFn vjp) {
  if (!t) return Value::constant(std::move(out));
  return t->record(tag, inputs, std::move(out), std::move(vjp));
}

}  // namespace

Value matmul(const Value& a, const Value& b) {
  Tape* t = tape_of({&a, &b}, "matmul");
  Mat out = k::matmul(a.mat(), b.mat());
  Mat av = a.mat(), bv = b.mat();
  return finish(t, "matmul", {a, b}, std::move(out), [av, bv](const Mat& g, const AccumFn& accum) {
    accum(0, k::matmul_nt(g, bv));
    accum(1, k::matmul_tn(av, g));
  });
}

Value transpose(const Value& a) {
  Tape* t = tape_of({&a}, "transpose");
  return finish(t, "transpose", {a}, k::transpose(a.mat()),
                [](const Mat& g, const AccumFn& accum) { accum(0, k::transpose(g)); });
}

Value add(const Value& a, const Value& b) {
  Tape* t = tape_of({&a, &b}, "add");
  return finish(t, "add", {a, b}, k::add(a.mat(), b.mat()), [](const Mat& g, const AccumFn& accum) {
    accum(0, g);
    accum(1, g);
  });
}

Value sub(const Value& a, const Value& b) {
  Tape* t = tape_of({&a, &b}, "sub");
  return finish(t, "sub", {a, b}, k::sub(a.mat(), b.mat()), [](const Mat& g, const AccumFn& accum) {
    accum(0, g);
    accum(1, k::scale(g, -1.0));
  });
}

Value mul(const Value& a, const Value& b) {
  Tape* t = tape_of({&a, &b}, "mul");
  Mat av = a.mat(), bv = b.mat();
  return finish(t, "mul", {a, b}, k::hadamard(av, bv), [av, bv](const Mat& g, const AccumFn& accum) {
    accum(0, k::hadamard(g, bv));
    accum(1, k::hadamard(g, av));
  });
}

Value divide(const Value& a, const Value& b) {
  Tape* t = tape_of({&a, &b}, "div");
  Mat av = a.mat(), bv = b.mat();
  Mat out = k::divide(av, bv);
  Mat outv = out;
  return finish(t, "div", {a, b}, std::move(out), [bv, outv](const Mat& g, const AccumFn& accum) {
    accum(0, k::divide(g, bv));
    Mat gb = k::hadamard(g, outv);
    gb = k::divide(gb, bv);
    accum(1, k::scale(gb, -1.0));
  });
}

Value smul(const Value& a, double s) {
  Tape* t = tape_of({&a}, "smul");
  return finish(t, "smul", {a}, k::scale(a.mat(), s),
                [s](const Mat& g, const AccumFn& accum) { accum(0, k::scale(g, s)); });
}

Value bscale(const Value& s, const Value& m) {
  if (s.rows() != 1 || s.cols() != 1) throw std::invalid_argument("bscale: scalar operand is " + s.mat().shape_str());
  Tape* t = tape_of({&s, &m}, "bscale");
  double sv = s.mat()(0, 0);
  Mat mv = m.mat();
  return finish(t, "bscale", {s, m}, k::scale(mv, sv), [sv, mv](const Mat& g, const AccumFn& accum) {
    Mat gs(1, 1);
    gs(0, 0) = k::dot_all(g, mv);
    accum(0, gs);
    accum(1, k::scale(g, sv));
  });
}

Value min_const(const Value& a, double c) {
  Tape* t = tape_of({&a}, "min_const");
  Mat av = a.mat();
  Mat out = av;
  for (double& x : out.a) x = std::min(x, c);
  return finish(t, "min_const", {a}, std::move(out), [av, c](const Mat& g, const AccumFn& accum) {
    Mat ga = g;
    for (int i = 0; i < ga.size(); ++i)
      if (av.a[i] >= c) ga.a[i] = 0.0;
    accum(0, ga);
  });
}

Value max_const(const Value& a, double c) {
  Tape* t = tape_of({&a}, "max_const");
  Mat av = a.mat();
  Mat out = av;
  for (double& x : out.a) x = std::max(x, c);
  return finish(t, "max_const", {a}, std::move(out), [av, c](const Mat& g, const AccumFn& accum) {
    Mat ga = g;
    for (int i = 0; i < ga.size(); ++i)
      if (av.a[i] <= c) ga.a[i] = 0.0;
    accum(0, ga);
  });
}

Value relu(const Value& a) { return max_const(a, 0.0); }

Value softmax_rows(const Value& a) {
  Tape* t = tape_of({&a}, "softmax_rows");
  Mat s = k::softmax_rows(a.mat());
  Mat sv = s;
  return finish(t, "softmax_rows", {a}, std::move(s), [sv](const Mat& g, const AccumFn& accum) {
    Mat ga(sv.rows, sv.cols);
    for (int i = 0; i < sv.rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < sv.cols; ++j) dot += g(i, j) * sv(i, j);
      for (int j = 0; j < sv.cols; ++j) ga(i, j) = sv(i, j) * (g(i, j) - dot);
    }
    accum(0, ga);
  });
}

Value softmax_cols(const Value& a) {
  Tape* t = tape_of({&a}, "softmax_cols");
  Mat s = k::transpose(k::softmax_rows(k::transpose(a.mat())));
  Mat sv = s;
  return finish(t, "softmax_cols", {a}, std::move(s), [sv](const Mat& g, const AccumFn& accum) {
    Mat ga(sv.rows, sv.cols);
    for (int j = 0; j < sv.cols; ++j) {
      double dot = 0.0;
      for (int i = 0; i < sv.rows; ++i) dot += g(i, j) * sv(i, j);
      for (int i = 0; i < sv.rows; ++i) ga(i, j) = sv(i, j) * (g(i, j) - dot);
    }
    accum(0, ga);
  });
}

Value gelu(const Value& a) {
  Tape* t = tape_of({&a}, "gelu");
  Mat av = a.mat();
  return finish(t, "gelu", {a}, k::gelu(av), [av](const Mat& g, const AccumFn& accum) {
    Mat ga = g;
    for (int i = 0; i < ga.size(); ++i) ga.a[i] *= k::gelu_grad_scalar(av.a[i]);
    accum(0, ga);
  });
}

Value sum(const Value& a) {
  Tape* t = tape_of({&a}, "sum");
  Mat out(1, 1);
  out(0, 0) = k::total_sum(a.mat());
  int r = a.rows(), c = a.cols();
  return finish(t, "sum", {a}, std::move(out), [r, c](const Mat& g, const AccumFn& accum) {
    accum(0, Mat(r, c, g(0, 0)));
  });
}

Value mean(const Value& a) {
  Tape* t = tape_of({&a}, "mean");
  int r = a.rows(), c = a.cols();
  int n = r * c;
  if (n == 0) throw std::invalid_argument("mean: empty matrix");
  Mat out(1, 1);
  out(0, 0) = k::total_sum(a.mat()) / n;
  return finish(t, "mean", {a}, std::move(out), [r, c, n](const Mat& g, const AccumFn& accum) {
    accum(0, Mat(r, c, g(0, 0) / n));
  });
}

Value trace(const Value& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("trace: matrix not square, " + a.mat().shape_str());
  Tape* t = tape_of({&a}, "trace");
  Mat out(1, 1);
  for (int i = 0; i < a.rows(); ++i) out(0, 0) += a.mat()(i, i);
  int n = a.rows();
  return finish(t, "trace", {a}, std::move(out), [n](const Mat& g, const AccumFn& accum) {
    Mat ga(n, n);
    for (int i = 0; i < n; ++i) ga(i, i) = g(0, 0);
    accum(0, ga);
  });
}

Value outer(const Value& u, const Value& v) {
  if (u.cols() != 1 || v.cols() != 1)
    throw std::invalid_argument("outer: wants column vectors, got " + u.mat().shape_str() + " and " + v.mat().shape_str());
  Tape* t = tape_of({&u, &v}, "outer");
  Mat uv = u.mat(), vv = v.mat();
  Mat out(uv.rows, vv.rows);
  for (int i = 0; i < uv.rows; ++i)
    for (int j = 0; j < vv.rows; ++j) out(i, j) = uv(i, 0) * vv(j, 0);
  return finish(t, "outer", {u, v}, std::move(out), [uv, vv](const Mat& g, const AccumFn& accum) {
    accum(0, k::matmul(g, vv));
    accum(1, k::matmul_tn(g, uv));
  });
}

Value add_colvec(const Value& m, const Value& v) {
  Tape* t = tape_of({&m, &v}, "add_colvec");
  return finish(t, "add_colvec", {m, v}, k::add_colvec(m.mat(), v.mat()),
                [](const Mat& g, const AccumFn& accum) {
                  accum(0, g);
                  accum(1, k::row_sum(g));
                });
}

Value slice_cols(const Value& a, int c0, int c1) {
  Tape* t = tape_of({&a}, "slice_cols");
  int rows = a.rows(), cols = a.cols();
  return finish(t, "slice_cols", {a}, k::slice_cols(a.mat(), c0, c1),
                [rows, cols, c0](const Mat& g, const AccumFn& accum) {
                  Mat ga(rows, cols);
                  for (int i = 0; i < rows; ++i)
                    for (int j = 0; j < g.cols; ++j) ga(i, c0 + j) = g(i, j);
                  accum(0, ga);
                });
}

namespace {

void check_bn_shapes(const Mat& x, const Mat& gamma, const Mat& beta, const char* op) {
  if (gamma.cols != 1 || gamma.rows != x.rows || !gamma.same_shape(beta))
    throw std::invalid_argument(std::string(op) + ": x " + x.shape_str() + ", gamma " + gamma.shape_str() +
                                ", beta " + beta.shape_str());
  if (x.cols == 0) throw std::invalid_argument(std::string(op) + ": no columns");
}

}  // namespace

Value batchnorm_train(const Value& x, const Value& gamma, const Value& beta, BnRunning running,
                      bool update_running, double floor) {
  const Mat& xv = x.mat();
  const Mat& gv = gamma.mat();
  const Mat& bv = beta.mat();
  check_bn_shapes(xv, gv, bv, "batchnorm_train");
  const int h = xv.rows, n = xv.cols;

  Mat m(h, 1), var(h, 1), invstd(h, 1);
  std::vector<char> var_active(h);
  for (int r = 0; r < h; ++r) {
    double mu = 0.0;
    for (int j = 0; j < n; ++j) mu += xv(r, j);
    mu /= n;
    double vv = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = xv(r, j) - mu;
      vv += d * d;
    }
    vv /= n;
    m(r, 0) = mu;
    var(r, 0) = vv;
    var_active[r] = vv > floor;
    invstd(r, 0) = 1.0 / std::sqrt(std::max(vv, floor));
  }

  if (update_running) {
    if (!running.mean || !running.var) throw std::logic_error("batchnorm_train: no running stats to update");
    for (int r = 0; r < h; ++r) {
      (*running.mean)(r, 0) = (1.0 - running.momentum) * (*running.mean)(r, 0) + running.momentum * m(r, 0);
      (*running.var)(r, 0) = (1.0 - running.momentum) * (*running.var)(r, 0) + running.momentum * var(r, 0);
    }
  }

  Mat xhat(h, n), y(h, n);
  for (int r = 0; r < h; ++r)
    for (int j = 0; j < n; ++j) {
      xhat(r, j) = (xv(r, j) - m(r, 0)) * invstd(r, 0);
      y(r, j) = gv(r, 0) * xhat(r, j) + bv(r, 0);
    }

  Tape* t = tape_of({&x, &gamma, &beta}, "batchnorm_train");
  Mat gvc = gv;
  return finish(t, "batchnorm_train", {x, gamma, beta}, std::move(y),
                [xhat, invstd, var_active, gvc, h, n](const Mat& g, const AccumFn& accum) {
                  Mat gx(h, n), ggamma(h, 1), gbeta(h, 1);
                  for (int r = 0; r < h; ++r) {
                    double sg = 0.0, sgx = 0.0;
                    for (int j = 0; j < n; ++j) {
                      sg += g(r, j);
                      sgx += g(r, j) * xhat(r, j);
                    }
                    gbeta(r, 0) = sg;
                    ggamma(r, 0) = sgx;
                    double mean_gxh = gvc(r, 0) * sg / n;
                    double mean_gxh_xhat = gvc(r, 0) * sgx / n;
                    for (int j = 0; j < n; ++j) {
                      double gxh = g(r, j) * gvc(r, 0);
                      double core = gxh - mean_gxh;
                      if (var_active[r]) core -= xhat(r, j) * mean_gxh_xhat;
                      gx(r, j) = core * invstd(r, 0);
                    }
                  }
                  accum(0, gx);
                  accum(1, ggamma);
                  accum(2, gbeta);
                });
}

Value batchnorm_eval(const Value& x, const Value& gamma, const Value& beta, const Mat& run_mean,
                     const Mat& run_var, double floor) {
  const Mat& xv = x.mat();
  const Mat& gv = gamma.mat();
  const Mat& bv = beta.mat();
  check_bn_shapes(xv, gv, bv, "batchnorm_eval");
  if (run_mean.rows != xv.rows || run_var.rows != xv.rows)
    throw std::invalid_argument("batchnorm_eval: running stats " + run_mean.shape_str() + " vs x " + xv.shape_str());
  const int h = xv.rows, n = xv.cols;

  Mat invstd(h, 1), xhat(h, n), y(h, n);
  for (int r = 0; r < h; ++r) {
    invstd(r, 0) = 1.0 / std::sqrt(std::max(run_var(r, 0), floor));
    for (int j = 0; j < n; ++j) {
      xhat(r, j) = (xv(r, j) - run_mean(r, 0)) * invstd(r, 0);
      y(r, j) = gv(r, 0) * xhat(r, j) + bv(r, 0);
    }
  }

  Tape* t = tape_of({&x, &gamma, &beta}, "batchnorm_eval");
  Mat gvc = gv;
  return finish(t, "batchnorm_eval", {x, gamma, beta}, std::move(y),
                [xhat, invstd, gvc, h, n](const Mat& g, const AccumFn& accum) {
                  Mat gx(h, n), ggamma(h, 1), gbeta(h, 1);
                  for (int r = 0; r < h; ++r) {
                    double sg = 0.0, sgx = 0.0;
                    for (int j = 0; j < n; ++j) {
                      sg += g(r, j);
                      sgx += g(r, j) * xhat(r, j);
                      gx(r, j) = g(r, j) * gvc(r, 0) * invstd(r, 0);
                    }
                    gbeta(r, 0) = sg;
                    ggamma(r, 0) = sgx;
                  }
                  accum(0, gx);
                  accum(1, ggamma);
                  accum(2, gbeta);
                });
}

}  // namespace vw::ad
