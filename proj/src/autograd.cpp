#include "interedit/autograd.hpp"

#include <cmath>
#include <numbers>

namespace interedit::nn {

Parameter& ParameterStore::add(std::string name, Mat init) {
  require(find(name) == nullptr, "duplicate parameter '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->grad = Mat::Zero(init.rows(), init.cols());
  p->value = std::move(init);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Parameter* ParameterStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

const Mat& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Mat value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Mat value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(Parameter& p) {
  Node n;
  n.external = &p.value;
  n.param = &p;
  n.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

const Mat& Tape::value(int id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

Mat Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.size() == 0) return Mat::Zero(value(v.id()).rows(), value(v.id()).cols());
  return n.grad;
}

Mat& Tape::grad_slot(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) {
    const Mat& v = value(id);
    n.grad = Mat::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::accumulate(int id, const Mat& g) {
  if (!nodes_[id].requires_grad) return;
  Mat& slot = grad_slot(id);
  require_shape(slot.rows() == g.rows() && slot.cols() == g.cols(), "gradient shape mismatch");
  slot += g;
}

void Tape::accumulate_block(int id, Eigen::Index row, Eigen::Index col, const Mat& g) {
  if (!nodes_[id].requires_grad) return;
  grad_slot(id).block(row, col, g.rows(), g.cols()) += g;
}

Var Tape::push(Mat value, std::initializer_list<Var> parents, Backward backward) {
  return push(std::move(value), std::vector<Var>(parents), std::move(backward));
}

Var Tape::push(Mat value, const std::vector<Var>& parents, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (const Var& p : parents) {
      if (p.valid() && nodes_[p.id()].requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(const std::vector<std::pair<Var, Mat>>& seeds) {
  require(grad_enabled_, "backward on a tape without gradients");
  int top = -1;
  for (const auto& [v, g] : seeds) {
    accumulate(v.id(), g);
    top = std::max(top, v.id());
  }
  for (int id = top; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    // Closures only write into lower ids, so `n` stays valid.
    if (n.backward) n.backward(*this, n.grad);
    if (n.param) n.param->grad += n.grad;
  }
}

// ---- ops -------------------------------------------------------------------

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

void check_same(const Var& a, const Var& b, const char* op) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), std::string(op) + ": shape mismatch");
}

}  // namespace

Var matmul(Var a, Var b) {
  require_shape(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  Tape& t = *a.tape();
  Mat out = a.value() * b.value();
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& tp, const Mat& g) {
    if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
    if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
  });
}

Var linear(Var x, Var weight, Var bias) {
  require_shape(x.cols() == weight.rows(), "linear: input width mismatch");
  Tape& t = *x.tape();
  Mat out = x.value() * weight.value();
  if (bias.valid()) {
    require_shape(bias.rows() == 1 && bias.cols() == weight.cols(), "linear: bias shape");
    out.rowwise() += bias.value().row(0);
  }
  const int ix = x.id(), iw = weight.id(), ib = bias.valid() ? bias.id() : -1;
  return t.push(std::move(out), {x, weight, bias}, [ix, iw, ib](Tape& tp, const Mat& g) {
    if (tp.requires_grad(ix)) tp.accumulate(ix, g * tp.value(iw).transpose());
    if (tp.requires_grad(iw)) tp.accumulate(iw, tp.value(ix).transpose() * g);
    if (ib >= 0 && tp.requires_grad(ib)) tp.accumulate(ib, g.colwise().sum());
  });
}

Var add(Var a, Var b) {
  check_same(a, b, "add");
  const int ia = a.id(), ib = b.id();
  return a.tape()->push(a.value() + b.value(), {a, b}, [ia, ib](Tape& tp, const Mat& g) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  check_same(a, b, "sub");
  const int ia = a.id(), ib = b.id();
  return a.tape()->push(a.value() - b.value(), {a, b}, [ia, ib](Tape& tp, const Mat& g) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, -g);
  });
}

Var mul(Var a, Var b) {
  check_same(a, b, "mul");
  const int ia = a.id(), ib = b.id();
  return a.tape()->push(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib](Tape& tp, const Mat& g) {
    if (tp.requires_grad(ia)) tp.accumulate(ia, g.cwiseProduct(tp.value(ib)));
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)));
  });
}

Var scale(Var a, double s) {
  const int ia = a.id();
  return a.tape()->push(a.value() * s, {a}, [ia, s](Tape& tp, const Mat& g) { tp.accumulate(ia, g * s); });
}

Var add_row(Var a, Var row) {
  require_shape(row.rows() == 1 && row.cols() == a.cols(), "add_row: shape mismatch");
  Mat out = a.value();
  out.rowwise() += row.value().row(0);
  const int ia = a.id(), ir = row.id();
  return a.tape()->push(std::move(out), {a, row}, [ia, ir](Tape& tp, const Mat& g) {
    tp.accumulate(ia, g);
    if (tp.requires_grad(ir)) tp.accumulate(ir, g.colwise().sum());
  });
}

Var mul_row(Var a, Var row) {
  require_shape(row.rows() == 1 && row.cols() == a.cols(), "mul_row: shape mismatch");
  Mat out = a.value().array().rowwise() * row.value().row(0).array();
  const int ia = a.id(), ir = row.id();
  return a.tape()->push(std::move(out), {a, row}, [ia, ir](Tape& tp, const Mat& g) {
    if (tp.requires_grad(ia)) tp.accumulate(ia, (g.array().rowwise() * tp.value(ir).row(0).array()).matrix());
    if (tp.requires_grad(ir)) tp.accumulate(ir, g.cwiseProduct(tp.value(ia)).colwise().sum());
  });
}

Var layer_norm(Var x, double eps) {
  const Mat& v = x.value();
  const Eigen::Index n = v.cols();
  Eigen::VectorXd inv_sigma(v.rows());
  Mat y(v.rows(), n);
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double mu = v.row(r).mean();
    const double var = (v.row(r).array() - mu).square().mean();
    inv_sigma[r] = 1.0 / std::sqrt(var + eps);
    y.row(r) = (v.row(r).array() - mu) * inv_sigma[r];
  }
  const int ix = x.id();
  auto yc = std::make_shared<const Mat>(y);
  return x.tape()->push(std::move(y), {x}, [ix, yc, inv_sigma](Tape& tp, const Mat& g) {
    const Mat& yy = *yc;
    Mat dx(g.rows(), g.cols());
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const double mg = g.row(r).mean();
      const double mgy = g.row(r).dot(yy.row(r)) / static_cast<double>(g.cols());
      dx.row(r) = inv_sigma[r] * (g.row(r).array() - mg - yy.row(r).array() * mgy);
    }
    tp.accumulate(ix, dx);
  });
}

Var silu(Var x) {
  const Mat& v = x.value();
  const Mat sig = (1.0 / (1.0 + (-v.array()).exp())).matrix();
  Mat out = v.cwiseProduct(sig);
  const int ix = x.id();
  return x.tape()->push(std::move(out), {x}, [ix, sig](Tape& tp, const Mat& g) {
    const Mat& v = tp.value(ix);
    tp.accumulate(ix, (g.array() * sig.array() * (1.0 + v.array() * (1.0 - sig.array()))).matrix());
  });
}

Var gelu(Var x) {
  const Mat& v = x.value();
  const Mat th = (kGeluC * (v.array() + kGeluA * v.array().cube())).tanh().matrix();
  Mat out = (0.5 * v.array() * (1.0 + th.array())).matrix();
  const int ix = x.id();
  return x.tape()->push(std::move(out), {x}, [ix, th](Tape& tp, const Mat& g) {
    const auto v = tp.value(ix).array();
    const auto t = th.array();
    const auto d = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t.square()) * kGeluC * (1.0 + 3.0 * kGeluA * v.square());
    tp.accumulate(ix, (g.array() * d).matrix());
  });
}

Var softmax_rows(Var x) {
  const Mat& v = x.value();
  Mat p(v.rows(), v.cols());
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double m = v.row(r).maxCoeff();
    p.row(r) = (v.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  const int ix = x.id();
  Mat pc = p;
  return x.tape()->push(std::move(p), {x}, [ix, pc](Tape& tp, const Mat& g) {
    const Eigen::VectorXd dot = g.cwiseProduct(pc).rowwise().sum();
    tp.accumulate(ix, (pc.array() * (g.colwise() - dot).array()).matrix());
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    require_shape(p.rows() == rows, "concat_cols: row mismatch");
    cols += p.cols();
  }
  Mat out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    spans.emplace_back(p.id(), c);
    c += p.cols();
  }
  return parts.front().tape()->push(std::move(out), parts, [spans](Tape& tp, const Mat& g) {
    for (const auto& [id, start] : spans) {
      if (tp.requires_grad(id)) tp.accumulate(id, g.middleCols(start, tp.value(id).cols()));
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    require_shape(p.cols() == cols, "concat_rows: column mismatch");
    rows += p.rows();
  }
  Mat out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    spans.emplace_back(p.id(), r);
    r += p.rows();
  }
  return parts.front().tape()->push(std::move(out), parts, [spans](Tape& tp, const Mat& g) {
    for (const auto& [id, start] : spans) {
      if (tp.requires_grad(id)) tp.accumulate(id, g.middleRows(start, tp.value(id).rows()));
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  require_shape(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols: out of range");
  const int ia = a.id();
  return a.tape()->push(a.value().middleCols(start, count), {a}, [ia, start](Tape& tp, const Mat& g) {
    tp.accumulate_block(ia, 0, start, g);
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  require_shape(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows: out of range");
  const int ia = a.id();
  return a.tape()->push(a.value().middleRows(start, count), {a}, [ia, start](Tape& tp, const Mat& g) {
    tp.accumulate_block(ia, start, 0, g);
  });
}

Var gather_rows(Var a, std::vector<int> index) {
  const Mat& v = a.value();
  Mat out(static_cast<Eigen::Index>(index.size()), v.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    require_shape(index[i] >= 0 && index[i] < v.rows(), "gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = v.row(index[i]);
  }
  const int ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia, idx = std::move(index)](Tape& tp, const Mat& g) {
    const Mat& v = tp.value(ia);
    Mat dx = Mat::Zero(v.rows(), v.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) dx.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    tp.accumulate(ia, dx);
  });
}

Var temporal_conv(Var x, Var weight, Var bias, int kernel) {
  require(kernel >= 1 && kernel % 2 == 1, "temporal_conv: kernel must be odd");
  const Eigen::Index cin = x.cols();
  require_shape(weight.rows() == kernel * cin, "temporal_conv: weight rows != kernel * Cin");
  const Eigen::Index cout = weight.cols();
  const Eigen::Index length = x.rows();
  const int pad = (kernel - 1) / 2;
  Mat out(length, cout);
  if (bias.valid()) {
    require_shape(bias.rows() == 1 && bias.cols() == cout, "temporal_conv: bias shape");
    out.rowwise() = bias.value().row(0);
  } else {
    out.setZero();
  }
  const Mat& xv = x.value();
  const Mat& wv = weight.value();
  for (int j = 0; j < kernel; ++j) {
    const Eigen::Index o = j - pad;
    const Eigen::Index l0 = std::max<Eigen::Index>(0, -o);
    const Eigen::Index l1 = std::min<Eigen::Index>(length, length - o);
    if (l1 <= l0) continue;
    out.middleRows(l0, l1 - l0).noalias() += xv.middleRows(l0 + o, l1 - l0) * wv.middleRows(j * cin, cin);
  }
  const int ix = x.id(), iw = weight.id(), ib = bias.valid() ? bias.id() : -1;
  return x.tape()->push(std::move(out), {x, weight, bias},
                        [ix, iw, ib, kernel, pad, cin, length](Tape& tp, const Mat& g) {
                          const Mat& xv = tp.value(ix);
                          const Mat& wv = tp.value(iw);
                          const bool gx = tp.requires_grad(ix), gw = tp.requires_grad(iw);
                          Mat dx = gx ? Mat::Zero(xv.rows(), xv.cols()) : Mat();
                          Mat dw = gw ? Mat::Zero(wv.rows(), wv.cols()) : Mat();
                          for (int j = 0; j < kernel; ++j) {
                            const Eigen::Index o = j - pad;
                            const Eigen::Index l0 = std::max<Eigen::Index>(0, -o);
                            const Eigen::Index l1 = std::min<Eigen::Index>(length, length - o);
                            if (l1 <= l0) continue;
                            const auto gs = g.middleRows(l0, l1 - l0);
                            if (gx) dx.middleRows(l0 + o, l1 - l0).noalias() += gs * wv.middleRows(j * cin, cin).transpose();
                            if (gw) dw.middleRows(j * cin, cin).noalias() += xv.middleRows(l0 + o, l1 - l0).transpose() * gs;
                          }
                          if (gx) tp.accumulate(ix, dx);
                          if (gw) tp.accumulate(iw, dw);
                          if (ib >= 0 && tp.requires_grad(ib)) tp.accumulate(ib, g.colwise().sum());
                        });
}

Mat attention_weights(const Mat& q, const Mat& k, int heads, int head) {
  require(heads >= 1 && q.cols() % heads == 0, "attention: width not divisible by heads");
  require_shape(q.cols() == k.cols(), "attention: q/k width mismatch");
  const Eigen::Index dh = q.cols() / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat s = (q.middleCols(head * dh, dh) * k.middleCols(head * dh, dh).transpose()) * inv;
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double m = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - m).exp();
    s.row(r) /= s.row(r).sum();
  }
  return s;
}

Var attention(Var q, Var k, Var v, int heads) {
  require_shape(q.cols() == k.cols() && k.cols() == v.cols() && k.rows() == v.rows(),
                "attention: q/k/v shape mismatch");
  require(heads >= 1 && q.cols() % heads == 0, "attention: width not divisible by heads");
  const Eigen::Index dh = q.cols() / heads;
  auto probs = std::make_shared<std::vector<Mat>>(heads);
  Mat out(q.rows(), q.cols());
  for (int h = 0; h < heads; ++h) {
    (*probs)[h] = attention_weights(q.value(), k.value(), heads, h);
    out.middleCols(h * dh, dh).noalias() = (*probs)[h] * v.value().middleCols(h * dh, dh);
  }
  const int iq = q.id(), ik = k.id(), iv = v.id();
  return q.tape()->push(std::move(out), {q, k, v}, [iq, ik, iv, heads, dh, probs](Tape& tp, const Mat& g) {
    const Mat& qv = tp.value(iq);
    const Mat& kv = tp.value(ik);
    const Mat& vv = tp.value(iv);
    const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
    Mat dq = Mat::Zero(qv.rows(), qv.cols());
    Mat dk = Mat::Zero(kv.rows(), kv.cols());
    Mat dv = Mat::Zero(vv.rows(), vv.cols());
    for (int h = 0; h < heads; ++h) {
      const Mat& p = (*probs)[h];
      const auto gh = g.middleCols(h * dh, dh);
      dv.middleCols(h * dh, dh).noalias() = p.transpose() * gh;
      const Mat dp = gh * vv.middleCols(h * dh, dh).transpose();
      const Eigen::VectorXd dot = dp.cwiseProduct(p).rowwise().sum();
      const Mat ds = (p.array() * (dp.colwise() - dot).array()).matrix() * inv;
      dq.middleCols(h * dh, dh).noalias() = ds * kv.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh).noalias() = ds.transpose() * qv.middleCols(h * dh, dh);
    }
    tp.accumulate(iq, dq);
    tp.accumulate(ik, dk);
    tp.accumulate(iv, dv);
  });
}

Var sum_all(Var a) {
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  const int ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia](Tape& tp, const Mat& g) {
    const Mat& v = tp.value(ia);
    tp.accumulate(ia, Mat::Constant(v.rows(), v.cols(), g(0, 0)));
  });
}

}  // namespace interedit::nn
