#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "simvc/errors.hpp"

namespace simvc::ad {

using Mat = Eigen::MatrixXd;

/// Node in the reverse-mode tape. Values are dense matrices; scalars are
/// 1x1. Backward closures accumulate into parent gradients.
struct Node {
  Mat val;
  Mat grad;
  bool needs_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const Node&)> backward_fn;
  int mark = 0;  // traversal bookkeeping
};

using Value = std::shared_ptr<Node>;

inline Value constant(Mat v) {
  auto n = std::make_shared<Node>();
  n->val = std::move(v);
  return n;
}

inline Value scalar(double x) { return constant(Mat::Constant(1, 1, x)); }

/// Leaf with gradient tracking; parameters enter the tape through here.
inline Value leaf(const Mat& v) {
  auto n = std::make_shared<Node>();
  n->val = v;
  n->needs_grad = true;
  n->grad = Mat::Zero(v.rows(), v.cols());
  return n;
}

namespace detail {

inline Value make(Mat v, std::vector<Value> parents,
                  std::function<void(const Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->val = std::move(v);
  bool any = false;
  for (const auto& p : parents) any = any || p->needs_grad;
  n->needs_grad = any;
  if (any) {
    n->grad = Mat::Zero(n->val.rows(), n->val.cols());
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward);
  }
  return n;
}

inline void acc(const Value& p, const Mat& g) {
  if (p->needs_grad) p->grad += g;
}

}  // namespace detail

inline Value matmul(const Value& a, const Value& b) {
  if (a->val.cols() != b->val.rows()) throw ShapeMismatch("matmul");
  return detail::make(a->val * b->val, {a, b}, [a, b](const Node& n) {
    if (a->needs_grad) a->grad += n.grad * b->val.transpose();
    if (b->needs_grad) b->grad += a->val.transpose() * n.grad;
  });
}

inline Value add(const Value& a, const Value& b) {
  if (a->val.rows() != b->val.rows() || a->val.cols() != b->val.cols()) {
    throw ShapeMismatch("add");
  }
  return detail::make(a->val + b->val, {a, b}, [a, b](const Node& n) {
    detail::acc(a, n.grad);
    detail::acc(b, n.grad);
  });
}

inline Value sub(const Value& a, const Value& b) {
  if (a->val.rows() != b->val.rows() || a->val.cols() != b->val.cols()) {
    throw ShapeMismatch("sub");
  }
  return detail::make(a->val - b->val, {a, b}, [a, b](const Node& n) {
    detail::acc(a, n.grad);
    detail::acc(b, -n.grad);
  });
}

inline Value scale(const Value& a, double s) {
  return detail::make(a->val * s, {a}, [a, s](const Node& n) { detail::acc(a, n.grad * s); });
}

/// Elementwise product; shapes must match.
inline Value cmul(const Value& a, const Value& b) {
  if (a->val.rows() != b->val.rows() || a->val.cols() != b->val.cols()) {
    throw ShapeMismatch("cmul");
  }
  return detail::make(a->val.cwiseProduct(b->val), {a, b}, [a, b](const Node& n) {
    if (a->needs_grad) a->grad += n.grad.cwiseProduct(b->val);
    if (b->needs_grad) b->grad += n.grad.cwiseProduct(a->val);
  });
}

inline Value cdiv(const Value& a, const Value& b) {
  if (a->val.rows() != b->val.rows() || a->val.cols() != b->val.cols()) {
    throw ShapeMismatch("cdiv");
  }
  return detail::make(a->val.cwiseQuotient(b->val), {a, b}, [a, b](const Node& n) {
    if (a->needs_grad) a->grad += n.grad.cwiseQuotient(b->val);
    if (b->needs_grad) {
      b->grad -= n.grad.cwiseProduct(a->val).cwiseQuotient(b->val.cwiseProduct(b->val));
    }
  });
}

/// Multiply every entry of `a` by the 1x1 value `s`.
inline Value scalar_mul(const Value& a, const Value& s) {
  if (s->val.size() != 1) throw ShapeMismatch("scalar_mul needs 1x1 scalar");
  return detail::make(a->val * s->val(0, 0), {a, s}, [a, s](const Node& n) {
    if (a->needs_grad) a->grad += n.grad * s->val(0, 0);
    if (s->needs_grad) s->grad(0, 0) += n.grad.cwiseProduct(a->val).sum();
  });
}

/// Add the 1x1 value `s` to every entry of `a`.
inline Value add_scalar(const Value& a, const Value& s) {
  if (s->val.size() != 1) throw ShapeMismatch("add_scalar needs 1x1 scalar");
  return detail::make((a->val.array() + s->val(0, 0)).matrix(), {a, s}, [a, s](const Node& n) {
    detail::acc(a, n.grad);
    if (s->needs_grad) s->grad(0, 0) += n.grad.sum();
  });
}

inline Value hconcat(const std::vector<Value>& parts) {
  if (parts.empty()) throw ShapeMismatch("hconcat of nothing");
  const auto rows = parts.front()->val.rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p->val.rows() != rows) throw ShapeMismatch("hconcat row mismatch");
    cols += p->val.cols();
  }
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p->val.cols()) = p->val;
    at += p->val.cols();
  }
  return detail::make(std::move(out), parts, [parts](const Node& n) {
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      if (p->needs_grad) p->grad += n.grad.middleCols(at, p->val.cols());
      at += p->val.cols();
    }
  });
}

inline Value vstack(const std::vector<Value>& parts) {
  if (parts.empty()) throw ShapeMismatch("vstack of nothing");
  const auto cols = parts.front()->val.cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p->val.cols() != cols) throw ShapeMismatch("vstack col mismatch");
    rows += p->val.rows();
  }
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p->val.rows()) = p->val;
    at += p->val.rows();
  }
  return detail::make(std::move(out), parts, [parts](const Node& n) {
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      if (p->needs_grad) p->grad += n.grad.middleRows(at, p->val.rows());
      at += p->val.rows();
    }
  });
}

inline Value gather_rows(const Value& a, std::vector<int> idx) {
  Mat out(static_cast<Eigen::Index>(idx.size()), a->val.cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = a->val.row(idx[i]);
  return detail::make(std::move(out), {a}, [a, idx = std::move(idx)](const Node& n) {
    if (!a->needs_grad) return;
    for (size_t i = 0; i < idx.size(); ++i) {
      a->grad.row(idx[i]) += n.grad.row(static_cast<Eigen::Index>(i));
    }
  });
}

inline Value row(const Value& a, int r) { return gather_rows(a, {r}); }

/// Extract a single entry as a 1x1 value.
inline Value element(const Value& a, int r, int c) {
  return detail::make(Mat::Constant(1, 1, a->val(r, c)), {a}, [a, r, c](const Node& n) {
    if (a->needs_grad) a->grad(r, c) += n.grad(0, 0);
  });
}

inline Value leaky_relu(const Value& a, double slope = 0.2) {
  Mat out = a->val.unaryExpr([slope](double x) { return x > 0 ? x : slope * x; });
  return detail::make(std::move(out), {a}, [a, slope](const Node& n) {
    if (!a->needs_grad) return;
    a->grad += n.grad.cwiseProduct(
        a->val.unaryExpr([slope](double x) { return x > 0 ? 1.0 : slope; }));
  });
}

inline Value elu(const Value& a) {
  Mat out = a->val.unaryExpr([](double x) { return x > 0 ? x : std::expm1(x); });
  return detail::make(std::move(out), {a}, [a](const Node& n) {
    if (!a->needs_grad) return;
    a->grad += n.grad.cwiseProduct(
        a->val.unaryExpr([](double x) { return x > 0 ? 1.0 : std::exp(x); }));
  });
}

/// Numerically stable softmax of a 1xN row.
inline Value softmax_row(const Value& a) {
  if (a->val.rows() != 1) throw ShapeMismatch("softmax_row expects 1xN");
  const double m = a->val.maxCoeff();
  Mat e = (a->val.array() - m).exp().matrix();
  Mat out = e / e.sum();
  return detail::make(out, {a}, [a, out](const Node& n) {
    if (!a->needs_grad) return;
    const double gy = n.grad.cwiseProduct(out).sum();
    a->grad += out.cwiseProduct((n.grad.array() - gy).matrix());
  });
}

inline Value sum(const Value& a) {
  return detail::make(Mat::Constant(1, 1, a->val.sum()), {a}, [a](const Node& n) {
    if (a->needs_grad) a->grad.array() += n.grad(0, 0);
  });
}

/// Row-vector dot product -> 1x1.
inline Value dot(const Value& a, const Value& b) {
  if (a->val.rows() != 1 || b->val.rows() != 1 || a->val.cols() != b->val.cols()) {
    throw ShapeMismatch("dot expects matching 1xN rows");
  }
  const double v = a->val.cwiseProduct(b->val).sum();
  return detail::make(Mat::Constant(1, 1, v), {a, b}, [a, b](const Node& n) {
    const double g = n.grad(0, 0);
    if (a->needs_grad) a->grad += g * b->val;
    if (b->needs_grad) b->grad += g * a->val;
  });
}

inline Value transpose(const Value& a) {
  return detail::make(a->val.transpose(), {a}, [a](const Node& n) {
    if (a->needs_grad) a->grad += n.grad.transpose();
  });
}

inline Value eexp(const Value& a) {
  Mat out = a->val.array().exp().matrix();
  return detail::make(out, {a}, [a, out](const Node& n) {
    if (a->needs_grad) a->grad += n.grad.cwiseProduct(out);
  });
}

inline Value elog(const Value& a) {
  Mat out = a->val.array().log().matrix();
  return detail::make(std::move(out), {a}, [a](const Node& n) {
    if (a->needs_grad) a->grad += n.grad.cwiseQuotient(a->val);
  });
}

inline Value esqrt(const Value& a) {
  Mat out = a->val.cwiseSqrt();
  return detail::make(out, {a}, [a, out](const Node& n) {
    if (a->needs_grad) a->grad += n.grad.cwiseQuotient(2.0 * out);
  });
}

/// Cross-entropy of a 1xC logit row against an integer label, via a stable
/// log-sum-exp. Returns 1x1.
inline Value cross_entropy_logits(const Value& logits, int label) {
  if (logits->val.rows() != 1) throw ShapeMismatch("cross_entropy_logits expects 1xC");
  const double m = logits->val.maxCoeff();
  const double lse = m + std::log((logits->val.array() - m).exp().sum());
  const double loss = lse - logits->val(0, label);
  Mat soft = (logits->val.array() - lse).exp().matrix();
  return detail::make(Mat::Constant(1, 1, loss), {logits}, [logits, soft, label](const Node& n) {
    if (!logits->needs_grad) return;
    Mat g = soft;
    g(0, label) -= 1.0;
    logits->grad += n.grad(0, 0) * g;
  });
}

inline Value cosine(const Value& a, const Value& b) {
  return cdiv(dot(a, b), esqrt(cmul(dot(a, a), dot(b, b))));
}

/// Reverse pass from a 1x1 root. Gradients accumulate into every reachable
/// leaf; call Node::grad.setZero() between passes when reusing leaves.
inline void backward(const Value& root) {
  if (root->val.size() != 1) throw ShapeMismatch("backward needs a scalar root");
  if (!root->needs_grad) return;
  // Depth-first topological order (iterative; tapes can be deep).
  std::vector<Node*> order;
  std::vector<std::pair<Node*, size_t>> stack{{root.get(), 0}};
  root->mark = 1;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->needs_grad && p->mark == 0) {
        p->mark = 1;
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node* n : order) n->mark = 0;
  root->grad(0, 0) = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

}  // namespace simvc::ad
