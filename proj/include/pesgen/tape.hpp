#pragma once

#include <cstdint>
#include <vector>

namespace pesgen::ad {

/// Reverse-mode autodiff on a flat tape of scalar nodes. Values are computed
/// eagerly as nodes are emitted; the graph is rebuilt per evaluation (clear()
/// keeps capacity). Two derivative modes:
///   - backward(): plain double-valued adjoint sweep (first derivatives);
///   - append_gradient(): emits the adjoint computation itself as new tape
///     nodes, so a second backward() over the extended tape yields
///     second-order (gradient-of-gradient) derivatives.
enum class Op : std::uint8_t {
  Const,
  Input,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Square,
  Sqrt,
  Sin,
  Cos,
  Exp,
  Tanh,
  Fma,  // a*b + c
};

struct Node {
  Op op;
  std::int32_t a = -1, b = -1, c = -1;
};

class Tape {
 public:
  int constant(double v) {
    nodes_.push_back({Op::Const});
    val_.push_back(v);
    return last();
  }
  int input(double v) {
    nodes_.push_back({Op::Input});
    val_.push_back(v);
    return last();
  }
  int add(int a, int b) { return emit({Op::Add, a, b}, val_[sz(a)] + val_[sz(b)]); }
  int sub(int a, int b) { return emit({Op::Sub, a, b}, val_[sz(a)] - val_[sz(b)]); }
  int mul(int a, int b) { return emit({Op::Mul, a, b}, val_[sz(a)] * val_[sz(b)]); }
  int div(int a, int b) { return emit({Op::Div, a, b}, val_[sz(a)] / val_[sz(b)]); }
  int neg(int a) { return emit({Op::Neg, a}, -val_[sz(a)]); }
  int square(int a) { return emit({Op::Square, a}, val_[sz(a)] * val_[sz(a)]); }
  int sqrt(int a);
  int sin(int a);
  int cos(int a);
  int exp(int a);
  int tanh(int a);
  int fma(int a, int b, int c) {
    return emit({Op::Fma, a, b, c}, val_[sz(a)] * val_[sz(b)] + val_[sz(c)]);
  }

  double value(int id) const { return val_[sz(id)]; }
  int size() const { return static_cast<int>(nodes_.size()); }
  void clear() {
    nodes_.clear();
    val_.clear();
  }

  /// Adjoints d(output)/d(node) for every node; adjoints is resized/zeroed.
  void backward(int output, std::vector<double>& adjoints) const;

  /// Append nodes computing d(output)/d(w) for each w in wrt; returns their
  /// node ids (pointing at freshly appended nodes, or a shared zero constant
  /// for nodes the output does not depend on).
  std::vector<int> append_gradient(int output, const std::vector<int>& wrt);

 private:
  static std::size_t sz(int id) { return static_cast<std::size_t>(id); }
  int last() const { return static_cast<int>(nodes_.size()) - 1; }
  int emit(Node n, double v) {
    nodes_.push_back(n);
    val_.push_back(v);
    return last();
  }

  std::vector<Node> nodes_;
  std::vector<double> val_;
};

}  // namespace pesgen::ad
