#include "pesgen/tape.hpp"

#include <cmath>

#include "pesgen/error.hpp"

namespace pesgen::ad {

int Tape::sqrt(int a) { return emit({Op::Sqrt, a}, std::sqrt(val_[sz(a)])); }
int Tape::sin(int a) { return emit({Op::Sin, a}, std::sin(val_[sz(a)])); }
int Tape::cos(int a) { return emit({Op::Cos, a}, std::cos(val_[sz(a)])); }
int Tape::exp(int a) { return emit({Op::Exp, a}, std::exp(val_[sz(a)])); }
int Tape::tanh(int a) { return emit({Op::Tanh, a}, std::tanh(val_[sz(a)])); }

void Tape::backward(int output, std::vector<double>& adjoints) const {
  if (output < 0 || output >= size()) throw InvalidInput("backward: bad output node id");
  adjoints.assign(nodes_.size(), 0.0);
  adjoints[sz(output)] = 1.0;
  for (int i = output; i >= 0; --i) {
    const double bar = adjoints[sz(i)];
    if (bar == 0.0) continue;
    const Node& n = nodes_[sz(i)];
    switch (n.op) {
      case Op::Const:
      case Op::Input:
        break;
      case Op::Add:
        adjoints[sz(n.a)] += bar;
        adjoints[sz(n.b)] += bar;
        break;
      case Op::Sub:
        adjoints[sz(n.a)] += bar;
        adjoints[sz(n.b)] -= bar;
        break;
      case Op::Mul:
        adjoints[sz(n.a)] += bar * val_[sz(n.b)];
        adjoints[sz(n.b)] += bar * val_[sz(n.a)];
        break;
      case Op::Div:
        adjoints[sz(n.a)] += bar / val_[sz(n.b)];
        adjoints[sz(n.b)] -= bar * val_[sz(i)] / val_[sz(n.b)];
        break;
      case Op::Neg:
        adjoints[sz(n.a)] -= bar;
        break;
      case Op::Square:
        adjoints[sz(n.a)] += bar * 2.0 * val_[sz(n.a)];
        break;
      case Op::Sqrt:
        adjoints[sz(n.a)] += bar * 0.5 / val_[sz(i)];
        break;
      case Op::Sin:
        adjoints[sz(n.a)] += bar * std::cos(val_[sz(n.a)]);
        break;
      case Op::Cos:
        adjoints[sz(n.a)] -= bar * std::sin(val_[sz(n.a)]);
        break;
      case Op::Exp:
        adjoints[sz(n.a)] += bar * val_[sz(i)];
        break;
      case Op::Tanh:
        adjoints[sz(n.a)] += bar * (1.0 - val_[sz(i)] * val_[sz(i)]);
        break;
      case Op::Fma:
        adjoints[sz(n.a)] += bar * val_[sz(n.b)];
        adjoints[sz(n.b)] += bar * val_[sz(n.a)];
        adjoints[sz(n.c)] += bar;
        break;
    }
  }
}

std::vector<int> Tape::append_gradient(int output, const std::vector<int>& wrt) {
  if (output < 0 || output >= size()) throw InvalidInput("append_gradient: bad output node id");
  const int snapshot = output + 1;
  // adj[i] is the node id holding d(output)/d(node i); -1 means identically 0.
  std::vector<int> adj(static_cast<std::size_t>(snapshot), -1);
  adj[sz(output)] = constant(1.0);
  const auto accum = [this, &adj](int target, int contribution) {
    int& slot = adj[sz(target)];
    slot = (slot < 0) ? contribution : add(slot, contribution);
  };
  for (int i = output; i >= 0; --i) {
    const int bar = adj[sz(i)];
    if (bar < 0) continue;
    // Copy: emits below may reallocate nodes_.
    const Node n = nodes_[sz(i)];
    switch (n.op) {
      case Op::Const:
      case Op::Input:
        break;
      case Op::Add:
        accum(n.a, bar);
        accum(n.b, bar);
        break;
      case Op::Sub:
        accum(n.a, bar);
        accum(n.b, neg(bar));
        break;
      case Op::Mul:
        accum(n.a, mul(bar, n.b));
        accum(n.b, mul(bar, n.a));
        break;
      case Op::Div:
        accum(n.a, div(bar, n.b));
        accum(n.b, neg(div(mul(bar, i), n.b)));
        break;
      case Op::Neg:
        accum(n.a, neg(bar));
        break;
      case Op::Square:
        accum(n.a, mul(bar, add(n.a, n.a)));
        break;
      case Op::Sqrt:
        accum(n.a, div(bar, add(i, i)));
        break;
      case Op::Sin:
        accum(n.a, mul(bar, cos(n.a)));
        break;
      case Op::Cos:
        accum(n.a, neg(mul(bar, sin(n.a))));
        break;
      case Op::Exp:
        accum(n.a, mul(bar, i));
        break;
      case Op::Tanh:
        accum(n.a, mul(bar, sub(constant(1.0), square(i))));
        break;
      case Op::Fma:
        accum(n.a, mul(bar, n.b));
        accum(n.b, mul(bar, n.a));
        accum(n.c, bar);
        break;
    }
  }
  int zero = -1;
  std::vector<int> out(wrt.size());
  for (std::size_t w = 0; w < wrt.size(); ++w) {
    const int id = wrt[w];
    if (id < 0 || id >= snapshot)
      throw InvalidInput("append_gradient: wrt node not in the differentiated segment");
    if (adj[sz(id)] >= 0) {
      out[w] = adj[sz(id)];
    } else {
      if (zero < 0) zero = constant(0.0);
      out[w] = zero;
    }
  }
  return out;
}

}  // namespace pesgen::ad
