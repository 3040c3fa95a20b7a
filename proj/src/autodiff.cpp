#include "thermopinn/autodiff.hpp"

#include <cmath>

namespace thermopinn::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::kConst: return "const";
    case Op::kInput: return "input";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kNeg: return "neg";
    case Op::kPowConst: return "pow";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kTanh: return "tanh";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kSquare: return "square";
  }
  return "?";
}

double Var::value() const { return tape->value(index); }

double Tape::eval_node(const Node& n, double va, double vb) const {
  switch (n.op) {
    case Op::kConst:
    case Op::kInput: return n.value;
    case Op::kAdd: return va + vb;
    case Op::kSub: return va - vb;
    case Op::kMul: return va * vb;
    case Op::kDiv: return va / vb;
    case Op::kNeg: return -va;
    case Op::kPowConst: return std::pow(va, n.aux);
    case Op::kExp: return std::exp(va);
    case Op::kLog: return std::log(va);
    case Op::kTanh: return std::tanh(va);
    case Op::kSin: return std::sin(va);
    case Op::kCos: return std::cos(va);
    case Op::kSquare: return va * va;
  }
  return 0.0;
}

Var Tape::constant(double v) {
  Node n;
  n.value = v;
  n.op = Op::kConst;
  nodes_.push_back(n);
  return {this, std::int32_t(nodes_.size()) - 1};
}

Var Tape::input(double v) {
  Node n;
  n.value = v;
  n.op = Op::kInput;
  nodes_.push_back(n);
  std::int32_t idx = std::int32_t(nodes_.size()) - 1;
  inputs_.push_back(idx);
  input_bound_.push_back(1);
  return {this, idx};
}

Var Tape::input() {
  Var v = input(0.0);
  input_bound_.back() = 0;
  ++unbound_;
  return v;
}

void Tape::bind(Var v, double value) {
  if (v.tape != this || v.index < 0 || nodes_[std::size_t(v.index)].op != Op::kInput)
    throw AutodiffError("bind: not an input of this tape");
  for (std::size_t k = 0; k < inputs_.size(); ++k) {
    if (inputs_[k] == v.index) {
      if (!input_bound_[k]) {
        input_bound_[k] = 1;
        --unbound_;
      }
      break;
    }
  }
  nodes_[std::size_t(v.index)].value = value;
  dirty_ = true;
}

Var Tape::emit(Op op, std::int32_t a, std::int32_t b, double aux) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.aux = aux;
  double va = a >= 0 ? nodes_[std::size_t(a)].value : 0.0;
  double vb = b >= 0 ? nodes_[std::size_t(b)].value : 0.0;
  n.value = eval_node(n, va, vb);
  if (values_current() && !std::isfinite(n.value))
    throw AutodiffError(std::string("non-finite value from op '") + op_name(op) + "'");
  nodes_.push_back(n);
  return {this, std::int32_t(nodes_.size()) - 1};
}

void Tape::forward() {
  if (unbound_ > 0) {
    for (std::size_t k = 0; k < inputs_.size(); ++k)
      if (!input_bound_[k])
        throw AutodiffError("unbound input (node " + std::to_string(inputs_[k]) + ")");
  }
  for (auto& n : nodes_) {
    if (n.op == Op::kConst || n.op == Op::kInput) continue;
    double va = n.a >= 0 ? nodes_[std::size_t(n.a)].value : 0.0;
    double vb = n.b >= 0 ? nodes_[std::size_t(n.b)].value : 0.0;
    n.value = eval_node(n, va, vb);
    if (!std::isfinite(n.value))
      throw AutodiffError(std::string("non-finite value from op '") + op_name(n.op) + "'");
  }
  dirty_ = false;
}

void Tape::forward_into(std::span<double> values) const {
  const std::size_t n = nodes_.size();
  if (values.size() != n) throw AutodiffError("forward_into: buffer size mismatch");
  const Node* nd = nodes_.data();
  double* v = values.data();
  for (std::size_t i = 0; i < n; ++i) {
    const Node& node = nd[i];
    double out;
    switch (node.op) {
      case Op::kInput: continue;  // caller-provided
      case Op::kConst: out = node.value; break;
      case Op::kAdd: out = v[node.a] + v[node.b]; break;
      case Op::kSub: out = v[node.a] - v[node.b]; break;
      case Op::kMul: out = v[node.a] * v[node.b]; break;
      case Op::kDiv: out = v[node.a] / v[node.b]; break;
      case Op::kNeg: out = -v[node.a]; break;
      case Op::kPowConst: out = std::pow(v[node.a], node.aux); break;
      case Op::kExp: out = std::exp(v[node.a]); break;
      case Op::kLog: out = std::log(v[node.a]); break;
      case Op::kTanh: out = std::tanh(v[node.a]); break;
      case Op::kSin: out = std::sin(v[node.a]); break;
      case Op::kCos: out = std::cos(v[node.a]); break;
      case Op::kSquare: out = v[node.a] * v[node.a]; break;
      default: out = 0.0; break;
    }
    if (!std::isfinite(out))
      throw AutodiffError(std::string("non-finite value from op '") + op_name(node.op) +
                          "' during replay");
    v[i] = out;
  }
}

void Tape::adjoints_into(std::int32_t out, double seed, std::span<const double> values,
                         std::span<double> adj) const {
  if (values.size() != nodes_.size() || adj.size() != nodes_.size())
    throw AutodiffError("adjoints_into: buffer size mismatch");
  double* g = adj.data();
  const double* v = values.data();
  const Node* nd = nodes_.data();
  std::fill(g, g + out + 1, 0.0);
  g[out] = seed;
  for (std::int32_t i = out; i >= 0; --i) {
    double gi = g[i];
    if (gi == 0.0) continue;
    const Node& node = nd[i];
    switch (node.op) {
      case Op::kConst:
      case Op::kInput: break;
      case Op::kAdd:
        g[node.a] += gi;
        g[node.b] += gi;
        break;
      case Op::kSub:
        g[node.a] += gi;
        g[node.b] -= gi;
        break;
      case Op::kMul:
        g[node.a] += gi * v[node.b];
        g[node.b] += gi * v[node.a];
        break;
      case Op::kDiv:
        g[node.a] += gi / v[node.b];
        g[node.b] -= gi * v[i] / v[node.b];
        break;
      case Op::kNeg: g[node.a] -= gi; break;
      case Op::kPowConst:
        g[node.a] += gi * node.aux * std::pow(v[node.a], node.aux - 1.0);
        break;
      case Op::kExp: g[node.a] += gi * v[i]; break;
      case Op::kLog: g[node.a] += gi / v[node.a]; break;
      case Op::kTanh: g[node.a] += gi * (1.0 - v[i] * v[i]); break;
      case Op::kSin: g[node.a] += gi * std::cos(v[node.a]); break;
      case Op::kCos: g[node.a] -= gi * std::sin(v[node.a]); break;
      case Op::kSquare: g[node.a] += gi * 2.0 * v[node.a]; break;
    }
  }
}

namespace {

inline bool is_one_const(const Tape& t, std::int32_t i) {
  const Node& n = t.node(i);
  return n.op == Op::kConst && n.value == 1.0;
}

// g * e, skipping the multiply when g is the literal seed constant 1.
inline std::int32_t mul_adj(Tape& t, std::int32_t g, std::int32_t e) {
  if (is_one_const(t, g)) return e;
  return t.emit(Op::kMul, g, e).index;
}

}  // namespace

std::vector<std::int32_t> Tape::adjoint_graph(std::int32_t out) {
  if (out < 0 || std::size_t(out) >= nodes_.size())
    throw AutodiffError("adjoint_graph: bad output index");
  std::vector<std::int32_t> adj(std::size_t(out) + 1, -1);
  adj[std::size_t(out)] = constant(1.0).index;

  auto acc = [&](std::int32_t target, std::int32_t expr) {
    std::int32_t& slot = adj[std::size_t(target)];
    slot = slot < 0 ? expr : emit(Op::kAdd, slot, expr).index;
  };

  for (std::int32_t i = out; i >= 0; --i) {
    std::int32_t gi = adj[std::size_t(i)];
    if (gi < 0) continue;
    // Snapshot: nodes_[i] reference would dangle across emit() reallocations.
    const Node node = nodes_[std::size_t(i)];
    switch (node.op) {
      case Op::kConst:
      case Op::kInput: break;
      case Op::kAdd:
        acc(node.a, gi);
        acc(node.b, gi);
        break;
      case Op::kSub:
        acc(node.a, gi);
        acc(node.b, emit(Op::kNeg, gi, -1).index);
        break;
      case Op::kMul:
        acc(node.a, mul_adj(*this, gi, node.b));
        acc(node.b, mul_adj(*this, gi, node.a));
        break;
      case Op::kDiv: {
        acc(node.a, emit(Op::kDiv, gi, node.b).index);
        std::int32_t q = emit(Op::kDiv, mul_adj(*this, gi, i), node.b).index;
        acc(node.b, emit(Op::kNeg, q, -1).index);
        break;
      }
      case Op::kNeg: acc(node.a, emit(Op::kNeg, gi, -1).index); break;
      case Op::kPowConst: {
        if (node.aux == 1.0) {
          acc(node.a, gi);
        } else if (node.aux == 2.0) {
          std::int32_t two_a = emit(Op::kMul, constant(2.0).index, node.a).index;
          acc(node.a, mul_adj(*this, gi, two_a));
        } else {
          std::int32_t p = emit(Op::kPowConst, node.a, -1, node.aux - 1.0).index;
          std::int32_t d = emit(Op::kMul, constant(node.aux).index, p).index;
          acc(node.a, mul_adj(*this, gi, d));
        }
        break;
      }
      case Op::kExp: acc(node.a, mul_adj(*this, gi, i)); break;
      case Op::kLog: acc(node.a, emit(Op::kDiv, gi, node.a).index); break;
      case Op::kTanh: {
        std::int32_t sq = emit(Op::kSquare, i, -1).index;
        std::int32_t d = emit(Op::kSub, constant(1.0).index, sq).index;
        acc(node.a, mul_adj(*this, gi, d));
        break;
      }
      case Op::kSin: acc(node.a, mul_adj(*this, gi, emit(Op::kCos, node.a, -1).index)); break;
      case Op::kCos: {
        std::int32_t s = mul_adj(*this, gi, emit(Op::kSin, node.a, -1).index);
        acc(node.a, emit(Op::kNeg, s, -1).index);
        break;
      }
      case Op::kSquare: {
        std::int32_t two_a = emit(Op::kMul, constant(2.0).index, node.a).index;
        acc(node.a, mul_adj(*this, gi, two_a));
        break;
      }
    }
  }
  return adj;
}

void Tape::prune(std::span<const std::int32_t> roots, std::span<std::int32_t* const> handles) {
  const std::size_t n = nodes_.size();
  std::vector<char> keep(n, 0);
  for (auto r : roots)
    if (r >= 0) keep[std::size_t(r)] = 1;
  for (std::size_t i = n; i-- > 0;) {
    if (!keep[i]) continue;
    const Node& node = nodes_[i];
    if (node.a >= 0) keep[std::size_t(node.a)] = 1;
    if (node.b >= 0) keep[std::size_t(node.b)] = 1;
  }

  std::vector<std::int32_t> remap(n, -1);
  std::vector<Node> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    remap[i] = std::int32_t(kept.size());
    Node node = nodes_[i];
    if (node.a >= 0) node.a = remap[std::size_t(node.a)];
    if (node.b >= 0) node.b = remap[std::size_t(node.b)];
    kept.push_back(node);
  }
  nodes_ = std::move(kept);

  std::vector<std::int32_t> new_inputs;
  std::vector<char> new_bound;
  int unbound = 0;
  for (std::size_t k = 0; k < inputs_.size(); ++k) {
    std::int32_t ni = remap[std::size_t(inputs_[k])];
    if (ni < 0) continue;
    new_inputs.push_back(ni);
    new_bound.push_back(input_bound_[k]);
    if (!input_bound_[k]) ++unbound;
  }
  inputs_ = std::move(new_inputs);
  input_bound_ = std::move(new_bound);
  unbound_ = unbound;

  for (auto* h : handles) {
    if (*h >= 0) *h = remap[std::size_t(*h)];
  }
}

// -- construction helpers ------------------------------------------------------

namespace {
inline Tape& same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw AutodiffError("operands belong to different tapes");
  return *a.tape;
}
}  // namespace

Var operator+(Var a, Var b) { return same_tape(a, b).emit(Op::kAdd, a.index, b.index); }
Var operator-(Var a, Var b) { return same_tape(a, b).emit(Op::kSub, a.index, b.index); }
Var operator*(Var a, Var b) { return same_tape(a, b).emit(Op::kMul, a.index, b.index); }
Var operator/(Var a, Var b) { return same_tape(a, b).emit(Op::kDiv, a.index, b.index); }
Var operator-(Var a) { return a.tape->emit(Op::kNeg, a.index, -1); }

Var operator+(Var a, double b) { return a + a.tape->constant(b); }
Var operator+(double a, Var b) { return b.tape->constant(a) + b; }
Var operator-(Var a, double b) { return a - a.tape->constant(b); }
Var operator-(double a, Var b) { return b.tape->constant(a) - b; }
Var operator*(Var a, double b) { return a * a.tape->constant(b); }
Var operator*(double a, Var b) { return b.tape->constant(a) * b; }
Var operator/(Var a, double b) { return a / a.tape->constant(b); }
Var operator/(double a, Var b) { return b.tape->constant(a) / b; }

Var exp(Var a) { return a.tape->emit(Op::kExp, a.index, -1); }
Var log(Var a) { return a.tape->emit(Op::kLog, a.index, -1); }
Var tanh(Var a) { return a.tape->emit(Op::kTanh, a.index, -1); }
Var sin(Var a) { return a.tape->emit(Op::kSin, a.index, -1); }
Var cos(Var a) { return a.tape->emit(Op::kCos, a.index, -1); }
Var square(Var a) { return a.tape->emit(Op::kSquare, a.index, -1); }
Var pow(Var a, double exponent) { return a.tape->emit(Op::kPowConst, a.index, -1, exponent); }

// -- evaluation ----------------------------------------------------------------

double eval(Var expr) {
  expr.tape->forward();
  return expr.value();
}

std::vector<double> gradient(Var expr, std::span<const Var> wrt) {
  Tape& tape = *expr.tape;
  tape.forward();
  std::vector<double> values(tape.size());
  for (std::size_t i = 0; i < tape.size(); ++i) values[i] = tape.value(std::int32_t(i));
  std::vector<double> adj(tape.size(), 0.0);
  tape.adjoints_into(expr.index, 1.0, values, adj);

  std::vector<double> out(wrt.size(), 0.0);
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    const Var& w = wrt[k];
    if (w.tape != expr.tape) throw AutodiffError("gradient: wrt from another tape");
    if (w.index <= expr.index) out[k] = adj[std::size_t(w.index)];
    if (!std::isfinite(out[k])) throw AutodiffError("non-finite adjoint");
  }
  return out;
}

double derivative(Var expr, Var wrt) {
  const Var w[1] = {wrt};
  return gradient(expr, w)[0];
}

std::vector<Var> derivative_exprs(Var expr, std::span<const Var> wrt) {
  Tape& tape = *expr.tape;
  auto adj = tape.adjoint_graph(expr.index);
  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& w : wrt) {
    if (w.tape != expr.tape) throw AutodiffError("derivative_exprs: wrt from another tape");
    std::int32_t idx = (w.index <= expr.index) ? adj[std::size_t(w.index)] : -1;
    out.push_back(idx >= 0 ? Var{&tape, idx} : tape.constant(0.0));
  }
  return out;
}

Var derivative_expr(Var expr, Var wrt) {
  const Var w[1] = {wrt};
  return derivative_exprs(expr, w)[0];
}

double second_derivative(Var expr, Var a, Var b) {
  Var g = derivative_expr(expr, a);
  return derivative(g, b);
}

}  // namespace thermopinn::ad
