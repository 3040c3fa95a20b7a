#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace thermopinn::ad {

class AutodiffError : public std::runtime_error {
 public:
  explicit AutodiffError(const std::string& what) : std::runtime_error(what) {}
};

enum class Op : std::uint8_t {
  kConst,
  kInput,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kPowConst,  // aux holds the (constant) exponent
  kExp,
  kLog,
  kTanh,
  kSin,
  kCos,
  kSquare,
};

const char* op_name(Op op);

struct Node {
  double value = 0.0;
  double aux = 0.0;
  std::int32_t a = -1;
  std::int32_t b = -1;
  Op op = Op::kConst;
};

class Tape;

// Handle into a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::int32_t index = -1;

  double value() const;
  bool valid() const { return tape != nullptr && index >= 0; }
};

// Append-only scalar computation graph. Nodes are created eagerly with
// their forward values; parents always precede children, so one reverse
// sweep in creation order is a full gradient pass.
//
// Two evaluation styles coexist:
//   - in-place: node values live on the tape (forward / gradient / ...)
//   - replay: a frozen tape is treated as a program and executed against
//     caller-owned value/adjoint buffers (forward_into / adjoints_into),
//     which is what the training kernels use. A completed tape is never
//     mutated by replay and may be shared across threads.
class Tape {
 public:
  Var constant(double v);
  Var input(double v);  // bound input
  Var input();          // unbound; must be bound before evaluation
  void bind(Var v, double value);

  Var emit(Op op, std::int32_t a, std::int32_t b, double aux = 0.0);

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::int32_t i) const { return nodes_[std::size_t(i)]; }
  double value(std::int32_t i) const { return nodes_[std::size_t(i)].value; }
  const std::vector<std::int32_t>& inputs() const { return inputs_; }

  // Recomputes all stored node values in creation order. Throws on unbound
  // inputs and on the first non-finite value (reported with its op tag).
  void forward();

  // Replay against an external buffer (values.size() == size()). Input
  // slots must be pre-filled by the caller; constants are reloaded from
  // the tape. Throws AutodiffError on non-finite intermediates.
  void forward_into(std::span<double> values) const;

  // Reverse sweep over frozen values: adj[i] accumulates seed * d(out)/d(node i).
  // Zeroes adj[0..out] itself; entries above `out` are left untouched.
  void adjoints_into(std::int32_t out, double seed, std::span<const double> values,
                     std::span<double> adj) const;

  // Reverse sweep that builds adjoints as new tape nodes, so the result can
  // be differentiated again. Returns per-node adjoint indices (-1 where the
  // adjoint is structurally zero). Only out's ancestors get entries.
  std::vector<std::int32_t> adjoint_graph(std::int32_t out);

  // Drops every node that is not an ancestor of one of `roots` and renumbers
  // the survivors (creation order preserved). Handles are remapped in place;
  // handles pointing at dropped nodes become -1.
  void prune(std::span<const std::int32_t> roots, std::span<std::int32_t* const> handles);

  void reserve(std::size_t n) { nodes_.reserve(n); }

 private:
  double eval_node(const Node& n, double va, double vb) const;
  bool values_current() const { return unbound_ == 0 && !dirty_; }

  std::vector<Node> nodes_;
  std::vector<std::int32_t> inputs_;
  std::vector<char> input_bound_;
  int unbound_ = 0;
  bool dirty_ = false;
};

// -- graph construction ------------------------------------------------------

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);

Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);

Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var sin(Var a);
Var cos(Var a);
Var square(Var a);
Var pow(Var a, double exponent);

// -- evaluation and differentiation ------------------------------------------

// Forward value of an expression (re-runs the tape if inputs were rebound).
double eval(Var expr);

// d(expr)/d(wrt_i) for each requested input, as plain numbers. Inputs with
// no path to expr get 0.
std::vector<double> gradient(Var expr, std::span<const Var> wrt);
double derivative(Var expr, Var wrt);

// First derivatives as graph nodes (re-differentiable). Appends to the tape.
std::vector<Var> derivative_exprs(Var expr, std::span<const Var> wrt);
Var derivative_expr(Var expr, Var wrt);

// d2(expr)/(da db) via one graph-building pass and one numeric pass.
double second_derivative(Var expr, Var a, Var b);

}  // namespace thermopinn::ad
