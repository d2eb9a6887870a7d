#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tradeopt::ad {

// Reverse-mode tape of scalar nodes. Local partials are cached at record
// time, so the backward sweep only needs parent indices and the cached
// values. Parent indices are always smaller than the child index.
class Tape {
 public:
  struct Node {
    int a = -1, b = -1;   // parent indices, -1 for leaves / unary second slot
    double pa = 0.0, pb = 0.0;  // d(node)/d(parent)
    double val = 0.0;
  };

  int add_leaf(double v) {
    nodes_.push_back({-1, -1, 0.0, 0.0, v});
    return static_cast<int>(nodes_.size()) - 1;
  }
  int add_unary(int a, double pa, double v) {
    nodes_.push_back({a, -1, pa, 0.0, v});
    return static_cast<int>(nodes_.size()) - 1;
  }
  int add_binary(int a, int b, double pa, double pb, double v) {
    nodes_.push_back({a, b, pa, pb, v});
    return static_cast<int>(nodes_.size()) - 1;
  }

  double value(int i) const { return nodes_[i].val; }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); backward_visits_ = 0; }

  const std::vector<Node>& nodes() const { return nodes_; }

  // Diagnostic: total node visits performed by backward sweeps on this tape.
  std::size_t backward_visits() const { return backward_visits_; }
  void count_visits(std::size_t n) { backward_visits_ += n; }

 private:
  std::vector<Node> nodes_;
  std::size_t backward_visits_ = 0;
};

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int index) : tape_(tape), index_(index) {}

  double value() const { return tape_->value(index_); }
  int index() const { return index_; }
  Tape* tape() const { return tape_; }

 private:
  Tape* tape_ = nullptr;
  int index_ = -1;
};

inline Var make_leaf(Tape& tape, double v) { return Var(&tape, tape.add_leaf(v)); }

namespace detail {
[[noreturn]] inline void domain_error(const char* op, int node, const std::string& what) {
  throw std::domain_error(std::string(op) + " at node " + std::to_string(node) + ": " + what);
}
inline void check_same_tape(const Var& a, const Var& b) {
  if (a.tape() != b.tape()) throw std::invalid_argument("operands recorded on different tapes");
}
}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  detail::check_same_tape(a, b);
  Tape& t = *a.tape();
  return Var(&t, t.add_binary(a.index(), b.index(), 1.0, 1.0, a.value() + b.value()));
}
inline Var operator-(const Var& a, const Var& b) {
  detail::check_same_tape(a, b);
  Tape& t = *a.tape();
  return Var(&t, t.add_binary(a.index(), b.index(), 1.0, -1.0, a.value() - b.value()));
}
inline Var operator*(const Var& a, const Var& b) {
  detail::check_same_tape(a, b);
  Tape& t = *a.tape();
  return Var(&t, t.add_binary(a.index(), b.index(), b.value(), a.value(), a.value() * b.value()));
}
inline Var operator/(const Var& a, const Var& b) {
  detail::check_same_tape(a, b);
  Tape& t = *a.tape();
  double bv = b.value();
  if (bv == 0.0) detail::domain_error("div", static_cast<int>(t.size()), "division by zero");
  double v = a.value() / bv;
  return Var(&t, t.add_binary(a.index(), b.index(), 1.0 / bv, -v / bv, v));
}
inline Var operator-(const Var& a) {
  Tape& t = *a.tape();
  return Var(&t, t.add_unary(a.index(), -1.0, -a.value()));
}

inline Var operator+(const Var& a, double c) {
  Tape& t = *a.tape();
  return Var(&t, t.add_unary(a.index(), 1.0, a.value() + c));
}
inline Var operator+(double c, const Var& a) { return a + c; }
inline Var operator-(const Var& a, double c) { return a + (-c); }
inline Var operator-(double c, const Var& a) {
  Tape& t = *a.tape();
  return Var(&t, t.add_unary(a.index(), -1.0, c - a.value()));
}
inline Var operator*(const Var& a, double c) {
  Tape& t = *a.tape();
  return Var(&t, t.add_unary(a.index(), c, a.value() * c));
}
inline Var operator*(double c, const Var& a) { return a * c; }
inline Var operator/(const Var& a, double c) {
  if (c == 0.0) detail::domain_error("div", a.index(), "division by constant zero");
  return a * (1.0 / c);
}
inline Var operator/(double c, const Var& a) {
  Tape& t = *a.tape();
  double av = a.value();
  if (av == 0.0) detail::domain_error("div", static_cast<int>(t.size()), "division by zero");
  double v = c / av;
  return Var(&t, t.add_unary(a.index(), -v / av, v));
}

inline Var exp(const Var& a) {
  Tape& t = *a.tape();
  double v = std::exp(a.value());
  return Var(&t, t.add_unary(a.index(), v, v));
}
inline Var log(const Var& a) {
  Tape& t = *a.tape();
  if (a.value() <= 0.0)
    detail::domain_error("log", static_cast<int>(t.size()), "non-positive argument " + std::to_string(a.value()));
  return Var(&t, t.add_unary(a.index(), 1.0 / a.value(), std::log(a.value())));
}
inline Var pow(const Var& a, double c) {
  Tape& t = *a.tape();
  double av = a.value();
  if (av < 0.0 || (av == 0.0 && c < 1.0))
    detail::domain_error("pow", static_cast<int>(t.size()),
                         "base " + std::to_string(av) + " with exponent " + std::to_string(c));
  double v = std::pow(av, c);
  double pa = (c == 0.0) ? 0.0 : c * std::pow(av, c - 1.0);
  return Var(&t, t.add_unary(a.index(), pa, v));
}
inline Var pow(const Var& a, const Var& b) {
  detail::check_same_tape(a, b);
  Tape& t = *a.tape();
  double av = a.value(), bv = b.value();
  if (av <= 0.0)
    detail::domain_error("pow", static_cast<int>(t.size()), "non-positive base " + std::to_string(av));
  double v = std::pow(av, bv);
  return Var(&t, t.add_binary(a.index(), b.index(), bv * v / av, v * std::log(av), v));
}
inline Var sqrt(const Var& a) { return pow(a, 0.5); }

// Backward sweep seeded at several output nodes. Visits every recorded node
// exactly once and returns the adjoints of the requested inputs.
std::vector<double> backward(Tape& tape, const std::vector<int>& output_nodes,
                             const std::vector<double>& seeds,
                             const std::vector<int>& input_nodes);

// d(output)/d(input) for a scalar output, one reverse sweep.
std::vector<double> gradient(const Var& output, const std::vector<Var>& inputs);

// seed' * d(outputs)/d(inputs) without materializing the Jacobian.
std::vector<double> vjp(const std::vector<Var>& outputs, const std::vector<double>& seed,
                        const std::vector<Var>& inputs);

// Array helpers recording elementary ops on a shared tape.
Var sum(const std::vector<Var>& xs);
std::vector<Var> elementwise_product(const std::vector<Var>& a, const std::vector<Var>& b);
std::vector<Var> matvec(const std::vector<Var>& m, int rows, int cols, const std::vector<Var>& x);
std::vector<Var> broadcast(const Var& x, std::size_t n);

}  // namespace tradeopt::ad
