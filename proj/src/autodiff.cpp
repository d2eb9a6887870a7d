#include "tradeopt/autodiff.hpp"

#include <algorithm>

namespace tradeopt::ad {

std::vector<double> backward(Tape& tape, const std::vector<int>& output_nodes,
                             const std::vector<double>& seeds,
                             const std::vector<int>& input_nodes) {
  if (output_nodes.size() != seeds.size())
    throw std::invalid_argument("seed length does not match output count");
  std::vector<double> adj(tape.size(), 0.0);
  for (std::size_t k = 0; k < output_nodes.size(); ++k) adj[output_nodes[k]] += seeds[k];

  const auto& nodes = tape.nodes();
  for (int i = static_cast<int>(nodes.size()) - 1; i >= 0; --i) {
    double a = adj[i];
    if (a != 0.0) {
      const auto& n = nodes[i];
      if (n.a >= 0) adj[n.a] += a * n.pa;
      if (n.b >= 0) adj[n.b] += a * n.pb;
    }
  }
  tape.count_visits(nodes.size());

  std::vector<double> out(input_nodes.size());
  for (std::size_t k = 0; k < input_nodes.size(); ++k) out[k] = adj[input_nodes[k]];
  return out;
}

std::vector<double> gradient(const Var& output, const std::vector<Var>& inputs) {
  Tape* tape = output.tape();
  std::vector<int> in_idx(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (inputs[k].tape() != tape) throw std::invalid_argument("input on a different tape than output");
    in_idx[k] = inputs[k].index();
  }
  return backward(*tape, {output.index()}, {1.0}, in_idx);
}

std::vector<double> vjp(const std::vector<Var>& outputs, const std::vector<double>& seed,
                        const std::vector<Var>& inputs) {
  if (outputs.empty()) return std::vector<double>(inputs.size(), 0.0);
  if (outputs.size() != seed.size()) throw std::invalid_argument("seed length != outputs length");
  Tape* tape = outputs.front().tape();
  std::vector<int> out_idx(outputs.size()), in_idx(inputs.size());
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    if (outputs[k].tape() != tape) throw std::invalid_argument("outputs span multiple tapes");
    out_idx[k] = outputs[k].index();
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (inputs[k].tape() != tape) throw std::invalid_argument("input on a different tape than outputs");
    in_idx[k] = inputs[k].index();
  }
  return backward(*tape, out_idx, seed, in_idx);
}

Var sum(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("sum of empty array");
  Var acc = xs.front();
  for (std::size_t k = 1; k < xs.size(); ++k) acc = acc + xs[k];
  return acc;
}

std::vector<Var> elementwise_product(const std::vector<Var>& a, const std::vector<Var>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("elementwise_product: shape mismatch");
  std::vector<Var> out;
  out.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out.push_back(a[k] * b[k]);
  return out;
}

std::vector<Var> matvec(const std::vector<Var>& m, int rows, int cols, const std::vector<Var>& x) {
  if (m.size() != static_cast<std::size_t>(rows) * cols || x.size() != static_cast<std::size_t>(cols))
    throw std::invalid_argument("matvec: shape mismatch");
  std::vector<Var> out;
  out.reserve(rows);
  for (int r = 0; r < rows; ++r) {
    Var acc = m[static_cast<std::size_t>(r) * cols] * x[0];
    for (int c = 1; c < cols; ++c) acc = acc + m[static_cast<std::size_t>(r) * cols + c] * x[c];
    out.push_back(acc);
  }
  return out;
}

std::vector<Var> broadcast(const Var& x, std::size_t n) {
  return std::vector<Var>(n, x);
}

}  // namespace tradeopt::ad
