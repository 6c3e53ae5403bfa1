#pragma once

#include <cstddef>

#include "core/graph.hpp"
#include "core/tensor.hpp"

namespace mimgan {

/// One LSTM layer. Gate blocks are stacked in the order
/// [input, forget, cell, output], each `hidden` rows tall:
///   w: (4h x d)   u: (4h x h)   b: (4h)
struct LstmLayer {
  std::size_t input_size = 0;
  std::size_t hidden = 0;
  Tensor w;
  Tensor u;
  Tensor b;

  static LstmLayer zeros(std::size_t input_size, std::size_t hidden);
  /// Throws ShapeError unless w, u, b agree with input_size/hidden.
  void validate() const;
};

struct LstmState {
  Tensor h;
  Tensor c;
};

struct LstmOutput {
  Tensor outputs;  // (S x h)
  LstmState final_state;
};

/// Runs the standard recurrence over one (S x d) sequence:
///   i = s(Wi x + Ui h + bi)   f = s(Wf x + Uf h + bf)
///   g = tanh(Wg x + Ug h + bg) o = s(Wo x + Uo h + bo)
///   c' = f*c + i*g            h' = o*tanh(c')
/// The initial state holds length-h vectors.
LstmOutput lstm_forward(const LstmLayer& layer, const Tensor& sequence, const LstmState& initial);

/// Batched recurrence recorded as a single graph node with a hand-written
/// backpropagation-through-time backward pass.
///   x: (m x S x d), w/u/b as in LstmLayer, h0/c0: (m x h)  ->  (m x S x h)
Var lstm_sequence(Var x, Var w, Var u, Var b, Var h0, Var c0);

}  // namespace mimgan
