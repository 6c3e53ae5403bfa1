#pragma once

#include <cstddef>

#include "core/graph.hpp"

// Differentiable primitives. Every function records one node in the graph
// that owns its operands; binary operands must share a graph.
//
// Elementwise binary ops accept equal shapes or a one-element operand on
// either side (scalar broadcast). Nothing else broadcasts.
namespace mimgan::op {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var add(Var a, double c);
Var mul(Var a, double c);
/// c - a
Var rsub(double c, Var a);
Var neg(Var a);

/// (m x k) * (k x n)
Var matmul(Var a, Var b);
/// Adds `bias` (length c) to every row of `a` whose last dimension is c.
Var add_bias(Var a, Var bias);

Var exp(Var a);
/// Throws DomainError on any non-positive entry.
Var ln(Var a);
Var tanh(Var a);
/// Branch-stable logistic function.
Var sigmoid(Var a);
/// ln(1 + e^x), overflow-free.
Var softplus(Var a);
Var abs(Var a);
/// Throws DomainError on any negative entry.
Var sqrt(Var a);
Var square(Var a);
/// Gradient passes only where lo <= a <= hi.
Var clamp(Var a, double lo, double hi);

Var sum(Var a);
Var mean(Var a);
/// Sums over the last axis; a rank-1 input yields a one-element result.
Var row_sum(Var a);

Var concat(Var a, Var b, std::size_t axis);
/// Elements [begin, end) along `axis`.
Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
Var reshape(Var a, Shape shape);

}  // namespace mimgan::op

namespace mimgan {

inline Var operator+(Var a, Var b) { return op::add(a, b); }
inline Var operator-(Var a, Var b) { return op::sub(a, b); }
inline Var operator*(Var a, Var b) { return op::mul(a, b); }
inline Var operator/(Var a, Var b) { return op::div(a, b); }
inline Var operator+(Var a, double c) { return op::add(a, c); }
inline Var operator+(double c, Var a) { return op::add(a, c); }
inline Var operator-(Var a, double c) { return op::add(a, -c); }
inline Var operator-(double c, Var a) { return op::rsub(c, a); }
inline Var operator*(Var a, double c) { return op::mul(a, c); }
inline Var operator*(double c, Var a) { return op::mul(a, c); }
inline Var operator-(Var a) { return op::neg(a); }

}  // namespace mimgan
