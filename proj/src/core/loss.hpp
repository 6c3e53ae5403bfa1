#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core/graph.hpp"

namespace mimgan::loss {

/// 2 sqrt(e): the MIM loss at the optimal discriminator when the generated
/// and real distributions coincide, and its maximum over generators.
inline constexpr double kTwoSqrtE = 3.2974425414002564;

/// Discriminator scores are clamped to [-kScoreClamp, kScoreClamp] before
/// exponentiation.
inline constexpr double kScoreClamp = 30.0;

struct LossReport {
  double d_loss = 0.0;       // mean(exp(1 - D(x))) + mean(exp(D(G(z))))
  double g_objective = 0.0;  // mean(exp(D(G(z))))
  std::vector<double> real_terms;  // exp(1 - D(x_i))
  std::vector<double> fake_terms;  // exp(D(G(z_i)))
  std::size_t clamp_events = 0;
};

LossReport mim_report(std::span<const double> d_real, std::span<const double> d_fake,
                      double clamp = kScoreClamp);

/// mean(exp(1 - d_real)) + mean(exp(d_fake)); the discriminator minimizes it.
double mim_d_loss(std::span<const double> d_real, std::span<const double> d_fake);
/// mean(exp(d_fake)); the generator maximizes it.
double mim_g_objective(std::span<const double> d_fake);

/// mean(ln d_real) + mean(ln(1 - d_fake)) for probabilities in (0, 1).
double kl_gan_loss(std::span<const double> d_real, std::span<const double> d_fake);

/// 1/2 + 1/2 ln(p_r / p_g), the minimizer of a e^(1-u) + b e^u.
double optimal_discriminator(double p_r, double p_g);

/// a e^(1-u) + b e^u.
double f_u(double a, double b, double u);

struct DiscreteDistPair {
  std::vector<double> support;  // optional labels for the points
  std::vector<double> p_r;
  std::vector<double> p_g;

  /// Throws DomainError unless both vectors have equal length, nonnegative
  /// entries and sum to 1 within 1e-12.
  void validate() const;
};

struct EquilibriumResult {
  double value = 0.0;
  std::size_t excluded = 0;  // support points where one density is zero
  std::vector<std::string> warnings;
};

/// The MIM loss with D set pointwise to the optimal discriminator:
///   sum p_r e^(1 - D*) + sum p_g e^(D*) = 2 sqrt(e) sum sqrt(p_r p_g).
/// Points where exactly one density vanishes have no finite D* and are
/// excluded with a warning.
EquilibriumResult equilibrium_loss(const DiscreteDistPair& dist);

/// Order-1/2 Renyi divergence, -2 ln sum sqrt(p q). Symmetric in p, q.
/// Throws DomainError when the supports are disjoint (infinite divergence).
double renyi_half_divergence(std::span<const double> p, std::span<const double> q);

std::size_t count_clamped(std::span<const double> scores, double clamp = kScoreClamp);

// Graph forms used by training. Scores are clamped the same way.

/// Discriminator MIM loss over raw score vectors.
Var mim_d_loss(Var d_real, Var d_fake, double clamp = kScoreClamp);
/// Generator MIM objective (to be maximized).
Var mim_g_objective(Var d_fake, double clamp = kScoreClamp);

/// Log-loss baseline on logits, D(x) = sigmoid(logit). The discriminator
/// minimizes -(mean ln D(x) + mean ln(1 - D(G(z)))).
Var log_d_loss(Var logits_real, Var logits_fake, double clamp = kScoreClamp);
/// mean ln(1 - D(G(z))), which the baseline generator minimizes.
Var log_g_objective(Var logits_fake, double clamp = kScoreClamp);

}  // namespace mimgan::loss
