#include "core/loss.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/ops.hpp"

namespace mimgan::loss {
namespace {

void require_batch(std::span<const double> v, const char* what) {
  if (v.empty()) throw DomainError(std::string(what) + ": empty batch");
  for (double x : v) {
    if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite score");
  }
}

double clamped(double x, double clamp) { return std::clamp(x, -clamp, clamp); }

}  // namespace

LossReport mim_report(std::span<const double> d_real, std::span<const double> d_fake, double clamp) {
  require_batch(d_real, "mim_d_loss");
  require_batch(d_fake, "mim_d_loss");
  LossReport r;
  r.real_terms.reserve(d_real.size());
  r.fake_terms.reserve(d_fake.size());
  double real_sum = 0.0, fake_sum = 0.0;
  for (double d : d_real) {
    r.real_terms.push_back(std::exp(1.0 - clamped(d, clamp)));
    real_sum += r.real_terms.back();
  }
  for (double d : d_fake) {
    r.fake_terms.push_back(std::exp(clamped(d, clamp)));
    fake_sum += r.fake_terms.back();
  }
  r.g_objective = fake_sum / static_cast<double>(d_fake.size());
  r.d_loss = real_sum / static_cast<double>(d_real.size()) + r.g_objective;
  r.clamp_events = count_clamped(d_real, clamp) + count_clamped(d_fake, clamp);
  return r;
}

double mim_d_loss(std::span<const double> d_real, std::span<const double> d_fake) {
  return mim_report(d_real, d_fake).d_loss;
}

double mim_g_objective(std::span<const double> d_fake) {
  require_batch(d_fake, "mim_g_objective");
  double s = 0.0;
  for (double d : d_fake) s += std::exp(clamped(d, kScoreClamp));
  return s / static_cast<double>(d_fake.size());
}

double kl_gan_loss(std::span<const double> d_real, std::span<const double> d_fake) {
  require_batch(d_real, "kl_gan_loss");
  require_batch(d_fake, "kl_gan_loss");
  double a = 0.0, b = 0.0;
  for (double p : d_real) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("kl_gan_loss: D(x) must lie in (0, 1)");
    a += std::log(p);
  }
  for (double p : d_fake) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("kl_gan_loss: D(G(z)) must lie in (0, 1)");
    b += std::log1p(-p);
  }
  return a / static_cast<double>(d_real.size()) + b / static_cast<double>(d_fake.size());
}

double optimal_discriminator(double p_r, double p_g) {
  if (!(p_r > 0.0) || !(p_g > 0.0)) {
    throw DomainError("optimal_discriminator: densities must be strictly positive");
  }
  return 0.5 + 0.5 * std::log(p_r / p_g);
}

double f_u(double a, double b, double u) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("f_u: a and b must be positive");
  return a * std::exp(1.0 - u) + b * std::exp(u);
}

void DiscreteDistPair::validate() const {
  if (p_r.size() != p_g.size() || p_r.empty()) {
    throw DomainError("distribution pair: vectors must be non-empty and of equal length");
  }
  if (!support.empty() && support.size() != p_r.size()) {
    throw DomainError("distribution pair: support length does not match probabilities");
  }
  for (const auto* p : {&p_r, &p_g}) {
    double s = 0.0;
    for (double v : *p) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("distribution pair: negative or non-finite mass");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) throw DomainError("distribution pair: probabilities do not sum to 1");
  }
}

EquilibriumResult equilibrium_loss(const DiscreteDistPair& dist) {
  dist.validate();
  EquilibriumResult r;
  for (std::size_t i = 0; i < dist.p_r.size(); ++i) {
    const double pr = dist.p_r[i], pg = dist.p_g[i];
    if (pr == 0.0 && pg == 0.0) continue;
    if (pr == 0.0 || pg == 0.0) {
      ++r.excluded;
      r.warnings.push_back("support point " + std::to_string(i) +
                           " has a single zero density; optimal discriminator undefined, excluded");
      continue;
    }
    const double d = optimal_discriminator(pr, pg);
    r.value += pr * std::exp(1.0 - d) + pg * std::exp(d);
  }
  return r;
}

double renyi_half_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw DomainError("renyi: vectors must be non-empty and equal length");
  double bc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw DomainError("renyi: negative probability");
    bc += std::sqrt(p[i] * q[i]);
  }
  if (!(bc > 0.0)) throw DomainError("renyi: disjoint supports, divergence is infinite");
  return -2.0 * std::log(bc);
}

std::size_t count_clamped(std::span<const double> scores, double clamp) {
  return static_cast<std::size_t>(
      std::count_if(scores.begin(), scores.end(), [clamp](double s) { return s < -clamp || s > clamp; }));
}

Var mim_d_loss(Var d_real, Var d_fake, double clamp) {
  if (d_real.size() == 0 || d_fake.size() == 0) throw DomainError("mim_d_loss: empty batch");
  Var real_term = op::mean(op::exp(op::rsub(1.0, op::clamp(d_real, -clamp, clamp))));
  Var fake_term = op::mean(op::exp(op::clamp(d_fake, -clamp, clamp)));
  return real_term + fake_term;
}

Var mim_g_objective(Var d_fake, double clamp) {
  return op::mean(op::exp(op::clamp(d_fake, -clamp, clamp)));
}

Var log_d_loss(Var logits_real, Var logits_fake, double clamp) {
  // -ln sigmoid(l) = softplus(-l); -ln(1 - sigmoid(l)) = softplus(l)
  Var real_term = op::mean(op::softplus(op::neg(op::clamp(logits_real, -clamp, clamp))));
  Var fake_term = op::mean(op::softplus(op::clamp(logits_fake, -clamp, clamp)));
  return real_term + fake_term;
}

Var log_g_objective(Var logits_fake, double clamp) {
  return op::neg(op::mean(op::softplus(op::clamp(logits_fake, -clamp, clamp))));
}

}  // namespace mimgan::loss
