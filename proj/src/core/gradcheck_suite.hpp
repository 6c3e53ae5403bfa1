#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mimgan {

struct SuiteEntry {
  std::string name;
  std::uint64_t seed = 0;
  double max_rel_error = 0.0;
};

struct SuiteResult {
  std::vector<SuiteEntry> entries;
  double worst = 0.0;
  std::string worst_name;

  bool passed(double tolerance) const { return worst < tolerance; }
};

/// Central-difference checks of every differentiable primitive, the LSTM
/// recurrence through time (two layers), the discriminator loss and
/// generator objective through both networks (both loss kinds), and the
/// inversion error with respect to the latent codes. Each check runs once
/// per seed in [base_seed, base_seed + seeds).
SuiteResult run_gradcheck_suite(std::size_t seeds, std::uint64_t base_seed = 1, double epsilon = 1e-5);

std::string format_suite(const SuiteResult& r, double tolerance);

}  // namespace mimgan
