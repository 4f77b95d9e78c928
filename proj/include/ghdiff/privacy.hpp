#ifndef GHDIFF_PRIVACY_HPP
#define GHDIFF_PRIVACY_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ghdiff/errors.hpp"
#include "ghdiff/perturbation.hpp"
#include "ghdiff/rng.hpp"

namespace ghdiff {

// Worst-case trajectory deviation after swapping one agent's data: 2 mu G i.
inline double sensitivity_bound(double mu, double clip_bound, long long i) {
  if (mu <= 0 || clip_bound <= 0 || i < 0) {
    throw ConfigParseError("sensitivity_bound: need mu > 0, G > 0, i >= 0");
  }
  return 2.0 * mu * clip_bound * static_cast<double>(i);
}

// Cumulative privacy loss of the transmitted messages after i iterations:
// mu G (i^2 + i) / b_v.
inline double epsilon_at(double mu, double clip_bound, double b_v, long long i) {
  if (b_v <= 0) {
    throw ZeroScale("epsilon_at: b_v = 0 gives unbounded privacy loss");
  }
  return mu * clip_bound * static_cast<double>(i * i + i) / b_v;
}

inline std::vector<std::pair<long long, double>> epsilon_schedule(
    double mu, double clip_bound, double b_v, long long iterations) {
  if (b_v <= 0) {
    throw ZeroScale("epsilon_schedule: b_v = 0 gives unbounded privacy loss");
  }
  std::vector<std::pair<long long, double>> out;
  out.reserve(iterations + 1);
  for (long long i = 0; i <= iterations; ++i) {
    out.emplace_back(i, epsilon_at(mu, clip_bound, b_v, i));
  }
  return out;
}

struct LedgerEntry {
  long long iteration = 0;
  double sensitivity = 0.0;
  double epsilon = 0.0;
};

// Analytic accountant: depends only on (mu, G, b_v, i), never on run data.
// A zero noise scale is surfaced as no_privacy with infinite epsilon, never
// as a silent zero.
struct PrivacyLedger {
  double mu = 0.0;
  double clip_bound = 0.0;
  double b_v = 0.0;
  bool no_privacy = false;
  std::vector<LedgerEntry> entries;

  double epsilon_at_iteration(long long i) const {
    return entries.at(static_cast<std::size_t>(i)).epsilon;
  }
};

inline PrivacyLedger make_privacy_ledger(double mu, double clip_bound,
                                         double laplace_scale,
                                         long long iterations) {
  PrivacyLedger ledger;
  ledger.mu = mu;
  ledger.clip_bound = clip_bound;
  ledger.b_v = laplace_scale;
  ledger.no_privacy = laplace_scale <= 0.0;
  ledger.entries.reserve(iterations + 1);
  for (long long i = 0; i <= iterations; ++i) {
    LedgerEntry e;
    e.iteration = i;
    e.sensitivity = sensitivity_bound(mu, clip_bound, i);
    e.epsilon = ledger.no_privacy
                    ? (i == 0 ? 0.0 : std::numeric_limits<double>::infinity())
                    : epsilon_at(mu, clip_bound, laplace_scale, i);
    ledger.entries.push_back(e);
  }
  return ledger;
}

struct DpCheckReport {
  double max_log_ratio = 0.0;
  double analytic_bound = 0.0;
  double slack = 0.0;  // 3 standard errors at the arg-max bin
  long long qualifying_bins = 0;
  bool pass = false;
};

// One-step scalar Laplace mechanism check: histogram x + v against x' + v
// with |x - x'| = d and v ~ Laplace(0, b), then compare the largest empirical
// log density ratio over well-populated bins with the analytic bound d/b.
inline DpCheckReport empirical_dp_check(double shift, double b,
                                        double epsilon_target,
                                        long long num_samples, RngStream& rng) {
  if (b <= 0) {
    throw ZeroScale("empirical_dp_check: b must be positive");
  }
  if (num_samples < 100000) {
    throw ConfigParseError("empirical_dp_check: num_samples must be >= 1e5");
  }
  // Coarse bins keep every qualifying bin well populated, so the 3-standard-
  // error slack is not eroded by a max over many noisy cells.
  const double d = std::abs(shift);
  const double lo = -3.0 * b;
  const double hi = d + 3.0 * b;
  const double width = b / 2.0;
  const int bins = static_cast<int>(std::ceil((hi - lo) / width));
  std::vector<long long> count_a(bins, 0);
  std::vector<long long> count_b(bins, 0);
  auto bin_of = [&](double x) {
    const int idx = static_cast<int>(std::floor((x - lo) / width));
    return (idx >= 0 && idx < bins) ? idx : -1;
  };
  for (long long n = 0; n < num_samples; ++n) {
    const int ia = bin_of(laplace_inv_cdf(rng.uniform_open01(), b));
    if (ia >= 0) ++count_a[ia];
    const int ib = bin_of(d + laplace_inv_cdf(rng.uniform_open01(), b));
    if (ib >= 0) ++count_b[ib];
  }

  constexpr long long kMinCount = 1000;
  DpCheckReport report;
  report.analytic_bound = epsilon_target;
  double best = -1.0;
  double best_se = 0.0;
  for (int i = 0; i < bins; ++i) {
    if (count_a[i] < kMinCount || count_b[i] < kMinCount) continue;
    ++report.qualifying_bins;
    const double ratio = std::abs(std::log(static_cast<double>(count_a[i]) /
                                           static_cast<double>(count_b[i])));
    if (ratio > best) {
      best = ratio;
      best_se = std::sqrt(1.0 / count_a[i] + 1.0 / count_b[i]);
    }
  }
  if (report.qualifying_bins == 0) {
    throw InsufficientMass("empirical_dp_check: no histogram bin reached " +
                           std::to_string(kMinCount) + " counts on both sides");
  }
  report.max_log_ratio = best;
  report.slack = 3.0 * best_se;
  report.pass = best <= epsilon_target + report.slack;
  return report;
}

}  // namespace ghdiff

#endif  // GHDIFF_PRIVACY_HPP
