#include "irx/sampler.hpp"

#include <cmath>

namespace irx::sampler {

Index default_k(Index n) {
  if (n <= 0) return 1;
  auto k = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(n) / 2.0)));
  return std::max<Index>(1, std::min(k, n));
}

Index sample_total(Index n, double fraction) {
  return static_cast<Index>(std::llround(fraction * static_cast<double>(n)));
}

std::vector<Index> allocate_quota(const std::vector<Index>& sizes, double fraction) {
  Index n = 0, nonempty = 0;
  for (auto s : sizes) {
    n += s;
    if (s > 0) ++nonempty;
  }
  const Index total = sample_total(n, fraction);
  if (total < nonempty) {
    double min_fraction = n > 0 ? static_cast<double>(nonempty) / static_cast<double>(n) : 1.0;
    throw SamplingError("fraction " + std::to_string(fraction) + " yields " + std::to_string(total) +
                        " samples for " + std::to_string(nonempty) +
                        " non-empty clusters; use a fraction of at least " + std::to_string(min_fraction));
  }
  const std::size_t k = sizes.size();
  std::vector<double> ideal(k, 0.0);
  std::vector<Index> quota(k, 0);
  Index assigned = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] == 0) continue;
    ideal[c] = static_cast<double>(total) * static_cast<double>(sizes[c]) / static_cast<double>(n);
    quota[c] = std::min(sizes[c], std::max<Index>(1, static_cast<Index>(std::floor(ideal[c]))));
    assigned += quota[c];
  }
  // Hand out or take back one sample at a time. Remainder ideal - quota
  // decides who is next: largest remainder gains, smallest remainder loses.
  while (assigned < total) {
    std::size_t best = k;
    for (std::size_t c = 0; c < k; ++c) {
      if (quota[c] >= sizes[c]) continue;
      if (best == k || ideal[c] - static_cast<double>(quota[c]) > ideal[best] - static_cast<double>(quota[best]))
        best = c;
    }
    ++quota[best];
    ++assigned;
  }
  while (assigned > total) {
    std::size_t worst = k;
    for (std::size_t c = 0; c < k; ++c) {
      if (quota[c] <= 1) continue;
      if (worst == k || ideal[c] - static_cast<double>(quota[c]) < ideal[worst] - static_cast<double>(quota[worst]))
        worst = c;
    }
    --quota[worst];
    --assigned;
  }
  return quota;
}

}  // namespace irx::sampler
