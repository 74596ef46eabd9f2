#include <cmath>

#include "pmoe/data.hpp"
#include "pmoe/errors.hpp"
#include "pmoe/rng.hpp"

namespace pmoe::data {

RawSeries synth_sru(std::uint64_t seed, std::size_t rows, const SynthOptions& o) {
  if (rows < 20) throw DomainError("synth_sru needs at least 20 rows");
  constexpr std::size_t kWarmup = 50;
  const std::size_t total = rows + kWarmup;
  SeededRng rng(seed);

  std::vector<std::vector<double>> x(5, std::vector<double>(total, 0.0));
  const double innovation = std::sqrt(1.0 - o.persistence * o.persistence);
  for (std::size_t t = 1; t < total; ++t) {
    for (std::size_t d = 0; d < 5; ++d) x[d][t] = o.persistence * x[d][t - 1] + innovation * rng.normal();
    // Secondary air follows the main air flow.
    x[2][t] = 0.6 * x[1][t] + 0.8 * x[2][t];
  }
  auto at = [&](std::size_t d, std::size_t t, std::size_t lag) { return x[d][t - lag]; };

  RawSeries raw;
  raw.process_names = {"x1", "x2", "x3", "x4", "x5"};
  raw.quality_names = {"y1", "y2"};
  raw.process.assign(5, {});
  raw.quality.assign(2, {});
  for (std::size_t t = kWarmup; t < total; ++t) {
    const double shared = std::tanh(at(0, t, 0) - 0.7 * at(1, t, 3) + 0.5 * at(3, t, 1));
    const double opposing = std::sin(1.2 * at(2, t, 1)) + 0.5 * at(4, t, 0) * at(0, t, 2);
    const double own1 = std::tanh(at(3, t, 5) * at(1, t, 0));
    const double own2 = std::cos(at(4, t, 2)) * at(2, t, 0);
    const double y1 = o.shared_gain * shared + o.opposing_gain * opposing + o.specific_gain * own1 +
                      o.noise_y1 * rng.normal();
    const double y2 = o.shared_gain * shared - o.opposing_gain * opposing + o.specific_gain * own2 +
                      o.noise_y2 * rng.normal();
    raw.time.push_back(static_cast<double>(t - kWarmup));
    // Flows around 1 m3/s, tail-gas concentrations of a few hundredths.
    for (std::size_t d = 0; d < 5; ++d) raw.process[d].push_back(1.0 + 0.1 * x[d][t]);
    raw.quality[0].push_back(0.06 + 0.02 * y1);
    raw.quality[1].push_back(0.04 + 0.02 * y2);
  }
  return raw;
}

}  // namespace pmoe::data
