#pragma once

// Seeded synthetic ledgers with known address ownership.

#include <cstdint>
#include <string>

#include <json.hpp>

#include "btcreid/evalkit.hpp"
#include "btcreid/ledger.hpp"

namespace btcreid {

/// SplitMix64 (Steele, Lea and Flood 2014). The state advances by the golden
/// gamma 0x9E3779B97F4A7C15 and each output is the state passed through the
/// finalizer with multipliers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB and
/// shifts 30, 27, 31. Output k is therefore mix(seed + (k+1) * gamma).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [lo, hi] by rejection: draws below (2^64 mod span)
  /// are discarded, then lo + draw mod span.
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) noexcept;
  /// Uniform in [0, 1): the top 53 bits of one draw times 2^-53.
  double unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// True with probability p; consumes exactly one draw.
  bool bernoulli(double p) noexcept { return unit() < p; }

 private:
  std::uint64_t state_;
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::size_t users = 90;
  std::size_t txs = 5000;
  double addr_reuse_prob = 0.2;
  double change_prob = 0.9;
  std::size_t fanout_max = 3;
  std::size_t coinbase_every = 10;
  Amount amount_min = 1;
  Amount amount_max = 1000;

  /// Throws std::invalid_argument for out-of-range fields and
  /// InfeasibleConfig when no user could ever be funded.
  void validate() const;
};

void to_json(nlohmann::json& j, const SimConfig& config);
void from_json(const nlohmann::json& j, SimConfig& config);

struct SimResult {
  Ledger ledger;
  GroundTruth truth;
};

/// Deterministic given the config. Every address belongs to exactly one user;
/// transactions never mix users among their inputs and have no fee.
SimResult generate(const SimConfig& config);

struct LedgerSummary {
  std::size_t transactions = 0;
  std::size_t coinbase_transactions = 0;
  std::size_t distinct_addresses = 0;
  std::size_t users = 0;
  std::size_t max_addresses_per_user = 0;
  std::size_t singleton_users = 0;
  friend bool operator==(const LedgerSummary&, const LedgerSummary&) = default;
};

LedgerSummary describe(const Ledger& ledger, const GroundTruth& truth);
nlohmann::ordered_json to_json(const LedgerSummary& summary);

}  // namespace btcreid
