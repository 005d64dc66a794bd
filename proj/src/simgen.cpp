#include "btcreid/simgen.hpp"

#include <algorithm>
#include <cstdio>
#include <queue>
#include <stdexcept>

#include "btcreid/errors.hpp"

namespace btcreid {

std::uint64_t SplitMix64::uniform(std::uint64_t lo, std::uint64_t hi) noexcept {
  const std::uint64_t span = hi - lo + 1;
  if (span == 0) return next();  // full 64-bit range
  const std::uint64_t threshold = (0 - span) % span;
  while (true) {
    const std::uint64_t r = next();
    if (r >= threshold) return lo + r % span;
  }
}

void SimConfig::validate() const {
  if (users < 1) throw std::invalid_argument("users must be at least 1");
  if (txs < 1) throw std::invalid_argument("txs must be at least 1");
  if (!(addr_reuse_prob >= 0.0 && addr_reuse_prob <= 1.0))
    throw std::invalid_argument("addr_reuse_prob must lie in [0, 1]");
  if (!(change_prob >= 0.0 && change_prob <= 1.0)) throw std::invalid_argument("change_prob must lie in [0, 1]");
  if (fanout_max < 1) throw std::invalid_argument("fanout_max must be at least 1");
  if (amount_min < 1 || amount_max < amount_min)
    throw std::invalid_argument("amounts need 1 <= amount_min <= amount_max");
  if (coinbase_every < 1 || coinbase_every > txs)
    throw InfeasibleConfig("coinbase_every must lie in [1, txs] for any user to hold funds");
  if (txs > 0xfffffffeULL) throw std::invalid_argument("txs exceeds the ledger index range");
}

void to_json(nlohmann::json& j, const SimConfig& c) {
  j = nlohmann::json{{"seed", c.seed},
                     {"users", c.users},
                     {"txs", c.txs},
                     {"addr_reuse_prob", c.addr_reuse_prob},
                     {"change_prob", c.change_prob},
                     {"fanout_max", c.fanout_max},
                     {"coinbase_every", c.coinbase_every},
                     {"amount_min", c.amount_min},
                     {"amount_max", c.amount_max}};
}

void from_json(const nlohmann::json& j, SimConfig& c) {
  c.seed = j.value("seed", c.seed);
  c.users = j.value("users", c.users);
  c.txs = j.value("txs", c.txs);
  c.addr_reuse_prob = j.value("addr_reuse_prob", c.addr_reuse_prob);
  c.change_prob = j.value("change_prob", c.change_prob);
  c.fanout_max = j.value("fanout_max", c.fanout_max);
  c.coinbase_every = j.value("coinbase_every", c.coinbase_every);
  c.amount_min = j.value("amount_min", c.amount_min);
  c.amount_max = j.value("amount_max", c.amount_max);
}

namespace {

constexpr std::int64_t kGenesisTime = 1231006505;
constexpr std::int64_t kBlockInterval = 600;

struct Utxo {
  Amount amount;
  std::uint64_t seq;  // creation order
  AddressId address;
};

// Largest amount first; older outputs first among equal amounts.
struct SpendOrder {
  bool operator()(const Utxo& a, const Utxo& b) const {
    return a.amount != b.amount ? a.amount < b.amount : a.seq > b.seq;
  }
};

// Funded-user flags with k-th-set-bit lookup, ascending by user id.
class FundedSet {
 public:
  explicit FundedSet(std::size_t n) : tree_(n + 1, 0), flag_(n, 0) {
    while ((std::size_t{1} << (log_ + 1)) <= n) ++log_;
  }
  void set(std::size_t user, bool funded) {
    if (flag_[user] == funded) return;
    flag_[user] = funded;
    const int delta = funded ? 1 : -1;
    count_ += delta;
    for (std::size_t i = user + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
  }
  std::size_t count() const noexcept { return static_cast<std::size_t>(count_); }
  /// User id of the k-th (0-based) funded user.
  std::size_t kth(std::size_t k) const {
    std::size_t pos = 0;
    auto remaining = static_cast<std::int64_t>(k) + 1;
    for (std::size_t step = std::size_t{1} << log_; step > 0; step >>= 1) {
      if (pos + step < tree_.size() && tree_[pos + step] < remaining) {
        pos += step;
        remaining -= tree_[pos];
      }
    }
    return pos;
  }

 private:
  std::vector<std::int64_t> tree_;
  std::vector<char> flag_;
  std::size_t log_ = 0;
  std::int64_t count_ = 0;
};

struct Wallet {
  std::vector<AddressId> addresses;
  std::priority_queue<Utxo, std::vector<Utxo>, SpendOrder> utxos;
  Amount balance = 0;
};

class Simulator {
 public:
  explicit Simulator(const SimConfig& config)
      : config_(config), rng_(config.seed), name_key_(SplitMix64::mix(config.seed)), wallets_(config.users), funded_(config.users) {
    ledger_.reserve(config.txs, 2 * config.txs, 3 * config.txs);
  }

  SimResult run() {
    for (std::size_t t = 0; t < config_.txs; ++t) {
      const std::int64_t timestamp = kGenesisTime + kBlockInterval * static_cast<std::int64_t>(t);
      if (t % config_.coinbase_every == 0) {
        coinbase(timestamp);
      } else {
        payment(timestamp);
      }
    }

    std::vector<std::pair<std::string, std::string>> labels;
    labels.reserve(owner_.size());
    char buffer[32];
    for (AddressId id = 0; id < owner_.size(); ++id) {
      std::snprintf(buffer, sizeof buffer, "user%04zu", owner_[id]);
      labels.emplace_back(ledger_.address_name(id), buffer);
    }
    return {std::move(ledger_), GroundTruth::from_pairs(std::move(labels))};
  }

 private:
  AddressId fresh_address(std::size_t user) {
    char buffer[24];
    const auto bits = SplitMix64::mix(address_counter_++ ^ name_key_);
    std::snprintf(buffer, sizeof buffer, "1%016llx", static_cast<unsigned long long>(bits));
    const auto id = ledger_.intern(buffer);
    owner_.push_back(user);
    wallets_[user].addresses.push_back(id);
    return id;
  }

  AddressId existing_address(std::size_t user) {
    const auto& addresses = wallets_[user].addresses;
    return addresses[rng_.uniform(0, addresses.size() - 1)];
  }

  // One Bernoulli draw always; a second draw picks the reused address.
  AddressId receiving_address(std::size_t user) {
    const bool reuse = rng_.bernoulli(config_.addr_reuse_prob);
    if (reuse && !wallets_[user].addresses.empty()) return existing_address(user);
    return fresh_address(user);
  }

  void credit(std::size_t user, const TxOutput& out) {
    wallets_[user].utxos.push({out.amount, output_counter_++, out.address});
    wallets_[user].balance += out.amount;
    funded_.set(user, wallets_[user].balance > 0);
  }

  void coinbase(std::int64_t timestamp) {
    const auto user = static_cast<std::size_t>(rng_.uniform(0, config_.users - 1));
    const auto address = receiving_address(user);
    const auto reward = static_cast<Amount>(rng_.uniform(static_cast<std::uint64_t>(config_.amount_max),
                                                         10 * static_cast<std::uint64_t>(config_.amount_max)));
    const TxOutput out{address, reward};
    ledger_.append(timestamp, true, {}, std::span<const TxOutput>(&out, 1), 0);
    credit(user, out);
  }

  void payment(std::int64_t timestamp) {
    const auto payer = funded_.kth(rng_.uniform(0, funded_.count() - 1));
    auto& wallet = wallets_[payer];

    std::size_t fanout = static_cast<std::size_t>(rng_.uniform(1, config_.fanout_max));
    recipients_.clear();
    if (config_.users == 1) {
      recipients_.push_back(payer);
    } else {
      fanout = std::min(fanout, config_.users - 1);
      while (recipients_.size() < fanout) {
        auto candidate = static_cast<std::size_t>(rng_.uniform(0, config_.users - 2));
        if (candidate >= payer) ++candidate;
        if (std::find(recipients_.begin(), recipients_.end(), candidate) == recipients_.end())
          recipients_.push_back(candidate);
      }
    }

    amounts_.clear();
    Amount total = 0;
    for (std::size_t i = 0; i < recipients_.size(); ++i) {
      amounts_.push_back(static_cast<Amount>(rng_.uniform(static_cast<std::uint64_t>(config_.amount_min),
                                                          static_cast<std::uint64_t>(config_.amount_max))));
      total += amounts_.back();
    }
    while (total > wallet.balance && recipients_.size() > 1) {
      total -= amounts_.back();
      amounts_.pop_back();
      recipients_.pop_back();
    }
    if (total > wallet.balance) {
      amounts_[0] = static_cast<Amount>(rng_.uniform(1, static_cast<std::uint64_t>(wallet.balance)));
      total = amounts_[0];
    }

    inputs_.clear();
    Amount gathered = 0;
    while (gathered < total) {
      const auto utxo = wallet.utxos.top();
      wallet.utxos.pop();
      inputs_.push_back({utxo.address, utxo.amount});
      gathered += utxo.amount;
    }
    wallet.balance -= gathered;
    funded_.set(payer, wallet.balance > 0);

    outputs_.clear();
    owners_.clear();
    for (std::size_t i = 0; i < recipients_.size(); ++i) {
      outputs_.push_back({receiving_address(recipients_[i]), amounts_[i]});
      owners_.push_back(recipients_[i]);
    }
    if (const Amount change = gathered - total; change > 0) {
      const bool one_time = rng_.bernoulli(config_.change_prob);
      const auto address = one_time ? fresh_address(payer) : existing_address(payer);
      outputs_.push_back({address, change});
      owners_.push_back(payer);
    }

    // Fisher-Yates so that the change output has no fixed slot.
    for (std::size_t i = outputs_.size(); i-- > 1;) {
      const auto j = static_cast<std::size_t>(rng_.uniform(0, i));
      std::swap(outputs_[i], outputs_[j]);
      std::swap(owners_[i], owners_[j]);
    }

    ledger_.append(timestamp, false, inputs_, outputs_, 0);
    for (std::size_t i = 0; i < outputs_.size(); ++i) credit(owners_[i], outputs_[i]);
  }

  const SimConfig& config_;
  SplitMix64 rng_;
  std::uint64_t name_key_;
  std::uint64_t address_counter_ = 0;
  std::uint64_t output_counter_ = 0;
  Ledger ledger_;
  std::vector<Wallet> wallets_;
  std::vector<std::size_t> owner_;

  FundedSet funded_;
  std::vector<std::size_t> recipients_;
  std::vector<Amount> amounts_;
  std::vector<TxInput> inputs_;
  std::vector<TxOutput> outputs_;
  std::vector<std::size_t> owners_;
};

}  // namespace

SimResult generate(const SimConfig& config) {
  config.validate();
  return Simulator(config).run();
}

LedgerSummary describe(const Ledger& ledger, const GroundTruth& truth) {
  LedgerSummary s;
  s.transactions = ledger.size();
  for (std::size_t i = 0; i < ledger.size(); ++i) s.coinbase_transactions += ledger[i].is_coinbase ? 1 : 0;
  s.distinct_addresses = ledger.addresses().size();
  s.users = truth.num_users();
  for (auto size : truth.partition().cluster_sizes()) {
    s.max_addresses_per_user = std::max(s.max_addresses_per_user, size);
    s.singleton_users += size == 1 ? 1 : 0;
  }
  return s;
}

nlohmann::ordered_json to_json(const LedgerSummary& s) {
  return {{"transactions", s.transactions},
          {"coinbase_transactions", s.coinbase_transactions},
          {"distinct_addresses", s.distinct_addresses},
          {"users", s.users},
          {"max_addresses_per_user", s.max_addresses_per_user},
          {"singleton_users", s.singleton_users}};
}

}  // namespace btcreid
