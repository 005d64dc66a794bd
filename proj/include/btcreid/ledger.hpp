#pragma once

// Transaction data model: a ledger is an ordered sequence of transactions
// whose inputs and outputs carry resolved (address, amount) pairs.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace btcreid {

using Amount = std::int64_t;
using AddressId = std::uint32_t;
using TxIndex = std::uint32_t;

/// Interns address strings into dense ids in first-reference order.
class AddressTable {
 public:
  AddressId intern(std::string_view address);
  std::optional<AddressId> find(std::string_view address) const;
  const std::string& name(AddressId id) const { return names_[id]; }
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  friend bool operator==(const AddressTable& a, const AddressTable& b) {
    return a.names_ == b.names_;
  }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::vector<std::string> names_;
  std::unordered_map<std::string, AddressId, Hash, std::equal_to<>> ids_;
};

struct TxInput {
  AddressId address;
  Amount amount;
  friend bool operator==(const TxInput&, const TxInput&) = default;
};

struct TxOutput {
  AddressId address;
  Amount amount;
  friend bool operator==(const TxOutput&, const TxOutput&) = default;
};

/// Non-owning view of one transaction; valid while the owning Ledger lives.
struct Transaction {
  TxIndex index = 0;
  std::int64_t timestamp = 0;
  bool is_coinbase = false;
  Amount fee = 0;
  std::span<const TxInput> inputs;
  std::span<const TxOutput> outputs;

  Amount input_sum() const noexcept;
  Amount output_sum() const noexcept;
};

/// Transactions in index order, stored as flat arrays.
class Ledger {
 public:
  Ledger();

  AddressId intern(std::string_view address) { return addresses_.intern(address); }
  const AddressTable& addresses() const noexcept { return addresses_; }
  const std::string& address_name(AddressId id) const { return addresses_.name(id); }

  /// Appends a transaction without checking invariants; returns its index.
  TxIndex append(std::int64_t timestamp, bool is_coinbase, std::span<const TxInput> inputs,
                 std::span<const TxOutput> outputs, Amount fee);

  std::size_t size() const noexcept { return timestamps_.size(); }
  bool empty() const noexcept { return timestamps_.empty(); }
  Transaction operator[](std::size_t index) const;

  void reserve(std::size_t transactions, std::size_t inputs, std::size_t outputs);

  /// Field-by-field over transactions, comparing addresses by name, so the
  /// order in which ids were interned does not matter.
  friend bool operator==(const Ledger& a, const Ledger& b);

 private:
  AddressTable addresses_;
  std::vector<std::int64_t> timestamps_;
  std::vector<Amount> fees_;
  std::vector<std::uint8_t> coinbase_;
  std::vector<std::size_t> input_offsets_;
  std::vector<std::size_t> output_offsets_;
  std::vector<TxInput> inputs_;
  std::vector<TxOutput> outputs_;
};

/// Index of the first transaction emitting each address as an output.
class FirstSeen {
 public:
  FirstSeen() = default;
  explicit FirstSeen(std::vector<TxIndex> by_address);

  std::optional<TxIndex> at(AddressId address) const noexcept {
    if (address >= by_address_.size() || by_address_[address] == kNever) return std::nullopt;
    return by_address_[address];
  }
  bool contains(AddressId address) const noexcept { return at(address).has_value(); }
  /// Number of addresses with a recorded first appearance.
  std::size_t size() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  static constexpr TxIndex kNever = static_cast<TxIndex>(-1);

 private:
  std::vector<TxIndex> by_address_;
  std::size_t count_ = 0;
};

FirstSeen first_seen(const Ledger& ledger);

enum class ViolationKind {
  kNoOutputs,
  kMissingInputs,
  kCoinbaseWithInputs,
  kNegativeAmount,
  kNegativeFee,
  kConservation,
  kDanglingInput,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  TxIndex index;
  ViolationKind kind;
  friend bool operator==(const Violation&, const Violation&) = default;
};

/// All invariant violations, in transaction order; empty iff the ledger is valid.
std::vector<Violation> validate(const Ledger& ledger);

/// Reads a JSON-lines ledger. Inputs may be given either as {"a","v"} or as a
/// reference {"tx","n"} to an output of an earlier transaction.
/// Throws MalformedRecord, ConservationViolation or DanglingInput.
Ledger parse_ledger(std::istream& in);
Ledger parse_ledger(const std::filesystem::path& path);

void write_ledger(const Ledger& ledger, std::ostream& out);
void write_ledger(const Ledger& ledger, const std::filesystem::path& path);

}  // namespace btcreid
