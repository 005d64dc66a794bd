#include "btcreid/ledger.hpp"

#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "btcreid/errors.hpp"

namespace btcreid {

AddressId AddressTable::intern(std::string_view address) {
  if (auto it = ids_.find(address); it != ids_.end()) return it->second;
  const auto id = static_cast<AddressId>(names_.size());
  names_.emplace_back(address);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<AddressId> AddressTable::find(std::string_view address) const {
  if (auto it = ids_.find(address); it != ids_.end()) return it->second;
  return std::nullopt;
}

Amount Transaction::input_sum() const noexcept {
  Amount sum = 0;
  for (const auto& in : inputs) sum += in.amount;
  return sum;
}

Amount Transaction::output_sum() const noexcept {
  Amount sum = 0;
  for (const auto& out : outputs) sum += out.amount;
  return sum;
}

Ledger::Ledger() : input_offsets_{0}, output_offsets_{0} {}

TxIndex Ledger::append(std::int64_t timestamp, bool is_coinbase,
                       std::span<const TxInput> inputs, std::span<const TxOutput> outputs,
                       Amount fee) {
  const auto index = static_cast<TxIndex>(timestamps_.size());
  timestamps_.push_back(timestamp);
  fees_.push_back(fee);
  coinbase_.push_back(is_coinbase ? 1 : 0);
  inputs_.insert(inputs_.end(), inputs.begin(), inputs.end());
  outputs_.insert(outputs_.end(), outputs.begin(), outputs.end());
  input_offsets_.push_back(inputs_.size());
  output_offsets_.push_back(outputs_.size());
  return index;
}

Transaction Ledger::operator[](std::size_t index) const {
  Transaction tx;
  tx.index = static_cast<TxIndex>(index);
  tx.timestamp = timestamps_[index];
  tx.is_coinbase = coinbase_[index] != 0;
  tx.fee = fees_[index];
  tx.inputs = std::span<const TxInput>(inputs_.data() + input_offsets_[index],
                                       input_offsets_[index + 1] - input_offsets_[index]);
  tx.outputs = std::span<const TxOutput>(outputs_.data() + output_offsets_[index],
                                         output_offsets_[index + 1] - output_offsets_[index]);
  return tx;
}

void Ledger::reserve(std::size_t transactions, std::size_t inputs, std::size_t outputs) {
  timestamps_.reserve(transactions);
  fees_.reserve(transactions);
  coinbase_.reserve(transactions);
  input_offsets_.reserve(transactions + 1);
  output_offsets_.reserve(transactions + 1);
  inputs_.reserve(inputs);
  outputs_.reserve(outputs);
}

FirstSeen::FirstSeen(std::vector<TxIndex> by_address) : by_address_(std::move(by_address)) {
  for (auto idx : by_address_) count_ += idx != kNever ? 1 : 0;
}

bool operator==(const Ledger& a, const Ledger& b) {
  if (a.size() != b.size()) return false;
  const auto same_entries = [&](const auto& x, const auto& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t k = 0; k < x.size(); ++k)
      if (x[k].amount != y[k].amount || a.address_name(x[k].address) != b.address_name(y[k].address)) return false;
    return true;
  };
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto ta = a[i];
    const auto tb = b[i];
    if (ta.timestamp != tb.timestamp || ta.is_coinbase != tb.is_coinbase || ta.fee != tb.fee) return false;
    if (!same_entries(ta.inputs, tb.inputs) || !same_entries(ta.outputs, tb.outputs)) return false;
  }
  return true;
}

FirstSeen first_seen(const Ledger& ledger) {
  std::vector<TxIndex> by_address(ledger.addresses().size(), FirstSeen::kNever);
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    for (const auto& out : ledger[i].outputs) {
      auto& slot = by_address[out.address];
      if (slot == FirstSeen::kNever) slot = static_cast<TxIndex>(i);
    }
  }
  return FirstSeen(std::move(by_address));
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kNoOutputs: return "NoOutputs";
    case ViolationKind::kMissingInputs: return "MissingInputs";
    case ViolationKind::kCoinbaseWithInputs: return "CoinbaseWithInputs";
    case ViolationKind::kNegativeAmount: return "NegativeAmount";
    case ViolationKind::kNegativeFee: return "NegativeFee";
    case ViolationKind::kConservation: return "ConservationViolation";
    case ViolationKind::kDanglingInput: return "DanglingInput";
  }
  return "Unknown";
}

namespace {

// Checks one transaction against everything emitted before it, then records
// its outputs as emitted.
void check_transaction(const Transaction& tx, std::vector<bool>& emitted,
                       std::vector<Violation>& violations) {
  auto report = [&](ViolationKind kind) { violations.push_back({tx.index, kind}); };

  if (tx.outputs.empty()) report(ViolationKind::kNoOutputs);
  if (tx.is_coinbase && !tx.inputs.empty()) report(ViolationKind::kCoinbaseWithInputs);
  if (!tx.is_coinbase && tx.inputs.empty()) report(ViolationKind::kMissingInputs);

  bool negative = false;
  for (const auto& in : tx.inputs) negative |= in.amount < 0;
  for (const auto& out : tx.outputs) negative |= out.amount < 0;
  if (negative) report(ViolationKind::kNegativeAmount);
  if (tx.fee < 0) report(ViolationKind::kNegativeFee);

  if (!tx.is_coinbase && !tx.inputs.empty() &&
      tx.input_sum() != tx.output_sum() + tx.fee) {
    report(ViolationKind::kConservation);
  }

  for (const auto& in : tx.inputs) {
    if (in.address >= emitted.size() || !emitted[in.address]) {
      report(ViolationKind::kDanglingInput);
      break;
    }
  }
  for (const auto& out : tx.outputs) {
    if (out.address >= emitted.size()) emitted.resize(out.address + 1, false);
    emitted[out.address] = true;
  }
}

using json = nlohmann::json;

std::int64_t require_int(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw MalformedRecord(line, std::string("missing field '") + key + "'");
  if (!it->is_number_integer())
    throw MalformedRecord(line, std::string("field '") + key + "' must be an integer");
  return it->get<std::int64_t>();
}

std::int64_t optional_int(const json& obj, const char* key, std::int64_t fallback,
                          std::size_t line) {
  return obj.contains(key) ? require_int(obj, key, line) : fallback;
}

}  // namespace

std::vector<Violation> validate(const Ledger& ledger) {
  std::vector<Violation> violations;
  std::vector<bool> emitted(ledger.addresses().size(), false);
  for (std::size_t i = 0; i < ledger.size(); ++i) check_transaction(ledger[i], emitted, violations);
  return violations;
}

Ledger parse_ledger(std::istream& in) {
  Ledger ledger;
  std::vector<bool> emitted;
  std::vector<TxInput> inputs;
  std::vector<TxOutput> outputs;
  std::vector<Violation> violations;
  std::string text;
  std::size_t line = 0;

  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;

    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw MalformedRecord(line, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) throw MalformedRecord(line, "record is not a JSON object");

    const auto timestamp = require_int(record, "t", line);
    bool coinbase = false;
    if (auto it = record.find("coinbase"); it != record.end()) {
      if (!it->is_boolean()) throw MalformedRecord(line, "field 'coinbase' must be a boolean");
      coinbase = it->get<bool>();
    }
    const auto fee = optional_int(record, "fee", 0, line);
    if (fee < 0) throw MalformedRecord(line, "field 'fee' must be non-negative");

    inputs.clear();
    outputs.clear();

    auto entry_address = [&](const json& entry, const char* field) -> std::string {
      auto it = entry.find("a");
      if (it == entry.end() || !it->is_string() || it->get_ref<const std::string&>().empty())
        throw MalformedRecord(line, std::string("'") + field + "' entry needs a non-empty string 'a'");
      return it->get<std::string>();
    };
    auto entry_amount = [&](const json& entry, const char* field) -> Amount {
      const auto v = require_int(entry, "v", line);
      if (v < 0) throw MalformedRecord(line, std::string("'") + field + "' amount must be non-negative");
      return v;
    };

    if (auto it = record.find("in"); it != record.end()) {
      if (!it->is_array()) throw MalformedRecord(line, "field 'in' must be an array");
      for (const auto& entry : *it) {
        if (!entry.is_object()) throw MalformedRecord(line, "'in' entries must be objects");
        if (entry.contains("tx")) {
          // Reference form: resolve against an earlier transaction's output.
          const auto ref_tx = require_int(entry, "tx", line);
          const auto ref_n = require_int(entry, "n", line);
          if (ref_tx < 0 || static_cast<std::size_t>(ref_tx) >= ledger.size())
            throw MalformedRecord(line, "input references a transaction that is not earlier");
          const auto prev = ledger[static_cast<std::size_t>(ref_tx)];
          if (ref_n < 0 || static_cast<std::size_t>(ref_n) >= prev.outputs.size())
            throw MalformedRecord(line, "input references a missing output index");
          const auto& resolved = prev.outputs[static_cast<std::size_t>(ref_n)];
          if (entry.contains("a") && entry_address(entry, "in") != ledger.address_name(resolved.address))
            throw MalformedRecord(line, "input address disagrees with the referenced output");
          if (entry.contains("v") && entry_amount(entry, "in") != resolved.amount)
            throw MalformedRecord(line, "input amount disagrees with the referenced output");
          inputs.push_back({resolved.address, resolved.amount});
        } else {
          const auto address = entry_address(entry, "in");
          const auto amount = entry_amount(entry, "in");
          inputs.push_back({ledger.intern(address), amount});
        }
      }
    }

    auto out_it = record.find("out");
    if (out_it == record.end()) throw MalformedRecord(line, "missing field 'out'");
    if (!out_it->is_array()) throw MalformedRecord(line, "field 'out' must be an array");
    for (const auto& entry : *out_it) {
      if (!entry.is_object()) throw MalformedRecord(line, "'out' entries must be objects");
      const auto address = entry_address(entry, "out");
      const auto amount = entry_amount(entry, "out");
      outputs.push_back({ledger.intern(address), amount});
    }

    const auto index = ledger.append(timestamp, coinbase, inputs, outputs, fee);
    const auto tx = ledger[index];
    std::string dangling;
    for (const auto& input : tx.inputs) {
      if (input.address >= emitted.size() || !emitted[input.address]) {
        dangling = ledger.address_name(input.address);
        break;
      }
    }
    violations.clear();
    check_transaction(tx, emitted, violations);
    for (const auto& v : violations) {
      switch (v.kind) {
        case ViolationKind::kConservation: throw ConservationViolation(index);
        case ViolationKind::kDanglingInput: throw DanglingInput(index, dangling);
        default:
          throw MalformedRecord(line, std::string(to_string(v.kind)));
      }
    }
  }
  return ledger;
}

Ledger parse_ledger(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open ledger file '" + path.string() + "'");
  return parse_ledger(in);
}

void write_ledger(const Ledger& ledger, std::ostream& out) {
  using ordered = nlohmann::ordered_json;
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    const auto tx = ledger[i];
    ordered record;
    record["t"] = tx.timestamp;
    record["coinbase"] = tx.is_coinbase;
    auto ins = ordered::array();
    for (const auto& in : tx.inputs)
      ins.push_back(ordered{{"a", ledger.address_name(in.address)}, {"v", in.amount}});
    auto outs = ordered::array();
    for (const auto& o : tx.outputs)
      outs.push_back(ordered{{"a", ledger.address_name(o.address)}, {"v", o.amount}});
    record["in"] = std::move(ins);
    record["out"] = std::move(outs);
    record["fee"] = tx.fee;
    out << record.dump() << '\n';
  }
}

void write_ledger(const Ledger& ledger, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot write ledger file '" + path.string() + "'");
  write_ledger(ledger, out);
  if (!out) throw IoFailure("failed writing ledger file '" + path.string() + "'");
}

}  // namespace btcreid
