#pragma once

// Ledger and label-book ingestion.
//
// Ledger wire format, one JSON object per line:
//   {"tx":"<id>","t":<int>,"in":[["<addr>",<int>],...],"out":[["<addr>",<int>],...]}
// A coinbase transaction has "in":[].
//
// Label book: CSV with header `address,entity,class`.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "bitcascade/classes.hpp"
#include "bitcascade/error.hpp"

namespace bitcascade {

using Satoshi = std::int64_t;

inline constexpr double kSatoshiPerBtc = 1e8;

inline double to_btc(Satoshi value) { return static_cast<double>(value) / kSatoshiPerBtc; }

struct TxIo {
    std::string address;
    Satoshi value = 0;

    bool operator==(const TxIo&) const = default;
};

struct RawTransaction {
    std::string tx_id;
    std::int64_t timestamp = 0;
    std::vector<TxIo> inputs;
    std::vector<TxIo> outputs;

    bool is_coinbase() const { return inputs.empty(); }

    bool operator==(const RawTransaction&) const = default;
};

struct Fee {
    Satoshi value = 0;

    bool operator==(const Fee&) const = default;
};

/// Ledger order: ascending (timestamp, tx_id).
inline bool ledger_order(const RawTransaction& a, const RawTransaction& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.tx_id < b.tx_id;
}

namespace detail {

inline Satoshi checked_sum(const std::vector<TxIo>& ios, std::size_t line) {
    Satoshi total = 0;
    for (const auto& io : ios) {
        if (__builtin_add_overflow(total, io.value, &total)) {
            throw MalformedRecord(line, "value total overflows 64 bits");
        }
    }
    return total;
}

inline std::vector<TxIo> parse_ios(const nlohmann::json& array, std::size_t line, const char* key) {
    if (!array.is_array()) throw MalformedRecord(line, std::string("\"") + key + "\" must be an array");
    std::vector<TxIo> ios;
    ios.reserve(array.size());
    for (const auto& pair : array) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_number_integer()) {
            throw MalformedRecord(line, std::string("\"") + key + "\" entries must be [\"<address>\", <integer>]");
        }
        const auto& address = pair[0].get_ref<const std::string&>();
        if (address.empty()) throw MalformedRecord(line, "empty address");
        if (pair[1].is_number_unsigned()) {
            const auto v = pair[1].get<std::uint64_t>();
            if (v > static_cast<std::uint64_t>(INT64_MAX)) throw MalformedRecord(line, "value exceeds 64-bit range");
            ios.push_back({address, static_cast<Satoshi>(v)});
        } else {
            const auto v = pair[1].get<std::int64_t>();
            if (v < 0) {
                throw NegativeValue("line " + std::to_string(line) + ": negative value " + std::to_string(v) +
                                    " for address " + address);
            }
            ios.push_back({address, v});
        }
    }
    return ios;
}

}  // namespace detail

/// Validates the per-transaction invariants; `line` is only used in messages.
inline void validate_transaction(const RawTransaction& tx, std::size_t line = 0) {
    if (tx.tx_id.empty()) throw MalformedRecord(line, "empty tx id");
    if (tx.outputs.empty()) throw MalformedRecord(line, "transaction " + tx.tx_id + " has no outputs");
    for (const auto* side : {&tx.inputs, &tx.outputs}) {
        for (const auto& io : *side) {
            if (io.value < 0) throw NegativeValue("transaction " + tx.tx_id + ": negative value at " + io.address);
        }
    }
    const Satoshi in = detail::checked_sum(tx.inputs, line);
    const Satoshi out = detail::checked_sum(tx.outputs, line);
    if (!tx.is_coinbase() && in < out) {
        throw NegativeFee("line " + std::to_string(line) + ": transaction " + tx.tx_id + " spends " +
                          std::to_string(out) + " from inputs of " + std::to_string(in));
    }
}

inline Fee compute_fee(const RawTransaction& tx) {
    if (tx.is_coinbase()) return Fee{0};
    Satoshi in = 0;
    Satoshi out = 0;
    for (const auto& io : tx.inputs) in += io.value;
    for (const auto& io : tx.outputs) out += io.value;
    return Fee{in - out};
}

inline RawTransaction parse_transaction(const std::string& text, std::size_t line) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedRecord(line, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw MalformedRecord(line, "record must be a JSON object");
    for (const auto& [key, _] : doc.items()) {
        if (key != "tx" && key != "t" && key != "in" && key != "out") {
            throw MalformedRecord(line, "unexpected key \"" + key + "\"");
        }
    }
    for (const char* key : {"tx", "t", "in", "out"}) {
        if (!doc.contains(key)) throw MalformedRecord(line, std::string("missing key \"") + key + "\"");
    }
    if (!doc["tx"].is_string()) throw MalformedRecord(line, "\"tx\" must be a string");
    if (!doc["t"].is_number_integer() ||
        (doc["t"].is_number_unsigned() && doc["t"].get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))) {
        throw MalformedRecord(line, "\"t\" must be a 64-bit integer");
    }

    RawTransaction tx;
    tx.tx_id = doc["tx"].get<std::string>();
    tx.timestamp = doc["t"].get<std::int64_t>();
    tx.inputs = detail::parse_ios(doc["in"], line, "in");
    tx.outputs = detail::parse_ios(doc["out"], line, "out");
    validate_transaction(tx, line);
    return tx;
}

/// Parses a JSONL ledger. Blank lines are skipped. The result is sorted by
/// (timestamp, tx_id).
inline std::vector<RawTransaction> parse_ledger(std::istream& in) {
    std::vector<RawTransaction> txs;
    std::unordered_set<std::string> seen;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (text.find_first_not_of(" \t") == std::string::npos) continue;
        auto tx = parse_transaction(text, line);
        if (!seen.insert(tx.tx_id).second) {
            throw DuplicateTxId("line " + std::to_string(line) + ": duplicate tx id " + tx.tx_id);
        }
        txs.push_back(std::move(tx));
    }
    std::sort(txs.begin(), txs.end(), ledger_order);
    return txs;
}

inline std::string serialize_transaction(const RawTransaction& tx) {
    nlohmann::ordered_json doc;
    doc["tx"] = tx.tx_id;
    doc["t"] = tx.timestamp;
    auto side = [](const std::vector<TxIo>& ios) {
        nlohmann::ordered_json array = nlohmann::ordered_json::array();
        for (const auto& io : ios) array.push_back({io.address, io.value});
        return array;
    };
    doc["in"] = side(tx.inputs);
    doc["out"] = side(tx.outputs);
    return doc.dump();
}

inline void serialize_ledger(std::ostream& out, std::span<const RawTransaction> txs) {
    for (const auto& tx : txs) out << serialize_transaction(tx) << '\n';
}

// ---------------------------------------------------------------------------
// Label book

struct Label {
    std::string entity_name;
    EntityClass cls = EntityClass::Exchange;

    bool operator==(const Label&) const = default;
};

class LabelBook {
public:
    /// Adds one entry, enforcing both book invariants.
    void add(const std::string& address, Label label) {
        if (entries_.contains(address)) throw DuplicateAddress("address listed twice in label book: " + address);
        auto [it, inserted] = entity_class_.emplace(label.entity_name, label.cls);
        if (!inserted && it->second != label.cls) {
            throw ConflictingClass("entity " + label.entity_name + " labelled both " +
                                   std::string(class_name(it->second)) + " and " +
                                   std::string(class_name(label.cls)));
        }
        entries_.emplace(address, std::move(label));
    }

    const Label* find(const std::string& address) const {
        auto it = entries_.find(address);
        return it == entries_.end() ? nullptr : &it->second;
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    /// Entries ordered by address.
    const std::map<std::string, Label>& entries() const { return entries_; }

    bool operator==(const LabelBook& other) const { return entries_ == other.entries_; }

private:
    std::map<std::string, Label> entries_;
    std::map<std::string, EntityClass> entity_class_;
};

inline LabelBook load_labels(std::istream& in) {
    LabelBook book;
    std::string text;
    std::size_t line = 0;
    bool header_seen = false;
    while (std::getline(in, text)) {
        ++line;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (text.empty()) continue;
        if (!header_seen) {
            if (text != "address,entity,class") {
                throw MalformedRecord(line, "expected header 'address,entity,class', got '" + text + "'");
            }
            header_seen = true;
            continue;
        }
        const auto first = text.find(',');
        const auto second = first == std::string::npos ? first : text.find(',', first + 1);
        if (second == std::string::npos || text.find(',', second + 1) != std::string::npos) {
            throw MalformedRecord(line, "expected 3 comma-separated fields");
        }
        std::string address = text.substr(0, first);
        std::string entity = text.substr(first + 1, second - first - 1);
        const std::string cls_text = text.substr(second + 1);
        if (address.empty() || entity.empty()) throw MalformedRecord(line, "empty address or entity");
        const auto cls = parse_class(cls_text);
        if (!cls) throw MalformedRecord(line, "unknown class '" + cls_text + "'");
        book.add(address, Label{std::move(entity), *cls});
    }
    return book;
}

inline void write_labels(std::ostream& out, const LabelBook& book) {
    out << "address,entity,class\n";
    for (const auto& [address, label] : book.entries()) {
        out << address << ',' << label.entity_name << ',' << class_name(label.cls) << '\n';
    }
}

}  // namespace bitcascade
