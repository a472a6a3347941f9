#pragma once

// Feature frames: labelled tables with one row per sample (entity, address,
// 1_motif or 2_motif) tagged with the owning entity.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bitcascade/classes.hpp"
#include "bitcascade/clustering.hpp"
#include "bitcascade/error.hpp"
#include "bitcascade/graph.hpp"
#include "bitcascade/motifs.hpp"

namespace bitcascade {

enum class FeatureKind { Numeric, Boolean };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;

    bool operator==(const FeatureSpec&) const = default;
};

struct FrameRow {
    EntityId entity = 0;
    EntityClass label = EntityClass::Exchange;
    std::vector<double> values;

    bool operator==(const FrameRow&) const = default;
};

struct FeatureFrame {
    std::vector<FeatureSpec> schema;
    std::vector<FrameRow> rows;

    std::size_t feature_count() const { return schema.size(); }
    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }

    std::vector<std::string> feature_names() const {
        std::vector<std::string> names;
        for (const auto& f : schema) names.push_back(f.name);
        return names;
    }

    void add_row(EntityId entity, EntityClass label, std::vector<double> values) {
        if (values.size() != schema.size()) {
            throw SchemaMismatch("row has " + std::to_string(values.size()) + " values, schema has " +
                                 std::to_string(schema.size()));
        }
        rows.push_back({entity, label, std::move(values)});
    }

    FeatureFrame subset(std::span<const std::size_t> indices) const {
        FeatureFrame out{schema, {}};
        out.rows.reserve(indices.size());
        for (auto i : indices) out.rows.push_back(rows[i]);
        return out;
    }

    std::vector<EntityClass> labels() const {
        std::vector<EntityClass> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r.label);
        return out;
    }

    /// Throws SchemaMismatch if a row is ragged, a value is not finite or a
    /// boolean column holds something other than 0/1.
    void validate() const {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            if (r.values.size() != schema.size()) throw SchemaMismatch("row " + std::to_string(i) + " is ragged");
            for (std::size_t j = 0; j < schema.size(); ++j) {
                const double v = r.values[j];
                if (!std::isfinite(v)) throw SchemaMismatch("non-finite value in " + schema[j].name);
                if (schema[j].kind == FeatureKind::Boolean && v != 0.0 && v != 1.0) {
                    throw SchemaMismatch("boolean column " + schema[j].name + " holds " + std::to_string(v));
                }
            }
        }
    }

    bool operator==(const FeatureFrame&) const = default;
};

inline std::vector<FeatureSpec> make_schema(std::initializer_list<std::string_view> numeric,
                                            std::initializer_list<std::string_view> boolean = {}) {
    std::vector<FeatureSpec> schema;
    for (auto n : numeric) schema.push_back({std::string(n), FeatureKind::Numeric});
    for (auto n : boolean) schema.push_back({std::string(n), FeatureKind::Boolean});
    return schema;
}

inline bool is_boolean_feature(std::string_view name) {
    return name == "uniqueness" || name == "is_direct_loop" || name == "is_loop_first" ||
           name == "is_loop_second" || name == "is_loop_whole";
}

// ---------------------------------------------------------------------------
// Entity frame

inline FeatureFrame entity_features(const EntityTransactionGraph& g, const LabeledEntitySet& labels) {
    FeatureFrame frame{make_schema({"btc_received", "btc_sent", "balance", "n_tx_receiver", "n_tx_sender",
                                    "n_addr_receiving", "n_addr_sending"}),
                       {}};
    std::vector<AddressIndex> scratch;
    auto distinct_addresses = [&](std::span<const std::uint32_t> edges, auto edge_at) {
        scratch.clear();
        for (auto i : edges) {
            const auto& a = edge_at(i).addresses;
            scratch.insert(scratch.end(), a.begin(), a.end());
        }
        std::sort(scratch.begin(), scratch.end());
        return static_cast<double>(std::unique(scratch.begin(), scratch.end()) - scratch.begin());
    };

    for (EntityId e : labels.labeled()) {
        if (e >= g.vertex_count()) throw UnknownEntity("labeled entity " + std::to_string(e) + " not in graph");
        Satoshi received = 0;
        Satoshi sent = 0;
        for (auto i : g.receives(e)) received += g.output_edge(i).value;
        for (auto i : g.sends(e)) sent += g.input_edge(i).value;
        frame.add_row(e, labels.class_of(e),
                      {to_btc(received), to_btc(sent), to_btc(received - sent),
                       static_cast<double>(g.receives(e).size()), static_cast<double>(g.sends(e).size()),
                       distinct_addresses(g.receives(e), [&](auto i) -> const Edge& { return g.output_edge(i); }),
                       distinct_addresses(g.sends(e), [&](auto i) -> const Edge& { return g.input_edge(i); })});
    }
    return frame;
}

// ---------------------------------------------------------------------------
// Address frame

/// `g_addr` must come from `build_address_graph` over the same ledger the
/// clustering was computed from, so that vertex ids are address indices.
inline FeatureFrame address_features(const AddressTransactionGraph& g_addr, const AddressClustering& clustering,
                                     const LabeledEntitySet& labels) {
    if (g_addr.vertex_count() != clustering.address_count()) {
        throw SchemaMismatch("address graph and clustering cover different address sets");
    }
    FeatureFrame frame{make_schema({"n_tx_receiver", "n_tx_sender", "btc_received", "btc_sent", "balance"},
                                   {"uniqueness"}),
                       {}};
    frame.schema.push_back({"siblings", FeatureKind::Numeric});

    for (AddressIndex a = 0; a < clustering.address_count(); ++a) {
        const EntityId e = clustering.entity_of(a);
        if (!labels.is_labeled(e)) continue;
        Satoshi received = 0;
        Satoshi sent = 0;
        for (auto i : g_addr.receives(a)) received += g_addr.output_edge(i).value;
        for (auto i : g_addr.sends(a)) sent += g_addr.input_edge(i).value;

        // Both lists are in tx order; count distinct transactions across them.
        std::size_t distinct_txs = 0;
        const auto rs = g_addr.receives(a);
        const auto ss = g_addr.sends(a);
        std::size_t i = 0;
        std::size_t j = 0;
        while (i < rs.size() || j < ss.size()) {
            const TxIndex tr = i < rs.size() ? g_addr.output_edge(rs[i]).tx : UINT32_MAX;
            const TxIndex ts = j < ss.size() ? g_addr.input_edge(ss[j]).tx : UINT32_MAX;
            const TxIndex t = std::min(tr, ts);
            if (tr == t) ++i;
            if (ts == t) ++j;
            ++distinct_txs;
        }

        frame.add_row(e, labels.class_of(e),
                      {static_cast<double>(rs.size()), static_cast<double>(ss.size()), to_btc(received),
                       to_btc(sent), to_btc(received - sent), distinct_txs == 1 ? 1.0 : 0.0,
                       static_cast<double>(clustering.members(e).size() - 1)});
    }
    return frame;
}

// ---------------------------------------------------------------------------
// Motif frames

/// Number of transactions linking each ordered entity pair (e_in -> tx ->
/// e_out) over the whole graph, loops included.
class PairIndex {
public:
    explicit PairIndex(const EntityTransactionGraph& g) {
        for (TxIndex t = 0; t < g.tx_count(); ++t) {
            for (const auto& in : g.inputs_of(t)) {
                for (const auto& out : g.outputs_of(t)) ++counts_[key(in.vertex, out.vertex)];
            }
        }
    }

    std::uint32_t multiplicity(EntityId from, EntityId to) const {
        auto it = counts_.find(key(from, to));
        return it == counts_.end() ? 0 : it->second;
    }

    std::size_t pair_count() const { return counts_.size(); }

private:
    static std::uint64_t key(EntityId from, EntityId to) { return (std::uint64_t{from} << 32) | to; }
    std::unordered_map<std::uint64_t, std::uint32_t> counts_;
};

/// Rows for records whose spender (e_in) is labeled, in record order.
inline FeatureFrame motif1_features(std::span<const Motif1Record> records, const PairIndex& pairs,
                                    const LabeledEntitySet& labels) {
    FeatureFrame frame{make_schema({"amount_sent", "amount_received", "n_addr_sending", "n_addr_receiving",
                                    "n_similar_sent", "n_similar_received", "fee"},
                                   {"is_direct_loop"}),
                       {}};
    frame.rows.reserve(records.size());
    for (const auto& r : records) {
        const Branch& b = r.branch;
        if (!labels.is_labeled(b.e_in)) continue;
        frame.rows.push_back({b.e_in, labels.class_of(b.e_in),
                              {to_btc(b.value_in), to_btc(b.value_out), static_cast<double>(b.addr_in_count),
                               static_cast<double>(b.addr_out_count),
                               static_cast<double>(pairs.multiplicity(b.e_in, b.e_out)),
                               static_cast<double>(pairs.multiplicity(b.e_out, b.e_in)), to_btc(b.fee),
                               b.is_direct_loop ? 1.0 : 0.0}});
    }
    return frame;
}

inline FeatureFrame motif2_features(std::span<const Motif2Record> records, const PairIndex& pairs,
                                    const LabeledEntitySet& labels) {
    FeatureFrame frame{make_schema({"n_addr_in_first", "n_addr_out_first", "n_addr_in_second", "n_addr_out_second",
                                    "amount_sent_first", "amount_received_first", "amount_sent_second",
                                    "amount_received_second", "fee_first", "fee_second", "n_similar_sent_first",
                                    "n_similar_sent_second"},
                                   {"is_loop_first", "is_loop_second", "is_loop_whole"}),
                       {}};
    frame.rows.reserve(records.size());
    for (const auto& r : records) {
        const Branch& a = r.first;
        const Branch& b = r.second;
        if (!labels.is_labeled(a.e_in)) continue;
        frame.rows.push_back({a.e_in, labels.class_of(a.e_in),
                              {static_cast<double>(a.addr_in_count), static_cast<double>(a.addr_out_count),
                               static_cast<double>(b.addr_in_count), static_cast<double>(b.addr_out_count),
                               to_btc(a.value_in), to_btc(a.value_out), to_btc(b.value_in), to_btc(b.value_out),
                               to_btc(a.fee), to_btc(b.fee), static_cast<double>(pairs.multiplicity(a.e_in, a.e_out)),
                               static_cast<double>(pairs.multiplicity(b.e_in, b.e_out)), a.is_direct_loop ? 1.0 : 0.0,
                               b.is_direct_loop ? 1.0 : 0.0, r.whole_is_loop ? 1.0 : 0.0}});
    }
    return frame;
}

// ---------------------------------------------------------------------------
// CSV serialization: header `entity_id,label,<feature names...>`; values as
// shortest text with 17 significant digits, so doubles round-trip exactly.

inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    (void)ec;
    return std::string(buf, end);
}

inline void write_frame_csv(std::ostream& out, const FeatureFrame& frame) {
    out << "entity_id,label";
    for (const auto& f : frame.schema) out << ',' << f.name;
    out << '\n';
    char buf[64];
    for (const auto& r : frame.rows) {
        out << r.entity << ',' << class_name(r.label);
        for (double v : r.values) {
            auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
            (void)ec;
            out << ',';
            out.write(buf, end - buf);
        }
        out << '\n';
    }
}

inline FeatureFrame read_frame_csv(std::istream& in) {
    FeatureFrame frame;
    std::string text;
    std::size_t line = 0;
    auto split = [](std::string_view s) {
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            auto end = s.find(',', start);
            fields.push_back(s.substr(start, end == std::string_view::npos ? s.size() - start : end - start));
            if (end == std::string_view::npos) break;
            start = end + 1;
        }
        return fields;
    };

    if (!std::getline(in, text)) return frame;
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    const auto header = split(text);
    if (header.size() < 2 || header[0] != "entity_id" || header[1] != "label") {
        throw MalformedRecord(line, "frame header must start with 'entity_id,label'");
    }
    for (std::size_t i = 2; i < header.size(); ++i) {
        const std::string name(header[i]);
        frame.schema.push_back({name, is_boolean_feature(name) ? FeatureKind::Boolean : FeatureKind::Numeric});
    }

    while (std::getline(in, text)) {
        ++line;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (text.empty()) continue;
        const auto fields = split(text);
        if (fields.size() != header.size()) throw MalformedRecord(line, "wrong field count");
        FrameRow row;
        auto [p, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), row.entity);
        if (ec != std::errc() || p != fields[0].data() + fields[0].size()) {
            throw MalformedRecord(line, "bad entity id");
        }
        const auto cls = parse_class(fields[1]);
        if (!cls) throw MalformedRecord(line, "unknown class '" + std::string(fields[1]) + "'");
        row.label = *cls;
        row.values.resize(frame.schema.size());
        for (std::size_t j = 0; j < frame.schema.size(); ++j) {
            const auto& f = fields[j + 2];
            auto [q, ec2] = std::from_chars(f.data(), f.data() + f.size(), row.values[j]);
            if (ec2 != std::errc() || q != f.data() + f.size()) {
                throw MalformedRecord(line, "bad number '" + std::string(f) + "'");
            }
        }
        frame.rows.push_back(std::move(row));
    }
    return frame;
}

}  // namespace bitcascade
