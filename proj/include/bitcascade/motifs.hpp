#pragma once

// 1_motif and 2_motif enumeration over an entity-transaction graph.
//
// A branch is entity -> tx -> entity. A 1_motif is one branch. A 2_motif is
// two branches (a -> tx1 -> b, b -> tx2 -> c) where
//   * tx1 has a strictly smaller timestamp than tx2 (equal stamps never chain),
//   * b receives in tx1 on some address that b then spends from in tx2.

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "bitcascade/graph.hpp"
#include "bitcascade/log.hpp"
#include "bitcascade/parallel.hpp"

namespace bitcascade {

struct Branch {
    EntityId e_in = 0;
    TxIndex tx = 0;
    EntityId e_out = 0;
    Satoshi value_in = 0;
    Satoshi value_out = 0;
    std::uint32_t addr_in_count = 0;
    std::uint32_t addr_out_count = 0;
    Satoshi fee = 0;
    bool is_direct_loop = false;

    bool operator==(const Branch&) const = default;
    auto key() const { return std::tie(tx, e_in, e_out); }
};

enum class BranchKind { DirectLoop, DirectDistinct };

inline BranchKind classify_branch(const Branch& b) {
    return b.e_in == b.e_out ? BranchKind::DirectLoop : BranchKind::DirectDistinct;
}

struct Motif1Record {
    Branch branch;

    bool operator==(const Motif1Record&) const = default;
};

struct Motif2Record {
    Branch first;
    Branch second;
    bool whole_is_loop = false;

    bool operator==(const Motif2Record&) const = default;
    auto key() const { return std::tuple(first.tx, first.e_in, first.e_out, second.tx, second.e_out); }
};

inline Branch make_branch(const EntityTransactionGraph& g, const Edge& in, const Edge& out) {
    Branch b;
    b.e_in = in.vertex;
    b.tx = in.tx;
    b.e_out = out.vertex;
    b.value_in = in.value;
    b.value_out = out.value;
    b.addr_in_count = static_cast<std::uint32_t>(in.addresses.size());
    b.addr_out_count = static_cast<std::uint32_t>(out.addresses.size());
    b.fee = g.tx(in.tx).fee;
    b.is_direct_loop = in.vertex == out.vertex;
    return b;
}

/// One record per (input edge, output edge) pair of every transaction,
/// ordered by (tx, e_in, e_out). Coinbase transactions have no branches.
inline std::vector<Motif1Record> extract_1motifs(const EntityTransactionGraph& g) {
    std::vector<Motif1Record> records;
    for (TxIndex t = 0; t < g.tx_count(); ++t) {
        for (const auto& in : g.inputs_of(t)) {
            for (const auto& out : g.outputs_of(t)) records.push_back({make_branch(g, in, out)});
        }
    }
    return records;
}

struct Motif2Options {
    /// Maximum records emitted per middle entity; 0 means unlimited. When
    /// the cap is hit a warning is logged and the entity id reported.
    std::size_t per_entity_cap = 0;
    std::vector<EntityId>* capped_entities = nullptr;
};

namespace detail {

struct SpendRef {
    TxIndex tx;
    std::uint32_t edge;
};

inline std::vector<Motif2Record> motifs_through(const EntityTransactionGraph& g, EntityId middle,
                                                std::size_t cap, bool& capped) {
    std::vector<Motif2Record> out;
    const auto sends = g.sends(middle);
    const auto receives = g.receives(middle);
    if (sends.empty() || receives.empty()) return out;

    // address -> spends from that address, in tx order
    std::unordered_map<AddressIndex, std::vector<SpendRef>> spends_at;
    for (std::uint32_t s : sends) {
        const Edge& e = g.input_edge(s);
        for (AddressIndex a : e.addresses) spends_at[a].push_back({e.tx, s});
    }

    std::vector<std::uint32_t> chained;
    for (std::uint32_t r : receives) {
        const Edge& recv = g.output_edge(r);
        const std::int64_t t1 = g.tx(recv.tx).timestamp;
        chained.clear();
        for (AddressIndex a : recv.addresses) {
            auto it = spends_at.find(a);
            if (it == spends_at.end()) continue;
            const auto& list = it->second;
            auto first = std::partition_point(list.begin(), list.end(),
                                              [&](const SpendRef& s) { return g.tx(s.tx).timestamp <= t1; });
            for (; first != list.end(); ++first) chained.push_back(first->edge);
        }
        std::sort(chained.begin(), chained.end());
        chained.erase(std::unique(chained.begin(), chained.end()), chained.end());

        for (std::uint32_t s : chained) {
            const Edge& send = g.input_edge(s);
            for (const Edge& in : g.inputs_of(recv.tx)) {
                const Branch first = make_branch(g, in, recv);
                for (const Edge& pay : g.outputs_of(send.tx)) {
                    if (cap != 0 && out.size() >= cap) {
                        capped = true;
                        return out;
                    }
                    Motif2Record rec{first, make_branch(g, send, pay), false};
                    rec.whole_is_loop = rec.first.e_in == rec.second.e_out;
                    out.push_back(rec);
                }
            }
        }
    }
    return out;
}

}  // namespace detail

/// All 2_motifs, ordered by (first.tx, first.e_in, middle, second.tx,
/// second.e_out). Middle entities are processed in parallel.
inline std::vector<Motif2Record> extract_2motifs(const EntityTransactionGraph& g, const Motif2Options& options = {}) {
    const std::size_t n = g.vertex_count();
    std::vector<std::vector<Motif2Record>> per_entity(n);
    std::vector<char> capped(n, 0);
    parallel::for_each_index(n, [&](std::size_t e) {
        bool hit = false;
        per_entity[e] = detail::motifs_through(g, static_cast<EntityId>(e), options.per_entity_cap, hit);
        capped[e] = hit;
    });

    std::size_t total = 0;
    for (const auto& v : per_entity) total += v.size();
    std::vector<Motif2Record> records;
    records.reserve(total);
    for (std::size_t e = 0; e < n; ++e) {
        if (capped[e]) {
            log::warn("2_motif cap of ", options.per_entity_cap, " records reached for middle entity ", e,
                      "; remaining motifs through it were not enumerated");
            if (options.capped_entities) options.capped_entities->push_back(static_cast<EntityId>(e));
        }
        records.insert(records.end(), per_entity[e].begin(), per_entity[e].end());
        std::vector<Motif2Record>().swap(per_entity[e]);
    }
    std::sort(records.begin(), records.end(),
              [](const Motif2Record& a, const Motif2Record& b) { return a.key() < b.key(); });
    return records;
}

// Audit dumps.

inline void write_branch_columns(std::ostream& out, const EntityTransactionGraph& g, const Branch& b) {
    out << b.e_in << ',' << g.tx(b.tx).tx_id << ',' << b.e_out << ',' << b.value_in << ',' << b.value_out << ','
        << b.addr_in_count << ',' << b.addr_out_count << ',' << b.fee << ',' << (b.is_direct_loop ? 1 : 0);
}

inline void write_motif1_csv(std::ostream& out, const EntityTransactionGraph& g,
                             const std::vector<Motif1Record>& records) {
    out << "e_in,tx,e_out,value_in,value_out,addr_in_count,addr_out_count,fee,is_direct_loop\n";
    for (const auto& r : records) {
        write_branch_columns(out, g, r.branch);
        out << '\n';
    }
}

inline void write_motif2_csv(std::ostream& out, const EntityTransactionGraph& g,
                             const std::vector<Motif2Record>& records) {
    static constexpr const char* kBranchColumns =
        "e_in,tx,e_out,value_in,value_out,addr_in_count,addr_out_count,fee,is_direct_loop";
    auto prefixed = [&](const char* prefix) {
        std::string cols(kBranchColumns);
        std::string result;
        std::size_t start = 0;
        while (start <= cols.size()) {
            auto end = cols.find(',', start);
            if (end == std::string::npos) end = cols.size();
            if (!result.empty()) result += ',';
            result += prefix + cols.substr(start, end - start);
            start = end + 1;
        }
        return result;
    };
    out << prefixed("first_") << ',' << prefixed("second_") << ",whole_is_loop\n";
    for (const auto& r : records) {
        write_branch_columns(out, g, r.first);
        out << ',';
        write_branch_columns(out, g, r.second);
        out << ',' << (r.whole_is_loop ? 1 : 0) << '\n';
    }
}

}  // namespace bitcascade
