#pragma once

// Bipartite transaction graphs. Vertices on one side are addresses or
// entities, on the other side transactions. Input edges run vertex -> tx,
// output edges tx -> vertex. Each edge carries the aggregated satoshi value
// and the sorted set of addresses through which the vertex took part.
//
// Transactions are indexed in ledger order (timestamp, tx_id), so comparing
// tx indices compares transaction times with the tx_id tiebreak.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bitcascade/clustering.hpp"
#include "bitcascade/error.hpp"
#include "bitcascade/ingest.hpp"

namespace bitcascade {

using TxIndex = std::uint32_t;
using VertexId = std::uint32_t;

struct TxVertex {
    std::string tx_id;
    std::int64_t timestamp = 0;
    Satoshi fee = 0;
    bool coinbase = false;
};

struct Edge {
    VertexId vertex = 0;
    TxIndex tx = 0;
    Satoshi value = 0;
    std::vector<AddressIndex> addresses;
};

struct AddressVertices {};
struct EntityVertices {};

template <class VertexKind>
class TransactionGraph {
public:
    std::size_t vertex_count() const { return vertex_count_; }
    std::size_t tx_count() const { return txs_.size(); }
    std::size_t edge_count() const { return inputs_.size() + outputs_.size(); }

    const TxVertex& tx(TxIndex t) const { return txs_[t]; }

    /// Input edges of a transaction, ordered by vertex.
    std::span<const Edge> inputs_of(TxIndex t) const {
        return {inputs_.data() + in_offsets_[t], inputs_.data() + in_offsets_[t + 1]};
    }
    /// Output edges of a transaction, ordered by vertex.
    std::span<const Edge> outputs_of(TxIndex t) const {
        return {outputs_.data() + out_offsets_[t], outputs_.data() + out_offsets_[t + 1]};
    }

    std::span<const Edge> input_edges() const { return inputs_; }
    std::span<const Edge> output_edges() const { return outputs_; }

    /// Input-edge indices where `v` sends, in transaction order.
    std::span<const std::uint32_t> sends(VertexId v) const { return sends_[v]; }
    /// Output-edge indices where `v` receives, in transaction order.
    std::span<const std::uint32_t> receives(VertexId v) const { return receives_[v]; }

    const Edge& input_edge(std::uint32_t i) const { return inputs_[i]; }
    const Edge& output_edge(std::uint32_t i) const { return outputs_[i]; }

    /// Looks up a transaction by id (linear scan; debugging and tests).
    std::optional<TxIndex> find_tx(const std::string& tx_id) const {
        for (TxIndex t = 0; t < txs_.size(); ++t) {
            if (txs_[t].tx_id == tx_id) return t;
        }
        return std::nullopt;
    }

    struct Builder;

private:
    std::size_t vertex_count_ = 0;
    std::vector<TxVertex> txs_;
    std::vector<Edge> inputs_;
    std::vector<Edge> outputs_;
    std::vector<std::uint32_t> in_offsets_{0};
    std::vector<std::uint32_t> out_offsets_{0};
    std::vector<std::vector<std::uint32_t>> sends_;
    std::vector<std::vector<std::uint32_t>> receives_;
};

using AddressTransactionGraph = TransactionGraph<AddressVertices>;
using EntityTransactionGraph = TransactionGraph<EntityVertices>;

template <class VertexKind>
struct TransactionGraph<VertexKind>::Builder {
    struct Contribution {
        VertexId vertex;
        AddressIndex address;
        Satoshi value;
    };

    TransactionGraph graph;

    explicit Builder(std::size_t vertex_count) {
        graph.vertex_count_ = vertex_count;
        graph.sends_.resize(vertex_count);
        graph.receives_.resize(vertex_count);
    }

    static void collapse(std::vector<Contribution>& parts, TxIndex t, std::vector<Edge>& edges) {
        std::sort(parts.begin(), parts.end(), [](const Contribution& a, const Contribution& b) {
            return a.vertex != b.vertex ? a.vertex < b.vertex : a.address < b.address;
        });
        for (std::size_t i = 0; i < parts.size();) {
            Edge edge{parts[i].vertex, t, 0, {}};
            for (; i < parts.size() && parts[i].vertex == edge.vertex; ++i) {
                edge.value += parts[i].value;
                if (edge.addresses.empty() || edge.addresses.back() != parts[i].address) {
                    edge.addresses.push_back(parts[i].address);
                }
            }
            edges.push_back(std::move(edge));
        }
    }

    void add_tx(TxVertex vertex, std::vector<Contribution> ins, std::vector<Contribution> outs) {
        const auto t = static_cast<TxIndex>(graph.txs_.size());
        graph.txs_.push_back(std::move(vertex));
        const std::size_t in_begin = graph.inputs_.size();
        const std::size_t out_begin = graph.outputs_.size();
        collapse(ins, t, graph.inputs_);
        collapse(outs, t, graph.outputs_);
        for (auto i = in_begin; i < graph.inputs_.size(); ++i) {
            graph.sends_[graph.inputs_[i].vertex].push_back(static_cast<std::uint32_t>(i));
        }
        for (auto i = out_begin; i < graph.outputs_.size(); ++i) {
            graph.receives_[graph.outputs_[i].vertex].push_back(static_cast<std::uint32_t>(i));
        }
        graph.in_offsets_.push_back(static_cast<std::uint32_t>(graph.inputs_.size()));
        graph.out_offsets_.push_back(static_cast<std::uint32_t>(graph.outputs_.size()));
    }
};

namespace detail {

inline std::vector<std::size_t> ledger_permutation(std::span<const RawTransaction> txs) {
    std::vector<std::size_t> order(txs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ledger_order(txs[a], txs[b]); });
    return order;
}

template <class Graph, class VertexOf>
Graph build_graph(std::span<const RawTransaction> txs, std::size_t vertex_count, VertexOf&& vertex_of) {
    using Builder = typename Graph::Builder;
    using Contribution = typename Builder::Contribution;
    Builder builder(vertex_count);
    for (std::size_t i : ledger_permutation(txs)) {
        const auto& tx = txs[i];
        auto side = [&](const std::vector<TxIo>& ios) {
            std::vector<Contribution> parts;
            parts.reserve(ios.size());
            for (const auto& io : ios) {
                const auto [vertex, address] = vertex_of(io.address);
                parts.push_back({vertex, address, io.value});
            }
            return parts;
        };
        builder.add_tx(TxVertex{tx.tx_id, tx.timestamp, compute_fee(tx).value, tx.is_coinbase()},
                       side(tx.inputs), side(tx.outputs));
    }
    return std::move(builder.graph);
}

}  // namespace detail

/// Address-transaction graph. Vertex ids are indices into the sorted set of
/// addresses in `txs` (the same numbering `cluster_addresses` uses).
inline AddressTransactionGraph build_address_graph(std::span<const RawTransaction> txs) {
    std::vector<std::string> addresses;
    for (const auto& tx : txs) {
        for (const auto& io : tx.inputs) addresses.push_back(io.address);
        for (const auto& io : tx.outputs) addresses.push_back(io.address);
    }
    std::sort(addresses.begin(), addresses.end());
    addresses.erase(std::unique(addresses.begin(), addresses.end()), addresses.end());
    return detail::build_graph<AddressTransactionGraph>(txs, addresses.size(), [&](const std::string& address) {
        const auto a = static_cast<AddressIndex>(std::lower_bound(addresses.begin(), addresses.end(), address) -
                                                 addresses.begin());
        return std::pair<VertexId, AddressIndex>{a, a};
    });
}

/// Entity-transaction graph: address edges collapsed per entity.
inline EntityTransactionGraph build_entity_graph(std::span<const RawTransaction> txs,
                                                 const AddressClustering& clustering) {
    return detail::build_graph<EntityTransactionGraph>(
        txs, clustering.entity_count(), [&](const std::string& address) {
            const auto a = clustering.find(address);
            if (!a) throw UnknownAddress("address not covered by the clustering: " + address);
            return std::pair<VertexId, AddressIndex>{clustering.entity_of(*a), *a};
        });
}

/// Debug dump: `direction,vertex,tx_id,value,addresses` with `;`-joined
/// address indices.
template <class VertexKind>
void write_edges_csv(std::ostream& out, const TransactionGraph<VertexKind>& graph) {
    out << "direction,vertex,tx_id,value,addresses\n";
    auto row = [&](const char* direction, const Edge& e) {
        out << direction << ',' << e.vertex << ',' << graph.tx(e.tx).tx_id << ',' << e.value << ',';
        for (std::size_t i = 0; i < e.addresses.size(); ++i) out << (i ? ";" : "") << e.addresses[i];
        out << '\n';
    };
    for (TxIndex t = 0; t < graph.tx_count(); ++t) {
        for (const auto& e : graph.inputs_of(t)) row("in", e);
        for (const auto& e : graph.outputs_of(t)) row("out", e);
    }
}

}  // namespace bitcascade
