#pragma once

// Address clustering with the common-input-ownership heuristic: all input
// addresses of one non-coinbase transaction are controlled by one entity.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bitcascade/classes.hpp"
#include "bitcascade/error.hpp"
#include "bitcascade/ingest.hpp"

namespace bitcascade {

using AddressIndex = std::uint32_t;
using EntityId = std::uint32_t;

/// Disjoint sets with union by size and path halving.
class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), 0u);
    }

    std::uint32_t find(std::uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        return true;
    }

    std::size_t size() const { return parent_.size(); }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> size_;
};

/// Partition of every address seen in a ledger into entities. Address indices
/// follow lexicographic address order; entity ids are dense and ordered by
/// each entity's smallest member address.
class AddressClustering {
public:
    AddressClustering() = default;
    AddressClustering(std::vector<std::string> sorted_addresses, std::vector<EntityId> entity_of)
        : addresses_(std::move(sorted_addresses)), entity_of_(std::move(entity_of)) {
        EntityId count = 0;
        for (EntityId e : entity_of_) count = std::max(count, e + 1);
        members_.resize(count);
        for (AddressIndex a = 0; a < entity_of_.size(); ++a) members_[entity_of_[a]].push_back(a);
    }

    std::size_t address_count() const { return addresses_.size(); }
    std::size_t entity_count() const { return members_.size(); }

    const std::string& address(AddressIndex a) const { return addresses_[a]; }
    const std::vector<std::string>& addresses() const { return addresses_; }

    std::optional<AddressIndex> find(std::string_view address) const {
        auto it = std::lower_bound(addresses_.begin(), addresses_.end(), address);
        if (it == addresses_.end() || *it != address) return std::nullopt;
        return static_cast<AddressIndex>(it - addresses_.begin());
    }

    EntityId entity_of(AddressIndex a) const { return entity_of_[a]; }

    std::optional<EntityId> entity_of(std::string_view address) const {
        auto a = find(address);
        if (!a) return std::nullopt;
        return entity_of_[*a];
    }

    std::span<const AddressIndex> members(EntityId e) const { return members_[e]; }

    bool operator==(const AddressClustering& other) const {
        return addresses_ == other.addresses_ && entity_of_ == other.entity_of_;
    }

private:
    std::vector<std::string> addresses_;
    std::vector<EntityId> entity_of_;
    std::vector<std::vector<AddressIndex>> members_;
};

inline AddressClustering cluster_addresses(std::span<const RawTransaction> txs) {
    std::vector<std::string> addresses;
    for (const auto& tx : txs) {
        for (const auto& io : tx.inputs) addresses.push_back(io.address);
        for (const auto& io : tx.outputs) addresses.push_back(io.address);
    }
    std::sort(addresses.begin(), addresses.end());
    addresses.erase(std::unique(addresses.begin(), addresses.end()), addresses.end());

    auto index_of = [&](const std::string& address) {
        return static_cast<AddressIndex>(std::lower_bound(addresses.begin(), addresses.end(), address) -
                                         addresses.begin());
    };

    UnionFind sets(addresses.size());
    for (const auto& tx : txs) {
        if (tx.inputs.size() < 2) continue;
        const AddressIndex first = index_of(tx.inputs.front().address);
        for (std::size_t i = 1; i < tx.inputs.size(); ++i) sets.unite(first, index_of(tx.inputs[i].address));
    }

    // Scanning in address order numbers each root by its smallest member.
    constexpr EntityId kUnassigned = UINT32_MAX;
    std::vector<EntityId> root_entity(addresses.size(), kUnassigned);
    std::vector<EntityId> entity_of(addresses.size());
    EntityId next = 0;
    for (AddressIndex a = 0; a < addresses.size(); ++a) {
        const auto root = sets.find(a);
        if (root_entity[root] == kUnassigned) root_entity[root] = next++;
        entity_of[a] = root_entity[root];
    }
    return AddressClustering(std::move(addresses), std::move(entity_of));
}

// ---------------------------------------------------------------------------
// Ground-truth attachment

struct EntityLabel {
    std::string entity_name;
    EntityClass cls = EntityClass::Exchange;

    bool operator==(const EntityLabel&) const = default;
};

class LabeledEntitySet {
public:
    explicit LabeledEntitySet(std::vector<std::optional<EntityLabel>> labels) : labels_(std::move(labels)) {
        for (EntityId e = 0; e < labels_.size(); ++e) (labels_[e] ? labeled_ : discarded_).push_back(e);
    }

    bool is_labeled(EntityId e) const { return e < labels_.size() && labels_[e].has_value(); }
    const EntityLabel& label(EntityId e) const { return *labels_[e]; }
    EntityClass class_of(EntityId e) const { return labels_[e]->cls; }

    /// Labeled entity ids, ascending.
    const std::vector<EntityId>& labeled() const { return labeled_; }
    /// Unlabeled entity ids, ascending.
    const std::vector<EntityId>& discarded() const { return discarded_; }

    std::size_t entity_count() const { return labels_.size(); }

private:
    std::vector<std::optional<EntityLabel>> labels_;
    std::vector<EntityId> labeled_;
    std::vector<EntityId> discarded_;
};

/// An entity is labeled iff one of its addresses is in the book. A cluster
/// covering book entities of different classes is an error; same-class
/// entities merged by the heuristic take the smallest entity name.
inline LabeledEntitySet label_entities(const AddressClustering& clustering, const LabelBook& labels) {
    std::vector<std::optional<EntityLabel>> result(clustering.entity_count());
    for (EntityId e = 0; e < clustering.entity_count(); ++e) {
        std::optional<EntityLabel> current;
        for (AddressIndex a : clustering.members(e)) {
            const Label* label = labels.find(clustering.address(a));
            if (label == nullptr) continue;
            if (!current) {
                current = EntityLabel{label->entity_name, label->cls};
            } else if (current->cls != label->cls) {
                throw InconsistentEntityLabel("cluster " + std::to_string(e) + " contains addresses labelled " +
                                              std::string(class_name(current->cls)) + " (" + current->entity_name +
                                              ") and " + std::string(class_name(label->cls)) + " (" +
                                              label->entity_name + ")");
            } else if (label->entity_name < current->entity_name) {
                current->entity_name = label->entity_name;
            }
        }
        result[e] = std::move(current);
    }
    return LabeledEntitySet(std::move(result));
}

/// Label-book addresses that never occur in the ledger.
inline std::vector<std::string> unmatched_label_addresses(const AddressClustering& clustering,
                                                          const LabelBook& labels) {
    std::vector<std::string> missing;
    for (const auto& [address, _] : labels.entries()) {
        if (!clustering.find(address)) missing.push_back(address);
    }
    return missing;
}

/// Audit dump: `entity_id,address`, one row per address in entity order.
inline void write_clustering_csv(std::ostream& out, const AddressClustering& clustering) {
    out << "entity_id,address\n";
    for (EntityId e = 0; e < clustering.entity_count(); ++e) {
        for (AddressIndex a : clustering.members(e)) out << e << ',' << clustering.address(a) << '\n';
    }
}

}  // namespace bitcascade
