#pragma once

// Seeded synthetic ledgers with class-dependent behaviour and ground truth.
//
// Every entity starts with one funding coinbase. Afterwards each entity
// initiates a quota of transactions proportional to its activity weight:
// payments spend some of its unspent outputs, pay one or more counterparties
// (or itself) and optionally return change. Mining pools also mint coinbase
// rewards. Inputs are only ever co-spent within one entity.
//
// The generator tracks each entity's co-spend components. While an entity has
// more than one component, every component keeps at least one unspent
// output; a closing consolidation per entity then co-spends one output of
// each component, so address clustering recovers the entities exactly.
// Those consolidations come on top of the transaction budget.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "bitcascade/classes.hpp"
#include "bitcascade/clustering.hpp"
#include "bitcascade/error.hpp"
#include "bitcascade/ingest.hpp"
#include "bitcascade/rng.hpp"

namespace bitcascade {

struct ClassProfile {
    std::size_t n_entities = 10;
    double activity = 1.0;             // relative share of initiated transactions
    double address_reuse_rate = 0.2;   // receive on a known address instead of a fresh one
    double address_reuse_spread = 0.0; // per-entity rate drawn from rate +- spread
    std::size_t max_address_uses = 6;  // receipts before an address leaves the reuse pool
    double self_transfer_rate = 0.05;  // chance each payment output goes back to the payer
    double change_rate = 0.5;          // chance a payment returns change to the payer
    std::size_t min_outputs = 1;
    std::size_t max_outputs = 2;
    std::size_t max_inputs = 2;
    double funding_log_mean = 22.0;    // ln(satoshi) of the opening balance
    double funding_log_sd = 1.0;
    double spend_min = 0.2;            // share of selected inputs paid out when change is returned
    double spend_max = 0.8;
    double fee_rate_min = 0.0002;      // fee as a share of the input value
    double fee_rate_max = 0.0005;
    Satoshi fee_floor = 1000;
    bool equal_split = false;          // pay every recipient the same amount
    double coinbase_rate = 0.0;        // share of initiated slots minting a reward
    double coinbase_log_mean = 20.5;
    double repeat_counterparty_rate = 0.0;  // pay someone who recently paid us
    std::array<double, kNumClasses> counterparty_affinity{1, 1, 1, 1, 1, 1};
};

struct SynthConfig {
    std::array<ClassProfile, kNumClasses> classes{};
    std::size_t tx_budget = 50000;
    std::int64_t start_time = 1500000000;
    std::int64_t time_span = 50000LL * 600;
    double activity_log_sd = 0.5;  // per-entity spread of activity, shared by all classes
    std::uint64_t seed = 42;

    std::size_t entity_count() const {
        std::size_t n = 0;
        for (const auto& c : classes) n += c.n_entities;
        return n;
    }
};

/// Default six-profile configuration, 10 entities per class.
///
/// Address reuse, activity and opening balances are drawn per entity from
/// ranges shared by every class, so entity totals overlap; the classes differ
/// mostly in how individual payments look (fee rates, fan-out, split
/// amounts, self transfers, change).
inline SynthConfig default_synth_config() {
    SynthConfig cfg;
    cfg.activity_log_sd = 1.0;
    for (auto& p : cfg.classes) {
        p.n_entities = 10;
        p.address_reuse_rate = 0.5;
        p.address_reuse_spread = 0.45;
        p.max_address_uses = 4;
    }

    auto& ex = cfg.classes[class_index(EntityClass::Exchange)];
    ex.max_inputs = 4;
    ex.min_outputs = 1;
    ex.max_outputs = 3;
    ex.change_rate = 0.9;
    ex.self_transfer_rate = 0.02;
    ex.spend_min = 0.3;
    ex.spend_max = 0.7;
    ex.fee_rate_min = 0.0005;
    ex.fee_rate_max = 0.001;

    auto& gm = cfg.classes[class_index(EntityClass::Gambling)];
    gm.max_inputs = 2;
    gm.min_outputs = 1;
    gm.max_outputs = 1;
    gm.change_rate = 0.85;
    gm.self_transfer_rate = 0.05;
    gm.repeat_counterparty_rate = 0.7;
    gm.spend_min = 0.02;
    gm.spend_max = 0.15;
    gm.fee_rate_min = 0.0001;
    gm.fee_rate_max = 0.0003;
    gm.counterparty_affinity = {2, 1, 1, 1, 1, 2};

    auto& mk = cfg.classes[class_index(EntityClass::Marketplace)];
    mk.max_inputs = 5;
    mk.min_outputs = 1;
    mk.max_outputs = 2;
    mk.change_rate = 0.3;
    mk.self_transfer_rate = 0.2;
    mk.spend_min = 0.5;
    mk.spend_max = 0.9;
    mk.fee_rate_min = 0.001;
    mk.fee_rate_max = 0.002;
    mk.counterparty_affinity = {3, 1, 1, 1, 2, 1};

    auto& mp = cfg.classes[class_index(EntityClass::MiningPool)];
    mp.coinbase_rate = 0.15;
    mp.max_inputs = 3;
    mp.min_outputs = 2;
    mp.max_outputs = 4;
    mp.change_rate = 0.6;
    mp.self_transfer_rate = 0.0;
    mp.spend_min = 0.4;
    mp.spend_max = 0.9;
    mp.fee_rate_min = 0.00005;
    mp.fee_rate_max = 0.0001;
    mp.counterparty_affinity = {3, 1, 1, 0.5, 0.5, 2};

    auto& mx = cfg.classes[class_index(EntityClass::Mixer)];
    mx.max_inputs = 3;
    mx.min_outputs = 2;
    mx.max_outputs = 3;
    mx.change_rate = 0.0;
    mx.equal_split = true;
    mx.self_transfer_rate = 0.0;
    mx.fee_rate_min = 0.01;
    mx.fee_rate_max = 0.03;
    mx.counterparty_affinity = {1, 1, 1, 0.2, 4, 1};

    auto& sv = cfg.classes[class_index(EntityClass::Service)];
    sv.max_inputs = 2;
    sv.min_outputs = 1;
    sv.max_outputs = 2;
    sv.change_rate = 0.7;
    sv.self_transfer_rate = 0.1;
    sv.fee_rate_min = 0.0003;
    sv.fee_rate_max = 0.0006;
    return cfg;
}

inline void validate(const SynthConfig& cfg) {
    auto rate = [](double r, const char* name) {
        if (!(r >= 0.0 && r <= 1.0)) throw InvalidConfig(std::string(name) + " must lie in [0, 1]");
    };
    std::size_t miners = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto& p = cfg.classes[c];
        const std::string cls(kClassNames[c]);
        if (p.n_entities < 1) throw InvalidConfig(cls + ": n_entities must be >= 1");
        rate(p.address_reuse_rate, "address_reuse_rate");
        rate(p.address_reuse_spread, "address_reuse_spread");
        rate(p.self_transfer_rate, "self_transfer_rate");
        rate(p.change_rate, "change_rate");
        rate(p.coinbase_rate, "coinbase_rate");
        rate(p.repeat_counterparty_rate, "repeat_counterparty_rate");
        if (p.activity < 0.0) throw InvalidConfig(cls + ": activity must be >= 0");
        if (p.min_outputs < 1 || p.max_outputs < p.min_outputs) throw InvalidConfig(cls + ": bad output range");
        if (p.max_inputs < 1) throw InvalidConfig(cls + ": max_inputs must be >= 1");
        if (p.max_address_uses < 1) throw InvalidConfig(cls + ": max_address_uses must be >= 1");
        if (!(p.spend_min > 0.0 && p.spend_min <= p.spend_max && p.spend_max <= 1.0)) {
            throw InvalidConfig(cls + ": need 0 < spend_min <= spend_max <= 1");
        }
        if (!(p.fee_rate_min >= 0.0 && p.fee_rate_min <= p.fee_rate_max && p.fee_rate_max < 0.5)) {
            throw InvalidConfig(cls + ": need 0 <= fee_rate_min <= fee_rate_max < 0.5");
        }
        if (p.fee_floor < 0) throw InvalidConfig(cls + ": fee_floor must be >= 0");
        double affinity = 0.0;
        for (double a : p.counterparty_affinity) {
            if (a < 0.0) throw InvalidConfig(cls + ": affinities must be >= 0");
            affinity += a;
        }
        if (affinity <= 0.0) throw InvalidConfig(cls + ": affinities must not all be zero");
        if (p.coinbase_rate > 0.0) miners += p.n_entities;
    }
    if (cfg.time_span < 1) throw InvalidConfig("time_span must be >= 1");
    if (cfg.tx_budget < cfg.entity_count()) {
        throw BudgetTooSmall("budget of " + std::to_string(cfg.tx_budget) + " transactions is below the " +
                             std::to_string(cfg.entity_count()) + " entities it must fund");
    }
}

struct TruthEntry {
    std::string entity_name;
    EntityClass cls = EntityClass::Exchange;
    std::vector<std::string> addresses;  // sorted
    std::size_t initiated = 0;           // transactions it started, excluding funding and consolidation
};

struct SynthResult {
    std::vector<RawTransaction> ledger;  // ledger order
    LabelBook labels;
    std::vector<TruthEntry> truth;
};

namespace detail {

class LedgerSimulator {
public:
    explicit LedgerSimulator(const SynthConfig& cfg) : cfg_(cfg), rng_(cfg.seed, "synth") {
        spacing_ = std::max<std::int64_t>(1, cfg.time_span / static_cast<std::int64_t>(cfg.tx_budget));
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            for (std::size_t i = 0; i < cfg.classes[c].n_entities; ++i) {
                Entity e;
                e.cls = class_from_index(c);
                char name[64];
                std::snprintf(name, sizeof name, "%s-%02zu", std::string(kClassNames[c]).c_str(), i + 1);
                e.name = name;
                const auto& p = cfg.classes[c];
                e.reuse_rate = std::clamp(p.address_reuse_rate + p.address_reuse_spread * (2.0 * rng_.uniform() - 1.0), 0.0, 1.0);
                by_class_[c].push_back(entities_.size());
                entities_.push_back(std::move(e));
            }
        }
    }

    SynthResult run() {
        const std::size_t n = entities_.size();
        for (std::size_t e = 0; e < n; ++e) {
            const auto& p = profile(e);
            const auto amount = static_cast<Satoshi>(rng_.lognormal(p.funding_log_mean, p.funding_log_sd)) + 100000;
            emit_coinbase(e, amount);
        }

        for (std::size_t e : schedule(cfg_.tx_budget - n)) step(e);
        for (std::size_t e = 0; e < n; ++e) consolidate(e);

        SynthResult result;
        result.ledger = std::move(ledger_);
        std::sort(result.ledger.begin(), result.ledger.end(), ledger_order);
        for (auto& e : entities_) {
            TruthEntry t{e.name, e.cls, {}, e.initiated};
            for (auto a : e.addresses) {
                t.addresses.push_back(addresses_[a].text);
                result.labels.add(addresses_[a].text, Label{e.name, e.cls});
            }
            std::sort(t.addresses.begin(), t.addresses.end());
            result.truth.push_back(std::move(t));
        }
        return result;
    }

private:
    struct Utxo {
        std::uint32_t address;
        Satoshi value;
    };

    struct Address {
        std::string text;
        std::size_t owner;
        std::size_t uses = 0;
    };

    struct Entity {
        std::string name;
        EntityClass cls;
        std::vector<std::uint32_t> addresses;
        std::deque<std::uint32_t> reuse_pool;
        std::vector<Utxo> utxos;
        std::deque<std::size_t> recent_payers;
        double reuse_rate = 0.0;
        std::size_t components = 0;
        std::size_t initiated = 0;
    };

    const ClassProfile& profile(std::size_t e) const { return cfg_.classes[class_index(entities_[e].cls)]; }

    // Largest-remainder apportionment of `slots` by activity weight, shuffled.
    std::vector<std::size_t> schedule(std::size_t slots) {
        const std::size_t n = entities_.size();
        std::vector<double> noise(n);
        for (auto& v : noise) v = rng_.lognormal(0.0, cfg_.activity_log_sd);
        std::vector<double> weight(n);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            // Normalize within the class so class totals follow `activity` exactly.
            double mean = 0.0;
            for (auto e : by_class_[c]) mean += noise[e];
            mean /= static_cast<double>(by_class_[c].size());
            for (auto e : by_class_[c]) weight[e] = cfg_.classes[c].activity * noise[e] / mean;
        }
        const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
        std::vector<std::size_t> quota(n, 0);
        std::vector<std::pair<double, std::size_t>> remainder;
        std::size_t assigned = 0;
        for (std::size_t e = 0; e < n; ++e) {
            const double exact = total > 0 ? static_cast<double>(slots) * weight[e] / total : 0.0;
            quota[e] = static_cast<std::size_t>(std::floor(exact));
            assigned += quota[e];
            remainder.push_back({exact - std::floor(exact), e});
        }
        std::stable_sort(remainder.begin(), remainder.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t i = 0; assigned < slots && i < remainder.size(); ++i, ++assigned) ++quota[remainder[i].second];
        for (std::size_t e = 0; assigned < slots; e = (e + 1) % n, ++assigned) ++quota[e];

        std::vector<std::size_t> order;
        order.reserve(slots);
        for (std::size_t e = 0; e < n; ++e) order.insert(order.end(), quota[e], e);
        rng_.shuffle(std::span<std::size_t>(order));
        return order;
    }

    std::int64_t next_timestamp() {
        const auto i = static_cast<std::int64_t>(sequence_++);
        return cfg_.start_time + i * spacing_ + static_cast<std::int64_t>(rng_.below(static_cast<std::uint64_t>(spacing_)));
    }

    std::string fresh_tx_id() {
        static constexpr char kHex[] = "0123456789abcdef";
        while (true) {
            std::string id(64, '0');
            for (std::size_t i = 0; i < 64; i += 16) {
                std::uint64_t v = rng_.next();
                for (std::size_t j = 0; j < 16; ++j, v >>= 4) id[i + j] = kHex[v & 15];
            }
            if (tx_ids_.insert(id).second) return id;
        }
    }

    std::uint32_t fresh_address(std::size_t owner) {
        static constexpr char kBase58[] = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";
        std::string text;
        do {
            text = "1";
            for (int i = 0; i < 33; ++i) text += kBase58[rng_.below(58)];
        } while (!address_texts_.insert(text).second);
        const auto id = static_cast<std::uint32_t>(addresses_.size());
        addresses_.push_back({std::move(text), owner, 0});
        component_parent_.push_back(id);
        component_utxos_.push_back(0);
        auto& e = entities_[owner];
        e.addresses.push_back(id);
        ++e.components;
        return id;
    }

    std::uint32_t root(std::uint32_t a) {
        while (component_parent_[a] != a) {
            component_parent_[a] = component_parent_[component_parent_[a]];
            a = component_parent_[a];
        }
        return a;
    }

    // Address on which `owner` receives the next payment.
    std::uint32_t receiving_address(std::size_t owner) {
        auto& e = entities_[owner];
        const auto& p = profile(owner);
        std::uint32_t a;
        if (!e.reuse_pool.empty() && rng_.bernoulli(e.reuse_rate)) {
            a = e.reuse_pool[rng_.below(e.reuse_pool.size())];
        } else {
            a = fresh_address(owner);
            e.reuse_pool.push_back(a);
        }
        if (++addresses_[a].uses >= p.max_address_uses) {
            e.reuse_pool.erase(std::find(e.reuse_pool.begin(), e.reuse_pool.end(), a));
        }
        return a;
    }

    void credit(std::size_t owner, std::uint32_t address, Satoshi value, RawTransaction& tx) {
        tx.outputs.push_back({addresses_[address].text, value});
        entities_[owner].utxos.push_back({address, value});
        ++component_utxos_[root(address)];
    }

    void emit(RawTransaction tx) {
        tx.tx_id = fresh_tx_id();
        tx.timestamp = next_timestamp();
        ledger_.push_back(std::move(tx));
    }

    void emit_coinbase(std::size_t owner, Satoshi amount) {
        RawTransaction tx;
        credit(owner, receiving_address(owner), amount, tx);
        emit(std::move(tx));
    }

    std::size_t pick_counterparty(std::size_t payer) {
        auto& e = entities_[payer];
        const auto& p = profile(payer);
        if (!e.recent_payers.empty() && rng_.bernoulli(p.repeat_counterparty_rate)) {
            return e.recent_payers[rng_.below(e.recent_payers.size())];
        }
        std::array<double, kNumClasses> w{};
        double total = 0.0;
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            const std::size_t others = by_class_[c].size() - (class_index(e.cls) == c ? 1 : 0);
            w[c] = others > 0 ? p.counterparty_affinity[c] : 0.0;
            total += w[c];
        }
        if (total <= 0.0) return payer;
        double u = rng_.uniform() * total;
        std::size_t c = 0;
        while (c + 1 < kNumClasses && (w[c] <= 0.0 || u >= w[c])) {
            u -= w[c];
            ++c;
        }
        while (w[c] <= 0.0) c = (c + kNumClasses - 1) % kNumClasses;
        const auto& members = by_class_[c];
        while (true) {
            const auto pick = members[rng_.below(members.size())];
            if (pick != payer) return pick;
        }
    }

    // Chooses inputs so that no co-spend component loses its last unspent
    // output: other components are pulled in first, and when nothing is left
    // outside, `must_return` asks the caller to pay change back to an input
    // address.
    std::vector<Utxo> take_inputs(std::size_t owner, std::size_t wanted, bool& must_return) {
        auto& e = entities_[owner];
        std::vector<Utxo> taken;
        wanted = std::max<std::size_t>(1, std::min(wanted, e.utxos.size()));
        for (std::size_t i = 0; i < wanted; ++i) {
            const auto j = rng_.below(e.utxos.size());
            taken.push_back(e.utxos[j]);
            e.utxos[j] = e.utxos.back();
            e.utxos.pop_back();
        }
        std::vector<std::uint32_t> roots;
        std::size_t remaining = 0;
        while (true) {
            roots.clear();
            for (const auto& u : taken) roots.push_back(root(u.address));
            std::sort(roots.begin(), roots.end());
            roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
            remaining = 0;
            for (auto r : roots) remaining += component_utxos_[r];
            remaining -= taken.size();
            if (remaining > 0 || e.utxos.empty()) break;
            taken.push_back(e.utxos.back());
            e.utxos.pop_back();
        }
        must_return = remaining == 0;

        std::size_t pooled = 0;
        for (auto r : roots) pooled += component_utxos_[r];
        for (std::size_t i = 1; i < roots.size(); ++i) component_parent_[roots[i]] = roots[0];
        component_utxos_[roots[0]] = pooled - taken.size();
        e.components -= roots.size() - 1;
        return taken;
    }

    void pay(std::size_t payer) {
        auto& e = entities_[payer];
        const auto& p = profile(payer);
        bool must_return = false;
        auto inputs = take_inputs(payer, static_cast<std::size_t>(rng_.between(1, static_cast<std::int64_t>(p.max_inputs))),
                                  must_return);

        RawTransaction tx;
        Satoshi total = 0;
        for (const auto& u : inputs) {
            tx.inputs.push_back({addresses_[u.address].text, u.value});
            total += u.value;
        }
        const auto rate = rng_.uniform(p.fee_rate_min, p.fee_rate_max);
        Satoshi fee = std::max(p.fee_floor, static_cast<Satoshi>(std::llround(static_cast<double>(total) * rate)));
        fee = std::min(fee, total / 2);
        const Satoshi payable = total - fee;

        auto outputs = static_cast<std::size_t>(
            rng_.between(static_cast<std::int64_t>(p.min_outputs), static_cast<std::int64_t>(p.max_outputs)));
        const bool change = rng_.bernoulli(p.change_rate) || must_return;
        Satoshi paid = payable;
        if (change) paid = static_cast<Satoshi>(std::floor(static_cast<double>(payable) * rng_.uniform(p.spend_min, p.spend_max)));
        outputs = std::max<std::size_t>(1, std::min<std::size_t>(outputs, static_cast<std::size_t>(std::max<Satoshi>(paid, 1))));

        std::vector<double> shares(outputs, 1.0);
        if (!p.equal_split) {
            for (auto& s : shares) s = 0.2 + rng_.uniform();
        }
        const double share_total = std::accumulate(shares.begin(), shares.end(), 0.0);
        Satoshi allotted = 0;
        for (std::size_t i = 0; i < outputs; ++i) {
            const bool last = i + 1 == outputs;
            const Satoshi amount = last ? paid - allotted
                                        : static_cast<Satoshi>(std::floor(static_cast<double>(paid) * shares[i] / share_total));
            allotted += amount;
            const std::size_t to = rng_.bernoulli(p.self_transfer_rate) ? payer : pick_counterparty(payer);
            credit(to, receiving_address(to), amount, tx);
            if (to != payer) {
                auto& recent = entities_[to].recent_payers;
                recent.push_back(payer);
                if (recent.size() > 16) recent.pop_front();
            }
        }
        if (must_return) {
            credit(payer, inputs.front().address, payable - paid, tx);
        } else if (change && payable - paid > 0) {
            credit(payer, receiving_address(payer), payable - paid, tx);
        }
        ++e.initiated;
        emit(std::move(tx));
    }

    void step(std::size_t e) {
        const auto& p = profile(e);
        if (p.coinbase_rate > 0.0 && rng_.bernoulli(p.coinbase_rate)) {
            emit_coinbase(e, static_cast<Satoshi>(rng_.lognormal(p.coinbase_log_mean, 0.3)) + 1);
            ++entities_[e].initiated;
            return;
        }
        if (!entities_[e].utxos.empty()) {
            pay(e);
            return;
        }
        // Nothing to spend: a counterparty with funds pays this entity instead.
        for (int attempt = 0; attempt < 64; ++attempt) {
            const auto from = pick_counterparty(e);
            if (from != e && !entities_[from].utxos.empty()) {
                pay_to(from, e);
                return;
            }
        }
        emit_coinbase(e, static_cast<Satoshi>(rng_.lognormal(p.funding_log_mean, p.funding_log_sd)) + 100000);
    }

    void pay_to(std::size_t payer, std::size_t payee) {
        const auto& p = profile(payer);
        bool must_return = false;
        auto inputs = take_inputs(payer, 1, must_return);
        RawTransaction tx;
        Satoshi total = 0;
        for (const auto& u : inputs) {
            tx.inputs.push_back({addresses_[u.address].text, u.value});
            total += u.value;
        }
        Satoshi fee = std::min(std::max(p.fee_floor, static_cast<Satoshi>(std::llround(static_cast<double>(total) * p.fee_rate_min))), total / 2);
        const Satoshi kept = must_return ? (total - fee) / 2 : 0;
        credit(payee, receiving_address(payee), total - fee - kept, tx);
        if (must_return) credit(payer, inputs.front().address, kept, tx);
        ++entities_[payer].initiated;
        emit(std::move(tx));
    }

    void consolidate(std::size_t owner) {
        auto& e = entities_[owner];
        if (e.components <= 1) return;
        std::vector<Utxo> inputs;
        std::unordered_set<std::uint32_t> seen;
        for (std::size_t i = 0; i < e.utxos.size();) {
            if (seen.insert(root(e.utxos[i].address)).second) {
                inputs.push_back(e.utxos[i]);
                e.utxos[i] = e.utxos.back();
                e.utxos.pop_back();
            } else {
                ++i;
            }
        }
        RawTransaction tx;
        Satoshi total = 0;
        for (const auto& u : inputs) {
            tx.inputs.push_back({addresses_[u.address].text, u.value});
            total += u.value;
            component_parent_[root(u.address)] = root(inputs.front().address);
        }
        e.components = 1;
        const Satoshi fee = std::min(profile(owner).fee_floor, total / 2);
        const std::uint32_t to = inputs.front().address;
        tx.outputs.push_back({addresses_[to].text, total - fee});
        e.utxos.push_back({to, total - fee});
        emit(std::move(tx));
    }

    const SynthConfig& cfg_;
    CounterRng rng_;
    std::int64_t spacing_ = 1;
    std::size_t sequence_ = 0;
    std::vector<Entity> entities_;
    std::array<std::vector<std::size_t>, kNumClasses> by_class_;
    std::vector<Address> addresses_;
    std::vector<std::uint32_t> component_parent_;
    std::vector<std::size_t> component_utxos_;
    std::unordered_set<std::string> address_texts_;
    std::unordered_set<std::string> tx_ids_;
    std::vector<RawTransaction> ledger_;
};

}  // namespace detail

inline SynthResult generate(const SynthConfig& config) {
    validate(config);
    return detail::LedgerSimulator(config).run();
}

inline void write_truth_csv(std::ostream& out, const SynthResult& result) {
    out << "entity_name,class\n";
    for (const auto& t : result.truth) out << t.entity_name << ',' << class_name(t.cls) << '\n';
}

// ---------------------------------------------------------------------------
// JSON configuration. Missing keys keep their current values, so a config
// file only needs the settings it changes.

inline void to_json(nlohmann::json& j, const ClassProfile& p) {
    j = {{"n_entities", p.n_entities},
         {"activity", p.activity},
         {"address_reuse_rate", p.address_reuse_rate},
         {"address_reuse_spread", p.address_reuse_spread},
         {"max_address_uses", p.max_address_uses},
         {"self_transfer_rate", p.self_transfer_rate},
         {"change_rate", p.change_rate},
         {"min_outputs", p.min_outputs},
         {"max_outputs", p.max_outputs},
         {"max_inputs", p.max_inputs},
         {"funding_log_mean", p.funding_log_mean},
         {"funding_log_sd", p.funding_log_sd},
         {"spend_min", p.spend_min},
         {"spend_max", p.spend_max},
         {"fee_rate_min", p.fee_rate_min},
         {"fee_rate_max", p.fee_rate_max},
         {"fee_floor", p.fee_floor},
         {"equal_split", p.equal_split},
         {"coinbase_rate", p.coinbase_rate},
         {"coinbase_log_mean", p.coinbase_log_mean},
         {"repeat_counterparty_rate", p.repeat_counterparty_rate},
         {"counterparty_affinity", p.counterparty_affinity}};
}

inline void update_from_json(const nlohmann::json& j, ClassProfile& p) {
    auto set = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    set("n_entities", p.n_entities);
    set("activity", p.activity);
    set("address_reuse_rate", p.address_reuse_rate);
    set("address_reuse_spread", p.address_reuse_spread);
    set("max_address_uses", p.max_address_uses);
    set("self_transfer_rate", p.self_transfer_rate);
    set("change_rate", p.change_rate);
    set("min_outputs", p.min_outputs);
    set("max_outputs", p.max_outputs);
    set("max_inputs", p.max_inputs);
    set("funding_log_mean", p.funding_log_mean);
    set("funding_log_sd", p.funding_log_sd);
    set("spend_min", p.spend_min);
    set("spend_max", p.spend_max);
    set("fee_rate_min", p.fee_rate_min);
    set("fee_rate_max", p.fee_rate_max);
    set("fee_floor", p.fee_floor);
    set("equal_split", p.equal_split);
    set("coinbase_rate", p.coinbase_rate);
    set("coinbase_log_mean", p.coinbase_log_mean);
    set("repeat_counterparty_rate", p.repeat_counterparty_rate);
    set("counterparty_affinity", p.counterparty_affinity);
}

inline nlohmann::json config_to_json(const SynthConfig& cfg) {
    nlohmann::json classes = nlohmann::json::object();
    for (std::size_t c = 0; c < kNumClasses; ++c) classes[std::string(kClassNames[c])] = cfg.classes[c];
    return {{"tx_budget", cfg.tx_budget},        {"start_time", cfg.start_time}, {"time_span", cfg.time_span},
            {"activity_log_sd", cfg.activity_log_sd}, {"seed", cfg.seed},        {"classes", classes}};
}

/// Applies the keys present in `j` on top of `cfg`.
inline void update_config(const nlohmann::json& j, SynthConfig& cfg) {
    if (!j.is_object()) throw InvalidConfig("config must be a JSON object");
    try {
        if (j.contains("tx_budget")) cfg.tx_budget = j.at("tx_budget").get<std::size_t>();
        if (j.contains("start_time")) cfg.start_time = j.at("start_time").get<std::int64_t>();
        if (j.contains("time_span")) cfg.time_span = j.at("time_span").get<std::int64_t>();
        if (j.contains("activity_log_sd")) cfg.activity_log_sd = j.at("activity_log_sd").get<double>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("classes")) {
            for (const auto& [name, profile] : j.at("classes").items()) {
                const auto cls = parse_class(name);
                if (!cls) throw InvalidConfig("unknown class '" + name + "' in config");
                update_from_json(profile, cfg.classes[class_index(*cls)]);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig(std::string("bad config value: ") + e.what());
    }
}

}  // namespace bitcascade
