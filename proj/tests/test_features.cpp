#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "bitcascade/features.hpp"
#include "bitcascade/pipeline.hpp"
#include "bitcascade/synth.hpp"
#include "oracles.hpp"

using namespace bitcascade;

namespace {

struct World {
    std::vector<RawTransaction> txs;
    AddressClustering clustering;
    LabeledEntitySet labels{{}};
    EntityTransactionGraph graph;
    AddressTransactionGraph address_graph;
};

World make_world(std::vector<RawTransaction> txs, const LabelBook& book) {
    World w;
    w.txs = std::move(txs);
    w.clustering = cluster_addresses(w.txs);
    w.labels = label_entities(w.clustering, book);
    w.graph = build_entity_graph(w.txs, w.clustering);
    w.address_graph = build_address_graph(w.txs);
    return w;
}

LabelBook label_all(const AddressClustering& c, EntityClass cls = EntityClass::Service) {
    LabelBook b;
    for (std::size_t a = 0; a < c.address_count(); ++a) {
        b.add(c.address(a), {"E" + std::to_string(c.entity_of(static_cast<AddressIndex>(a))), cls});
    }
    return b;
}

Satoshi sat(double btc) { return std::llround(btc * kSatoshiPerBtc); }

std::size_t column(const FeatureFrame& f, const std::string& name) {
    for (std::size_t i = 0; i < f.schema.size(); ++i) {
        if (f.schema[i].name == name) return i;
    }
    ADD_FAILURE() << "no column " << name;
    return 0;
}

SynthConfig small_config() {
    auto cfg = default_synth_config();
    for (auto& p : cfg.classes) p.n_entities = 3;
    cfg.tx_budget = 1500;
    return cfg;
}

}  // namespace

TEST(EntityFeatures, SingleIncomingEdge) {
    LabelBook book;
    book.add("r", {"R", EntityClass::Exchange});
    const auto w = make_world({{"cb", 1, {}, {{"r", 100000000}}}}, book);
    const auto f = entity_features(w.graph, w.labels);
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f.rows[0].values, (std::vector<double>{1.0, 0, 1.0, 1, 0, 1, 0}));
    EXPECT_EQ(f.feature_names(), (std::vector<std::string>{"btc_received", "btc_sent", "balance", "n_tx_receiver",
                                                           "n_tx_sender", "n_addr_receiving", "n_addr_sending"}));
}

TEST(EntityFeatures, SelfTransferOnlyBalanceIsMinusFees) {
    const std::vector<RawTransaction> txs = {
        {"t1", 1, {{"x1", 100}, {"x2", 50}}, {{"x1", 140}}},
        {"t2", 2, {{"x1", 140}}, {{"x2", 137}}},
    };
    LabelBook book;
    book.add("x1", {"X", EntityClass::Mixer});
    const auto w = make_world(txs, book);
    const auto f = entity_features(w.graph, w.labels);
    ASSERT_EQ(f.size(), 1u);
    // recompute from the raw ledger
    Satoshi spent = 0, got = 0, fees = 0;
    for (const auto& tx : txs) {
        for (const auto& io : tx.inputs) spent += io.value;
        for (const auto& io : tx.outputs) got += io.value;
        fees += oracle::fee_of(tx);
    }
    const auto& v = f.rows[0].values;
    EXPECT_EQ(sat(v[1]), spent);
    EXPECT_EQ(sat(v[0]), got);
    EXPECT_EQ(sat(v[2]), -fees);
    EXPECT_EQ(v[3], 2);
    EXPECT_EQ(v[4], 2);
}

TEST(EntityFeatures, RowPerLabeledEntity) {
    const auto txs = oracle::random_ledger(31, 120, 70);
    const auto c = cluster_addresses(txs);
    LabelBook book;
    for (std::size_t a = 0; a < c.address_count(); a += 3) book.add(c.address(a), {"E" + std::to_string(a), EntityClass::Gambling});
    const auto w = make_world(txs, book);
    const auto f = entity_features(w.graph, w.labels);
    EXPECT_EQ(f.size(), w.labels.labeled().size());
    for (const auto& r : f.rows) {
        EXPECT_TRUE(w.labels.is_labeled(r.entity));
        EXPECT_EQ(sat(r.values[2]), sat(r.values[0]) - sat(r.values[1]));
    }
}

TEST(AddressFeatures, UniquenessAndSiblings) {
    const std::vector<RawTransaction> txs = {
        {"t1", 1, {{"a1", 60}, {"a2", 40}}, {{"fresh", 90}}},
        {"t2", 2, {}, {{"a1", 5}}},
    };
    const auto c = cluster_addresses(txs);
    const auto w = make_world(txs, label_all(c));
    const auto f = address_features(w.address_graph, w.clustering, w.labels);
    ASSERT_EQ(f.size(), 3u);
    const auto uniq = column(f, "uniqueness");
    const auto sib = column(f, "siblings");
    std::map<std::string, std::vector<double>> by_address;
    for (std::size_t a = 0; a < c.address_count(); ++a) by_address[c.address(a)] = f.rows[a].values;
    EXPECT_EQ(by_address["fresh"][uniq], 1.0);
    EXPECT_EQ(by_address["fresh"][sib], 0.0);
    EXPECT_EQ(by_address["a1"][uniq], 0.0);  // t1 and t2
    EXPECT_EQ(by_address["a2"][uniq], 1.0);
    EXPECT_EQ(by_address["a1"][sib], 1.0);
    EXPECT_EQ(by_address["a2"][sib], 1.0);
    EXPECT_EQ(f.schema[uniq].kind, FeatureKind::Boolean);
}

TEST(AddressFeatures, SumsMatchEntityFrame) {
    const auto result = generate(small_config());
    const auto w = make_world(result.ledger, result.labels);
    const auto ent = entity_features(w.graph, w.labels);
    const auto addr = address_features(w.address_graph, w.clustering, w.labels);
    std::map<EntityId, Satoshi> received, sent;
    for (const auto& r : addr.rows) {
        received[r.entity] += sat(r.values[column(addr, "btc_received")]);
        sent[r.entity] += sat(r.values[column(addr, "btc_sent")]);
    }
    ASSERT_EQ(received.size(), ent.size());
    for (const auto& r : ent.rows) {
        EXPECT_EQ(received[r.entity], sat(r.values[0]));
        EXPECT_EQ(sent[r.entity], sat(r.values[1]));
    }
}

TEST(Motif1Features, UniqueBranchNoReverse) {
    const std::vector<RawTransaction> txs = {{"t1", 1, {{"a", 10}}, {{"b", 9}}}};
    const auto c = cluster_addresses(txs);
    const auto w = make_world(txs, label_all(c));
    const auto f = motif1_features(extract_1motifs(w.graph), PairIndex(w.graph), w.labels);
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f.rows[0].values[column(f, "n_similar_sent")], 1.0);
    EXPECT_EQ(f.rows[0].values[column(f, "n_similar_received")], 0.0);
    EXPECT_EQ(f.rows[0].values[column(f, "is_direct_loop")], 0.0);
    EXPECT_EQ(f.rows[0].entity, *c.entity_of("a"));
    EXPECT_EQ(f.feature_count(), 8u);
}

TEST(Motif1Features, DirectLoop) {
    const std::vector<RawTransaction> txs = {{"t1", 1, {{"a", 10}}, {{"a", 9}}}};
    const auto c = cluster_addresses(txs);
    const auto w = make_world(txs, label_all(c));
    const auto f = motif1_features(extract_1motifs(w.graph), PairIndex(w.graph), w.labels);
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f.rows[0].values[column(f, "is_direct_loop")], 1.0);
    EXPECT_EQ(f.rows[0].values[column(f, "n_similar_sent")], 1.0);
    EXPECT_EQ(f.rows[0].values[column(f, "n_similar_received")], 1.0);
}

TEST(Motif1Features, PairMultiplicitiesMatchBruteForce) {
    const auto txs = oracle::random_ledger(50, 50, 40, 2, 3);
    const auto c = cluster_addresses(txs);
    const auto w = make_world(txs, label_all(c));
    const PairIndex pairs(w.graph);
    const auto expected = oracle::pair_counts(txs, c);
    EXPECT_EQ(pairs.pair_count(), expected.size());
    for (const auto& [key, n] : expected) EXPECT_EQ(pairs.multiplicity(key.first, key.second), n);
    EXPECT_EQ(pairs.multiplicity(99999, 99998), 0u);

    const auto records = extract_1motifs(w.graph);
    const auto f = motif1_features(records, pairs, w.labels);
    ASSERT_EQ(f.size(), records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& b = records[i].branch;
        auto count = [&](EntityId x, EntityId y) {
            auto it = expected.find({x, y});
            return it == expected.end() ? 0.0 : static_cast<double>(it->second);
        };
        EXPECT_EQ(f.rows[i].values[column(f, "n_similar_sent")], count(b.e_in, b.e_out));
        EXPECT_EQ(f.rows[i].values[column(f, "n_similar_received")], count(b.e_out, b.e_in));
    }
}

TEST(Motif2Features, LoopFlags) {
    // a -> b -> a with a = {a1, a2}
    const std::vector<RawTransaction> aba = {{"t1", 1, {{"a1", 10}}, {{"b1", 9}}}, {"t2", 2, {{"b1", 9}}, {{"a2", 8}}}};
    AddressClustering c({"a1", "a2", "b1"}, {0, 0, 1});
    LabelBook book = label_all(c);
    const auto labels = label_entities(c, book);
    const auto g = build_entity_graph(aba, c);
    auto f = motif2_features(extract_2motifs(g), PairIndex(g), labels);
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f.rows[0].values[column(f, "is_loop_whole")], 1.0);
    EXPECT_EQ(f.rows[0].values[column(f, "is_loop_first")], 0.0);
    EXPECT_EQ(f.rows[0].values[column(f, "is_loop_second")], 0.0);
    EXPECT_EQ(f.feature_count(), 15u);

    const std::vector<RawTransaction> aaa = {{"t1", 1, {{"a1", 10}}, {{"a1", 9}}}, {"t2", 2, {{"a1", 9}}, {{"a1", 8}}}};
    const auto w = make_world(aaa, label_all(cluster_addresses(aaa)));
    f = motif2_features(extract_2motifs(w.graph), PairIndex(w.graph), w.labels);
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f.rows[0].values[column(f, "is_loop_whole")], 1.0);
    EXPECT_EQ(f.rows[0].values[column(f, "is_loop_first")], 1.0);
    EXPECT_EQ(f.rows[0].values[column(f, "is_loop_second")], 1.0);
}

TEST(Motif2Features, FeesMatchRawLedger) {
    const auto txs = oracle::random_ledger(61, 80, 50, 2, 3);
    const auto c = cluster_addresses(txs);
    const auto w = make_world(txs, label_all(c));
    std::map<std::string, Satoshi> fee;
    for (const auto& tx : txs) fee[tx.tx_id] = oracle::fee_of(tx);
    const auto records = extract_2motifs(w.graph);
    const auto f = motif2_features(records, PairIndex(w.graph), w.labels);
    ASSERT_EQ(f.size(), records.size());
    ASSERT_FALSE(records.empty());
    for (std::size_t i = 0; i < records.size(); ++i) {
        EXPECT_EQ(sat(f.rows[i].values[column(f, "fee_first")]), fee[w.graph.tx(records[i].first.tx).tx_id]);
        EXPECT_EQ(sat(f.rows[i].values[column(f, "fee_second")]), fee[w.graph.tx(records[i].second.tx).tx_id]);
        EXPECT_EQ(f.rows[i].entity, records[i].first.e_in);
    }
}

TEST(Frames, OnlyLabeledOwnersAndValidValues) {
    const auto result = generate(small_config());
    const auto frames = featurize(result.ledger, result.labels);
    const auto clustering = cluster_addresses(result.ledger);
    const auto labels = label_entities(clustering, result.labels);
    for (const auto* f : {&frames.entity, &frames.address, &frames.motif1, &frames.motif2}) {
        EXPECT_FALSE(f->empty());
        EXPECT_NO_THROW(f->validate());
        for (const auto& r : f->rows) {
            ASSERT_TRUE(labels.is_labeled(r.entity));
            EXPECT_EQ(r.label, labels.class_of(r.entity));
        }
    }
    EXPECT_EQ(frames.entity.feature_count(), 7u);
    EXPECT_EQ(frames.address.feature_count(), 7u);
    EXPECT_EQ(frames.motif1.feature_count(), 8u);
    EXPECT_EQ(frames.motif2.feature_count(), 15u);
    // every entity is labeled in a synthetic ledger, so records and rows biject
    const auto g = build_entity_graph(result.ledger, clustering);
    EXPECT_EQ(frames.motif1.size(), extract_1motifs(g).size());
}

TEST(Frames, UnlabeledSpendersDropped) {
    const std::vector<RawTransaction> txs = {{"t1", 1, {{"a", 10}}, {{"b", 9}}}, {"t2", 2, {{"b", 9}}, {{"a", 8}}}};
    LabelBook book;
    book.add("a", {"A", EntityClass::Exchange});
    const auto w = make_world(txs, book);
    const auto f = motif1_features(extract_1motifs(w.graph), PairIndex(w.graph), w.labels);
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f.rows[0].entity, *w.clustering.entity_of("a"));
    EXPECT_EQ(entity_features(w.graph, w.labels).size(), 1u);
    EXPECT_EQ(address_features(w.address_graph, w.clustering, w.labels).size(), 1u);
}

TEST(FrameCsv, RoundTripIsExact) {
    const auto result = generate(small_config());
    const auto frames = featurize(result.ledger, result.labels);
    for (const auto* f : {&frames.entity, &frames.address, &frames.motif1}) {
        std::ostringstream out;
        write_frame_csv(out, *f);
        std::istringstream in(out.str());
        EXPECT_EQ(read_frame_csv(in), *f);
    }
    FeatureFrame odd{make_schema({"x"}), {}};
    odd.add_row(3, EntityClass::Mixer, {0.1 + 0.2});
    odd.add_row(4, EntityClass::Service, {1e-300});
    odd.add_row(5, EntityClass::Service, {-123456789.123456789});
    std::ostringstream out;
    write_frame_csv(out, odd);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "entity_id,label,x");
    std::istringstream in(out.str());
    EXPECT_EQ(read_frame_csv(in), odd);
}

TEST(FrameCsv, Errors) {
    std::istringstream bad_header("id,label,x\n");
    EXPECT_THROW(read_frame_csv(bad_header), MalformedRecord);
    std::istringstream bad_class("entity_id,label,x\n1,Bank,2\n");
    EXPECT_THROW(read_frame_csv(bad_class), MalformedRecord);
    std::istringstream ragged("entity_id,label,x\n1,Mixer\n");
    EXPECT_THROW(read_frame_csv(ragged), MalformedRecord);
    std::istringstream bad_number("entity_id,label,x\n1,Mixer,abc\n");
    EXPECT_THROW(read_frame_csv(bad_number), MalformedRecord);
    FeatureFrame f{make_schema({"x"}), {}};
    EXPECT_THROW(f.add_row(0, EntityClass::Mixer, {1, 2}), SchemaMismatch);
}
