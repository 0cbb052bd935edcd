#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <random>
#include <set>

#include <doctest.h>

#include "immsbm/dataset.hpp"
#include "immsbm/errors.hpp"
#include "immsbm/io.hpp"

using namespace immsbm;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    auto dir = fs::temp_directory_path() /
               ("immsbm_corpus_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

std::uint64_t count_of(const TripletDataset& ds, const std::string& i,
                       const std::string& j, const std::string& x) {
    auto ii = ds.vocab().input_id(i), jj = ds.vocab().input_id(j);
    auto xx = ds.vocab().output_id(x);
    REQUIRE(ii);
    REQUIRE(jj);
    REQUIRE(xx);
    return ds.count(*ii, *jj, *xx);
}

} // namespace

TEST_CASE("expand_messages: two-input message") {
    auto ds = expand_messages({{{"A", "B"}, {"D"}}});
    CHECK(count_of(ds, "A", "A", "D") == 2);
    CHECK(count_of(ds, "B", "B", "D") == 2);
    CHECK(count_of(ds, "A", "B", "D") == 1);
    CHECK(count_of(ds, "B", "A", "D") == 1);
    CHECK(ds.num_unique() == 4);
    CHECK(ds.total_weight() == 6);
    CHECK(ds.is_symmetric());
}

TEST_CASE("expand_messages: single input, two outputs") {
    auto ds = expand_messages({{{"A"}, {"D", "E"}}});
    CHECK(count_of(ds, "A", "A", "D") == 2);
    CHECK(count_of(ds, "A", "A", "E") == 2);
    CHECK(ds.num_unique() == 2);
}

TEST_CASE("expand_messages: identical messages aggregate additively") {
    std::vector<MessageRecord> one = {{{"A", "B"}, {"D"}}};
    std::vector<MessageRecord> two = {one[0], one[0]};
    auto ds1 = expand_messages(one);
    auto ds2 = expand_messages(two);
    for (const auto& t : ds1.items())
        CHECK(ds2.count(t.i, t.j, t.x) == 2 * t.count);
}

TEST_CASE("expand_messages: total weight is m(m+1) per output") {
    std::vector<MessageRecord> records = {
        {{"a", "b", "c"}, {"x", "y"}},       // m=3: 3*4*2 = 24
        {{"a"}, {"x"}},                      // m=1: 1*2*1 = 2
        {{"b", "c", "d", "e"}, {"z"}},       // m=4: 4*5*1 = 20
    };
    auto ds = expand_messages(records);
    CHECK(ds.total_weight() == 24 + 2 + 20);
    CHECK(ds.is_symmetric());
}

TEST_CASE("expand_messages: duplicate inputs within a message aggregate") {
    // repeated entity: pairs are enumerated over the multiset occurrences
    auto ds = expand_messages({{{"A", "A"}, {"D"}}});
    CHECK(count_of(ds, "A", "A", "D") == 6); // (A,A) self twice + cross pair
    CHECK(ds.is_symmetric());
}

TEST_CASE("expand_messages: reuse policy rejects unknown labels") {
    auto vocab = Vocabulary::from_labels({"A"}, {"D"});
    CHECK_THROWS_AS(expand_messages({{{"A", "B"}, {"D"}}}, vocab), DataError);
    CHECK_THROWS_AS(expand_messages({{{"A"}, {"E"}}}, vocab), DataError);
}

TEST_CASE("expand_windows") {
    auto one = expand_windows({"s1", "s2", "s3", "s4", "s5"}, 4);
    REQUIRE(one.size() == 1);
    CHECK(one[0].inputs == std::vector<std::string>{"s1", "s2", "s3", "s4"});
    CHECK(one[0].outputs == std::vector<std::string>{"s5"});

    auto tiny = expand_windows({"s1", "s2"}, 1);
    REQUIRE(tiny.size() == 1);
    CHECK(tiny[0].inputs == std::vector<std::string>{"s1"});
    CHECK(tiny[0].outputs == std::vector<std::string>{"s2"});

    CHECK(expand_windows({"s1", "s2", "s3", "s4", "s5", "s6"}, 4).size() == 2);
    CHECK(expand_windows({"s1", "s2"}, 4).empty()); // too short: no records
}

TEST_CASE("split: sizes, determinism, partition") {
    std::vector<MessageRecord> records;
    for (int n = 0; n < 100; ++n)
        records.push_back({{"in" + std::to_string(n % 17)},
                           {"out" + std::to_string(n % 5)}});

    auto r1 = split(records, 0.10, 42);
    CHECK(r1.test_indices.size() == 10);
    CHECK(r1.train.vocab() == r1.test.vocab());

    auto r2 = split(records, 0.10, 42);
    CHECK(r1.test_indices == r2.test_indices);

    auto r3 = split(records, 0.10, 43);
    CHECK(r1.test_indices != r3.test_indices); // overwhelmingly likely

    // partition: indices unique and in range
    std::set<std::size_t> seen(r1.test_indices.begin(), r1.test_indices.end());
    CHECK(seen.size() == 10);
    for (auto idx : r1.test_indices) CHECK(idx < records.size());

    // triplet mass splits exactly
    auto full = expand_messages(records);
    CHECK(r1.train.total_weight() + r1.test.total_weight() == full.total_weight());
}

TEST_CASE("split: two records, fraction 0.5") {
    std::vector<MessageRecord> records = {{{"a"}, {"x"}}, {{"b"}, {"y"}}};
    auto r = split(records, 0.5, 0);
    CHECK(r.test_indices.size() == 1);
    CHECK(!r.train.empty());
    CHECK(!r.test.empty());
}

TEST_CASE("split: rejects degenerate inputs") {
    std::vector<MessageRecord> one = {{{"a"}, {"x"}}};
    CHECK_THROWS_AS(split(one, 0.5, 0), DataError);
    std::vector<MessageRecord> two = {{{"a"}, {"x"}}, {{"b"}, {"y"}}};
    CHECK_THROWS_AS(split(two, 0.0, 0), DataError);
    CHECK_THROWS_AS(split(two, 1.0, 0), DataError);
}

TEST_CASE("triplet TSV round-trip") {
    auto dir = temp_dir();
    auto ds = expand_messages({{{"A", "B"}, {"D"}}, {{"B", "C"}, {"D", "E"}}});
    save_triplets(ds, dir / "t.tsv");
    auto back = load_triplets(dir / "t.tsv");
    CHECK(back.vocab() == ds.vocab());
    CHECK(back.total_weight() == ds.total_weight());
    for (const auto& t : ds.items()) CHECK(back.count(t.i, t.j, t.x) == t.count);
    fs::remove_all(dir);
}

TEST_CASE("triplet TSV: malformed row reported with line number") {
    auto dir = temp_dir();
    atomic_write(dir / "bad.tsv", "a\tb\tx\t1\n# comment\na\tb\n");
    try {
        load_triplets(dir / "bad.tsv");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("triplet TSV: asymmetric file auto-closed with a counter") {
    auto dir = temp_dir();
    atomic_write(dir / "asym.tsv", "a\tb\tx\t3\nb\ta\tx\t1\nc\tc\ty\t2\n");
    auto ds = load_triplets(dir / "asym.tsv");
    CHECK(ds.is_symmetric());
    CHECK(ds.symmetry_fixes() > 0);
    auto a = *ds.vocab().input_id("a");
    auto b = *ds.vocab().input_id("b");
    auto x = *ds.vocab().output_id("x");
    CHECK(ds.count(a, b, x) == 3); // raised to the larger mirror count
    CHECK(ds.count(b, a, x) == 3);
    fs::remove_all(dir);
}

TEST_CASE("message JSONL round-trip") {
    auto dir = temp_dir();
    std::vector<MessageRecord> records = {{{"a", "b"}, {"x"}},
                                          {{"c"}, {"y", "z"}}};
    save_messages(records, dir / "m.jsonl");
    auto back = load_messages(dir / "m.jsonl");
    REQUIRE(back.size() == records.size());
    for (std::size_t n = 0; n < records.size(); ++n) {
        CHECK(back[n].inputs == records[n].inputs);
        CHECK(back[n].outputs == records[n].outputs);
    }
    fs::remove_all(dir);
}

TEST_CASE("vocabulary sidecar round-trip") {
    auto dir = temp_dir();
    auto vocab = Vocabulary::from_labels({"b", "a", "c"}, {"y", "x"});
    save_vocab(vocab, dir / "v.tsv");
    CHECK(load_vocab(dir / "v.tsv") == vocab); // id order preserved
    fs::remove_all(dir);
}

TEST_CASE("vocabulary: duplicates rejected, lookups round-trip") {
    CHECK_THROWS_AS(Vocabulary::from_labels({"a", "a"}, {"x"}), DataError);
    auto vocab = Vocabulary::from_labels({"a", "b"}, {"x"});
    CHECK(*vocab.input_id("b") == 1);
    CHECK(vocab.input_label(1) == "b");
    CHECK(!vocab.input_id("zzz"));
}

TEST_CASE("dataset: close_symmetry and bounds checks") {
    auto vocab = Vocabulary::from_labels({"a", "b"}, {"x"});
    TripletDataset ds(vocab);
    ds.add(0, 1, 0, 5);
    CHECK(!ds.is_symmetric());
    CHECK(ds.close_symmetry() == 1);
    CHECK(ds.is_symmetric());
    CHECK(ds.count(1, 0, 0) == 5);
    CHECK_THROWS_AS(ds.add(2, 0, 0, 1), DataError); // input id out of range
    CHECK_THROWS_AS(ds.add(0, 0, 1, 1), DataError); // output id out of range
    CHECK_THROWS_AS(ds.add(0, 0, 0, 0), DataError); // zero count
}
