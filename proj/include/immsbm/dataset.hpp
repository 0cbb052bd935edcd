#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <unordered_map>
#include <vector>

#include "immsbm/vocabulary.hpp"

namespace immsbm {

// One raw observation: a message (list of input labels) coupled with an
// answer (list of output labels).
struct MessageRecord {
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
};

struct Triplet {
    EntityId i, j, x;
    std::uint64_t count;
};

// Aggregated (input, input, output) counts, symmetry-closed over the input
// pair: count(i,j,x) == count(j,i,x), self-pairs allowed.
class TripletDataset {
  public:
    TripletDataset() = default;
    explicit TripletDataset(Vocabulary vocab) : vocab_(std::move(vocab)) {}

    const Vocabulary& vocab() const { return vocab_; }
    Vocabulary& vocab() { return vocab_; }

    void add(EntityId i, EntityId j, EntityId x, std::uint64_t count);
    std::uint64_t count(EntityId i, EntityId j, EntityId x) const;
    std::uint64_t total_weight() const { return total_weight_; }
    std::size_t num_unique() const { return counts_.size(); }
    bool empty() const { return counts_.empty(); }

    // Snapshot sorted by (i, j, x); deterministic iteration order.
    std::vector<Triplet> items() const;

    bool is_symmetric() const;
    // Raise mismatched mirror counts to the larger of the two; returns the
    // number of (ordered) entries adjusted.
    std::size_t close_symmetry();
    std::size_t symmetry_fixes() const { return symmetry_fixes_; }

  private:
    static std::uint64_t key(EntityId i, EntityId j, EntityId x);

    Vocabulary vocab_;
    std::unordered_map<std::uint64_t, std::uint64_t> counts_;
    std::uint64_t total_weight_ = 0;
    std::size_t symmetry_fixes_ = 0;
};

// Expand messages into symmetric triplets. Every unordered input pair {a,b}
// is emitted against every output: (a,b,x) and (b,a,x) with count 1 each,
// self-pairs {a,a} as (a,a,x) with count 2. With `reuse` set, unknown labels
// are rejected; otherwise the vocabulary is built from the records.
TripletDataset expand_messages(const std::vector<MessageRecord>& records,
                               const std::optional<Vocabulary>& reuse = {});

// Sliding-window expansion of an ordered sequence: inputs are the `window`
// items, the single next item is the output. Shorter sequences yield nothing.
std::vector<MessageRecord> expand_windows(const std::vector<std::string>& sequence,
                                          std::size_t window);

struct SplitResult {
    TripletDataset train;
    TripletDataset test;
    std::vector<std::size_t> test_indices; // record indices, ascending
};

// Message-level train/test split; both sides share one vocabulary built from
// the full corpus. Deterministic for a fixed seed.
SplitResult split(const std::vector<MessageRecord>& records, double test_fraction,
                  std::uint64_t seed);

// Triplet TSV: `i_label<TAB>j_label<TAB>x_label<TAB>count`, '#' comments
// ignored. Asymmetric files are auto-closed; see symmetry_fixes().
TripletDataset load_triplets(const std::filesystem::path& path,
                             const std::optional<Vocabulary>& reuse = {});
void save_triplets(const TripletDataset& data, const std::filesystem::path& path);

// Message JSONL: one {"inputs":[...],"outputs":[...]} object per line.
std::vector<MessageRecord> load_messages(const std::filesystem::path& path);
void save_messages(const std::vector<MessageRecord>& records,
                   const std::filesystem::path& path);

// Vocabulary sidecar: `I<TAB>label` / `O<TAB>label` lines, order = id order.
void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocab(const std::filesystem::path& path);

} // namespace immsbm
