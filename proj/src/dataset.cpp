#include "immsbm/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "immsbm/errors.hpp"
#include "immsbm/io.hpp"

namespace immsbm {

namespace {

constexpr unsigned kIdBits = 21; // up to ~2M entities per space
constexpr std::uint64_t kIdMask = (1ull << kIdBits) - 1;

} // namespace

std::uint64_t TripletDataset::key(EntityId i, EntityId j, EntityId x) {
    return (static_cast<std::uint64_t>(i) << (2 * kIdBits)) |
           (static_cast<std::uint64_t>(j) << kIdBits) |
           static_cast<std::uint64_t>(x);
}

void TripletDataset::add(EntityId i, EntityId j, EntityId x, std::uint64_t count) {
    if (i >= vocab_.num_inputs() || j >= vocab_.num_inputs())
        throw DataError("input id out of vocabulary bounds");
    if (x >= vocab_.num_outputs())
        throw DataError("output id out of vocabulary bounds");
    if (count == 0) throw DataError("triplet count must be >= 1");
    counts_[key(i, j, x)] += count;
    total_weight_ += count;
}

std::uint64_t TripletDataset::count(EntityId i, EntityId j, EntityId x) const {
    auto it = counts_.find(key(i, j, x));
    return it == counts_.end() ? 0 : it->second;
}

std::vector<Triplet> TripletDataset::items() const {
    std::vector<Triplet> out;
    out.reserve(counts_.size());
    for (const auto& [k, c] : counts_) {
        out.push_back({static_cast<EntityId>(k >> (2 * kIdBits)),
                       static_cast<EntityId>((k >> kIdBits) & kIdMask),
                       static_cast<EntityId>(k & kIdMask), c});
    }
    std::sort(out.begin(), out.end(), [](const Triplet& a, const Triplet& b) {
        return std::tie(a.i, a.j, a.x) < std::tie(b.i, b.j, b.x);
    });
    return out;
}

bool TripletDataset::is_symmetric() const {
    for (const auto& [k, c] : counts_) {
        EntityId i = static_cast<EntityId>(k >> (2 * kIdBits));
        EntityId j = static_cast<EntityId>((k >> kIdBits) & kIdMask);
        EntityId x = static_cast<EntityId>(k & kIdMask);
        if (count(j, i, x) != c) return false;
    }
    return true;
}

std::size_t TripletDataset::close_symmetry() {
    std::size_t fixes = 0;
    for (const auto& t : items()) {
        std::uint64_t mirror = count(t.j, t.i, t.x);
        std::uint64_t cur = count(t.i, t.j, t.x);
        if (cur == mirror) continue;
        std::uint64_t target = std::max(cur, mirror);
        if (cur < target) {
            counts_[key(t.i, t.j, t.x)] = target;
            total_weight_ += target - cur;
            ++fixes;
        }
        if (mirror < target) {
            counts_[key(t.j, t.i, t.x)] = target;
            total_weight_ += target - mirror;
            ++fixes;
        }
    }
    symmetry_fixes_ += fixes;
    return fixes;
}

TripletDataset expand_messages(const std::vector<MessageRecord>& records,
                               const std::optional<Vocabulary>& reuse) {
    if (records.empty()) throw DataError("expand_messages: no records");
    TripletDataset ds(reuse.value_or(Vocabulary{}));
    const bool build = !reuse.has_value();
    auto input_id = [&](const std::string& label) -> EntityId {
        if (build) return ds.vocab().add_input(label);
        auto id = ds.vocab().input_id(label);
        if (!id) throw DataError("unknown input label: " + label);
        return *id;
    };
    auto output_id = [&](const std::string& label) -> EntityId {
        if (build) return ds.vocab().add_output(label);
        auto id = ds.vocab().output_id(label);
        if (!id) throw DataError("unknown output label: " + label);
        return *id;
    };
    for (const auto& rec : records) {
        if (rec.inputs.empty()) throw DataError("message with empty inputs");
        if (rec.outputs.empty()) throw DataError("message with empty outputs");
        std::vector<EntityId> in, out;
        in.reserve(rec.inputs.size());
        out.reserve(rec.outputs.size());
        for (const auto& s : rec.inputs) in.push_back(input_id(s));
        for (const auto& s : rec.outputs) out.push_back(output_id(s));
        for (EntityId x : out) {
            for (std::size_t a = 0; a < in.size(); ++a) {
                ds.add(in[a], in[a], x, 2); // self-pair, both orders collapse
                for (std::size_t b = a + 1; b < in.size(); ++b) {
                    ds.add(in[a], in[b], x, 1);
                    ds.add(in[b], in[a], x, 1);
                }
            }
        }
    }
    return ds;
}

std::vector<MessageRecord> expand_windows(const std::vector<std::string>& sequence,
                                          std::size_t window) {
    if (window < 1) throw DataError("window must be >= 1");
    std::vector<MessageRecord> out;
    if (sequence.size() <= window) return out;
    for (std::size_t pos = 0; pos + window < sequence.size(); ++pos) {
        MessageRecord rec;
        rec.inputs.assign(sequence.begin() + static_cast<std::ptrdiff_t>(pos),
                          sequence.begin() + static_cast<std::ptrdiff_t>(pos + window));
        rec.outputs.push_back(sequence[pos + window]);
        out.push_back(std::move(rec));
    }
    return out;
}

SplitResult split(const std::vector<MessageRecord>& records, double test_fraction,
                  std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw DataError("test_fraction must be in (0, 1)");
    if (records.size() < 2) throw DataError("split needs at least 2 records");

    const std::size_t n = records.size();
    std::size_t n_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

    // Hand-rolled Fisher-Yates; std::shuffle output is not pinned by the
    // standard, this is.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(idx[i], idx[j]);
    }

    std::vector<std::size_t> test_idx(idx.begin(),
                                      idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::sort(test_idx.begin(), test_idx.end());

    // Shared vocabulary over the full corpus, in record order.
    Vocabulary vocab = expand_messages(records).vocab();

    std::vector<MessageRecord> train_recs, test_recs;
    std::size_t ti = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (ti < test_idx.size() && test_idx[ti] == i) {
            test_recs.push_back(records[i]);
            ++ti;
        } else {
            train_recs.push_back(records[i]);
        }
    }
    SplitResult res{expand_messages(train_recs, vocab),
                    expand_messages(test_recs, vocab), std::move(test_idx)};
    return res;
}

TripletDataset load_triplets(const std::filesystem::path& path,
                             const std::optional<Vocabulary>& reuse) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    TripletDataset ds(reuse.value_or(Vocabulary{}));
    const bool build = !reuse.has_value();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::array<std::string, 4> field;
        std::size_t start = 0, f = 0;
        for (; f < 4; ++f) {
            std::size_t tab = line.find('\t', start);
            if (tab == std::string::npos) {
                if (f != 3) break;
                field[f] = line.substr(start);
                start = line.size();
            } else {
                field[f] = line.substr(start, tab - start);
                start = tab + 1;
            }
        }
        if (f != 4 || field[0].empty() || field[1].empty() || field[2].empty())
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": expected i<TAB>j<TAB>x<TAB>count");
        std::uint64_t count = 0;
        auto [p, ec] = std::from_chars(field[3].data(),
                                       field[3].data() + field[3].size(), count);
        if (ec != std::errc{} || p != field[3].data() + field[3].size() || count == 0)
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": bad count '" + field[3] + "'");
        EntityId i, j, x;
        if (build) {
            i = ds.vocab().add_input(field[0]);
            j = ds.vocab().add_input(field[1]);
            x = ds.vocab().add_output(field[2]);
        } else {
            auto oi = ds.vocab().input_id(field[0]);
            auto oj = ds.vocab().input_id(field[1]);
            auto ox = ds.vocab().output_id(field[2]);
            if (!oi || !oj || !ox)
                throw DataError(path.string() + ":" + std::to_string(lineno) +
                                ": label not in vocabulary");
            i = *oi;
            j = *oj;
            x = *ox;
        }
        ds.add(i, j, x, count);
    }
    if (!ds.is_symmetric()) ds.close_symmetry();
    return ds;
}

void save_triplets(const TripletDataset& data, const std::filesystem::path& path) {
    std::ostringstream out;
    const auto& v = data.vocab();
    for (const auto& t : data.items()) {
        out << v.input_label(t.i) << '\t' << v.input_label(t.j) << '\t'
            << v.output_label(t.x) << '\t' << t.count << '\n';
    }
    atomic_write(path, out.str());
}

std::vector<MessageRecord> load_messages(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    std::vector<MessageRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("inputs") ||
            !obj.contains("outputs"))
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": expected {\"inputs\":[...],\"outputs\":[...]}");
        MessageRecord rec;
        for (const auto& s : obj.at("inputs")) rec.inputs.push_back(s.get<std::string>());
        for (const auto& s : obj.at("outputs")) rec.outputs.push_back(s.get<std::string>());
        if (rec.inputs.empty() || rec.outputs.empty())
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": inputs and outputs must be non-empty");
        records.push_back(std::move(rec));
    }
    return records;
}

void save_messages(const std::vector<MessageRecord>& records,
                   const std::filesystem::path& path) {
    std::ostringstream out;
    for (const auto& rec : records) {
        nlohmann::json obj{{"inputs", rec.inputs}, {"outputs", rec.outputs}};
        out << obj.dump() << '\n';
    }
    atomic_write(path, out.str());
}

void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path) {
    std::ostringstream out;
    for (const auto& s : vocab.input_labels()) out << "I\t" << s << '\n';
    for (const auto& s : vocab.output_labels()) out << "O\t" << s << '\n';
    atomic_write(path, out.str());
}

Vocabulary load_vocab(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    Vocabulary vocab;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (line.size() < 3 || line[1] != '\t' || (line[0] != 'I' && line[0] != 'O'))
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": expected I<TAB>label or O<TAB>label");
        if (line[0] == 'I')
            vocab.add_input(line.substr(2));
        else
            vocab.add_output(line.substr(2));
    }
    return vocab;
}

} // namespace immsbm
