#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace immsbm {

using EntityId = std::uint32_t;

// Bidirectional label <-> dense id map, kept separately for the input space
// and the output space. Ids are positions in insertion order.
class Vocabulary {
  public:
    EntityId add_input(const std::string& label);
    EntityId add_output(const std::string& label);

    std::optional<EntityId> input_id(const std::string& label) const;
    std::optional<EntityId> output_id(const std::string& label) const;

    const std::string& input_label(EntityId id) const;
    const std::string& output_label(EntityId id) const;

    std::size_t num_inputs() const { return input_labels_.size(); }
    std::size_t num_outputs() const { return output_labels_.size(); }

    const std::vector<std::string>& input_labels() const { return input_labels_; }
    const std::vector<std::string>& output_labels() const { return output_labels_; }

    bool operator==(const Vocabulary& other) const {
        return input_labels_ == other.input_labels_ &&
               output_labels_ == other.output_labels_;
    }

    static Vocabulary from_labels(std::vector<std::string> inputs,
                                  std::vector<std::string> outputs);

  private:
    std::vector<std::string> input_labels_;
    std::vector<std::string> output_labels_;
    std::unordered_map<std::string, EntityId> input_ids_;
    std::unordered_map<std::string, EntityId> output_ids_;
};

} // namespace immsbm
