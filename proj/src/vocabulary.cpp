#include "immsbm/vocabulary.hpp"

#include "immsbm/errors.hpp"

namespace immsbm {

EntityId Vocabulary::add_input(const std::string& label) {
    auto it = input_ids_.find(label);
    if (it != input_ids_.end()) return it->second;
    EntityId id = static_cast<EntityId>(input_labels_.size());
    input_labels_.push_back(label);
    input_ids_.emplace(label, id);
    return id;
}

EntityId Vocabulary::add_output(const std::string& label) {
    auto it = output_ids_.find(label);
    if (it != output_ids_.end()) return it->second;
    EntityId id = static_cast<EntityId>(output_labels_.size());
    output_labels_.push_back(label);
    output_ids_.emplace(label, id);
    return id;
}

std::optional<EntityId> Vocabulary::input_id(const std::string& label) const {
    auto it = input_ids_.find(label);
    if (it == input_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<EntityId> Vocabulary::output_id(const std::string& label) const {
    auto it = output_ids_.find(label);
    if (it == output_ids_.end()) return std::nullopt;
    return it->second;
}

const std::string& Vocabulary::input_label(EntityId id) const {
    if (id >= input_labels_.size())
        throw DataError("input id out of range: " + std::to_string(id));
    return input_labels_[id];
}

const std::string& Vocabulary::output_label(EntityId id) const {
    if (id >= output_labels_.size())
        throw DataError("output id out of range: " + std::to_string(id));
    return output_labels_[id];
}

Vocabulary Vocabulary::from_labels(std::vector<std::string> inputs,
                                   std::vector<std::string> outputs) {
    Vocabulary v;
    for (auto& s : inputs) {
        if (v.input_ids_.count(s))
            throw DataError("duplicate input label: " + s);
        v.add_input(s);
    }
    for (auto& s : outputs) {
        if (v.output_ids_.count(s))
            throw DataError("duplicate output label: " + s);
        v.add_output(s);
    }
    return v;
}

} // namespace immsbm
