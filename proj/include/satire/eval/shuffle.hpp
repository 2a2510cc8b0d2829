#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "satire/generation.hpp"

namespace satire::eval {

using json = nlohmann::json;

/// What an annotator sees. Nothing here reveals the condition.
struct PacketEntry {
    std::size_t position = 0;  // 1-based
    std::string word;
    std::string definition_text;
};

struct KeyEntry {
    std::size_t position = 0;
    std::string record_id;
    std::string word;
    generation::Condition condition;
    bool downgraded = false;
};

struct ShuffleKey {
    std::uint64_t seed = 0;
    std::vector<KeyEntry> entries;  // by position

    /// Accepts a record id or a packet position written as a decimal string.
    const KeyEntry* find(const std::string& record_or_position) const;
};

struct BlindPacket {
    std::vector<PacketEntry> entries;
    ShuffleKey key;
};

/// Seeded Fisher-Yates permutation. InvalidArgument on an empty input.
BlindPacket blind_shuffle(const std::vector<generation::DefinitionRecord>& records, std::uint64_t seed);

json packet_to_json(const std::vector<PacketEntry>& entries);
json to_json(const ShuffleKey& key);
ShuffleKey shuffle_key_from_json(const json& j);

}  // namespace satire::eval
