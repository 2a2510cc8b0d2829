#include "satire/eval/shuffle.hpp"

#include <charconv>
#include <numeric>

#include "satire/error.hpp"
#include "satire/util/random.hpp"

namespace satire::eval {

const KeyEntry* ShuffleKey::find(const std::string& record_or_position) const {
    for (const auto& e : entries) {
        if (e.record_id == record_or_position) return &e;
    }
    std::size_t pos = 0;
    const char* first = record_or_position.data();
    const char* last = first + record_or_position.size();
    auto [ptr, ec] = std::from_chars(first, last, pos);
    if (ec == std::errc{} && ptr == last && pos >= 1 && pos <= entries.size() && entries[pos - 1].position == pos) {
        return &entries[pos - 1];
    }
    return nullptr;
}

BlindPacket blind_shuffle(const std::vector<generation::DefinitionRecord>& records, std::uint64_t seed) {
    if (records.empty()) throw InvalidArgument("nothing to shuffle");
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    order = seeded_shuffle(std::move(order), seed);
    BlindPacket packet;
    packet.key.seed = seed;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& r = records[order[i]];
        packet.entries.push_back({i + 1, r.word, r.definition_text});
        packet.key.entries.push_back({i + 1, r.record_id, r.word, r.condition, r.downgraded});
    }
    return packet;
}

json packet_to_json(const std::vector<PacketEntry>& entries) {
    json items = json::array();
    for (const auto& e : entries) {
        items.push_back({{"position", e.position}, {"word", e.word}, {"definition_text", e.definition_text}});
    }
    return {{"entries", items}};
}

json to_json(const ShuffleKey& key) {
    json items = json::array();
    for (const auto& e : key.entries) {
        items.push_back({{"position", e.position},
                         {"record_id", e.record_id},
                         {"word", e.word},
                         {"word_source", generation::to_string(e.condition.word_source)},
                         {"grounding", generation::to_string(e.condition.grounding)},
                         {"downgraded", e.downgraded}});
    }
    return {{"seed", key.seed}, {"entries", items}};
}

ShuffleKey shuffle_key_from_json(const json& j) {
    try {
        ShuffleKey key;
        key.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& e : j.at("entries")) {
            KeyEntry k;
            k.position = e.at("position").get<std::size_t>();
            k.record_id = e.at("record_id").get<std::string>();
            k.word = e.at("word").get<std::string>();
            k.condition.word_source = generation::word_source_from_string(e.at("word_source").get<std::string>());
            k.condition.grounding = generation::grounding_from_string(e.at("grounding").get<std::string>());
            k.downgraded = e.value("downgraded", false);
            key.entries.push_back(std::move(k));
        }
        for (std::size_t i = 0; i < key.entries.size(); ++i) {
            if (key.entries[i].position != i + 1) throw ParseError("key positions must run 1..N in order");
        }
        return key;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed shuffle key: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("malformed shuffle key: ") + e.what());
    }
}

}  // namespace satire::eval
