#include "satire/util/json_io.hpp"

#include "satire/error.hpp"
#include "satire/util/text.hpp"

namespace satire {

json read_json_file(const std::filesystem::path& path) {
    std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw StoreError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& value) {
    write_file_atomic(path, value.dump(2) + "\n");
}

}  // namespace satire
