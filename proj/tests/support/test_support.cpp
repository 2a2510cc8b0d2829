#include "test_support.hpp"

#include "satire/util/json_io.hpp"
#include "satire/util/text.hpp"

namespace testing {

namespace {

bool has_type(const json& v, const std::string& type) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    if (type == "integer") return v.is_number_integer();
    if (type == "number") return v.is_number();
    return false;
}

std::string check(const json& root, const json& schema, const json& v, const std::string& path) {
    if (schema.contains("$ref")) {
        const auto ref = schema["$ref"].get<std::string>();
        const std::string prefix = "#/definitions/";
        if (ref.rfind(prefix, 0) != 0) return path + ": unsupported $ref " + ref;
        return check(root, root.at("definitions").at(ref.substr(prefix.size())), v, path);
    }
    if (schema.contains("type")) {
        const auto& t = schema["type"];
        bool ok = false;
        if (t.is_array()) {
            for (const auto& each : t) ok = ok || has_type(v, each.get<std::string>());
        } else {
            ok = has_type(v, t.get<std::string>());
        }
        if (!ok) return path + ": expected type " + t.dump() + ", got " + v.dump();
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& option : schema["enum"]) found = found || option == v;
        if (!found) return path + ": " + v.dump() + " not in " + schema["enum"].dump();
    }
    if (v.is_string() && schema.contains("minLength") &&
        satire::utf8_length(v.get<std::string>()) < schema["minLength"].get<std::size_t>()) {
        return path + ": string shorter than " + schema["minLength"].dump();
    }
    if (v.is_number()) {
        if (schema.contains("minimum") && v.get<double>() < schema["minimum"].get<double>()) {
            return path + ": below minimum";
        }
        if (schema.contains("maximum") && v.get<double>() > schema["maximum"].get<double>()) {
            return path + ": above maximum";
        }
    }
    if (v.is_object()) {
        if (schema.contains("required")) {
            for (const auto& key : schema["required"]) {
                if (!v.contains(key.get<std::string>())) return path + ": missing " + key.get<std::string>();
            }
        }
        const json props = schema.value("properties", json::object());
        for (const auto& [key, child] : v.items()) {
            if (props.contains(key)) {
                auto err = check(root, props[key], child, path + "." + key);
                if (!err.empty()) return err;
            } else if (schema.contains("additionalProperties") && schema["additionalProperties"] == false) {
                return path + ": unexpected property " + key;
            }
        }
    }
    if (v.is_array()) {
        if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>()) return path + ": too few items";
        if (schema.contains("maxItems") && v.size() > schema["maxItems"].get<std::size_t>()) return path + ": too many items";
        if (schema.contains("items")) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                auto err = check(root, schema["items"], v[i], path + "[" + std::to_string(i) + "]");
                if (!err.empty()) return err;
            }
        }
    }
    return "";
}

}  // namespace

std::string schema_violation(const json& schema, const json& value) { return check(schema, schema, value, "$"); }

std::string schema_violation(const std::string& schema_file, const json& value) {
    return schema_violation(satire::read_json_file(schema_dir() / schema_file), value);
}

}  // namespace testing
