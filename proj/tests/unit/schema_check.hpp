#pragma once

// Just enough JSON Schema to check the run reports: type, enum, const,
// properties/required/additionalProperties, items, numeric bounds, oneOf and
// local $ref.

#include <string>
#include <vector>

#include <json.hpp>

namespace schema_check {

using nlohmann::json;

class Validator {
 public:
  explicit Validator(json root) : root_(std::move(root)) {}

  std::vector<std::string> validate(const json& doc) const {
    std::vector<std::string> errors;
    check(root_, doc, "$", errors);
    return errors;
  }

 private:
  const json& resolve(const json& schema) const {
    if (!schema.contains("$ref")) return schema;
    const std::string ref = schema["$ref"];
    // only "#/$defs/name"
    return resolve(root_.at("$defs").at(ref.substr(ref.rfind('/') + 1)));
  }

  static bool has_type(const json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "integer") return v.is_number_integer() || v.is_number_unsigned();
    if (t == "number") return v.is_number();
    return false;
  }

  void check(const json& raw, const json& v, const std::string& at, std::vector<std::string>& errors) const {
    const json& s = resolve(raw);
    if (s.contains("oneOf")) {
      int matched = 0;
      for (const auto& alt : s["oneOf"]) {
        std::vector<std::string> sub;
        check(alt, v, at, sub);
        matched += sub.empty();
      }
      if (matched != 1) errors.push_back(at + ": matched " + std::to_string(matched) + " oneOf alternatives");
      return;
    }
    if (s.contains("type")) {
      bool ok = false;
      if (s["type"].is_array()) {
        for (const auto& t : s["type"]) ok = ok || has_type(v, t.get<std::string>());
      } else {
        ok = has_type(v, s["type"].get<std::string>());
      }
      if (!ok) {
        errors.push_back(at + ": wrong type (" + std::string(v.type_name()) + ")");
        return;
      }
    }
    if (s.contains("const") && v != s["const"]) errors.push_back(at + ": expected " + s["const"].dump());
    if (s.contains("enum")) {
      bool found = false;
      for (const auto& e : s["enum"]) found = found || e == v;
      if (!found) errors.push_back(at + ": " + v.dump() + " not in enum");
    }
    if (v.is_number()) {
      const double x = v.get<double>();
      if (s.contains("minimum") && x < s["minimum"].get<double>()) errors.push_back(at + ": below minimum");
      if (s.contains("maximum") && x > s["maximum"].get<double>()) errors.push_back(at + ": above maximum");
      if (s.contains("exclusiveMinimum") && x <= s["exclusiveMinimum"].get<double>()) {
        errors.push_back(at + ": not above exclusiveMinimum");
      }
    }
    if (v.is_object()) {
      if (s.contains("required")) {
        for (const auto& r : s["required"]) {
          if (!v.contains(r.get<std::string>())) errors.push_back(at + ": missing '" + r.get<std::string>() + "'");
        }
      }
      const json props = s.value("properties", json::object());
      for (const auto& [key, value] : v.items()) {
        if (props.contains(key)) {
          check(props[key], value, at + "." + key, errors);
        } else if (s.contains("additionalProperties")) {
          const auto& extra = s["additionalProperties"];
          if (extra.is_boolean()) {
            if (!extra.get<bool>()) errors.push_back(at + ": unexpected '" + key + "'");
          } else {
            check(extra, value, at + "." + key, errors);
          }
        }
      }
    }
    if (v.is_array() && s.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) check(s["items"], v[i], at + "[" + std::to_string(i) + "]", errors);
    }
  }

  json root_;
};

}  // namespace schema_check
