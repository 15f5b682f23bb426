#include "ember/json_value.hpp"

#include <fstream>
#include <sstream>

#include "ember/error.hpp"

namespace ember {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::FileError, path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::ordered_json parse_json(const std::string& text, const std::string& source) {
  try {
    return nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into a line/column pair.
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw Error(Errc::ParseError, source,
                "line " + std::to_string(line) + ", column " + std::to_string(column) + ": invalid JSON");
  }
}

namespace {

Value convert(const nlohmann::ordered_json& j, const std::string& where, int depth) {
  switch (j.type()) {
    case nlohmann::ordered_json::value_t::string: return Value(j.get<std::string>());
    case nlohmann::ordered_json::value_t::number_integer: return Value(j.get<std::int64_t>());
    case nlohmann::ordered_json::value_t::number_unsigned: return Value(static_cast<std::int64_t>(j.get<std::uint64_t>()));
    case nlohmann::ordered_json::value_t::number_float: return Value(j.get<double>());
    case nlohmann::ordered_json::value_t::boolean: return Value(std::int64_t{j.get<bool>() ? 1 : 0});
    case nlohmann::ordered_json::value_t::array: {
      if (depth >= Value::kMaxListDepth) {
        throw Error(Errc::NestingTooDeep, where, "lists nest at most " + std::to_string(Value::kMaxListDepth) + " deep");
      }
      ValueList items;
      for (const auto& e : j) items.push_back(convert(e, where, depth + 1));
      return Value(std::move(items));
    }
    default:
      throw Error(Errc::ParseError, where, std::string("unsupported JSON ") + j.type_name() + " value");
  }
}

}  // namespace

Value value_from_json(const nlohmann::ordered_json& j, const std::string& where) { return convert(j, where, 0); }

Record record_from_json(const nlohmann::ordered_json& object, const std::string& where) {
  Record r;
  for (const auto& [key, value] : object.items()) {
    if (key.empty()) throw Error(Errc::ParseError, where, "empty field name");
    r.insert(key, value_from_json(value, where + "." + key));
  }
  return r;
}

nlohmann::ordered_json value_to_json(const Value& v) {
  if (v.is_tensor()) {
    const Tensor& t = v.tensor();
    return {{"shape", t.shape()}, {"data", t.values()}};
  }
  if (v.is_scalar()) return v.scalar();
  if (v.is_int()) return v.integer();
  if (v.is_text()) return v.text();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : v.list()) arr.push_back(value_to_json(e));
  return arr;
}

nlohmann::ordered_json record_to_json(const Record& r) {
  auto obj = nlohmann::ordered_json::object();
  for (const auto& [name, value] : r) obj[name] = value_to_json(value);
  return obj;
}

}  // namespace ember
