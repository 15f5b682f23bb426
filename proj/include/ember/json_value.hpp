#pragma once

#include <filesystem>
#include <string>

#include "ember/record.hpp"
#include "json.hpp"

namespace ember {

// Throws FileError.
std::string read_text_file(const std::filesystem::path& path);

// Throws ParseError with "line L, column C" in the message.
nlohmann::ordered_json parse_json(const std::string& text, const std::string& source);

// JSON scalar/array to Value: strings to text, integer literals to int,
// other numbers to scalar, booleans to int 0/1, arrays to lists (depth <= 4).
// Objects and nulls are rejected with ParseError naming `where`.
Value value_from_json(const nlohmann::ordered_json& j, const std::string& where);
Record record_from_json(const nlohmann::ordered_json& object, const std::string& where);

// Tensors serialize as {"shape": [...], "data": [...]}.
nlohmann::ordered_json value_to_json(const Value& v);
nlohmann::ordered_json record_to_json(const Record& r);

}  // namespace ember
