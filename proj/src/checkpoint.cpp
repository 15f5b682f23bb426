#include "ember/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "ember/io.hpp"

namespace ember {

namespace {

constexpr char kMagic[4] = {'E', 'I', 'S', 'N'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

ModelSnapshot ModelSnapshot::of(const NamedModule& m) {
  ModelSnapshot s{m.descriptor(), {}};
  for (const auto& p : m.parameters()) s.params.emplace_back(p.name, p.value);
  return s;
}

namespace checkpoint {

std::vector<unsigned char> encode(const ModelSnapshot& s) {
  nlohmann::ordered_json header;
  header["model"] = {{"type", s.descriptor.type}, {"params", s.descriptor.params}};
  header["tensors"] = nlohmann::ordered_json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : s.params) {
    header["tensors"].push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += 4 * static_cast<std::uint64_t>(t.size());
  }
  const std::string text = header.dump();

  std::vector<unsigned char> out(kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& [name, t] : s.params) {
    for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

ModelSnapshot decode(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(Errc::BadMagic, "EISN");
  if (bytes.size() < 12) throw Error(Errc::TruncatedData, "header", "file ends inside the preamble");
  const auto version = get_u32(bytes.data() + 4);
  if (version != kVersion) throw Error(Errc::VersionMismatch, std::to_string(version), "expected version 1");
  const std::size_t header_len = get_u32(bytes.data() + 8);
  if (bytes.size() < 12 + header_len) throw Error(Errc::TruncatedData, "header", "file ends inside the JSON header");

  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(bytes.begin() + 12, bytes.begin() + 12 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, "checkpoint header", e.what());
  }
  const std::size_t payload = 12 + header_len;
  const std::size_t payload_len = bytes.size() - payload;

  ModelSnapshot s;
  try {
    s.descriptor.type = header.at("model").at("type").get<std::string>();
    s.descriptor.params = header.at("model").at("params");
    std::uint64_t expected = 0;
    for (const auto& row : header.at("tensors")) {
      auto name = row.at("name").get<std::string>();
      auto shape = row.at("shape").get<Shape>();
      const auto offset = row.at("offset").get<std::uint64_t>();
      if (offset != expected) throw Error(Errc::ParamTableMismatch, name, "offsets must be contiguous and ascending");
      const auto count = static_cast<std::uint64_t>(numel(shape));
      if (offset + 4 * count > payload_len) {
        throw Error(Errc::TruncatedData, name,
                    "needs bytes up to " + std::to_string(offset + 4 * count) + ", payload has " + std::to_string(payload_len));
      }
      std::vector<float> data(count);
      const unsigned char* src = bytes.data() + payload + offset;
      for (std::uint64_t i = 0; i < count; ++i) data[i] = std::bit_cast<float>(get_u32(src + 4 * i));
      s.params.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
      expected = offset + 4 * count;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, "checkpoint header", e.what());
  }
  return s;
}

}  // namespace checkpoint

void save_checkpoint(const std::filesystem::path& path, const ModelSnapshot& s) {
  write_binary_file(path, checkpoint::encode(s));
}

ModelSnapshot load_checkpoint(const std::filesystem::path& path) { return checkpoint::decode(read_binary_file(path)); }

void save_model(const NamedModule& m, const std::filesystem::path& path) { save_checkpoint(path, ModelSnapshot::of(m)); }

NamedModule restore_model(const ModelSnapshot& s, const ModelFactory& factory) {
  NamedModule m = factory(s.descriptor);
  auto& params = m.parameters();
  for (std::size_t i = 0; i < std::max(params.size(), s.params.size()); ++i) {
    if (i >= params.size()) throw Error(Errc::ParamTableMismatch, s.params[i].first, "not a parameter of " + s.descriptor.type);
    if (i >= s.params.size()) throw Error(Errc::ParamTableMismatch, params[i].name, "missing from checkpoint");
    const auto& [name, value] = s.params[i];
    if (name != params[i].name) throw Error(Errc::ParamTableMismatch, name, "expected " + params[i].name + " at this position");
    if (value.shape() != params[i].value.shape()) {
      throw Error(Errc::ParamTableMismatch, name,
                  "shape " + to_string(value.shape()) + " vs model " + to_string(params[i].value.shape()));
    }
    params[i].value = value;
  }
  return m;
}

NamedModule load_model(const std::filesystem::path& path, const ModelFactory& factory) {
  return restore_model(load_checkpoint(path), factory);
}

}  // namespace ember
