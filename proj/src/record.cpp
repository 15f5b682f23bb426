#include "ember/record.hpp"

#include <algorithm>
#include <cstring>

#include "ember/error.hpp"

namespace ember {

const Tensor& Value::tensor() const {
  if (const auto* t = std::get_if<Tensor>(&v_)) return *t;
  throw Error(Errc::NotATensor, "", std::string("value holds ") + std::string(kind_name()));
}

double Value::scalar() const {
  if (const auto* d = std::get_if<double>(&v_)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v_)) return static_cast<double>(*i);
  throw Error(Errc::TypeError, "", std::string("expected a number, value holds ") + std::string(kind_name()));
}

std::int64_t Value::integer() const {
  if (const auto* i = std::get_if<std::int64_t>(&v_)) return *i;
  throw Error(Errc::TypeError, "", std::string("expected an integer, value holds ") + std::string(kind_name()));
}

const std::string& Value::text() const {
  if (const auto* s = std::get_if<std::string>(&v_)) return *s;
  throw Error(Errc::TypeError, "", std::string("expected text, value holds ") + std::string(kind_name()));
}

const ValueList& Value::list() const {
  if (const auto* l = std::get_if<ValueList>(&v_)) return *l;
  throw Error(Errc::TypeError, "", std::string("expected a list, value holds ") + std::string(kind_name()));
}

int Value::depth() const {
  const auto* l = std::get_if<ValueList>(&v_);
  if (!l) return 0;
  int d = 0;
  for (const auto& e : *l) d = std::max(d, e.depth());
  return d + 1;
}

std::string_view Value::kind_name() const noexcept {
  switch (v_.index()) {
    case 0: return "tensor";
    case 1: return "scalar";
    case 2: return "int";
    case 3: return "text";
    default: return "list";
  }
}

Record::Record(std::initializer_list<Entry> entries) {
  for (const auto& [name, value] : entries) insert(name, value);
}

const Value* Record::find(std::string_view name) const noexcept {
  for (const auto& e : entries_) {
    if (e.first == name) return &e.second;
  }
  return nullptr;
}

const Value& Record::at(std::string_view name) const {
  if (const Value* v = find(name)) return *v;
  throw Error(Errc::MissingField, std::string(name));
}

void Record::set(std::string name, Value value) {
  if (name.empty()) throw Error(Errc::BadParam, "", "field names must be non-empty");
  for (auto& e : entries_) {
    if (e.first == name) {
      e.second = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(name), std::move(value));
}

void Record::insert(std::string name, Value value) {
  if (name.empty()) throw Error(Errc::BadParam, "", "field names must be non-empty");
  if (contains(name)) throw Error(Errc::NameCollision, name);
  entries_.emplace_back(std::move(name), std::move(value));
}

void Record::erase(std::string_view name) {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.first == name; });
  if (it == entries_.end()) throw Error(Errc::MissingField, std::string(name));
  entries_.erase(it);
}

std::vector<std::string> Record::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

void validate_record(const Record& r, std::span<const std::string> required_fields) {
  for (const auto& name : required_fields) {
    if (!r.contains(name)) throw Error(Errc::MissingField, name);
  }
}

Batch collate(std::span<const Record> records, std::vector<std::int64_t> source_indices) {
  if (records.empty()) throw Error(Errc::EmptyBatch, "");
  const auto n = static_cast<std::int64_t>(records.size());
  if (source_indices.empty()) {
    for (std::int64_t i = 0; i < n; ++i) source_indices.push_back(i);
  } else if (static_cast<std::int64_t>(source_indices.size()) != n) {
    throw Error(Errc::BadParam, "source_indices", "one index per record required");
  }

  const Record& first = records[0];
  for (const auto& r : records) {
    if (r.size() != first.size()) {
      // Name the first field that is missing on either side.
      for (const auto& [name, _] : first) {
        if (!r.contains(name)) throw Error(Errc::FieldSetMismatch, name);
      }
      for (const auto& [name, _] : r) {
        if (!first.contains(name)) throw Error(Errc::FieldSetMismatch, name);
      }
    }
    for (const auto& [name, _] : first) {
      if (!r.contains(name)) throw Error(Errc::FieldSetMismatch, name);
    }
  }

  Batch batch;
  batch.batch_size = n;
  batch.source_indices = std::move(source_indices);
  for (const auto& [name, value] : first) {
    if (value.is_tensor()) {
      const Shape& shape = value.tensor().shape();
      Shape stacked{n};
      stacked.insert(stacked.end(), shape.begin(), shape.end());
      std::vector<float> data;
      data.reserve(static_cast<std::size_t>(numel(stacked)));
      for (const auto& r : records) {
        const Value& v = r.at(name);
        if (!v.is_tensor()) throw Error(Errc::ShapeMismatch, name, "tensor in record 0, " + std::string(v.kind_name()) + " later");
        const Tensor& t = v.tensor();
        if (t.shape() != shape) {
          throw Error(Errc::ShapeMismatch, name, "expected " + to_string(shape) + ", got " + to_string(t.shape()));
        }
        data.insert(data.end(), t.data().begin(), t.data().end());
      }
      batch.entries.insert(name, Tensor(std::move(stacked), std::move(data)));
    } else {
      ValueList items;
      items.reserve(records.size());
      for (const auto& r : records) items.push_back(r.at(name));
      batch.entries.insert(name, Value(std::move(items)));
    }
  }
  return batch;
}

Record uncollate(const Batch& b, std::int64_t index) {
  if (index < 0 || index >= b.batch_size) {
    throw Error(Errc::IndexOutOfRange, std::to_string(index), "batch size " + std::to_string(b.batch_size));
  }
  Record out;
  for (const auto& [name, value] : b.entries) {
    if (value.is_tensor()) {
      const Tensor& t = value.tensor();
      Shape shape(t.shape().begin() + 1, t.shape().end());
      const auto chunk = numel(shape);
      std::vector<float> data(t.data().begin() + index * chunk, t.data().begin() + (index + 1) * chunk);
      out.insert(name, Tensor(std::move(shape), std::move(data)));
    } else {
      out.insert(name, value.list().at(static_cast<std::size_t>(index)));
    }
  }
  return out;
}

}  // namespace ember
