#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ember/tensor.hpp"

namespace ember {

class Value;
using ValueList = std::vector<Value>;

/// One field payload: a tensor, a real, an integer, a string, or a list of values.
class Value {
 public:
  static constexpr int kMaxListDepth = 4;

  Value() : v_(std::int64_t{0}) {}
  Value(Tensor t) : v_(std::move(t)) {}
  Value(double d) : v_(d) {}
  Value(std::int64_t i) : v_(i) {}
  Value(int i) : v_(std::int64_t{i}) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(ValueList l) : v_(std::move(l)) {}

  bool is_tensor() const noexcept { return std::holds_alternative<Tensor>(v_); }
  bool is_scalar() const noexcept { return std::holds_alternative<double>(v_); }
  bool is_int() const noexcept { return std::holds_alternative<std::int64_t>(v_); }
  bool is_text() const noexcept { return std::holds_alternative<std::string>(v_); }
  bool is_list() const noexcept { return std::holds_alternative<ValueList>(v_); }

  // Typed access; throws NotATensor / TypeError on a variant mismatch.
  const Tensor& tensor() const;
  double scalar() const;
  std::int64_t integer() const;
  const std::string& text() const;
  const ValueList& list() const;

  // Nesting depth of lists: 0 for a non-list, 1 for a flat list, ...
  int depth() const;
  std::string_view kind_name() const noexcept;

  friend bool operator==(const Value& a, const Value& b) { return a.v_ == b.v_; }

 private:
  std::variant<Tensor, double, std::int64_t, std::string, ValueList> v_;
};

/// Insertion-ordered map from field name to Value: one data point.
class Record {
 public:
  using Entry = std::pair<std::string, Value>;

  Record() = default;
  Record(std::initializer_list<Entry> entries);

  bool contains(std::string_view name) const noexcept { return find(name) != nullptr; }
  const Value* find(std::string_view name) const noexcept;
  // Throws MissingField.
  const Value& at(std::string_view name) const;

  // Inserts at the end or replaces in place (keeping the position).
  void set(std::string name, Value value);
  // Inserts at the end; throws NameCollision when present.
  void insert(std::string name, Value value);
  // Throws MissingField.
  void erase(std::string_view name);

  std::vector<std::string> names() const;
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }
  auto begin() noexcept { return entries_.begin(); }
  auto end() noexcept { return entries_.end(); }

  friend bool operator==(const Record& a, const Record& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<Entry> entries_;
};

// Throws MissingField naming the first absent field.
void validate_record(const Record& r, std::span<const std::string> required_fields);

/// Records stacked along a leading batch axis.
struct Batch {
  Record entries;
  std::int64_t batch_size = 0;
  std::vector<std::int64_t> source_indices;
};

// Tensors are stacked along a new axis 0; every other value becomes a list of
// length batch_size. `source_indices` defaults to 0..n-1.
Batch collate(std::span<const Record> records, std::vector<std::int64_t> source_indices = {});
Record uncollate(const Batch& b, std::int64_t index);

}  // namespace ember
