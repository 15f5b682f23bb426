#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ember {

// Every failure the engine reports. One enumerator per distinct contract error.
enum class Errc {
  // numerics
  ShapeError,
  BroadcastError,
  AxisError,
  DomainError,
  NonScalarRoot,
  MissingGradient,
  BadParam,
  // records and batches
  MissingField,
  EmptyBatch,
  FieldSetMismatch,
  ShapeMismatch,
  IndexOutOfRange,
  NestingTooDeep,
  // datasets
  ParseError,
  NotAnArray,
  ElementNotAnObject,
  MissingPhase,
  MalformedEntry,
  BadSpec,
  ArityMismatch,
  // io
  FileError,
  BadMagic,
  UnsupportedDatatype,
  TruncatedData,
  RankError,
  NotAPath,
  // transforms
  NotATensor,
  ConfigError,
  RankMismatch,
  BadMode,
  TargetTooLarge,
  TargetTooSmall,
  ClassOutOfRange,
  NameCollision,
  // models and ops
  OutputCollision,
  NegativeSmooth,
  NotNormalized,
  // workflows and artifacts
  EmptyDataset,
  VersionMismatch,
  UnknownModelType,
  ParamTableMismatch,
  MissingWatchField,
  // configuration
  UnknownKey,
  BadVersion,
  UnknownType,
  TypeError,
  ConstructionError,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string subject, const std::string& detail = {});

  Errc code() const noexcept { return code_; }
  // The field, path, parameter or value the error is about. May be empty.
  const std::string& subject() const noexcept { return subject_; }

  // Same error with extra context prepended to the message.
  Error with_context(const std::string& context) const;

 private:
  Error(Errc code, std::string subject, std::string message, int);

  Errc code_;
  std::string subject_;
};

}  // namespace ember
