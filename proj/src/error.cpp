#include "ember/error.hpp"

namespace ember {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::ShapeError: return "ShapeError";
    case Errc::BroadcastError: return "BroadcastError";
    case Errc::AxisError: return "AxisError";
    case Errc::DomainError: return "DomainError";
    case Errc::NonScalarRoot: return "NonScalarRoot";
    case Errc::MissingGradient: return "MissingGradient";
    case Errc::BadParam: return "BadParam";
    case Errc::MissingField: return "MissingField";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::FieldSetMismatch: return "FieldSetMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::NestingTooDeep: return "NestingTooDeep";
    case Errc::ParseError: return "ParseError";
    case Errc::NotAnArray: return "NotAnArray";
    case Errc::ElementNotAnObject: return "ElementNotAnObject";
    case Errc::MissingPhase: return "MissingPhase";
    case Errc::MalformedEntry: return "MalformedEntry";
    case Errc::BadSpec: return "BadSpec";
    case Errc::ArityMismatch: return "ArityMismatch";
    case Errc::FileError: return "FileError";
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedDatatype: return "UnsupportedDatatype";
    case Errc::TruncatedData: return "TruncatedData";
    case Errc::RankError: return "RankError";
    case Errc::NotAPath: return "NotAPath";
    case Errc::NotATensor: return "NotATensor";
    case Errc::ConfigError: return "ConfigError";
    case Errc::RankMismatch: return "RankMismatch";
    case Errc::BadMode: return "BadMode";
    case Errc::TargetTooLarge: return "TargetTooLarge";
    case Errc::TargetTooSmall: return "TargetTooSmall";
    case Errc::ClassOutOfRange: return "ClassOutOfRange";
    case Errc::NameCollision: return "NameCollision";
    case Errc::OutputCollision: return "OutputCollision";
    case Errc::NegativeSmooth: return "NegativeSmooth";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::UnknownModelType: return "UnknownModelType";
    case Errc::ParamTableMismatch: return "ParamTableMismatch";
    case Errc::MissingWatchField: return "MissingWatchField";
    case Errc::UnknownKey: return "UnknownKey";
    case Errc::BadVersion: return "BadVersion";
    case Errc::UnknownType: return "UnknownType";
    case Errc::TypeError: return "TypeError";
    case Errc::ConstructionError: return "ConstructionError";
  }
  return "Unknown";
}

namespace {

std::string format_message(Errc code, const std::string& subject, const std::string& detail) {
  std::string msg(errc_name(code));
  if (!subject.empty()) msg += "(" + subject + ")";
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

}  // namespace

Error::Error(Errc code, std::string subject, const std::string& detail)
    : std::runtime_error(format_message(code, subject, detail)),
      code_(code),
      subject_(std::move(subject)) {}

Error::Error(Errc code, std::string subject, std::string message, int)
    : std::runtime_error(message), code_(code), subject_(std::move(subject)) {}

Error Error::with_context(const std::string& context) const {
  return Error(code_, subject_, context + ": " + what(), 0);
}

}  // namespace ember
