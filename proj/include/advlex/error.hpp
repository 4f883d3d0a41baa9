#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace advlex {

enum class ErrorCode {
  UnknownCategory,
  LemmaNotInSentence,
  UnreadableFile,
  MalformedRecord,
  DimensionMismatch,
  NonFiniteVector,
  DuplicateOccurrence,
  ZeroNormVector,
  EmptyInput,
  MissingEmbedding,
  UnvalidatedSense,
  MissingCentroid,
  CategoryMismatch,
  UnknownSynset,
  IdenticalArguments,
  IdRangeExhausted,
  SchemaViolation,
  DuplicateSenseId,
  BadSynsetId,
  WriteFailure,
  NoSharedItems,
  UndefinedKappa,
  TaskAlreadyDone,
  InvalidResultType,
  UnknownTask,
  Conflict,
  ReplayError,
  BadRequest,
  MissingStageInput,
  StaleInput,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::LemmaNotInSentence: return "LemmaNotInSentence";
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteVector: return "NonFiniteVector";
    case ErrorCode::DuplicateOccurrence: return "DuplicateOccurrence";
    case ErrorCode::ZeroNormVector: return "ZeroNormVector";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::UnvalidatedSense: return "UnvalidatedSense";
    case ErrorCode::MissingCentroid: return "MissingCentroid";
    case ErrorCode::CategoryMismatch: return "CategoryMismatch";
    case ErrorCode::UnknownSynset: return "UnknownSynset";
    case ErrorCode::IdenticalArguments: return "IdenticalArguments";
    case ErrorCode::IdRangeExhausted: return "IdRangeExhausted";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DuplicateSenseId: return "DuplicateSenseId";
    case ErrorCode::BadSynsetId: return "BadSynsetId";
    case ErrorCode::WriteFailure: return "WriteFailure";
    case ErrorCode::NoSharedItems: return "NoSharedItems";
    case ErrorCode::UndefinedKappa: return "UndefinedKappa";
    case ErrorCode::TaskAlreadyDone: return "TaskAlreadyDone";
    case ErrorCode::InvalidResultType: return "InvalidResultType";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::ReplayError: return "ReplayError";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::MissingStageInput: return "MissingStageInput";
    case ErrorCode::StaleInput: return "StaleInput";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code plus
/// the offending subject (an id, a path, a label).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string subject, std::string detail = {})
      : std::runtime_error(format(code, subject, detail)),
        code_(code),
        subject_(std::move(subject)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  static std::string format(ErrorCode code, const std::string& subject,
                            const std::string& detail) {
    std::string out{to_string(code)};
    if (!subject.empty()) out += "(" + subject + ")";
    if (!detail.empty()) out += ": " + detail;
    return out;
  }

  ErrorCode code_;
  std::string subject_;
};

}  // namespace advlex
