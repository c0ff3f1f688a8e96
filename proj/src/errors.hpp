// Copyright 2026 The AutoDrag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace autodrag {

enum class ErrorKind {
  kParameter = 1,
  kShape,
  kNoCorrespondence,
  kState,
  kIo,
  kFormat,
  kTraining,
  kUndefinedRatio,
  kParse,
  kUsage,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define AUTODRAG_DEFINE_ERROR(Name, Kind)                                      \
  class Name : public Error {                                                  \
   public:                                                                     \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}   \
  }

AUTODRAG_DEFINE_ERROR(ParameterError, kParameter);
AUTODRAG_DEFINE_ERROR(ShapeError, kShape);
AUTODRAG_DEFINE_ERROR(NoCorrespondenceError, kNoCorrespondence);
AUTODRAG_DEFINE_ERROR(StateError, kState);
AUTODRAG_DEFINE_ERROR(IoError, kIo);
AUTODRAG_DEFINE_ERROR(FormatError, kFormat);
AUTODRAG_DEFINE_ERROR(TrainingError, kTraining);
AUTODRAG_DEFINE_ERROR(UndefinedRatioError, kUndefinedRatio);
AUTODRAG_DEFINE_ERROR(UsageError, kUsage);

#undef AUTODRAG_DEFINE_ERROR

// Parse failures carry the 1-based line they occurred on (0 when unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(ErrorKind::kParse, line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace autodrag
