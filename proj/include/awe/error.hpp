#pragma once

#include <stdexcept>
#include <string>

namespace awe {

// Base of every error the toolkit throws. Subclasses exist so callers and
// tests can tell the failure modes apart without parsing messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define AWE_DEFINE_ERROR(Name)        \
  class Name : public Error {         \
   public:                            \
    using Error::Error;               \
  };

AWE_DEFINE_ERROR(SignalTooShort)
AWE_DEFINE_ERROR(OutOfRange)
AWE_DEFINE_ERROR(InvalidConfig)
AWE_DEFINE_ERROR(IoError)
AWE_DEFINE_ERROR(NoPairsAvailable)
AWE_DEFINE_ERROR(UnknownSegmentId)
AWE_DEFINE_ERROR(SelfPair)
AWE_DEFINE_ERROR(BadMagic)
AWE_DEFINE_ERROR(VersionMismatch)
AWE_DEFINE_ERROR(CorruptIndex)
AWE_DEFINE_ERROR(ShapeMismatch)
AWE_DEFINE_ERROR(ClassOutOfRange)
AWE_DEFINE_ERROR(GraphCycle)
AWE_DEFINE_ERROR(EmptyTrainingSet)
AWE_DEFINE_ERROR(DimensionMismatch)
AWE_DEFINE_ERROR(NoPositivePairs)
AWE_DEFINE_ERROR(NumericError)

#undef AWE_DEFINE_ERROR

// Line-numbered parse failure for the text formats.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace awe
