#pragma once

#include <stdexcept>
#include <string>

namespace fedsense {

// Root of every failure raised by the library. Each subclass names one
// failure mode so callers (and the CLI exit-code mapping) can tell them apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FEDSENSE_DEFINE_ERROR(Name)            \
  class Name : public Error {                  \
   public:                                     \
    using Error::Error;                        \
  }

FEDSENSE_DEFINE_ERROR(PackingFailure);
FEDSENSE_DEFINE_ERROR(DegenerateGeometry);
FEDSENSE_DEFINE_ERROR(InvalidDistance);
FEDSENSE_DEFINE_ERROR(NegativeStd);
FEDSENSE_DEFINE_ERROR(LengthMismatch);
FEDSENSE_DEFINE_ERROR(InvalidWaveform);
FEDSENSE_DEFINE_ERROR(EmptyDataset);
FEDSENSE_DEFINE_ERROR(InvalidLength);
FEDSENSE_DEFINE_ERROR(ShapeMismatch);
FEDSENSE_DEFINE_ERROR(EmptyUpdateSet);
FEDSENSE_DEFINE_ERROR(NonPositiveSnr);
FEDSENSE_DEFINE_ERROR(ValidationError);
FEDSENSE_DEFINE_ERROR(IoError);

#undef FEDSENSE_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fedsense
