#pragma once

#include <stdexcept>
#include <string>

namespace rmmt {

// Failure classes surfaced to callers. Everything that is a caller mistake or
// a bad input maps to one of these; internal invariant breakage uses assert.
enum class Errc {
  out_of_range,    // position outside the sequence
  not_open,        // operation requires an open parenthesis at the position
  not_close,       // operation requires a close parenthesis at the position
  bad_range,       // range query with i > j or out of bounds
  invalid_wrap,    // insert_pair would create an unbalanced sequence
  malformed_xml,   // tag soup: mismatched or unterminated tags
  bad_char,        // unexpected character in a parentheses text file
  unbalanced,      // parsed sequence is not balanced
  input_error,     // file missing / unreadable / truncated
  config_error,    // invalid configuration (thread count, fill factor, ...)
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::out_of_range: return "out_of_range";
    case Errc::not_open: return "not_open";
    case Errc::not_close: return "not_close";
    case Errc::bad_range: return "bad_range";
    case Errc::invalid_wrap: return "invalid_wrap";
    case Errc::malformed_xml: return "malformed_xml";
    case Errc::bad_char: return "bad_char";
    case Errc::unbalanced: return "unbalanced";
    case Errc::input_error: return "input_error";
    case Errc::config_error: return "config_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace rmmt
