#pragma once

#include <stdexcept>
#include <string>

namespace irf {

/// Bad input supplied by the caller: unreadable file, malformed record,
/// invalid configuration. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed record in an input file.
class ParseError : public InputError {
  public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

}  // namespace irf
