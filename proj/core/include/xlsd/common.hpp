#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace xlsd {

// Malformed user input: bad configs, broken files, violated call contracts.
// The CLI maps this to exit code 1; anything else is an internal error (2).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void append_all(std::ostringstream&) {}
template <typename T, typename... Rest>
void append_all(std::ostringstream& os, const T& head, const Rest&... rest) {
  os << head;
  append_all(os, rest...);
}
}  // namespace detail

template <typename... Parts>
std::string concat(const Parts&... parts) {
  std::ostringstream os;
  detail::append_all(os, parts...);
  return os.str();
}

template <typename... Parts>
[[noreturn]] void fail(const Parts&... parts) {
  throw ValidationError(concat(parts...));
}

}  // namespace xlsd
