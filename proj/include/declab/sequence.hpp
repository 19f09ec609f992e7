#pragma once

/**
 * Token sequences over a finite vocabulary, padded to a fixed maximum
 * length with a null sentinel. The null-suffix rule makes fixed-length
 * and variable-length sequences one representation: once a null appears,
 * every later position is null.
 */

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "declab/errors.hpp"

namespace declab {

using Token = int;

/// Sentinel for the padding character; never a member of the vocabulary.
inline constexpr Token kNullToken = -1;

using Sequence = std::vector<Token>;

struct Vocabulary {
  int size = 1;
  explicit Vocabulary(int s) : size(s) {
    if (s < 1) throw ValidationError("vocabulary size must be >= 1");
  }
};

inline bool contains_null(const Sequence& y) {
  for (Token t : y)
    if (t == kNullToken) return true;
  return false;
}

/// Null-suffix rule: tokens after the first null are all null.
inline bool null_suffixed(const Sequence& y) {
  bool seen = false;
  for (Token t : y) {
    if (t == kNullToken)
      seen = true;
    else if (seen)
      return false;
  }
  return true;
}

inline bool tokens_in_range(const Sequence& y, int vocab_size) {
  for (Token t : y)
    if (t != kNullToken && (t < 0 || t >= vocab_size)) return false;
  return true;
}

/// Compact form for small vocabularies ("0120*"), comma form otherwise.
inline std::string format_sequence(const Sequence& y) {
  bool compact = true;
  for (Token t : y)
    if (t > 9) compact = false;
  std::ostringstream os;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!compact && i) os << ',';
    if (y[i] == kNullToken)
      os << '*';
    else
      os << y[i];
  }
  return os.str();
}

inline Sequence parse_sequence(const std::string& s, int vocab_size) {
  Sequence y;
  if (s.find(',') != std::string::npos) {
    std::istringstream is(s);
    std::string part;
    while (std::getline(is, part, ',')) {
      if (part == "*")
        y.push_back(kNullToken);
      else
        y.push_back(std::stoi(part));
    }
  } else {
    for (char c : s) {
      if (c == '*')
        y.push_back(kNullToken);
      else if (c >= '0' && c <= '9')
        y.push_back(c - '0');
      else
        throw ValidationError(std::string("bad token character '") + c + "'");
    }
  }
  if (!tokens_in_range(y, vocab_size))
    throw ValidationError("token out of range in sequence \"" + s + "\"");
  if (!null_suffixed(y))
    throw ValidationError("sequence \"" + s + "\" violates the null-suffix rule");
  return y;
}

}  // namespace declab
