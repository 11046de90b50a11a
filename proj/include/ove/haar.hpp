#pragma once

// Boolean 3x3 Haar cell patterns shared by the optical mask generator and
// the discrete filter bank. Entries are +1, -1 or 0, indexed [row][col].

#include "ove/error.hpp"

#include <array>
#include <string>
#include <string_view>

namespace ove
{

enum class HaarKind
{
  vertical,
  horizontal,
  diagonal,
  uniform,
};

using HaarPattern = std::array<std::array<int, 3>, 3>;

inline HaarPattern haar_pattern(HaarKind kind)
{
  switch (kind) {
  case HaarKind::vertical:
    return {{{1, 0, -1}, {1, 0, -1}, {1, 0, -1}}};
  case HaarKind::horizontal:
    return {{{1, 1, 1}, {0, 0, 0}, {-1, -1, -1}}};
  case HaarKind::diagonal:
    return {{{1, 0, -1}, {0, 0, 0}, {-1, 0, 1}}};
  case HaarKind::uniform:
    return {{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}};
  }
  throw InvalidArgument("unknown Haar kind");
}

inline std::string_view to_string(HaarKind kind)
{
  switch (kind) {
  case HaarKind::vertical: return "vertical";
  case HaarKind::horizontal: return "horizontal";
  case HaarKind::diagonal: return "diagonal";
  case HaarKind::uniform: return "uniform";
  }
  return "?";
}

inline HaarKind parse_haar_kind(std::string_view s)
{
  if (s == "vertical") return HaarKind::vertical;
  if (s == "horizontal") return HaarKind::horizontal;
  if (s == "diagonal") return HaarKind::diagonal;
  if (s == "uniform") return HaarKind::uniform;
  throw InvalidArgument("unknown Haar kind '" + std::string(s) + "'");
}

} // namespace ove
