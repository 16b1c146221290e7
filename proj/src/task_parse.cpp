#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "sfgpi/errors.hpp"
#include "sfgpi/features.hpp"

namespace sfgpi {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// U+2212 MINUS SIGN, as it appears in typeset task names.
constexpr std::string_view kUnicodeMinus = "\xE2\x88\x92";

std::string normalize_minus(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    if (s.substr(i, kUnicodeMinus.size()) == kUnicodeMinus) {
      out.push_back('-');
      i += kUnicodeMinus.size();
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

[[noreturn]] void bad(std::string_view text, const char* why) {
  throw FormatError("cannot parse task '" + std::string(text) + "': " + why);
}

}  // namespace

TaskVector parse_task(std::string_view raw) {
  const std::string text = normalize_minus(trim(raw));
  std::vector<double> w;
  if (text.empty()) bad(raw, "empty");

  if (text.front() == '(') {
    if (text.back() != ')') bad(raw, "missing ')'");
    std::string_view body(text.data() + 1, text.size() - 2);
    while (true) {
      const auto comma = body.find(',');
      const std::string item(trim(body.substr(0, comma)));
      if (item.empty()) bad(raw, "empty entry");
      char* end = nullptr;
      const double v = std::strtod(item.c_str(), &end);
      if (end != item.c_str() + item.size() || !std::isfinite(v)) bad(raw, "entry is not a number");
      w.push_back(v);
      if (comma == std::string_view::npos) break;
      body.remove_prefix(comma + 1);
    }
    return TaskVector(std::move(w));
  }

  double sign = 1.0;
  bool pending_sign = false;
  for (char c : text) {
    if (c == '-' || c == '+') {
      if (pending_sign) bad(raw, "sign without digit");
      sign = c == '-' ? -1.0 : 1.0;
      pending_sign = true;
    } else if (c >= '0' && c <= '9') {
      w.push_back(sign * static_cast<double>(c - '0'));
      sign = 1.0;
      pending_sign = false;
    } else {
      bad(raw, "expected signed digits or a parenthesized tuple");
    }
  }
  if (pending_sign) bad(raw, "trailing sign");
  return TaskVector(std::move(w));
}

std::string format_task(const TaskVector& w) {
  bool digits = true;
  for (double v : w.values()) {
    if (v != std::round(v) || std::abs(v) > 9.0) digits = false;
  }
  std::string out;
  if (digits) {
    for (double v : w.values()) {
      const int i = static_cast<int>(v);
      if (i < 0) out.push_back('-');
      out.push_back(static_cast<char>('0' + std::abs(i)));
    }
    return out;
  }
  out.push_back('(');
  for (std::size_t i = 0; i < w.dim(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", w[i]);
    if (i) out.push_back(',');
    out += buf;
  }
  out.push_back(')');
  return out;
}

}  // namespace sfgpi
