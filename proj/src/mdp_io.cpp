#include <optional>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sfgpi/errors.hpp"
#include "sfgpi/mdp.hpp"

namespace sfgpi {

namespace {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw FormatError("mdp text line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

void write_mdp(std::ostream& out, const TabularMdp& mdp) {
  out << "mdp " << mdp.num_states() << ' ' << mdp.num_actions() << ' ' << mdp.num_rewards() << ' '
      << format_g17(mdp.gamma()) << '\n';
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      for (const auto& o : mdp.outcomes(static_cast<StateId>(s), static_cast<ActionId>(a))) {
        out << "p " << s << ' ' << a << ' ' << o.next << ' ' << format_g17(o.prob) << '\n';
      }
    }
  }
  for (std::size_t k = 0; k < mdp.num_rewards(); ++k) {
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
      for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
        auto outs = mdp.outcomes(static_cast<StateId>(s), static_cast<ActionId>(a));
        auto rs = mdp.rewards(k, static_cast<StateId>(s), static_cast<ActionId>(a));
        for (std::size_t i = 0; i < outs.size(); ++i) {
          if (rs[i] == 0.0) continue;  // sparse: omitted rewards read back as 0
          out << "r " << k << ' ' << s << ' ' << a << ' ' << outs[i].next << ' ' << format_g17(rs[i])
              << '\n';
        }
      }
    }
  }
}

TabularMdp read_mdp(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<TabularMdp::Builder> builder;
  std::size_t S = 0, A = 0, K = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  };

  if (!next_line()) throw FormatError("mdp text: empty input");
  {
    std::istringstream head(line);
    std::string tag;
    double gamma = 0.0;
    if (!(head >> tag >> S >> A >> K >> gamma) || tag != "mdp") {
      fail(line_no, "expected header 'mdp <S> <A> <K> <gamma>'");
    }
    try {
      builder.emplace(S, A, K, gamma);
    } catch (const Error& e) {
      fail(line_no, e.what());
    }
  }

  while (next_line()) {
    std::istringstream row(line);
    std::string tag;
    row >> tag;
    try {
      if (tag == "p") {
        long s, a, next;
        double prob;
        if (!(row >> s >> a >> next >> prob)) fail(line_no, "expected 'p s a s' prob'");
        builder->add_transition(static_cast<StateId>(s), static_cast<ActionId>(a),
                                static_cast<StateId>(next), prob);
      } else if (tag == "r") {
        long k, s, a, next;
        double val;
        if (!(row >> k >> s >> a >> next >> val)) fail(line_no, "expected 'r k s a s' val'");
        if (k < 0) fail(line_no, "negative reward id");
        builder->set_reward(static_cast<std::size_t>(k), static_cast<StateId>(s),
                            static_cast<ActionId>(a), static_cast<StateId>(next), val);
      } else {
        fail(line_no, "unknown record '" + tag + "'");
      }
    } catch (const UsageError& e) {
      fail(line_no, e.what());
    }
    std::string rest;
    if (row >> rest) fail(line_no, "trailing tokens");
  }
  try {
    return builder->build();
  } catch (const DataError& e) {
    throw FormatError(std::string("mdp text: ") + e.what());
  }
}

}  // namespace sfgpi
