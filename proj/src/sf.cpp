#include "sfgpi/sf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sfgpi/errors.hpp"

namespace sfgpi {

SfTable::SfTable(std::size_t num_states, std::size_t num_actions, std::size_t dim, std::string policy_id)
    : num_states_(num_states),
      num_actions_(num_actions),
      dim_(dim),
      policy_id_(std::move(policy_id)),
      psi_(num_states * num_actions * dim, 0.0) {}

double SfTable::q(StateId s, ActionId a, const TaskVector& w) const {
  const double* p = psi_.data() + offset(s, a);
  double acc = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) acc += p[j] * w[j];
  return acc;
}

ActionId SfTable::greedy(StateId s, const TaskVector& w) const {
  ActionId best = 0;
  double best_v = q(s, 0, w);
  for (std::size_t a = 1; a < num_actions_; ++a) {
    const double v = q(s, static_cast<ActionId>(a), w);
    if (v > best_v) {
      best_v = v;
      best = static_cast<ActionId>(a);
    }
  }
  return best;
}

ActionId SfTable::greedy_component(StateId s, std::size_t j) const {
  const double* p = psi_.data() + offset(s, 0) + j;
  ActionId best = 0;
  double best_v = p[0];
  for (std::size_t a = 1; a < num_actions_; ++a) {
    if (p[a * dim_] > best_v) {
      best_v = p[a * dim_];
      best = static_cast<ActionId>(a);
    }
  }
  return best;
}

QTable SfTable::component(std::size_t j) const {
  QTable q(num_states_, num_actions_);
  for (std::size_t i = 0; i < q.size(); ++i) q.values()[i] = psi_[i * dim_ + j];
  return q;
}

void SfTable::set_component(std::size_t j, const QTable& q) {
  if (q.num_states() != num_states_ || q.num_actions() != num_actions_ || j >= dim_) {
    throw UsageError("set_component: shape mismatch");
  }
  for (std::size_t i = 0; i < q.size(); ++i) psi_[i * dim_ + j] = q.values()[i];
}

QTable SfTable::q_table(const TaskVector& w) const {
  if (w.dim() != dim_) throw UsageError("q_table: task dimension does not match SF dimension");
  QTable q(num_states_, num_actions_);
  for (std::size_t i = 0; i < q.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) acc += psi_[i * dim_ + j] * w[j];
    q.values()[i] = acc;
  }
  return q;
}

bool SfTable::all_finite() const {
  return std::all_of(psi_.begin(), psi_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------

TraceTable::TraceTable(std::size_t num_states, std::size_t num_actions, double lambda)
    : num_actions_(num_actions), lambda_(lambda), e_(num_states * num_actions, 0.0) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("trace decay lambda must lie in [0,1]");
}

void TraceTable::accumulate(StateId s, ActionId a, double amount) {
  const std::size_t idx = static_cast<std::size_t>(s) * num_actions_ + static_cast<std::size_t>(a);
  if (e_[idx] == 0.0) active_.push_back(static_cast<std::uint32_t>(idx));
  e_[idx] += amount;
}

void TraceTable::decay(double factor) {
  std::size_t kept = 0;
  for (auto idx : active_) {
    double& e = e_[idx];
    e *= factor;
    if (e < kFloor) {
      e = 0.0;
    } else {
      active_[kept++] = idx;
    }
  }
  active_.resize(kept);
}

void TraceTable::clear() {
  for (auto idx : active_) e_[idx] = 0.0;
  active_.clear();
}

StepSizes::StepSizes(std::size_t num_cells, double alpha, double omega) : alpha_(alpha), omega_(omega) {
  if (omega > 0.0) counts_.assign(num_cells, 0);
}

double StepSizes::at(std::size_t cell) const {
  if (counts_.empty() || counts_[cell] <= 1) return alpha_;
  return alpha_ * std::pow(static_cast<double>(counts_[cell]), -omega_);
}

double EpsilonSchedule::at(std::uint64_t step) const noexcept {
  if (decay_steps == 0 || step >= decay_steps) return end;
  const double frac = static_cast<double>(step) / static_cast<double>(decay_steps);
  return start + (end - start) * frac;
}

void Hyperparams::validate() const {
  auto rate = [](double v, const char* name) {
    if (!(v > 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in (0,1]");
  };
  rate(alpha_psi, "alpha_psi");
  rate(alpha_w, "alpha_w");
  rate(alpha_q, "alpha_q");
  rate(alpha_r, "alpha_r");
  if (!(alpha_decay >= 0.0 && alpha_decay <= 1.0)) throw ConfigError("alpha_decay must lie in [0,1]");
  auto prob = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0,1]");
  };
  prob(epsilon.start, "epsilon start");
  prob(epsilon.end, "epsilon end");
  prob(lambda, "lambda");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0,1)");
  if (total_steps == 0) throw ConfigError("total_steps must be positive");
  if (!(q_loss_weight >= 0.0) || !(sf_loss_weight >= 0.0)) throw ConfigError("loss weights must be non-negative");
}

// ---------------------------------------------------------------------------

void PolicyLibrary::append(SfTable table) {
  if (!tables.empty() && !tables.front().same_shape(table)) {
    throw UsageError("library tables must share (S, A, D)");
  }
  if (reward_model.num_tasks() != 0 && table.dim() != reward_model.num_tasks()) {
    throw UsageError("SF dimension does not match the reward model");
  }
  tables.push_back(std::move(table));
}

void PolicyLibrary::validate() const {
  for (const auto& t : tables) {
    if (!tables.front().same_shape(t)) throw DataError("library tables differ in shape");
    if (t.dim() != dim()) throw DataError("library SF dimension does not match the reward model");
    if (t.num_states() != reward_model.num_states() || t.num_actions() != reward_model.num_actions()) {
      throw DataError("library SF tables and reward model differ in (S, A)");
    }
    if (!t.all_finite()) throw DataError("library SF table has non-finite entries");
  }
  if (base_tasks.num_tasks() != 0 && base_tasks.num_tasks() != dim()) {
    throw DataError("library base task count does not match the reward model");
  }
}

namespace {

void check_gpi_inputs(std::span<const SfTable* const> tables, std::size_t dim) {
  if (tables.empty()) throw UsageError("gpi_action: empty policy set");
  if (tables.front()->dim() != dim) {
    throw UsageError("gpi_action: task has " + std::to_string(dim) + " weights but SFs have " +
                     std::to_string(tables.front()->dim()) + " components");
  }
}

}  // namespace

GpiChoice gpi_action(StateId s, std::span<const SfTable* const> tables, const TaskVector& w) {
  check_gpi_inputs(tables, w.dim());
  GpiChoice best;
  bool first = true;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const SfTable& t = *tables[i];
    for (std::size_t a = 0; a < t.num_actions(); ++a) {
      const double v = t.q(s, static_cast<ActionId>(a), w);
      if (first || v > best.value) {
        best = GpiChoice{static_cast<ActionId>(a), i, v};
        first = false;
      }
    }
  }
  return best;
}

GpiChoice gpi_action(StateId s, const PolicyLibrary& library, const TaskVector& w) {
  std::vector<const SfTable*> ptrs;
  ptrs.reserve(library.tables.size());
  for (const auto& t : library.tables) ptrs.push_back(&t);
  return gpi_action(s, ptrs, w);
}

GpiChoice gpi_action_component(StateId s, std::span<const SfTable* const> tables, std::size_t j) {
  if (tables.empty()) throw UsageError("gpi_action: empty policy set");
  if (j >= tables.front()->dim()) throw UsageError("gpi_action: component out of range");
  GpiChoice best;
  bool first = true;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const SfTable& t = *tables[i];
    for (std::size_t a = 0; a < t.num_actions(); ++a) {
      const double v = t(s, static_cast<ActionId>(a), j);
      if (first || v > best.value) {
        best = GpiChoice{static_cast<ActionId>(a), i, v};
        first = false;
      }
    }
  }
  return best;
}

DeterministicPolicy gpi_policy(std::span<const SfTable* const> tables, const TaskVector& w) {
  check_gpi_inputs(tables, w.dim());
  DeterministicPolicy pi(tables.front()->num_states(), 0);
  for (std::size_t s = 0; s < pi.num_states(); ++s) {
    pi[static_cast<StateId>(s)] = gpi_action(static_cast<StateId>(s), tables, w).action;
  }
  return pi;
}

double q_from_sf(std::span<const double> psi_sa, const TaskVector& w) { return w.dot(psi_sa); }

void w_update(TaskVector& w, std::span<const double> phi, double r, double alpha_w) {
  const double err = r - w.dot(phi);
  for (std::size_t j = 0; j < w.dim(); ++j) w[j] += alpha_w * err * phi[j];
}

void sf_td_update(SfTable& psi, TraceTable& trace, const SfTransition& tr, ActionId a_next,
                  std::span<const double> phi_t, const StepSizes& alpha, double gamma, bool on_policy,
                  std::span<double> delta_out) {
  const std::size_t D = psi.dim();
  if (phi_t.size() != D || delta_out.size() != D) throw UsageError("sf_td_update: feature dimension mismatch");
  const auto cur = psi.at(tr.state, tr.action);
  for (std::size_t i = 0; i < D; ++i) {
    const double boot = tr.terminal ? 0.0 : psi(tr.next_state, a_next, i);
    delta_out[i] = phi_t[i] + gamma * boot - cur[i];
    if (!std::isfinite(delta_out[i])) throw DivergenceError("SF TD error became non-finite");
  }
  if (!on_policy) trace.clear();
  trace.accumulate(tr.state, tr.action);
  double* base = psi.values().data();
  trace.for_each([&](std::size_t idx, double e) {
    double* p = base + idx * D;
    const double step = alpha.at(idx) * e;
    for (std::size_t i = 0; i < D; ++i) p[i] += step * delta_out[i];
  });
  trace.decay(gamma * trace.lambda());
}

// ---------------------------------------------------------------------------
// Library artifact
//
//   sfgpi-library 1
//   meta <key> <value...>
//   dims <S> <A> <D> <n_tables>
//   basis <rows> <cols>
//   w <v...>                     (one line per row)
//   reward_model <alpha_r>
//   r <t> <s> <v_a0 ... v_aA-1>  (one line per task and state)
//   policy <label>
//   psi <s> <a> <v_0 ... v_D-1>  (one line per state-action)

namespace {

constexpr const char* kMagic = "sfgpi-library";
constexpr int kVersion = 1;

void put(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, " %.17g", v);
  out << buf;
}

[[noreturn]] void bad(std::size_t line_no, const std::string& what) {
  throw FormatError("library line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

void write_library(std::ostream& out, const PolicyLibrary& library) {
  library.validate();
  const auto& rm = library.reward_model;
  const std::size_t S = rm.num_states(), A = rm.num_actions(), D = rm.num_tasks();
  out << kMagic << ' ' << kVersion << '\n';
  for (const auto& [k, v] : library.metadata) {
    if (k.empty() || k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw UsageError("library metadata keys must be single tokens and values single lines");
    }
    out << "meta " << k << ' ' << v << '\n';
  }
  out << "dims " << S << ' ' << A << ' ' << D << ' ' << library.tables.size() << '\n';
  const auto& W = library.base_tasks.matrix();
  out << "basis " << W.rows() << ' ' << W.cols() << '\n';
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    out << 'w';
    for (Eigen::Index j = 0; j < W.cols(); ++j) put(out, W(i, j));
    out << '\n';
  }
  out << "reward_model";
  put(out, rm.alpha());
  out << '\n';
  for (std::size_t t = 0; t < D; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      out << "r " << t << ' ' << s;
      for (double v : rm.table(t).row(s)) put(out, v);
      out << '\n';
    }
  }
  for (const auto& table : library.tables) {
    out << "policy " << (table.policy_id().empty() ? "-" : table.policy_id()) << '\n';
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        out << "psi " << s << ' ' << a;
        for (double v : table.at(static_cast<StateId>(s), static_cast<ActionId>(a))) put(out, v);
        out << '\n';
      }
    }
  }
  out << "end\n";
}

PolicyLibrary read_library(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&](std::istringstream& row, const char* expected) {
    if (!std::getline(in, line)) throw FormatError(std::string("library: truncated before '") + expected + "'");
    ++line_no;
    row.clear();
    row.str(line);
    std::string tag;
    row >> tag;
    return tag;
  };
  std::istringstream row;

  if (next(row, kMagic) != kMagic) bad(line_no, "not a library artifact");
  int version = 0;
  if (!(row >> version) || version != kVersion) {
    bad(line_no, "unsupported library version (expected " + std::to_string(kVersion) + ")");
  }

  PolicyLibrary lib;
  std::string tag = next(row, "dims");
  while (tag == "meta") {
    std::string key, value;
    row >> key;
    std::getline(row >> std::ws, value);
    lib.metadata[key] = value;
    tag = next(row, "dims");
  }
  std::size_t S = 0, A = 0, D = 0, n = 0;
  if (tag != "dims" || !(row >> S >> A >> D >> n)) bad(line_no, "expected 'dims S A D n'");
  if (S == 0 || A == 0 || D == 0) bad(line_no, "dimensions must be positive");

  long rows = 0, cols = 0;
  if (next(row, "basis") != "basis" || !(row >> rows >> cols) || rows < 0 || cols < 0) {
    bad(line_no, "expected 'basis rows cols'");
  }
  Eigen::MatrixXd W(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (next(row, "w") != "w") bad(line_no, "expected basis row");
    for (long j = 0; j < cols; ++j) {
      if (!(row >> W(i, j))) bad(line_no, "short basis row");
    }
  }
  lib.base_tasks = TaskMatrix(W);

  double alpha_r = 0.0;
  if (next(row, "reward_model") != "reward_model" || !(row >> alpha_r)) bad(line_no, "expected reward_model");
  try {
    lib.reward_model = RewardModel(D, S, A, alpha_r);
  } catch (const Error& e) {
    bad(line_no, e.what());
  }
  for (std::size_t t = 0; t < D; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      std::size_t tt = 0, ss = 0;
      if (next(row, "r") != "r" || !(row >> tt >> ss) || tt != t || ss != s) bad(line_no, "expected reward row");
      for (auto& v : lib.reward_model.table(t).row(s)) {
        if (!(row >> v)) bad(line_no, "short reward row");
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::string label;
    if (next(row, "policy") != "policy" || !(row >> label)) bad(line_no, "expected 'policy <label>'");
    SfTable table(S, A, D, label == "-" ? std::string{} : label);
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        std::size_t ss = 0, aa = 0;
        if (next(row, "psi") != "psi" || !(row >> ss >> aa) || ss != s || aa != a) bad(line_no, "expected psi row");
        for (auto& v : table.at(static_cast<StateId>(s), static_cast<ActionId>(a))) {
          if (!(row >> v)) bad(line_no, "short psi row");
        }
      }
    }
    lib.tables.push_back(std::move(table));
  }
  if (next(row, "end") != "end") bad(line_no, "expected 'end'");
  try {
    lib.validate();
  } catch (const DataError& e) {
    throw FormatError(std::string("library: ") + e.what());
  }
  return lib;
}

void save_library(const std::string& path, const PolicyLibrary& library) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_library(out, library);
  if (!out) throw Error("failed writing '" + path + "'");
}

PolicyLibrary load_library(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open library '" + path + "'");
  return read_library(in);
}

}  // namespace sfgpi
